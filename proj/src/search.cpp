#include "spnas/ranking.hpp"

#include "spnas/error.hpp"
#include "spnas/log.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

namespace spnas {

std::string to_string(SweepMode mode) { return mode == SweepMode::FixN ? "fixN" : "fixK"; }

std::string to_string(SamplingMode mode) {
    switch (mode) {
    case SamplingMode::BatchTop: return "bts";
    case SamplingMode::FullyTop: return "fts";
    case SamplingMode::Random: return "random";
    }
    return "?";
}

std::string to_string(RankingMode mode) {
    return mode == RankingMode::Siamese ? "siamese" : "basic";
}

void SearchConfig::validate(std::size_t space_size) const {
    if (!(init_fraction > 0.0 && init_fraction <= 1.0))
        throw ConfigError("lambda must lie in (0, 1]");
    if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0))
        throw ConfigError("alpha must lie in (0, 1)");
    if (update_frequency == 0)
        throw ConfigError("update frequency f must be positive");
    if (batch_size == 0)
        throw ConfigError("batch size must be positive");
    if (runs == 0)
        throw ConfigError("runs must be positive");
    if (top_k == 0 || top_k > space_size)
        throw ConfigError("K must lie in 1.." + std::to_string(space_size));
    if (c_eval > space_size)
        throw ConfigError("c_eval exceeds the search space size");
    if (pool_budget > space_size)
        throw ConfigError("pool budget N exceeds the search space size");
    if (top_k > c_eval && ranking == RankingMode::Siamese)
        log_info("K exceeds c_eval; ranks past c_eval come from the basic branch only");
}

namespace {

std::vector<std::size_t> sample_distinct(std::size_t population, std::size_t count,
                                         std::mt19937_64& rng) {
    count = std::min(count, population);
    std::vector<std::size_t> all(population);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, population - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    all.resize(count);
    return all;
}

double mean_of(const std::vector<double>& xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2)
        return 0.0;
    const double m = mean_of(xs);
    double acc = 0.0;
    for (double x : xs)
        acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

} // namespace

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run_index) {
    std::uint64_t z = base_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(run_index) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

BtsResult bts_train(const EncodedSpace& space, const SearchConfig& config,
                    const PredictorConfig& predictor_config, std::uint64_t seed,
                    BudgetLedger& ledger) {
    config.validate(space.size());
    std::mt19937_64 rng(seed);
    const std::size_t budget = config.pool_budget;
    const bool top_sampling = config.sampling != SamplingMode::Random;
    const std::size_t init = top_sampling ? initial_pool_size(budget, config.init_fraction) : budget;

    SamplingPool pool(space.size(), budget);
    for (std::size_t i : sample_distinct(space.size(), init, rng))
        if (pool.add(i, Provenance::Random))
            ledger.charge_predictor_samples();

    std::vector<EstimationCode> raw;
    for (std::size_t i : pool.members()) {
        if (!space.codes[i])
            throw MissingDataError("pool record '" + space.id(i) + "' has no Estimation Code");
        raw.push_back(*space.codes[i]);
    }
    CodeNormalizer normalizer = raw.empty() ? CodeNormalizer::identity() : CodeNormalizer::fit(raw);

    SiamesePredictor predictor(space.fit_config(predictor_config), rng());
    if (!pool.members().empty()) {
        double m = 0.0;
        for (std::size_t i : pool.members())
            m += space.accuracy[i];
        predictor.set_head_bias(m / static_cast<double>(pool.size()));
    }

    // Training samples, kept in pool order.
    std::vector<TrainingSample> samples;
    auto admit = [&](std::size_t i) {
        samples.push_back({&space.graphs[i], normalizer.normalize(*space.codes[i]), space.accuracy[i]});
    };
    for (std::size_t i : pool.members())
        admit(i);

    const std::size_t total_iters = config.max_iterations;
    const auto warmup = static_cast<std::size_t>(std::floor(config.warmup_fraction *
                                                            static_cast<double>(total_iters)));
    const std::size_t f = config.update_frequency;
    const std::size_t remaining = budget - pool.size();
    std::size_t events = 0;
    if (top_sampling && remaining > 0)
        for (std::size_t i = warmup; i < total_iters; ++i)
            if (i % f == 0)
                ++events;
    if (top_sampling && events == 0 && remaining > 0)
        log_warn("no top-sampling update event fits in the iteration budget; pool stays at " +
                 std::to_string(pool.size()));

    BtsResult result{std::move(predictor), std::move(pool), normalizer, events, {}, {}};
    SiamesePredictor& model = result.predictor;
    SamplingPool& tpool = result.pool;

    std::vector<TrainingSample> batch(config.batch_size);
    bool warned_replacement = false;
    bool warned_exhausted = false;
    std::size_t event = 0;
    std::size_t carry = 0;
    const std::size_t sub_size = config.sampling == SamplingMode::FullyTop
                                     ? space.size()
                                     : subspace_size(space.size(), f);

    for (std::size_t it = 0; it < total_iters; ++it) {
        if (event < events && it >= warmup && it % f == 0) {
            std::size_t want = carry + remaining / events + (event < remaining % events ? 1 : 0);
            ++event;
            std::vector<std::size_t> subspace;
            if (config.sampling == SamplingMode::FullyTop) {
                subspace.resize(space.size());
                std::iota(subspace.begin(), subspace.end(), std::size_t{0});
            } else {
                subspace = sample_distinct(space.size(), sub_size, rng);
            }
            PredictorScorer scorer(model, space);
            CodeBroker broker(space, result.normalizer, ledger, tpool.membership());
            RankStats stats;
            const std::size_t c =
                config.ranking == RankingMode::Siamese ? std::min(config.c_bts, subspace.size()) : 0;
            RankedList ranked = siamese_rank(subspace, scorer, c, broker, &stats);
            result.forward_evaluations.push_back(stats.basic_evaluations);

            std::size_t added = 0;
            for (std::size_t r = 0; r < ranked.order.size() && added < want; ++r) {
                if (tpool.full())
                    break;
                const std::size_t i = ranked.order[r];
                if (tpool.add(i, Provenance::TopSampled)) {
                    ledger.charge_predictor_samples();
                    admit(i);
                    ++added;
                }
            }
            carry = want - added;
            if (tpool.full() && event < events && !warned_exhausted) {
                log_info("pool budget reached before the last update event");
                warned_exhausted = true;
            }
        }

        if (samples.empty())
            continue;
        if (config.batch_size <= samples.size()) {
            const auto picks = sample_distinct(samples.size(), config.batch_size, rng);
            for (std::size_t j = 0; j < picks.size(); ++j)
                batch[j] = samples[picks[j]];
        } else {
            if (!warned_replacement) {
                log_info("batch size exceeds pool size; sampling with replacement");
                warned_replacement = true;
            }
            std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
            for (TrainingSample& s : batch)
                s = samples[pick(rng)];
        }
        result.losses.push_back(model.train_step(batch));
    }
    if (carry > 0)
        log_warn("top sampling ended " + std::to_string(carry) + " records short of the budget");
    return result;
}

namespace {

RunResult single_run(const EncodedSpace& space, const SearchConfig& config,
                     const PredictorConfig& predictor_config, std::size_t run_index) {
    RunResult r;
    r.run_index = run_index;
    r.seed = run_seed(config.seed, run_index);
    TopKResult top;
    if (config.pool_budget == 0) {
        // No training data: a seeded random ranking.
        RandomScorer scorer(r.seed);
        SamplingPool pool(space.size(), 0);
        CodeNormalizer normalizer = CodeNormalizer::identity();
        CodeBroker broker(space, normalizer, r.ledger, pool.membership());
        top = evaluate_top_k(space, scorer, config.top_k, 0, broker, r.ledger);
        r.pool_size = 0;
    } else {
        BtsResult trained = bts_train(space, config, predictor_config, r.seed, r.ledger);
        PredictorScorer scorer(trained.predictor, space);
        CodeBroker broker(space, trained.normalizer, r.ledger, trained.pool.membership());
        const std::size_t c = config.ranking == RankingMode::Siamese ? config.c_eval : 0;
        top = evaluate_top_k(space, scorer, config.top_k, c, broker, r.ledger);
        r.pool_size = trained.pool.size();
    }
    r.best_accuracy = top.best_accuracy;
    r.best_id = space.id(top.best_index);
    return r;
}

} // namespace

RunReport run_search(const EncodedSpace& space, const SearchConfig& config,
                     const PredictorConfig& predictor_config, std::size_t workers) {
    config.validate(space.size());
    RunReport report;
    report.runs.resize(config.runs);
    workers = std::max<std::size_t>(1, std::min(workers, config.runs));

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](std::size_t w) {
        try {
            for (std::size_t i = next++; i < config.runs; i = next++) {
                report.runs[i] = single_run(space, config, predictor_config, i);
                log_info("run " + std::to_string(i) + " best " +
                         std::to_string(report.runs[i].best_accuracy));
            }
        } catch (...) {
            errors[w] = std::current_exception();
            next = config.runs;
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w)
            threads.emplace_back(work, w);
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    std::vector<double> best;
    for (const RunResult& r : report.runs)
        best.push_back(r.best_accuracy);
    report.mean_best_accuracy = mean_of(best);
    report.std_best_accuracy = sample_std(best);
    report.pool_fraction = static_cast<double>(config.pool_budget) / static_cast<double>(space.size());
    report.trained_samples = config.pool_budget + config.top_k;
    return report;
}

std::vector<SweepRow> nk_sweep(const EncodedSpace& space, const SearchConfig& config,
                               const PredictorConfig& predictor_config,
                               std::span<const std::size_t> budgets, SweepMode mode,
                               std::size_t workers) {
    for (std::size_t i = 1; i < budgets.size(); ++i)
        if (budgets[i] <= budgets[i - 1])
            throw ConfigError("sweep budgets must be strictly increasing");
    std::vector<SweepRow> rows;
    for (std::size_t total : budgets) {
        if (total < kSweepHeld + 1) {
            log_warn("skipping budget " + std::to_string(total) + ": below " +
                     std::to_string(kSweepHeld + 1));
            continue;
        }
        SearchConfig c = config;
        c.pool_budget = mode == SweepMode::FixN ? kSweepHeld : total - kSweepHeld;
        c.top_k = mode == SweepMode::FixN ? total - kSweepHeld : kSweepHeld;
        const RunReport rep = run_search(space, c, predictor_config, workers);
        rows.push_back({mode, total, c.pool_budget, c.top_k, rep.mean_best_accuracy,
                        rep.std_best_accuracy, c.runs});
    }
    return rows;
}

} // namespace spnas
