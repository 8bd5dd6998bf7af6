// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exit status is
// nonzero iff any criterion fails. Pass criterion names as arguments to run
// a subset.

#include "spnas/analysis.hpp"
#include "spnas/error.hpp"
#include "spnas/ranking.hpp"

#include "support/finite_difference.hpp"
#include "support/rank_oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace spnas;
namespace oracle = spnas::testing;

// Tolerances and sizes pinned here.
constexpr double kGradTolerance = 1e-4;
constexpr double kCodeChargeTolerance = 1e-12;
constexpr double kLedgerTolerance = 1e-9;
constexpr double kMinMeanTau = 0.5;
constexpr std::size_t kSanitySeeds = 5;
constexpr std::size_t kSweepRuns = 20;
constexpr double kRealDataGapPoints = 0.5;

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
    Outcome outcome;
    std::string detail;
};

Verdict verdict(bool ok, const std::string& detail) {
    return {ok ? Outcome::Pass : Outcome::Fail, detail};
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// Gradient integrity

Verdict gradient_integrity() {
    const std::vector<std::string> vocab = {"a", "skip", "b"};
    std::vector<GraphInputs> graphs;
    graphs.push_back(GraphInputs::from(
        encode_cell({3, {{0, 1, "a"}, {0, 2, "b"}, {1, 2, "skip"}}, vocab})));
    graphs.push_back(GraphInputs::from(
        encode_cell({3, {{0, 1, "b"}, {0, 2, "b"}, {1, 2, "a"}}, vocab})));
    graphs.push_back(GraphInputs::from(encode_cell({3, {{0, 1, "a"}, {1, 2, "b"}}, vocab}, 6)));
    const std::vector<TrainingSample> batch = {
        {&graphs[0], {{0.3, -1.2, 0.8}, true}, 0.71},
        {&graphs[1], {{-0.5, 0.4, 1.1}, true}, 0.42},
        {&graphs[2], {{1.5, 0.2, -0.7}, true}, 0.93}};

    double worst = 0.0;
    std::size_t checked = 0;
    std::string where;
    for (bool nsam : {false, true}) {
        PredictorConfig cfg;
        cfg.hidden_dim = 8;
        cfg.trunk_layers = 2;
        cfg.use_nsam = nsam;
        cfg.max_nodes = 6;
        cfg.feature_dim = vocab.size() + 2;
        SiamesePredictor model(cfg, 17);
        model.set_head_bias(0.1);
        auto analytic = model.loss_and_gradients(batch);
        std::vector<Matrix> grads;
        for (auto& [name, m] : analytic.gradients.named())
            grads.push_back(*m);
        const auto r = oracle::check_gradients([&] { return model.loss(batch); },
                                               model.mutable_params().named(), grads);
        checked += r.checked;
        if (r.max_relative_error >= worst) {
            worst = r.max_relative_error;
            where = (nsam ? "nsam:" : "plain:") + r.worst_entry;
        }
    }
    return verdict(worst < kGradTolerance, "max rel err " + fmt("%.2e", worst) + " at " + where +
                                               " over " + std::to_string(checked) + " entries");
}

// Ranking oracle

Verdict ranking_oracle() {
    bool ok = true;
    std::ostringstream detail;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const BenchStore store = generate_synthetic({.seed = 100 + seed, .size = 200});
        const EncodedSpace space = EncodedSpace::build(store, kSyntheticDataset);
        OracleScorer scorer(space);
        SamplingPool pool(space.size(), 0);
        const auto norm = CodeNormalizer::identity();

        std::vector<std::size_t> idx(space.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        auto truth = idx;
        std::stable_sort(truth.begin(), truth.end(), [&](std::size_t a, std::size_t b) {
            return store[a].dataset(kSyntheticDataset).final_test_accuracy >
                   store[b].dataset(kSyntheticDataset).final_test_accuracy;
        });
        BudgetLedger rank_ledger;
        CodeBroker rank_codes(space, norm, rank_ledger, pool.membership());
        const bool sorted = siamese_rank(idx, scorer, space.size(), rank_codes).order == truth;

        BudgetLedger ledger;
        CodeBroker codes(space, norm, ledger, pool.membership());
        const auto top = evaluate_top_k(space, scorer, 1, 60, codes, ledger);
        const bool planted = store.header().planted_optimum &&
                             space.id(top.best_index) == *store.header().planted_optimum;
        if (!sorted || !planted) {
            ok = false;
            detail << "seed " << seed << (sorted ? "" : " sort-mismatch")
                   << (planted ? "" : " missed-optimum") << "; ";
        }
    }
    return verdict(ok, ok ? "c=200 equals true sort and K=1 finds planted optimum, 10 seeds"
                          : detail.str());
}

// Budget conservation

Verdict budget_conservation() {
    const BenchStore store = generate_synthetic({.seed = 7, .size = 1000});
    const EncodedSpace space = EncodedSpace::build(store, kSyntheticDataset);
    SearchConfig cfg;
    cfg.pool_budget = 100;
    cfg.init_fraction = 0.5;
    cfg.update_frequency = 10;
    cfg.max_iterations = 2000;
    cfg.top_k = 20;
    cfg.c_eval = 60;
    const PredictorConfig pc = space.fit_config({});

    BudgetLedger ledger;
    const BtsResult r = bts_train(space, cfg, pc, 1, ledger);
    std::vector<std::string> problems;
    if (r.pool.size() != 100 || ledger.predictor_samples() != 100)
        problems.push_back("pool " + std::to_string(r.pool.size()));
    const std::uint64_t train_codes = ledger.codes_acquired();

    // Evaluation against the trained pool: pool members' codes are free.
    PredictorScorer scorer(r.predictor, space);
    CodeBroker codes(space, r.normalizer, ledger, r.pool.membership());
    const auto top = evaluate_top_k(space, scorer, cfg.top_k, cfg.c_eval, codes, ledger);
    std::uint64_t non_pool = 0;
    for (std::size_t i = 0; i < cfg.c_eval; ++i)
        non_pool += r.pool.contains(top.ranked.order[i]) ? 0 : 1;
    if (ledger.codes_acquired() - train_codes != non_pool)
        problems.push_back("eval codes charged " +
                           std::to_string(ledger.codes_acquired() - train_codes) + " vs " +
                           std::to_string(non_pool) + " non-pool");
    const double identity = 100.0 + static_cast<double>(ledger.codes_acquired()) * 0.003 +
                            static_cast<double>(cfg.top_k);
    if (ledger.final_topk_trains() != cfg.top_k ||
        std::abs(ledger.spent() - identity) > kLedgerTolerance)
        problems.push_back("ledger identity " + fmt("%.9f", ledger.spent()) + " vs " +
                           fmt("%.9f", identity));

    // Evaluation stage with no pool overlap: exactly 60 codes.
    SamplingPool empty(space.size(), 0);
    BudgetLedger eval_ledger;
    CodeBroker eval_codes(space, r.normalizer, eval_ledger, empty.membership());
    evaluate_top_k(space, scorer, cfg.top_k, cfg.c_eval, eval_codes, eval_ledger);
    const double charge = eval_ledger.code_cost();
    if (std::abs(charge - 0.18) > kCodeChargeTolerance)
        problems.push_back("c=60 charge " + fmt("%.15f", charge));

    std::string detail = "pool 100, spent " + fmt("%.3f", ledger.spent()) + " FTE, c=60 charge " +
                         fmt("%.4f", charge) + " FTE";
    for (const auto& p : problems)
        detail += "; " + p;
    return verdict(problems.empty(), detail);
}

// BTS efficiency

const EncodedSpace& full_space() {
    static const BenchStore store = generate_synthetic({.seed = 11, .size = 15625});
    static const EncodedSpace space = EncodedSpace::build(store, kSyntheticDataset);
    return space;
}

Verdict bts_efficiency() {
    const EncodedSpace& space = full_space();
    SearchConfig cfg;
    cfg.max_iterations = 200;
    PredictorConfig pc;
    pc.hidden_dim = 32;
    pc.trunk_layers = 2;
    pc = space.fit_config(pc);

    auto timed = [&](SamplingMode mode, BtsResult*& out, std::vector<BtsResult>& keep) {
        cfg.sampling = mode;
        BudgetLedger ledger;
        const auto t0 = std::chrono::steady_clock::now();
        keep.push_back(bts_train(space, cfg, pc, 3, ledger));
        const double dt = seconds_since(t0);
        out = &keep.back();
        return dt;
    };
    std::vector<BtsResult> keep;
    keep.reserve(2);
    BtsResult* bts = nullptr;
    BtsResult* fts = nullptr;
    const double t_bts = timed(SamplingMode::BatchTop, bts, keep);
    const double t_fts = timed(SamplingMode::FullyTop, fts, keep);

    const std::size_t expect = subspace_size(space.size(), cfg.update_frequency);
    const bool counts =
        expect == 1563 && !bts->forward_evaluations.empty() &&
        bts->forward_evaluations.size() == fts->forward_evaluations.size() &&
        std::all_of(bts->forward_evaluations.begin(), bts->forward_evaluations.end(),
                    [&](std::size_t n) { return n == expect; }) &&
        std::all_of(fts->forward_evaluations.begin(), fts->forward_evaluations.end(),
                    [&](std::size_t n) { return n == space.size(); });
    return verdict(counts && t_bts < t_fts,
                   std::to_string(bts->update_events) + " events; per event BTS " +
                       std::to_string(bts->forward_evaluations.front()) + " vs FTS " +
                       std::to_string(fts->forward_evaluations.front()) + "; wall " +
                       fmt("%.2fs", t_bts) + " vs " + fmt("%.2fs", t_fts));
}

// Learning sanity

Verdict learning_sanity() {
    const BenchStore store = generate_synthetic({.seed = 7, .size = 1000});
    const EncodedSpace space = EncodedSpace::build(store, kSyntheticDataset);
    SearchConfig cfg;
    cfg.pool_budget = 100;
    const PredictorConfig pc = space.fit_config({});
    const auto t0 = std::chrono::steady_clock::now();
    double basic = 0.0, estimation = 0.0;
    for (std::size_t seed = 0; seed < kSanitySeeds; ++seed) {
        BudgetLedger ledger;
        const BtsResult r = bts_train(space, cfg, pc, seed, ledger);
        std::vector<double> pb(space.size()), pe(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) {
            pb[i] = r.predictor.forward_basic(space.graphs[i]).value;
            pe[i] = r.predictor
                        .forward_estimation(space.graphs[i], r.normalizer.normalize(*space.codes[i]))
                        .value;
        }
        basic += kendall_tau(pb, space.accuracy);
        estimation += kendall_tau(pe, space.accuracy);
    }
    basic /= kSanitySeeds;
    estimation /= kSanitySeeds;
    const double dt = seconds_since(t0);
    return verdict(estimation > kMinMeanTau && basic > kMinMeanTau && estimation >= basic &&
                       dt < 300.0,
                   "mean tau basic " + fmt("%.3f", basic) + ", estimation " +
                       fmt("%.3f", estimation) + " in " + fmt("%.0fs", dt));
}

// N-vs-K

Verdict n_vs_k() {
    const EncodedSpace& space = full_space();
    SearchConfig cfg;
    cfg.max_iterations = 600;
    cfg.runs = kSweepRuns;
    cfg.seed = 0;
    PredictorConfig pc;
    pc.hidden_dim = 32;
    pc.trunk_layers = 2;
    const std::vector<std::size_t> budgets = {60, 110, 160, 210};
    const auto t0 = std::chrono::steady_clock::now();
    const auto fix_k = nk_sweep(space, cfg, pc, budgets, SweepMode::FixK, workers());
    const auto fix_n = nk_sweep(space, cfg, pc, budgets, SweepMode::FixN, workers());
    const double dt = seconds_since(t0);
    if (fix_k.size() != budgets.size() || fix_n.size() != budgets.size())
        return {Outcome::Fail, "sweep skipped budgets"};

    bool ok = fix_k.back().std_best_accuracy <= fix_k.front().std_best_accuracy;
    std::ostringstream detail;
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        if (budgets[i] > 60 && fix_k[i].mean_best_accuracy < fix_n[i].mean_best_accuracy)
            ok = false;
        detail << budgets[i] << ": fixK " << fmt("%.4f", fix_k[i].mean_best_accuracy) << " fixN "
               << fmt("%.4f", fix_n[i].mean_best_accuracy) << "; ";
    }
    detail << "fixK std " << fmt("%.4f", fix_k.front().std_best_accuracy) << " -> "
           << fmt("%.4f", fix_k.back().std_best_accuracy) << "; " << fmt("%.0fs", dt);
    return verdict(ok && dt < 1800.0, detail.str());
}

// Real data

Verdict real_data() {
    const char* path = std::getenv("SPNAS_NB201_EXPORT");
    if (path == nullptr || *path == '\0')
        return {Outcome::Skip, "set SPNAS_NB201_EXPORT to a NAS-Bench-201 JSONL export"};
    const char* ds = std::getenv("SPNAS_NB201_DATASET");
    const std::string dataset = ds != nullptr && *ds != '\0' ? ds : "cifar10";

    const BenchStore store = load_jsonl(path);
    const EncodedSpace space = EncodedSpace::build(store, dataset);
    SearchConfig cfg;
    cfg.pool_budget = 180;
    cfg.top_k = 20;
    cfg.runs = kSweepRuns;
    PredictorConfig full;
    full.use_nsam = true;
    const auto t0 = std::chrono::steady_clock::now();
    const RunReport ours = run_search(space, cfg, full, workers());

    SearchConfig naive_cfg = cfg;
    naive_cfg.ranking = RankingMode::BasicOnly;
    PredictorConfig naive;
    naive.train_estimation = false;
    const RunReport baseline = run_search(space, naive_cfg, naive, workers());
    const double dt = seconds_since(t0);

    const double best = space.accuracy[space.best_index()];
    const double gap_points = (best - ours.mean_best_accuracy) * 100.0;
    return verdict(ours.mean_best_accuracy > baseline.mean_best_accuracy &&
                       gap_points <= kRealDataGapPoints && dt < 7200.0,
                   "mean " + fmt("%.4f", ours.mean_best_accuracy) + " vs basic-only " +
                       fmt("%.4f", baseline.mean_best_accuracy) + ", optimum " +
                       fmt("%.4f", best) + " (gap " + fmt("%.2f", gap_points) + " pts)");
}

// Correlation brute force

bool is_constant(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// Every tie pattern pairing up to length 6; for 7 and 8 every x pattern
// against a fixed family of y patterns (identity, reversal, seeded samples).
Verdict correlation_brute_force() {
    std::size_t pairs = 0, mismatches = 0, bad_errors = 0;
    std::string first;
    auto compare = [&](const std::vector<double>& x, const std::vector<double>& y) {
        if (is_constant(x) || is_constant(y)) {
            bool threw = false;
            try {
                kendall_tau(x, y);
            } catch (const AnalysisError&) {
                threw = true;
            }
            bad_errors += threw ? 0 : 1;
            return;
        }
        ++pairs;
        if (kendall_tau(x, y) != oracle::brute_kendall_tau_b(x, y) ||
            spearman_rho(x, y) != oracle::brute_spearman_rho(x, y)) {
            if (mismatches++ == 0) {
                std::ostringstream s;
                s << "n=" << x.size() << " x=";
                for (double v : x)
                    s << v;
                s << " y=";
                for (double v : y)
                    s << v;
                first = s.str();
            }
        }
    };

    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t n = 2; n <= 8; ++n) {
        std::vector<std::vector<double>> patterns;
        oracle::for_each_weak_ordering(n, [&](const std::vector<double>& v) { patterns.push_back(v); });
        std::vector<std::vector<double>> ys;
        if (n <= 6) {
            ys = patterns;
        } else {
            std::mt19937_64 rng(n);
            std::uniform_int_distribution<std::size_t> pick(0, patterns.size() - 1);
            for (int i = 0; i < 24; ++i)
                ys.push_back(patterns[pick(rng)]);
        }
        for (const auto& x : patterns) {
            for (const auto& y : ys)
                compare(x, y);
            if (n > 6) {
                std::vector<double> rev(x.rbegin(), x.rend());
                compare(x, x);
                compare(x, rev);
            }
        }
    }
    std::string detail = std::to_string(pairs) + " pairs, " + std::to_string(mismatches) +
                         " mismatches, " + fmt("%.0fs", seconds_since(t0));
    if (!first.empty())
        detail += "; first " + first;
    if (bad_errors != 0)
        detail += "; " + std::to_string(bad_errors) + " constant inputs accepted";
    return verdict(mismatches == 0 && bad_errors == 0, detail);
}

struct Criterion {
    const char* name;
    std::function<Verdict()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {"gradient-integrity", gradient_integrity},
        {"ranking-oracle", ranking_oracle},
        {"budget-conservation", budget_conservation},
        {"bts-efficiency", bts_efficiency},
        {"learning-sanity", learning_sanity},
        {"n-vs-k", n_vs_k},
        {"real-data", real_data},
        {"correlation-brute-force", correlation_brute_force},
    };
    std::vector<std::string> only(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end())
            continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {Outcome::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Fail ? "FAIL" : "SKIP";
        std::printf("%s %s: %s\n", tag, c.name, v.detail.c_str());
        std::fflush(stdout);
        failures += v.outcome == Outcome::Fail ? 1 : 0;
    }
    return failures == 0 ? 0 : 1;
}
