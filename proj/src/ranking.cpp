#include "spnas/ranking.hpp"

#include "spnas/error.hpp"

#include <algorithm>
#include <numeric>

namespace spnas {

EncodedSpace EncodedSpace::build(const BenchStore& store, const std::string& dataset) {
    if (std::find(store.datasets().begin(), store.datasets().end(), dataset) ==
        store.datasets().end())
        throw ConfigError("dataset '" + dataset + "' is not in the benchmark");
    EncodedSpace s;
    s.store = &store;
    s.dataset = dataset;
    s.max_nodes = store.max_nodes();
    s.graphs.reserve(store.size());
    s.codes.reserve(store.size());
    s.accuracy.reserve(store.size());
    for (const BenchRecord& r : store.records()) {
        const CellGraph g = encode_cell(r.cell, s.max_nodes);
        s.feature_dim = g.feature_dim();
        s.graphs.push_back(GraphInputs::from(g));
        const DatasetMetrics& m = r.dataset(dataset);
        s.accuracy.push_back(m.final_test_accuracy);
        if (m.epoch_losses.size() >= kCodeLength)
            s.codes.push_back(code_from_losses(m.epoch_losses, r.id));
        else
            s.codes.push_back(std::nullopt);
    }
    return s;
}

std::size_t EncodedSpace::best_index() const {
    return static_cast<std::size_t>(std::max_element(accuracy.begin(), accuracy.end()) -
                                    accuracy.begin());
}

PredictorConfig EncodedSpace::fit_config(PredictorConfig base) const {
    base.max_nodes = max_nodes;
    base.feature_dim = feature_dim;
    return base;
}

double PredictorScorer::score_basic(std::size_t index) const {
    return predictor_.forward_basic(space_.graphs[index]).value;
}

double PredictorScorer::score_estimation(std::size_t index, const EstimationCode& code) const {
    return predictor_.forward_estimation(space_.graphs[index], code).value;
}

double RandomScorer::score_basic(std::size_t index) const {
    // splitmix64 of (seed, index) mapped to [0, 1)
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

bool SamplingPool::add(std::size_t index, Provenance provenance) {
    if (member_[index] || full())
        return false;
    member_[index] = 1;
    members_.push_back(index);
    provenance_.push_back(provenance);
    return true;
}

std::size_t SamplingPool::count(Provenance p) const {
    return static_cast<std::size_t>(std::count(provenance_.begin(), provenance_.end(), p));
}

EstimationCode CodeBroker::acquire(std::size_t index) {
    const auto& code = space_.codes.at(index);
    if (!code)
        throw MissingDataError("record '" + space_.id(index) + "' has no Estimation Code");
    if (!pool_[index])
        ledger_.charge_codes();
    return normalizer_.normalize(*code);
}

std::vector<std::string> RankedList::ids(const EncodedSpace& space) const {
    std::vector<std::string> out;
    out.reserve(order.size());
    for (std::size_t i : order)
        out.push_back(space.id(i));
    return out;
}

namespace {

// Stable descending sort of positions by score.
std::vector<std::size_t> descending(const std::vector<double>& scores) {
    std::vector<std::size_t> pos(scores.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    std::stable_sort(pos.begin(), pos.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return pos;
}

} // namespace

RankedList siamese_rank(std::span<const std::size_t> candidates, const BranchScorer& scorer,
                        std::size_t c, CodeBroker& codes, RankStats* stats) {
    if (c > candidates.size())
        throw ContractError("siamese_rank: c = " + std::to_string(c) + " exceeds " +
                            std::to_string(candidates.size()) + " candidates");
    std::vector<double> basic(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        basic[i] = scorer.score_basic(candidates[i]);
    if (stats)
        stats->basic_evaluations += candidates.size();

    RankedList out;
    const std::vector<std::size_t> by_basic = descending(basic);
    out.order.reserve(candidates.size());
    for (std::size_t p : by_basic) {
        out.order.push_back(candidates[p]);
        out.predicted.push_back(basic[p]);
        out.stage.push_back(RankStage::Basic);
    }
    if (c == 0)
        return out;

    // Codes for the whole top block are acquired before any re-scoring so a
    // missing code fails the call without a partial resort.
    std::vector<EstimationCode> top_codes;
    top_codes.reserve(c);
    for (std::size_t r = 0; r < c; ++r)
        top_codes.push_back(codes.acquire(out.order[r]));
    std::vector<double> fine(c);
    for (std::size_t r = 0; r < c; ++r)
        fine[r] = scorer.score_estimation(out.order[r], top_codes[r]);
    if (stats)
        stats->estimation_evaluations += c;

    const std::vector<std::size_t> by_fine = descending(fine);
    std::vector<std::size_t> block(c);
    for (std::size_t r = 0; r < c; ++r)
        block[r] = out.order[by_fine[r]];
    for (std::size_t r = 0; r < c; ++r) {
        out.order[r] = block[r];
        out.predicted[r] = fine[by_fine[r]];
        out.stage[r] = RankStage::Resorted;
    }
    return out;
}

TopKResult evaluate_top_k(const EncodedSpace& space, const BranchScorer& scorer, std::size_t k,
                          std::size_t c_eval, CodeBroker& codes, BudgetLedger& ledger) {
    if (k == 0 || k > space.size())
        throw ContractError("evaluate_top_k: K = " + std::to_string(k) + " with " +
                            std::to_string(space.size()) + " architectures");
    std::vector<std::size_t> all(space.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    TopKResult out;
    out.ranked = siamese_rank(all, scorer, std::min(c_eval, all.size()), codes);
    ledger.charge_final_trains(k);
    out.best_index = out.ranked.order[0];
    out.best_accuracy = space.accuracy[out.best_index];
    for (std::size_t r = 1; r < k; ++r) {
        const std::size_t i = out.ranked.order[r];
        if (space.accuracy[i] > out.best_accuracy) {
            out.best_accuracy = space.accuracy[i];
            out.best_index = i;
        }
    }
    return out;
}

} // namespace spnas
