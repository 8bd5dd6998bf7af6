#pragma once

// Siamese-Ranking, Batch Top Sampling and the end-to-end search protocol.

#include "spnas/bench_store.hpp"
#include "spnas/estimation_code.hpp"
#include "spnas/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spnas {

/// A store prepared for one dataset: per-record graph inputs, raw codes and
/// ground truth, all indexed like the store.
struct EncodedSpace {
    const BenchStore* store = nullptr;
    std::string dataset;
    std::vector<GraphInputs> graphs;
    std::vector<std::optional<EstimationCode>> codes; // raw; nullopt if < 3 losses
    std::vector<double> accuracy;
    std::size_t max_nodes = 0;
    std::size_t feature_dim = 0;

    static EncodedSpace build(const BenchStore& store, const std::string& dataset);

    std::size_t size() const noexcept { return graphs.size(); }
    const std::string& id(std::size_t i) const { return (*store)[i].id; }
    std::size_t best_index() const;
    /// Predictor config with the space's node/feature dimensions filled in.
    PredictorConfig fit_config(PredictorConfig base) const;
};

/// Scores architectures by index into an EncodedSpace.
class BranchScorer {
public:
    virtual ~BranchScorer() = default;
    virtual double score_basic(std::size_t index) const = 0;
    virtual double score_estimation(std::size_t index, const EstimationCode& code) const = 0;
};

class PredictorScorer final : public BranchScorer {
public:
    PredictorScorer(const SiamesePredictor& predictor, const EncodedSpace& space)
        : predictor_(predictor), space_(space) {}
    double score_basic(std::size_t index) const override;
    double score_estimation(std::size_t index, const EstimationCode& code) const override;

private:
    const SiamesePredictor& predictor_;
    const EncodedSpace& space_;
};

/// Both branches return ground truth.
class OracleScorer final : public BranchScorer {
public:
    explicit OracleScorer(const EncodedSpace& space) : space_(space) {}
    double score_basic(std::size_t index) const override { return space_.accuracy[index]; }
    double score_estimation(std::size_t index, const EstimationCode&) const override {
        return space_.accuracy[index];
    }

private:
    const EncodedSpace& space_;
};

/// Seeded pseudo-random score per index, identical for both branches.
class RandomScorer final : public BranchScorer {
public:
    explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
    double score_basic(std::size_t index) const override;
    double score_estimation(std::size_t index, const EstimationCode&) const override {
        return score_basic(index);
    }

private:
    std::uint64_t seed_;
};

enum class Provenance { Random, TopSampled };

/// Fully trained records whose ground truth and codes are known.
class SamplingPool {
public:
    SamplingPool(std::size_t space_size, std::size_t capacity)
        : capacity_(capacity), member_(space_size, 0) {}

    /// False (and no change) when `index` is already a member or the pool is
    /// full.
    bool add(std::size_t index, Provenance provenance);
    bool contains(std::size_t index) const { return member_[index] != 0; }
    std::size_t size() const noexcept { return members_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    bool full() const noexcept { return members_.size() >= capacity_; }
    const std::vector<std::size_t>& members() const noexcept { return members_; }
    const std::vector<Provenance>& provenance() const noexcept { return provenance_; }
    std::size_t count(Provenance p) const;
    std::span<const char> membership() const noexcept { return member_; }

private:
    std::size_t capacity_;
    std::vector<char> member_;
    std::vector<std::size_t> members_;
    std::vector<Provenance> provenance_;
};

/// Hands out normalized Estimation Codes, charging the ledger for every
/// record that is not a pool member.
class CodeBroker {
public:
    CodeBroker(const EncodedSpace& space, const CodeNormalizer& normalizer, BudgetLedger& ledger,
               std::span<const char> pool_membership)
        : space_(space), normalizer_(normalizer), ledger_(ledger), pool_(pool_membership) {}

    /// Throws MissingDataError when the record has no code.
    EstimationCode acquire(std::size_t index);

private:
    const EncodedSpace& space_;
    const CodeNormalizer& normalizer_;
    BudgetLedger& ledger_;
    std::span<const char> pool_;
};

enum class RankStage { Basic, Resorted };

struct RankedList {
    std::vector<std::size_t> order;   // indices into the space, best first
    std::vector<double> predicted;    // value that placed each entry
    std::vector<RankStage> stage;
    std::vector<std::string> ids(const EncodedSpace& space) const;
};

struct RankStats {
    std::size_t basic_evaluations = 0;
    std::size_t estimation_evaluations = 0;
};

/// Rank `candidates` by the basic branch, then re-rank the top `c` by the
/// estimation branch and splice them back in place. Ties keep candidate
/// order. Throws ContractError when c > |candidates|.
RankedList siamese_rank(std::span<const std::size_t> candidates, const BranchScorer& scorer,
                        std::size_t c, CodeBroker& codes, RankStats* stats = nullptr);

enum class SamplingMode { BatchTop, FullyTop, Random };
enum class RankingMode { Siamese, BasicOnly };

struct SearchConfig {
    std::size_t pool_budget = 100; // N
    std::size_t top_k = 20;        // K
    std::size_t c_bts = 30;
    std::size_t c_eval = 60;
    std::size_t update_frequency = 10; // f
    double init_fraction = 0.5;        // λ
    double warmup_fraction = 0.3;      // α
    std::size_t max_iterations = 2000; // l
    std::size_t batch_size = 16;       // b
    std::size_t runs = 1;
    std::uint64_t seed = 0;
    SamplingMode sampling = SamplingMode::BatchTop;
    RankingMode ranking = RankingMode::Siamese;

    /// Throws ConfigError for violated invariants; `space_size` bounds c_eval
    /// and K.
    void validate(std::size_t space_size) const;
};

inline std::size_t initial_pool_size(std::size_t budget, double init_fraction) {
    const double x = init_fraction * static_cast<double>(budget);
    return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

/// ⌈|space| / f⌉
inline std::size_t subspace_size(std::size_t space_size, std::size_t frequency) {
    return (space_size + frequency - 1) / frequency;
}

struct BtsResult {
    SiamesePredictor predictor;
    SamplingPool pool;
    CodeNormalizer normalizer;
    std::size_t update_events = 0;
    std::vector<std::size_t> forward_evaluations; // basic-branch forwards per update event
    std::vector<double> losses;                   // training loss per iteration
};

/// Train a predictor with Batch Top Sampling (or its fully-top / random
/// variants per `config.sampling`). Pool additions charge 1.0 FTE each;
/// codes of non-pool candidates ranked during phase 2 charge per code.
BtsResult bts_train(const EncodedSpace& space, const SearchConfig& config,
                    const PredictorConfig& predictor_config, std::uint64_t seed,
                    BudgetLedger& ledger);

struct TopKResult {
    double best_accuracy = 0.0;
    std::size_t best_index = 0;
    RankedList ranked;
};

/// Siamese-rank the whole space with c = c_eval, then read ground truth for
/// the first K entries (K full trainings charged) and return the best.
TopKResult evaluate_top_k(const EncodedSpace& space, const BranchScorer& scorer, std::size_t k,
                          std::size_t c_eval, CodeBroker& codes, BudgetLedger& ledger);

struct RunResult {
    std::size_t run_index = 0;
    std::uint64_t seed = 0;
    double best_accuracy = 0.0;
    std::string best_id;
    std::size_t pool_size = 0;
    BudgetLedger ledger;
};

struct RunReport {
    std::vector<RunResult> runs;
    double mean_best_accuracy = 0.0;
    double std_best_accuracy = 0.0; // sample standard deviation (0 for one run)
    double pool_fraction = 0.0;     // N / |space|
    std::size_t trained_samples = 0; // N + K
};

/// Seed of repetition `run_index` derived from the config seed.
std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run_index);

/// `config.runs` independent seeded repetitions of training + top-K
/// evaluation. With N = 0 the ranking is a seeded random permutation.
/// Runs are distributed over `workers` threads and merged by run index.
RunReport run_search(const EncodedSpace& space, const SearchConfig& config,
                     const PredictorConfig& predictor_config, std::size_t workers = 1);

enum class SweepMode { FixN, FixK };
inline constexpr std::size_t kSweepHeld = 30;

struct SweepRow {
    SweepMode mode = SweepMode::FixK;
    std::size_t total_budget = 0;
    std::size_t n = 0;
    std::size_t k = 0;
    double mean_best_accuracy = 0.0;
    double std_best_accuracy = 0.0;
    std::size_t runs = 0;
};

/// For each total budget, hold N (FixN) or K (FixK) at 30 and give the rest
/// to the other. Budgets below 31 are skipped with a warning.
std::vector<SweepRow> nk_sweep(const EncodedSpace& space, const SearchConfig& config,
                               const PredictorConfig& predictor_config,
                               std::span<const std::size_t> budgets, SweepMode mode,
                               std::size_t workers = 1);

std::string to_string(SweepMode mode);
std::string to_string(SamplingMode mode);
std::string to_string(RankingMode mode);

} // namespace spnas
