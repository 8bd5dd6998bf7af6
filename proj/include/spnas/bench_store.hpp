#pragma once

// Tabular search spaces: JSONL load/write, validation, FLOPs subsetting and
// a seeded synthetic generator with a planted optimum.

#include "spnas/graph_encoding.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace spnas {

struct DatasetMetrics {
    double final_test_accuracy = 0.0; // fraction in [0, 1]
    std::vector<double> epoch_losses;

    friend bool operator==(const DatasetMetrics&, const DatasetMetrics&) = default;
};

struct BenchRecord {
    std::string id;
    CellSpec cell;
    std::map<std::string, DatasetMetrics> metrics;
    double flops_m = 0.0;
    double params_m = 0.0;
    std::map<std::string, double> proxies;

    const DatasetMetrics& dataset(const std::string& name) const;

    friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

struct StoreHeader {
    int format_version = 1;
    std::vector<std::string> op_vocabulary;
    std::size_t max_nodes = 0;
    std::vector<std::string> datasets;
    /// Written by the synthetic generator: id of the best record on its
    /// first dataset.
    std::optional<std::string> planted_optimum;

    friend bool operator==(const StoreHeader&, const StoreHeader&) = default;
};

struct Violation {
    std::size_t line = 0; // 1-based; 0 when not tied to a line
    std::string message;
};

/// Immutable collection of benchmark records sharing one vocabulary.
class BenchStore {
public:
    /// Validates every record against the header; throws LoadError listing
    /// all violations when any is found, or when `records` is empty.
    static BenchStore create(StoreHeader header, std::vector<BenchRecord> records);

    const StoreHeader& header() const noexcept { return *header_; }
    const std::vector<std::string>& op_vocabulary() const noexcept { return header_->op_vocabulary; }
    std::size_t max_nodes() const noexcept { return header_->max_nodes; }
    const std::vector<std::string>& datasets() const noexcept { return header_->datasets; }

    std::size_t size() const noexcept { return records_->size(); }
    const BenchRecord& operator[](std::size_t i) const { return (*records_)[i]; }
    const std::vector<BenchRecord>& records() const noexcept { return *records_; }
    /// Position of `id`, or nullopt.
    std::optional<std::size_t> find(const std::string& id) const;

    friend bool operator==(const BenchStore& a, const BenchStore& b) {
        return a.header() == b.header() && a.records() == b.records();
    }

private:
    BenchStore() = default;

    std::shared_ptr<const StoreHeader> header_;
    std::shared_ptr<const std::vector<BenchRecord>> records_;
    std::shared_ptr<const std::unordered_map<std::string, std::size_t>> index_;
};

/// Validation of one record against a header. `line` is copied into every
/// violation.
std::vector<Violation> validate_record(const BenchRecord& record, const StoreHeader& header,
                                       std::size_t line);

struct LoadReport {
    std::size_t records = 0;
    std::vector<Violation> violations;
    bool ok() const noexcept { return violations.empty() && records > 0; }
};

/// Parse and validate without throwing on schema violations; used by the
/// `validate` command.
LoadReport check_jsonl(const std::filesystem::path& path);

/// Throws LoadError on any parse error, schema violation, duplicate id, or
/// empty file; the message carries the first offending line number.
BenchStore load_jsonl(const std::filesystem::path& path);
BenchStore parse_jsonl(const std::string& text);

void write_jsonl(const BenchStore& store, const std::filesystem::path& path);
std::string to_jsonl(const BenchStore& store);

/// Records with flops_m < max_flops_m. Throws ContractError for a
/// non-positive threshold and LoadError when nothing survives.
BenchStore subset_by_flops(const BenchStore& store, double max_flops_m);

struct SyntheticOptions {
    std::uint64_t seed = 0;
    std::size_t size = 1000;
    std::size_t nodes = 4;      // data nodes per cell (complete DAG)
    std::size_t vocab_size = 5; // ops per edge, including "none"
    std::size_t epochs = 10;    // recorded loss trace length
};

inline const std::string kSyntheticDataset = "synthetic";

/// Seeded synthetic search space. Cells are distinct labelings of the
/// complete DAG on `nodes` data nodes. Accuracy comes from a planted additive
/// score with pairwise path interactions plus Gaussian noise; loss traces
/// converge geometrically to a limit that falls as accuracy rises, so the
/// first three losses carry accuracy information by construction.
BenchStore generate_synthetic(const SyntheticOptions& options);

} // namespace spnas
