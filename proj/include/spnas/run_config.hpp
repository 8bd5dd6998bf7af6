#pragma once

// JSON run configuration for the `search`, `sweep` and `train` commands,
// plus the CSV/JSON writers for their outputs.

#include "spnas/predictor.hpp"
#include "spnas/ranking.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spnas {

struct RunConfig {
    std::filesystem::path benchmark;
    std::string dataset;
    std::filesystem::path output_dir = ".";
    std::optional<double> max_flops_m; // optional FLOPs subset before searching
    SearchConfig search;
    PredictorConfig predictor;
};

/// Parse and validate; unknown keys and type mismatches raise ConfigError.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Keys accepted by parse_run_config, in documentation order.
const std::vector<std::string>& run_config_keys();

/// run_index,seed,best_acc,best_id,pool_size,fte_spent
std::string run_report_csv(const RunReport& report);
/// Per-run ledgers plus summary statistics.
std::string ledger_json(const RunReport& report, const SearchConfig& config);
/// mode,total_budget,n,k,mean_best_acc,std_best_acc,runs
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Write `content` to `path` via a sibling temporary file and rename, so a
/// failure never leaves a partial artifact behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Percentage with one decimal, e.g. 0.008 → "0.8%".
std::string format_percent(double fraction);

} // namespace spnas
