#pragma once

// Rank correlations and the CSV-ready analyses built on them.

#include "spnas/bench_store.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spnas {

/// Kendall τ-b (tie corrected), O(n log n). Throws AnalysisError on length
/// mismatch, fewer than 2 samples, or an all-constant argument.
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Spearman ρ: Pearson correlation of average ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based; ties share the mean of their positions).
std::vector<double> average_ranks(std::span<const double> x);

struct CorrelationBin {
    std::size_t bin = 0; // 0 = lowest accuracy decile
    double accuracy_low = 0.0;
    double accuracy_high = 0.0;
    std::size_t sample_count = 0;
    std::optional<double> kendall_tau; // nullopt when undefined in the bin
    std::optional<double> spearman_rho;
};

struct CorrelationReport {
    std::string metric;
    double kendall_tau = 0.0;
    double spearman_rho = 0.0;
    std::size_t sample_count = 0;
    std::vector<CorrelationBin> bins;
};

enum class CodeReduction { NegThirdLoss, NegMeanLoss };

/// Correlation of the reduced Estimation Code with final accuracy, globally
/// and within accuracy deciles.
CorrelationReport code_correlation(const BenchStore& store, const std::string& dataset,
                                   CodeReduction reduction = CodeReduction::NegThirdLoss);

/// Same report shape for a stored proxy column.
CorrelationReport proxy_correlation(const BenchStore& store, const std::string& dataset,
                                    const std::string& proxy);

/// Decile-binned correlation of `score` against `accuracy`.
CorrelationReport correlation_report(std::string metric, std::span<const double> score,
                                     std::span<const double> accuracy, std::size_t bins = 10);

struct DistributionRow {
    std::string id;
    double flops_m = 0.0;
    double accuracy = 0.0;
};

/// One row per record, sorted by id.
std::vector<DistributionRow> distribution_export(const BenchStore& store, const std::string& dataset);

std::string correlation_json(const CorrelationReport& report);
std::string correlation_bins_csv(const CorrelationReport& report);
std::string distribution_csv(const std::vector<DistributionRow>& rows);

} // namespace spnas
