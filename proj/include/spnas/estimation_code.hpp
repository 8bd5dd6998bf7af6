#pragma once

// Estimation Codes (the first three recorded training losses of an
// architecture), their z-score normalizer, and the full-training-equivalent
// (FTE) budget ledger.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spnas {

struct BenchRecord;

inline constexpr std::size_t kCodeLength = 3;
/// Cost of one code relative to one full training run: 5,000 images × 3
/// epochs against 50,000 images × 100 epochs.
inline constexpr double kCostPerCode = (5000.0 * 3.0) / (50000.0 * 100.0);

struct EstimationCode {
    std::array<double, kCodeLength> values{};
    bool normalized = false;

    friend bool operator==(const EstimationCode&, const EstimationCode&) = default;
};

class BudgetLedger {
public:
    explicit BudgetLedger(double cost_per_code = kCostPerCode) : cost_per_code_(cost_per_code) {}

    void charge_predictor_samples(std::uint64_t count = 1) { predictor_samples_ += count; }
    void charge_codes(std::uint64_t count = 1) { codes_acquired_ += count; }
    void charge_final_trains(std::uint64_t count = 1) { final_topk_trains_ += count; }

    std::uint64_t predictor_samples() const noexcept { return predictor_samples_; }
    std::uint64_t codes_acquired() const noexcept { return codes_acquired_; }
    std::uint64_t final_topk_trains() const noexcept { return final_topk_trains_; }
    double cost_per_code() const noexcept { return cost_per_code_; }

    /// Spent budget in FTE, always re-derived from the breakdown.
    double spent() const noexcept {
        return static_cast<double>(predictor_samples_) +
               static_cast<double>(codes_acquired_) * cost_per_code_ +
               static_cast<double>(final_topk_trains_);
    }
    /// Cost of the code acquisitions alone.
    double code_cost() const noexcept { return static_cast<double>(codes_acquired_) * cost_per_code_; }

    friend bool operator==(const BudgetLedger&, const BudgetLedger&) = default;

private:
    double cost_per_code_;
    std::uint64_t predictor_samples_ = 0;
    std::uint64_t codes_acquired_ = 0;
    std::uint64_t final_topk_trains_ = 0;
};

/// First three losses of `losses`, raw. Throws MissingDataError naming
/// `record_id` when fewer than three are present.
EstimationCode code_from_losses(std::span<const double> losses, const std::string& record_id);

/// Code of `record` on `dataset`. When the record is not already a fully
/// trained pool member, one code acquisition is charged to `ledger`.
EstimationCode extract_code(const BenchRecord& record, const std::string& dataset,
                            BudgetLedger& ledger, bool in_pool);

class CodeNormalizer {
public:
    CodeNormalizer() = default;

    /// Per-component mean and population standard deviation of `pool`.
    /// Components with zero spread use std = 1 and set `degenerate()`.
    static CodeNormalizer fit(std::span<const EstimationCode> pool);
    /// mean 0, std 1: a pass-through used when there is no pool to fit on.
    static CodeNormalizer identity();

    bool fitted() const noexcept { return fitted_; }
    bool degenerate() const noexcept { return degenerate_; }
    const std::array<double, kCodeLength>& mean() const noexcept { return mean_; }
    const std::array<double, kCodeLength>& stddev() const noexcept { return std_; }

    /// Throws StateError when unfit or when `code` is already normalized.
    EstimationCode normalize(const EstimationCode& code) const;

private:
    std::array<double, kCodeLength> mean_{};
    std::array<double, kCodeLength> std_{1.0, 1.0, 1.0};
    bool fitted_ = false;
    bool degenerate_ = false;
};

} // namespace spnas
