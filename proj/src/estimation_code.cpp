#include "spnas/estimation_code.hpp"

#include "spnas/bench_store.hpp"
#include "spnas/error.hpp"

#include <cmath>

namespace spnas {

EstimationCode code_from_losses(std::span<const double> losses, const std::string& record_id) {
    if (losses.size() < kCodeLength)
        throw MissingDataError("record '" + record_id + "' has " + std::to_string(losses.size()) +
                               " recorded epoch losses, need " + std::to_string(kCodeLength));
    EstimationCode code;
    for (std::size_t i = 0; i < kCodeLength; ++i)
        code.values[i] = losses[i];
    return code;
}

EstimationCode extract_code(const BenchRecord& record, const std::string& dataset,
                            BudgetLedger& ledger, bool in_pool) {
    EstimationCode code = code_from_losses(record.dataset(dataset).epoch_losses, record.id);
    if (!in_pool)
        ledger.charge_codes();
    return code;
}

CodeNormalizer CodeNormalizer::fit(std::span<const EstimationCode> pool) {
    if (pool.empty())
        throw StateError("cannot fit a code normalizer on an empty pool");
    CodeNormalizer n;
    const double count = static_cast<double>(pool.size());
    for (const EstimationCode& c : pool) {
        if (c.normalized)
            throw StateError("normalizer must be fit on raw codes");
        for (std::size_t i = 0; i < kCodeLength; ++i)
            n.mean_[i] += c.values[i];
    }
    for (double& m : n.mean_)
        m /= count;
    std::array<double, kCodeLength> var{};
    for (const EstimationCode& c : pool)
        for (std::size_t i = 0; i < kCodeLength; ++i)
            var[i] += (c.values[i] - n.mean_[i]) * (c.values[i] - n.mean_[i]);
    for (std::size_t i = 0; i < kCodeLength; ++i) {
        const double sd = std::sqrt(var[i] / count);
        if (sd > 0.0 && std::isfinite(sd)) {
            n.std_[i] = sd;
        } else {
            n.std_[i] = 1.0;
            n.degenerate_ = true;
        }
    }
    n.fitted_ = true;
    return n;
}

CodeNormalizer CodeNormalizer::identity() {
    CodeNormalizer n;
    n.fitted_ = true;
    return n;
}

EstimationCode CodeNormalizer::normalize(const EstimationCode& code) const {
    if (!fitted_)
        throw StateError("code normalizer used before fit");
    if (code.normalized)
        throw StateError("code is already normalized");
    EstimationCode out;
    for (std::size_t i = 0; i < kCodeLength; ++i)
        out.values[i] = (code.values[i] - mean_[i]) / std_[i];
    out.normalized = true;
    return out;
}

} // namespace spnas
