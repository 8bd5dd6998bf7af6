#include "spnas/analysis.hpp"

#include "spnas/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>

namespace spnas {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw AnalysisError("correlation inputs differ in length: " + std::to_string(x.size()) +
                            " vs " + std::to_string(y.size()));
    if (x.size() < 2)
        throw AnalysisError("correlation needs at least 2 samples");
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    if (constant(x) || constant(y))
        throw AnalysisError("correlation undefined for an all-constant input");
}

// Σ t(t-1)/2 over runs of equal values in a sorted sequence.
template <class Equal>
std::uint64_t tied_pairs(std::size_t n, Equal equal) {
    std::uint64_t total = 0;
    std::uint64_t run = 1;
    for (std::size_t i = 1; i < n; ++i) {
        if (equal(i - 1, i)) {
            ++run;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    return total + run * (run - 1) / 2;
}

// Merge sort counting inversions (strict y[a] > y[b] for a before b).
std::uint64_t count_swaps(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo,
                          std::size_t hi) {
    if (hi - lo < 2)
        return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t swaps = count_swaps(v, tmp, lo, mid) + count_swaps(v, tmp, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += mid - i;
            tmp[k++] = v[j++];
        } else {
            tmp[k++] = v[i++];
        }
    }
    while (i < mid)
        tmp[k++] = v[i++];
    while (j < hi)
        tmp[k++] = v[j++];
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

} // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t n1 = tied_pairs(n, [&](std::size_t a, std::size_t b) {
        return x[idx[a]] == x[idx[b]];
    });
    const std::uint64_t n3 = tied_pairs(n, [&](std::size_t a, std::size_t b) {
        return x[idx[a]] == x[idx[b]] && y[idx[a]] == y[idx[b]];
    });

    std::vector<double> ys(n), tmp(n);
    for (std::size_t i = 0; i < n; ++i)
        ys[i] = y[idx[i]];
    const std::uint64_t discordant = count_swaps(ys, tmp, 0, n); // ys now sorted
    const std::uint64_t n2 = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

    // concordant − discordant = n0 − n1 − n2 + n3 − 2·discordant
    const double numer = static_cast<double>(n0) - static_cast<double>(n1) -
                         static_cast<double>(n2) + static_cast<double>(n3) -
                         2.0 * static_cast<double>(discordant);
    const double denom = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
    return std::clamp(numer / denom, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]])
            ++j;
        const double r = static_cast<double>(i + j + 2) / 2.0; // mean of 1-based i+1..j+1
        for (std::size_t k = i; k <= j; ++k)
            ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0; // average ranks always sum to n(n+1)/2
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport correlation_report(std::string metric, std::span<const double> score,
                                     std::span<const double> accuracy, std::size_t bins) {
    CorrelationReport rep;
    rep.metric = std::move(metric);
    rep.kendall_tau = kendall_tau(score, accuracy);
    rep.spearman_rho = spearman_rho(score, accuracy);
    rep.sample_count = score.size();

    std::vector<std::size_t> idx(score.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return accuracy[a] < accuracy[b]; });
    const std::size_t n = idx.size();
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * n / bins;
        const std::size_t hi = (b + 1) * n / bins;
        CorrelationBin bin;
        bin.bin = b;
        bin.sample_count = hi - lo;
        if (hi > lo) {
            bin.accuracy_low = accuracy[idx[lo]];
            bin.accuracy_high = accuracy[idx[hi - 1]];
            std::vector<double> s, a;
            for (std::size_t k = lo; k < hi; ++k) {
                s.push_back(score[idx[k]]);
                a.push_back(accuracy[idx[k]]);
            }
            try {
                bin.kendall_tau = kendall_tau(s, a);
                bin.spearman_rho = spearman_rho(s, a);
            } catch (const AnalysisError&) {
                // undefined inside this bin (too few or constant values)
            }
        }
        rep.bins.push_back(bin);
    }
    return rep;
}

CorrelationReport code_correlation(const BenchStore& store, const std::string& dataset,
                                   CodeReduction reduction) {
    std::vector<double> score, acc;
    std::vector<std::string> missing;
    for (const BenchRecord& r : store.records()) {
        const DatasetMetrics& m = r.dataset(dataset);
        if (m.epoch_losses.size() < 3) {
            missing.push_back(r.id);
            continue;
        }
        const double v = reduction == CodeReduction::NegThirdLoss
                             ? -m.epoch_losses[2]
                             : -(m.epoch_losses[0] + m.epoch_losses[1] + m.epoch_losses[2]) / 3.0;
        score.push_back(v);
        acc.push_back(m.final_test_accuracy);
    }
    if (!missing.empty()) {
        std::string msg = "records without 3 epoch losses:";
        for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i)
            msg += " " + missing[i];
        throw MissingDataError(msg);
    }
    return correlation_report(reduction == CodeReduction::NegThirdLoss ? "code:neg_third_loss"
                                                                      : "code:neg_mean_loss",
                              score, acc);
}

CorrelationReport proxy_correlation(const BenchStore& store, const std::string& dataset,
                                    const std::string& proxy) {
    std::vector<double> score, acc;
    for (const BenchRecord& r : store.records()) {
        auto it = r.proxies.find(proxy);
        if (it == r.proxies.end()) {
            std::string available;
            for (const auto& [name, v] : r.proxies)
                available += (available.empty() ? "" : ", ") + name;
            throw MissingDataError("proxy '" + proxy + "' missing on record '" + r.id +
                                   "' (available: " + (available.empty() ? "none" : available) + ")");
        }
        score.push_back(it->second);
        acc.push_back(r.dataset(dataset).final_test_accuracy);
    }
    return correlation_report("proxy:" + proxy, score, acc);
}

std::vector<DistributionRow> distribution_export(const BenchStore& store, const std::string& dataset) {
    std::vector<DistributionRow> rows;
    rows.reserve(store.size());
    for (const BenchRecord& r : store.records())
        rows.push_back({r.id, r.flops_m, r.dataset(dataset).final_test_accuracy});
    std::sort(rows.begin(), rows.end(),
              [](const DistributionRow& a, const DistributionRow& b) { return a.id < b.id; });
    return rows;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

std::string correlation_json(const CorrelationReport& r) {
    nlohmann::ordered_json j;
    j["metric"] = r.metric;
    j["kendall_tau"] = r.kendall_tau;
    j["spearman_rho"] = r.spearman_rho;
    j["sample_count"] = r.sample_count;
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (const CorrelationBin& b : r.bins) {
        nlohmann::ordered_json bj;
        bj["bin"] = b.bin;
        bj["accuracy_low"] = b.accuracy_low;
        bj["accuracy_high"] = b.accuracy_high;
        bj["sample_count"] = b.sample_count;
        bj["kendall_tau"] = b.kendall_tau ? nlohmann::ordered_json(*b.kendall_tau) : nullptr;
        bj["spearman_rho"] = b.spearman_rho ? nlohmann::ordered_json(*b.spearman_rho) : nullptr;
        bins.push_back(std::move(bj));
    }
    j["bins"] = std::move(bins);
    return j.dump(2);
}

std::string correlation_bins_csv(const CorrelationReport& r) {
    std::string out = "bin,accuracy_low,accuracy_high,sample_count,kendall_tau,spearman_rho\n";
    for (const CorrelationBin& b : r.bins) {
        out += std::to_string(b.bin) + "," + fmt(b.accuracy_low) + "," + fmt(b.accuracy_high) + "," +
               std::to_string(b.sample_count) + "," + (b.kendall_tau ? fmt(*b.kendall_tau) : "") + "," +
               (b.spearman_rho ? fmt(*b.spearman_rho) : "") + "\n";
    }
    return out;
}

std::string distribution_csv(const std::vector<DistributionRow>& rows) {
    std::string out = "id,flops_m,accuracy\n";
    for (const DistributionRow& r : rows)
        out += r.id + "," + fmt(r.flops_m) + "," + fmt(r.accuracy) + "\n";
    return out;
}

} // namespace spnas
