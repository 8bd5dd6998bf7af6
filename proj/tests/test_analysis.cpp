#include "spnas/analysis.hpp"
#include "spnas/error.hpp"

#include "support/rank_oracle.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <random>

namespace {

using spnas::kendall_tau;
using spnas::spearman_rho;
namespace oracle = spnas::testing;

bool constant(const std::vector<double>& v) {
    for (double x : v)
        if (x != v.front())
            return false;
    return true;
}

TEST(Kendall, IdentityAndReversal) {
    const std::vector<double> x{0.1, 0.5, 0.3, 0.9, 0.7};
    std::vector<double> rev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        rev[i] = -x[i];
    EXPECT_EQ(kendall_tau(x, x), 1.0);
    EXPECT_EQ(kendall_tau(x, rev), -1.0);
    EXPECT_EQ(spearman_rho(x, x), 1.0);
    EXPECT_EQ(spearman_rho(x, rev), -1.0);
}

TEST(Kendall, ErrorCases) {
    const std::vector<double> a{1, 2, 3}, b{1, 2}, c{4, 4, 4}, one{1};
    EXPECT_THROW(kendall_tau(a, b), spnas::AnalysisError);
    EXPECT_THROW(kendall_tau(a, c), spnas::AnalysisError);
    EXPECT_THROW(kendall_tau(one, one), spnas::AnalysisError);
    EXPECT_THROW(spearman_rho(a, b), spnas::AnalysisError);
    EXPECT_THROW(spearman_rho(c, a), spnas::AnalysisError);
}

TEST(Kendall, FiveElementTiesMatchBruteForce) {
    const std::vector<double> x{1, 2, 2, 3, 3}, y{2, 1, 2, 2, 5};
    EXPECT_EQ(kendall_tau(x, y), oracle::brute_kendall_tau_b(x, y));
    EXPECT_EQ(spearman_rho(x, y), oracle::brute_spearman_rho(x, y));
}

TEST(Correlation, ExhaustiveUpToFiveMatchesOracles) {
    for (std::size_t n = 2; n <= 5; ++n) {
        std::vector<std::vector<double>> orderings;
        oracle::for_each_weak_ordering(n, [&](const std::vector<double>& v) { orderings.push_back(v); });
        for (const auto& x : orderings) {
            for (const auto& y : orderings) {
                if (constant(x) || constant(y))
                    continue;
                ASSERT_EQ(kendall_tau(x, y), oracle::brute_kendall_tau_b(x, y));
                ASSERT_EQ(spearman_rho(x, y), oracle::brute_spearman_rho(x, y));
            }
        }
    }
}

TEST(Correlation, OrderedBellNumbers) {
    const std::size_t expect[] = {1, 1, 3, 13, 75, 541, 4683};
    for (std::size_t n = 1; n <= 6; ++n)
        EXPECT_EQ(oracle::for_each_weak_ordering(n, [](const std::vector<double>&) {}), expect[n]);
}

TEST(Correlation, RandomLongInputsWithTies) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> d(0, 20);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(300), y(300);
        for (auto& v : x)
            v = d(rng);
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = x[i] + d(rng);
        EXPECT_NEAR(kendall_tau(x, y), oracle::brute_kendall_tau_b(x, y), 1e-14);
        EXPECT_NEAR(spearman_rho(x, y), oracle::brute_spearman_rho(x, y), 1e-14);
    }
}

TEST(Correlation, InvariantUnderIncreasingTransforms) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    std::vector<double> x(100), y(100), fx(100), gy(100);
    for (std::size_t i = 0; i < 100; ++i) {
        x[i] = std::round(n01(rng) * 4.0);
        y[i] = x[i] + n01(rng);
        fx[i] = std::exp(x[i]) + 3.0;
        gy[i] = y[i] * y[i] * y[i];
    }
    EXPECT_EQ(kendall_tau(x, y), kendall_tau(fx, gy));
    EXPECT_EQ(spearman_rho(x, y), spearman_rho(fx, gy));
}

TEST(AverageRanks, TiesShareMeanPosition) {
    const std::vector<double> x{10, 20, 10, 30, 20, 20};
    EXPECT_EQ(spnas::average_ranks(x), (std::vector<double>{1.5, 4, 1.5, 6, 4, 4}));
    EXPECT_EQ(spnas::average_ranks(x), oracle::brute_average_ranks(x));
}

TEST(CodeCorrelation, SyntheticStoreIsStronglyCorrelated) {
    const auto store = spnas::generate_synthetic({.seed = 6, .size = 1000});
    const auto rep = spnas::code_correlation(store, spnas::kSyntheticDataset);
    EXPECT_GT(rep.spearman_rho, 0.6);
    EXPECT_EQ(rep.sample_count, 1000u);
    ASSERT_EQ(rep.bins.size(), 10u);
    std::size_t total = 0;
    for (const auto& b : rep.bins) {
        total += b.sample_count;
        EXPECT_LE(b.accuracy_low, b.accuracy_high);
    }
    EXPECT_EQ(total, 1000u);
    for (std::size_t i = 1; i < rep.bins.size(); ++i)
        EXPECT_LE(rep.bins[i - 1].accuracy_high, rep.bins[i].accuracy_low);
    const auto mean = spnas::code_correlation(store, spnas::kSyntheticDataset,
                                              spnas::CodeReduction::NegMeanLoss);
    EXPECT_EQ(mean.metric, "code:neg_mean_loss");
}

TEST(CodeCorrelation, ConstantLossesAreAnError) {
    spnas::StoreHeader h;
    h.op_vocabulary = {"x"};
    h.max_nodes = 3;
    h.datasets = {"d"};
    std::vector<spnas::BenchRecord> recs;
    for (int i = 0; i < 5; ++i) {
        spnas::BenchRecord r;
        r.id = "r" + std::to_string(i);
        r.cell = {2, {{0, 1, "x"}}, {"x"}};
        r.metrics["d"] = {0.1 * i, {2.0, 1.5, 1.0}};
        r.flops_m = 1;
        recs.push_back(r);
    }
    const auto store = spnas::BenchStore::create(h, recs);
    EXPECT_THROW(spnas::code_correlation(store, "d"), spnas::AnalysisError);
}

spnas::BenchStore with_proxies(double noise, std::uint64_t seed) {
    const auto base = spnas::generate_synthetic({.seed = seed, .size = 1000});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, noise);
    std::vector<spnas::BenchRecord> recs = base.records();
    for (auto& r : recs) {
        const double acc = r.dataset(spnas::kSyntheticDataset).final_test_accuracy;
        r.proxies["exact"] = acc;
        r.proxies["noisy"] = acc + n(rng);
    }
    return spnas::BenchStore::create(base.header(), recs);
}

TEST(ProxyCorrelation, ExactAndNoisyProxies) {
    const auto store = with_proxies(1.0, 7);
    EXPECT_EQ(spnas::proxy_correlation(store, spnas::kSyntheticDataset, "exact").kendall_tau, 1.0);
    const double noisy =
        std::abs(spnas::proxy_correlation(store, spnas::kSyntheticDataset, "noisy").kendall_tau);
    const double code = spnas::code_correlation(store, spnas::kSyntheticDataset).kendall_tau;
    EXPECT_LT(noisy, code);
}

TEST(ProxyCorrelation, MissingProxyListsAvailable) {
    const auto store = with_proxies(1.0, 8);
    try {
        spnas::proxy_correlation(store, spnas::kSyntheticDataset, "grasp");
        FAIL();
    } catch (const spnas::MissingDataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("grasp"), std::string::npos);
        EXPECT_NE(msg.find("synflow"), std::string::npos);
    }
}

TEST(Distribution, RowsSortedAndComplete) {
    const auto store = spnas::generate_synthetic({.seed = 9, .size = 400});
    const auto rows = spnas::distribution_export(store, spnas::kSyntheticDataset);
    ASSERT_EQ(rows.size(), store.size());
    for (std::size_t i = 1; i < rows.size(); ++i)
        EXPECT_LT(rows[i - 1].id, rows[i].id);
    const auto sub = spnas::subset_by_flops(store, 35.0);
    for (const auto& r : spnas::distribution_export(sub, spnas::kSyntheticDataset))
        EXPECT_LT(r.flops_m, 35.0);
    const std::string csv = spnas::distribution_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,flops_m,accuracy");
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), rows.size() + 1);
}

TEST(CorrelationReport, JsonAndCsvShapes) {
    const auto store = spnas::generate_synthetic({.seed = 10, .size = 200});
    const auto rep = spnas::code_correlation(store, spnas::kSyntheticDataset);
    const auto j = nlohmann::json::parse(spnas::correlation_json(rep));
    EXPECT_EQ(j.at("metric"), "code:neg_third_loss");
    EXPECT_EQ(j.at("sample_count"), 200);
    EXPECT_EQ(j.at("bins").size(), 10u);
    EXPECT_DOUBLE_EQ(j.at("kendall_tau").get<double>(), rep.kendall_tau);
    const std::string csv = spnas::correlation_bins_csv(rep);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "bin,accuracy_low,accuracy_high,sample_count,kendall_tau,spearman_rho");
}

TEST(CorrelationReport, UndefinedBinsAreEmpty) {
    const std::vector<double> score{1, 2, 3, 4, 5}, acc{0.1, 0.2, 0.3, 0.4, 0.5};
    const auto rep = spnas::correlation_report("m", score, acc, 10);
    ASSERT_EQ(rep.bins.size(), 10u);
    for (const auto& b : rep.bins)
        EXPECT_FALSE(b.kendall_tau.has_value());
}

} // namespace
