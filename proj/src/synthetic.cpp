#include "spnas/bench_store.hpp"

#include "spnas/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

namespace spnas {

namespace {

const std::vector<std::string> kBaseOps = {"none", "skip_connect", "nor_conv_1x1", "nor_conv_3x3",
                                           "avg_pool_3x3"};

// Planted per-op quality, FLOPs and parameter cost for the base ops.
constexpr double kBaseScore[] = {-1.0, 0.15, 0.55, 1.0, 0.05};
constexpr double kBaseFlops[] = {0.0, 0.0, 3.5, 28.0, 0.9};
constexpr double kBaseParams[] = {0.0, 0.0, 0.03, 0.22, 0.0};

std::vector<std::string> vocabulary(std::size_t size) {
    std::vector<std::string> v;
    for (std::size_t i = 0; i < size; ++i)
        v.push_back(i < kBaseOps.size() ? kBaseOps[i] : "op" + std::to_string(i));
    return v;
}

struct EdgeSlot {
    std::size_t src;
    std::size_t dst;
};

// Complete DAG edges ordered by destination, then source.
std::vector<EdgeSlot> complete_dag(std::size_t nodes) {
    std::vector<EdgeSlot> e;
    for (std::size_t d = 1; d < nodes; ++d)
        for (std::size_t s = 0; s < d; ++s)
            e.push_back({s, d});
    return e;
}

// v^e, saturating at 2^62.
std::uint64_t labeling_count(std::size_t v, std::size_t e) {
    constexpr std::uint64_t cap = std::uint64_t{1} << 62;
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < e; ++i) {
        if (total > cap / v)
            return cap;
        total *= v;
    }
    return total;
}

std::vector<std::uint64_t> choose_labelings(std::uint64_t total, std::size_t size,
                                            std::mt19937_64& rng) {
    std::vector<std::uint64_t> chosen;
    if (size == total) {
        chosen.resize(size);
        std::iota(chosen.begin(), chosen.end(), std::uint64_t{0});
        return chosen;
    }
    std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
    std::unordered_set<std::uint64_t> seen;
    while (chosen.size() < size) {
        const std::uint64_t x = pick(rng);
        if (seen.insert(x).second)
            chosen.push_back(x);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

bool has_live_path(std::size_t nodes, const std::vector<EdgeSlot>& edges,
                   const std::vector<std::size_t>& ops) {
    std::vector<bool> reach(nodes, false);
    reach[0] = true;
    for (std::size_t i = 0; i < edges.size(); ++i) // edges sorted by dst
        if (ops[i] != 0 && reach[edges[i].src])
            reach[edges[i].dst] = true;
    return reach[nodes - 1];
}

} // namespace

BenchStore generate_synthetic(const SyntheticOptions& o) {
    if (o.size < 1)
        throw ContractError("synthetic size must be at least 1");
    if (o.nodes < 2)
        throw ContractError("synthetic cells need at least 2 nodes");
    if (o.vocab_size < 2)
        throw ContractError("synthetic vocabulary needs at least 2 ops");
    if (o.epochs < 3)
        throw ContractError("synthetic loss traces need at least 3 epochs");

    std::mt19937_64 rng(o.seed);
    const std::vector<std::string> vocab = vocabulary(o.vocab_size);
    const std::vector<EdgeSlot> edges = complete_dag(o.nodes);
    const std::uint64_t total = labeling_count(o.vocab_size, edges.size());
    if (o.size > total)
        throw ContractError("requested " + std::to_string(o.size) + " cells but only " +
                            std::to_string(total) + " distinct labelings exist");

    // Planted function, drawn once from the seed.
    std::uniform_real_distribution<double> jitter(-0.15, 0.15);
    std::vector<double> op_score(o.vocab_size), op_flops(o.vocab_size), op_params(o.vocab_size);
    for (std::size_t i = 0; i < o.vocab_size; ++i) {
        if (i < kBaseOps.size()) {
            op_score[i] = kBaseScore[i] + (i == 0 ? 0.0 : jitter(rng));
            op_flops[i] = kBaseFlops[i];
            op_params[i] = kBaseParams[i];
        } else {
            op_score[i] = std::uniform_real_distribution<double>(-0.5, 1.0)(rng);
            op_flops[i] = std::uniform_real_distribution<double>(1.0, 15.0)(rng);
            op_params[i] = std::uniform_real_distribution<double>(0.01, 0.15)(rng);
        }
    }
    std::uniform_real_distribution<double> pair_dist(-0.35, 0.35);
    std::vector<double> pair_score(o.vocab_size * o.vocab_size);
    for (double& p : pair_score)
        p = pair_dist(rng);
    std::vector<double> depth_weight(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i)
        depth_weight[i] = 0.6 + 0.8 * static_cast<double>(edges[i].dst) /
                                    static_cast<double>(o.nodes - 1);

    const std::vector<std::uint64_t> chosen = choose_labelings(total, o.size, rng);

    struct Draft {
        std::vector<std::size_t> ops;
        double score;
        bool live;
    };
    std::vector<Draft> drafts;
    drafts.reserve(chosen.size());
    for (std::uint64_t label : chosen) {
        Draft d;
        d.ops.resize(edges.size());
        for (std::size_t i = 0; i < edges.size(); ++i) {
            d.ops[i] = static_cast<std::size_t>(label % o.vocab_size);
            label /= o.vocab_size;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < edges.size(); ++i)
            s += op_score[d.ops[i]] * depth_weight[i];
        // consecutive edge pairs along a path: (a→b) then (b→c)
        for (std::size_t i = 0; i < edges.size(); ++i)
            for (std::size_t j = 0; j < edges.size(); ++j)
                if (edges[i].dst == edges[j].src)
                    s += pair_score[d.ops[i] * o.vocab_size + d.ops[j]];
        d.score = s;
        d.live = has_live_path(o.nodes, edges, d.ops);
        drafts.push_back(std::move(d));
    }

    double mean = 0.0;
    for (const Draft& d : drafts)
        mean += d.score;
    mean /= static_cast<double>(drafts.size());
    double var = 0.0;
    for (const Draft& d : drafts)
        var += (d.score - mean) * (d.score - mean);
    const double sd = drafts.size() > 1 ? std::sqrt(var / static_cast<double>(drafts.size())) : 1.0;
    const double scale = sd > 0.0 ? 1.0 / sd : 1.0;

    std::normal_distribution<double> acc_noise(0.0, 0.02);
    std::normal_distribution<double> start_noise(0.0, 0.03);
    std::normal_distribution<double> limit_noise(0.0, 0.06);
    std::normal_distribution<double> rate_noise(0.0, 0.04);
    std::normal_distribution<double> proxy_noise(0.0, 0.5);

    const std::size_t id_width = std::to_string(total - 1).size();
    std::vector<BenchRecord> records;
    records.reserve(drafts.size());
    std::size_t best = 0;
    double best_acc = 0.0;
    for (std::size_t k = 0; k < drafts.size(); ++k) {
        const Draft& d = drafts[k];
        BenchRecord r;
        std::string digits = std::to_string(chosen[k]);
        r.id = "cell-" + std::string(id_width - digits.size(), '0') + digits;
        r.cell.num_nodes = o.nodes;
        r.cell.op_vocabulary = vocab;
        for (std::size_t i = 0; i < edges.size(); ++i)
            r.cell.edges.push_back({edges[i].src, edges[i].dst, vocab[d.ops[i]]});

        const double z = (d.score - mean) * scale;
        double acc = d.live ? 0.10 + 0.84 / (1.0 + std::exp(-(1.8 * z + 1.0 + acc_noise(rng))))
                            : 0.10 + std::abs(acc_noise(rng));
        acc = std::clamp(acc, 0.0, 1.0);

        DatasetMetrics m;
        m.final_test_accuracy = acc;
        const double start = 2.30 + start_noise(rng);
        const double limit =
            std::clamp(0.05 + 1.9 * (1.0 - acc) + limit_noise(rng), 0.01, start - 0.1);
        const double rate = std::clamp(0.55 + rate_noise(rng), 0.3, 0.85);
        double decay = 1.0;
        for (std::size_t t = 0; t < o.epochs; ++t) {
            decay *= rate;
            m.epoch_losses.push_back(limit + (start - limit) * decay);
        }
        r.metrics.emplace(kSyntheticDataset, std::move(m));

        r.flops_m = 8.0;
        r.params_m = 0.07;
        for (std::size_t op : d.ops) {
            r.flops_m += op_flops[op];
            r.params_m += op_params[op];
        }
        r.proxies.emplace("synflow", 10.0 * std::log(r.params_m) + proxy_noise(rng));

        if (k == 0 || acc > best_acc) {
            best = k;
            best_acc = acc;
        }
        records.push_back(std::move(r));
    }

    StoreHeader header;
    header.op_vocabulary = vocab;
    header.max_nodes = o.nodes + edges.size();
    header.datasets = {kSyntheticDataset};
    header.planted_optimum = records[best].id;
    return BenchStore::create(std::move(header), std::move(records));
}

} // namespace spnas
