#include "spnas/bench_store.hpp"

#include "spnas/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace spnas {

using nlohmann::json;
using nlohmann::ordered_json;

const DatasetMetrics& BenchRecord::dataset(const std::string& name) const {
    auto it = metrics.find(name);
    if (it == metrics.end())
        throw MissingDataError("record '" + id + "' has no metrics for dataset '" + name + "'");
    return it->second;
}

std::optional<std::size_t> BenchStore::find(const std::string& id) const {
    auto it = index_->find(id);
    if (it == index_->end())
        return std::nullopt;
    return it->second;
}

std::vector<Violation> validate_record(const BenchRecord& record, const StoreHeader& header,
                                       std::size_t line) {
    std::vector<Violation> out;
    auto fail = [&](std::string msg) {
        out.push_back({line, "record '" + record.id + "': " + std::move(msg)});
    };
    if (record.id.empty())
        fail("empty id");
    if (record.cell.op_vocabulary != header.op_vocabulary)
        fail("op vocabulary differs from header");
    try {
        const CellGraph g = encode_cell(record.cell);
        if (g.node_count > header.max_nodes)
            fail("expands to " + std::to_string(g.node_count) + " nodes, header max_nodes is " +
                 std::to_string(header.max_nodes));
    } catch (const Error& e) {
        fail(e.what());
    }
    for (const std::string& ds : header.datasets)
        if (!record.metrics.contains(ds))
            fail("missing metrics for dataset '" + ds + "'");
    for (const auto& [ds, m] : record.metrics) {
        if (std::find(header.datasets.begin(), header.datasets.end(), ds) == header.datasets.end())
            fail("dataset '" + ds + "' not declared in header");
        if (!(m.final_test_accuracy >= 0.0 && m.final_test_accuracy <= 1.0))
            fail("final_test_acc for '" + ds + "' outside [0,1]");
        if (m.epoch_losses.size() < 3)
            fail("'" + ds + "' has " + std::to_string(m.epoch_losses.size()) +
                 " epoch losses, need at least 3");
        for (double l : m.epoch_losses)
            if (!(std::isfinite(l) && l >= 0.0)) {
                fail("'" + ds + "' has a negative or non-finite epoch loss");
                break;
            }
    }
    if (!(std::isfinite(record.flops_m) && record.flops_m > 0.0))
        fail("flops_m must be positive");
    if (!(std::isfinite(record.params_m) && record.params_m >= 0.0))
        fail("params_m must be nonnegative");
    for (const auto& [name, v] : record.proxies)
        if (!std::isfinite(v))
            fail("proxy '" + name + "' is not finite");
    return out;
}

namespace {

std::string join_violations(const std::vector<Violation>& vs) {
    std::string msg;
    const std::size_t shown = std::min<std::size_t>(vs.size(), 5);
    for (std::size_t i = 0; i < shown; ++i) {
        if (i)
            msg += "; ";
        msg += "line " + std::to_string(vs[i].line) + ": " + vs[i].message;
    }
    if (vs.size() > shown)
        msg += "; ... (" + std::to_string(vs.size()) + " violations)";
    return msg;
}

StoreHeader header_from_json(const json& j) {
    StoreHeader h;
    h.format_version = j.at("format_version").get<int>();
    if (h.format_version != 1)
        throw LoadError("unsupported format_version " + std::to_string(h.format_version));
    h.op_vocabulary = j.at("op_vocab").get<std::vector<std::string>>();
    h.max_nodes = j.at("max_nodes").get<std::size_t>();
    h.datasets = j.at("datasets").get<std::vector<std::string>>();
    if (j.contains("planted_optimum"))
        h.planted_optimum = j.at("planted_optimum").get<std::string>();
    if (h.op_vocabulary.empty())
        throw LoadError("header op_vocab is empty");
    return h;
}

BenchRecord record_from_json(const json& j, const StoreHeader& header) {
    BenchRecord r;
    r.id = j.at("id").get<std::string>();
    r.cell.num_nodes = j.at("num_nodes").get<std::size_t>();
    r.cell.op_vocabulary = header.op_vocabulary;
    for (const json& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 3)
            throw LoadError("edge must be [src, dst, \"op\"]");
        r.cell.edges.push_back(
            {e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<std::string>()});
    }
    for (const auto& [ds, m] : j.at("metrics").items()) {
        DatasetMetrics dm;
        dm.final_test_accuracy = m.at("final_test_acc").get<double>();
        dm.epoch_losses = m.at("epoch_losses").get<std::vector<double>>();
        r.metrics.emplace(ds, std::move(dm));
    }
    r.flops_m = j.at("flops_m").get<double>();
    r.params_m = j.at("params_m").get<double>();
    if (j.contains("proxies"))
        for (const auto& [name, v] : j.at("proxies").items())
            r.proxies.emplace(name, v.get<double>());
    return r;
}

struct Parsed {
    std::optional<StoreHeader> header;
    std::vector<BenchRecord> records;
    std::vector<Violation> violations;
};

Parsed parse_lines(std::istream& in) {
    Parsed p;
    std::string line;
    std::size_t lineno = 0;
    std::unordered_set<std::string> ids;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            p.violations.push_back({lineno, std::string("parse error: ") + e.what()});
            continue;
        }
        if (!p.header) {
            try {
                p.header = header_from_json(j);
            } catch (const json::exception& e) {
                p.violations.push_back({lineno, std::string("bad header: ") + e.what()});
                return p;
            } catch (const LoadError& e) {
                p.violations.push_back({lineno, std::string("bad header: ") + e.what()});
                return p;
            }
            continue;
        }
        BenchRecord r;
        try {
            r = record_from_json(j, *p.header);
        } catch (const json::exception& e) {
            p.violations.push_back({lineno, std::string("schema violation: ") + e.what()});
            continue;
        } catch (const LoadError& e) {
            p.violations.push_back({lineno, std::string("schema violation: ") + e.what()});
            continue;
        }
        if (!ids.insert(r.id).second)
            p.violations.push_back({lineno, "duplicate id '" + r.id + "'"});
        auto vs = validate_record(r, *p.header, lineno);
        p.violations.insert(p.violations.end(), vs.begin(), vs.end());
        p.records.push_back(std::move(r));
    }
    return p;
}

BenchStore finish(Parsed p) {
    if (!p.violations.empty())
        throw LoadError(join_violations(p.violations));
    if (!p.header || p.records.empty())
        throw LoadError("empty search space");
    return BenchStore::create(std::move(*p.header), std::move(p.records));
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot open '" + path.string() + "'");
    return in;
}

} // namespace

BenchStore BenchStore::create(StoreHeader header, std::vector<BenchRecord> records) {
    if (records.empty())
        throw LoadError("empty search space");
    std::vector<Violation> violations;
    auto index = std::make_shared<std::unordered_map<std::string, std::size_t>>();
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto vs = validate_record(records[i], header, 0);
        violations.insert(violations.end(), vs.begin(), vs.end());
        if (!index->emplace(records[i].id, i).second)
            violations.push_back({0, "duplicate id '" + records[i].id + "'"});
    }
    if (!violations.empty())
        throw LoadError(join_violations(violations));
    BenchStore s;
    s.header_ = std::make_shared<const StoreHeader>(std::move(header));
    s.records_ = std::make_shared<const std::vector<BenchRecord>>(std::move(records));
    s.index_ = std::move(index);
    return s;
}

LoadReport check_jsonl(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    Parsed p = parse_lines(in);
    LoadReport report;
    report.records = p.records.size();
    report.violations = std::move(p.violations);
    if (report.records == 0 && report.violations.empty())
        report.violations.push_back({0, "empty search space"});
    return report;
}

BenchStore load_jsonl(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    return finish(parse_lines(in));
}

BenchStore parse_jsonl(const std::string& text) {
    std::istringstream in(text);
    return finish(parse_lines(in));
}

std::string to_jsonl(const BenchStore& store) {
    std::string out;
    const StoreHeader& h = store.header();
    ordered_json header;
    header["format_version"] = h.format_version;
    header["op_vocab"] = h.op_vocabulary;
    header["max_nodes"] = h.max_nodes;
    header["datasets"] = h.datasets;
    if (h.planted_optimum)
        header["planted_optimum"] = *h.planted_optimum;
    out += header.dump();
    out += '\n';
    for (const BenchRecord& r : store.records()) {
        ordered_json j;
        j["id"] = r.id;
        j["num_nodes"] = r.cell.num_nodes;
        ordered_json edges = ordered_json::array();
        for (const CellEdge& e : r.cell.edges)
            edges.push_back(ordered_json::array({e.src, e.dst, e.op}));
        j["edges"] = std::move(edges);
        ordered_json metrics = ordered_json::object();
        for (const auto& [ds, m] : r.metrics) {
            ordered_json mj;
            mj["final_test_acc"] = m.final_test_accuracy;
            mj["epoch_losses"] = m.epoch_losses;
            metrics[ds] = std::move(mj);
        }
        j["metrics"] = std::move(metrics);
        j["flops_m"] = r.flops_m;
        j["params_m"] = r.params_m;
        if (!r.proxies.empty()) {
            ordered_json proxies = ordered_json::object();
            for (const auto& [name, v] : r.proxies)
                proxies[name] = v;
            j["proxies"] = std::move(proxies);
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

void write_jsonl(const BenchStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out << to_jsonl(store);
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

BenchStore subset_by_flops(const BenchStore& store, double max_flops_m) {
    if (!(max_flops_m > 0.0))
        throw ContractError("subset threshold must be positive");
    std::vector<BenchRecord> kept;
    for (const BenchRecord& r : store.records())
        if (r.flops_m < max_flops_m)
            kept.push_back(r);
    if (kept.empty()) {
        std::ostringstream msg;
        msg << "no record has flops_m < " << max_flops_m;
        throw LoadError(msg.str());
    }
    StoreHeader header = store.header();
    if (header.planted_optimum && !std::any_of(kept.begin(), kept.end(), [&](const BenchRecord& r) {
            return r.id == *header.planted_optimum;
        }))
        header.planted_optimum.reset();
    return BenchStore::create(std::move(header), std::move(kept));
}

} // namespace spnas
