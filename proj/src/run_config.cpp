#include "spnas/run_config.hpp"

#include "spnas/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <limits>
#include <fstream>
#include <sstream>

namespace spnas {

using nlohmann::json;

const std::vector<std::string>& run_config_keys() {
    static const std::vector<std::string> keys = {
        "benchmark", "dataset",   "output_dir",   "max_flops_m",  "seed",
        "N",         "K",         "c_bts",        "c_eval",       "f",
        "lambda",    "alpha",     "l",            "b",            "runs",
        "sampling",  "ranking",   "hidden_dim",   "trunk_layers", "use_nsam",
        "learning_rate", "train_estimation"};
    return keys;
}

namespace {

template <class T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

std::size_t get_count(const json& j, const std::string& key) {
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ConfigError("config key '" + key + "' must be a nonnegative integer");
    return v.get<std::size_t>();
}

} // namespace

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    const auto& keys = run_config_keys();
    for (const auto& [k, v] : j.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw ConfigError("unknown config key '" + k + "'");
    for (const char* required : {"benchmark", "dataset"})
        if (!j.contains(required))
            throw ConfigError(std::string("missing config key '") + required + "'");

    RunConfig c;
    c.benchmark = get_as<std::string>(j, "benchmark");
    c.dataset = get_as<std::string>(j, "dataset");
    if (j.contains("output_dir"))
        c.output_dir = get_as<std::string>(j, "output_dir");
    if (j.contains("max_flops_m"))
        c.max_flops_m = get_as<double>(j, "max_flops_m");
    SearchConfig& s = c.search;
    if (j.contains("seed"))
        s.seed = get_as<std::uint64_t>(j, "seed");
    if (j.contains("N"))
        s.pool_budget = get_count(j, "N");
    if (j.contains("K"))
        s.top_k = get_count(j, "K");
    if (j.contains("c_bts"))
        s.c_bts = get_count(j, "c_bts");
    if (j.contains("c_eval"))
        s.c_eval = get_count(j, "c_eval");
    if (j.contains("f"))
        s.update_frequency = get_count(j, "f");
    if (j.contains("lambda"))
        s.init_fraction = get_as<double>(j, "lambda");
    if (j.contains("alpha"))
        s.warmup_fraction = get_as<double>(j, "alpha");
    if (j.contains("l"))
        s.max_iterations = get_count(j, "l");
    if (j.contains("b"))
        s.batch_size = get_count(j, "b");
    if (j.contains("runs"))
        s.runs = get_count(j, "runs");
    if (j.contains("sampling")) {
        const auto m = get_as<std::string>(j, "sampling");
        if (m == "bts")
            s.sampling = SamplingMode::BatchTop;
        else if (m == "fts")
            s.sampling = SamplingMode::FullyTop;
        else if (m == "random")
            s.sampling = SamplingMode::Random;
        else
            throw ConfigError("sampling must be bts, fts or random");
    }
    if (j.contains("ranking")) {
        const auto m = get_as<std::string>(j, "ranking");
        if (m == "siamese")
            s.ranking = RankingMode::Siamese;
        else if (m == "basic")
            s.ranking = RankingMode::BasicOnly;
        else
            throw ConfigError("ranking must be siamese or basic");
    }
    PredictorConfig& p = c.predictor;
    if (j.contains("hidden_dim"))
        p.hidden_dim = get_count(j, "hidden_dim");
    if (j.contains("trunk_layers"))
        p.trunk_layers = get_count(j, "trunk_layers");
    if (j.contains("use_nsam"))
        p.use_nsam = get_as<bool>(j, "use_nsam");
    if (j.contains("learning_rate"))
        p.learning_rate = get_as<double>(j, "learning_rate");
    if (j.contains("train_estimation"))
        p.train_estimation = get_as<bool>(j, "train_estimation");

    // Structural checks that do not need the benchmark loaded.
    PredictorConfig probe = p;
    probe.max_nodes = 1;
    probe.feature_dim = 1;
    probe.validate();
    s.validate(std::numeric_limits<std::size_t>::max());
    if (c.max_flops_m && !(*c.max_flops_m > 0.0))
        throw ConfigError("max_flops_m must be positive");
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

std::string run_report_csv(const RunReport& report) {
    std::string out = "run_index,seed,best_acc,best_id,pool_size,fte_spent\n";
    for (const RunResult& r : report.runs)
        out += std::to_string(r.run_index) + "," + std::to_string(r.seed) + "," +
               num(r.best_accuracy) + "," + r.best_id + "," + std::to_string(r.pool_size) + "," +
               num(r.ledger.spent()) + "\n";
    return out;
}

std::string ledger_json(const RunReport& report, const SearchConfig& config) {
    nlohmann::ordered_json j;
    j["runs"] = report.runs.size();
    j["N"] = config.pool_budget;
    j["K"] = config.top_k;
    j["trained_samples"] = report.trained_samples;
    j["pool_fraction"] = report.pool_fraction;
    j["pool_fraction_display"] = format_percent(report.pool_fraction);
    j["mean_best_acc"] = report.mean_best_accuracy;
    j["std_best_acc"] = report.std_best_accuracy;
    j["sampling"] = to_string(config.sampling);
    j["ranking"] = to_string(config.ranking);
    nlohmann::ordered_json ledgers = nlohmann::ordered_json::array();
    for (const RunResult& r : report.runs) {
        nlohmann::ordered_json l;
        l["run_index"] = r.run_index;
        l["predictor_samples"] = r.ledger.predictor_samples();
        l["codes_acquired"] = r.ledger.codes_acquired();
        l["final_topk_trains"] = r.ledger.final_topk_trains();
        l["cost_per_code"] = r.ledger.cost_per_code();
        l["code_cost"] = r.ledger.code_cost();
        l["fte_spent"] = r.ledger.spent();
        ledgers.push_back(std::move(l));
    }
    j["ledgers"] = std::move(ledgers);
    return j.dump(2) + "\n";
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "mode,total_budget,n,k,mean_best_acc,std_best_acc,runs\n";
    for (const SweepRow& r : rows)
        out += to_string(r.mode) + "," + std::to_string(r.total_budget) + "," +
               std::to_string(r.n) + "," + std::to_string(r.k) + "," +
               num(r.mean_best_accuracy) + "," + num(r.std_best_accuracy) + "," +
               std::to_string(r.runs) + "\n";
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out)
            throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot move output into place at '" + path.string() + "': " + ec.message());
    }
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
    return buf;
}

} // namespace spnas
