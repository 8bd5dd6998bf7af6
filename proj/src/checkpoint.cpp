#include "spnas/predictor.hpp"

#include "spnas/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace spnas {

namespace {

constexpr const char* kFormat = "spnas-predictor";
constexpr int kVersion = 1;

} // namespace

std::string SiamesePredictor::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    nlohmann::ordered_json c;
    c["hidden_dim"] = config_.hidden_dim;
    c["trunk_layers"] = config_.trunk_layers;
    c["use_nsam"] = config_.use_nsam;
    c["max_nodes"] = config_.max_nodes;
    c["feature_dim"] = config_.feature_dim;
    c["code_length"] = config_.code_length;
    c["learning_rate"] = config_.learning_rate;
    c["train_estimation"] = config_.train_estimation;
    c["output_activation"] = "linear";
    j["config"] = std::move(c);
    nlohmann::ordered_json params = nlohmann::ordered_json::array();
    for (const auto& [name, m] : params_.named()) {
        nlohmann::ordered_json p;
        p["name"] = name;
        p["rows"] = m->rows();
        p["cols"] = m->cols();
        p["data"] = std::vector<double>(m->data().begin(), m->data().end());
        params.push_back(std::move(p));
    }
    j["params"] = std::move(params);
    return j.dump();
}

SiamesePredictor SiamesePredictor::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw LoadError(std::string("checkpoint parse error: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kFormat)
            throw LoadError("not a predictor checkpoint");
        if (j.at("version").get<int>() != kVersion)
            throw LoadError("unsupported checkpoint version " +
                            std::to_string(j.at("version").get<int>()));
        const auto& c = j.at("config");
        PredictorConfig config;
        config.hidden_dim = c.at("hidden_dim").get<std::size_t>();
        config.trunk_layers = c.at("trunk_layers").get<std::size_t>();
        config.use_nsam = c.at("use_nsam").get<bool>();
        config.max_nodes = c.at("max_nodes").get<std::size_t>();
        config.feature_dim = c.at("feature_dim").get<std::size_t>();
        config.code_length = c.at("code_length").get<std::size_t>();
        config.learning_rate = c.at("learning_rate").get<double>();
        config.train_estimation = c.at("train_estimation").get<bool>();
        config.validate();

        PredictorParams params = PredictorParams::initialize(config, 0);
        auto named = params.named();
        const auto& plist = j.at("params");
        if (plist.size() != named.size())
            throw LoadError("checkpoint has " + std::to_string(plist.size()) +
                            " parameters, config expects " + std::to_string(named.size()));
        for (std::size_t i = 0; i < named.size(); ++i) {
            const auto& p = plist[i];
            const std::string name = p.at("name").get<std::string>();
            if (name != named[i].first)
                throw LoadError("checkpoint parameter '" + name + "' where '" + named[i].first +
                                "' was expected");
            *named[i].second = Matrix(p.at("rows").get<std::size_t>(),
                                      p.at("cols").get<std::size_t>(),
                                      p.at("data").get<std::vector<double>>());
        }
        return SiamesePredictor(config, std::move(params));
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("checkpoint schema error: ") + e.what());
    } catch (const DimensionError& e) {
        throw LoadError(std::string("checkpoint shape error: ") + e.what());
    }
}

void SiamesePredictor::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out << to_json() << '\n';
}

SiamesePredictor SiamesePredictor::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

} // namespace spnas
