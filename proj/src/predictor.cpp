#include "spnas/predictor.hpp"

#include "spnas/error.hpp"

#include <cmath>
#include <optional>
#include <random>

namespace spnas {

void PredictorConfig::validate() const {
    if (hidden_dim < 4)
        throw ConfigError("hidden_dim must be at least 4");
    if (trunk_layers < 1)
        throw ConfigError("trunk_layers must be at least 1");
    if (code_length != kCodeLength)
        throw ConfigError("code_length must be 3");
    if (max_nodes < 1)
        throw ConfigError("max_nodes must be positive");
    if (feature_dim < 1)
        throw ConfigError("feature_dim must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be positive");
}

// --- parameters -----------------------------------------------------------

namespace {

Matrix uniform_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (double& x : m.data())
        x = dist(rng);
    return m;
}

} // namespace

PredictorParams PredictorParams::initialize(const PredictorConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    const std::size_t c = config.hidden_dim;
    PredictorParams p;
    for (std::size_t l = 0; l < config.trunk_layers; ++l)
        p.trunk.push_back(uniform_init(l == 0 ? config.feature_dim : c, c, rng));
    p.efm_q = uniform_init(c, c, rng);
    p.efm_k = uniform_init(c, c, rng);
    p.efm_v = uniform_init(c, c, rng);
    p.efm_o = uniform_init(c, c, rng);
    if (config.use_nsam) {
        p.nsam_q = uniform_init(c, c, rng);
        p.nsam_k = uniform_init(c, c, rng);
        p.nsam_v = uniform_init(c, c, rng);
        p.nsam_o = uniform_init(c, c, rng);
    }
    p.upsample_w = uniform_init(config.code_length, config.max_nodes * c, rng);
    p.upsample_b = Matrix(1, config.max_nodes * c);
    p.head_basic_w = uniform_init(c, 1, rng);
    p.head_basic_b = Matrix(1, 1);
    p.head_estimation_w = uniform_init(c, 1, rng);
    p.head_estimation_b = Matrix(1, 1);
    return p;
}

PredictorParams PredictorParams::zeros_like() const {
    PredictorParams z = *this;
    for (auto& [name, m] : z.named())
        m->fill(0.0);
    return z;
}

std::vector<std::pair<std::string, Matrix*>> PredictorParams::named() {
    std::vector<std::pair<std::string, Matrix*>> out;
    for (std::size_t l = 0; l < trunk.size(); ++l)
        out.emplace_back("trunk." + std::to_string(l), &trunk[l]);
    out.emplace_back("efm.q", &efm_q);
    out.emplace_back("efm.k", &efm_k);
    out.emplace_back("efm.v", &efm_v);
    out.emplace_back("efm.o", &efm_o);
    if (!nsam_q.empty()) {
        out.emplace_back("nsam.q", &nsam_q);
        out.emplace_back("nsam.k", &nsam_k);
        out.emplace_back("nsam.v", &nsam_v);
        out.emplace_back("nsam.o", &nsam_o);
    }
    out.emplace_back("upsample.w", &upsample_w);
    out.emplace_back("upsample.b", &upsample_b);
    out.emplace_back("head_basic.w", &head_basic_w);
    out.emplace_back("head_basic.b", &head_basic_b);
    out.emplace_back("head_estimation.w", &head_estimation_w);
    out.emplace_back("head_estimation.b", &head_estimation_b);
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> PredictorParams::named() const {
    auto mut = const_cast<PredictorParams*>(this)->named();
    std::vector<std::pair<std::string, const Matrix*>> out;
    out.reserve(mut.size());
    for (auto& [n, m] : mut)
        out.emplace_back(std::move(n), m);
    return out;
}

bool PredictorParams::all_finite() const {
    for (const auto& [name, m] : named())
        if (!m->all_finite())
            return false;
    return true;
}

GraphInputs GraphInputs::from(const CellGraph& graph) {
    const std::size_t n = graph.rows();
    GraphInputs g;
    g.mask = Matrix(n, n);
    g.propagation = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        g.mask(i, i) = 1.0;
        for (std::size_t j = 0; j < n; ++j)
            if (graph.adjacency(j, i) != 0.0)
                g.mask(i, j) = 1.0;
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            total += g.mask(i, j);
        for (std::size_t j = 0; j < n; ++j)
            g.propagation(i, j) = g.mask(i, j) / total;
    }
    g.features = graph.features;
    return g;
}

// --- layers ---------------------------------------------------------------

namespace layers {

Var gcn_layer(Tape& tape, Var h, Var propagation, Var w) {
    const Matrix& hv = tape.value(h);
    const Matrix& pv = tape.value(propagation);
    const Matrix& wv = tape.value(w);
    if (hv.cols() != wv.rows() || pv.rows() != pv.cols() || pv.cols() != hv.rows())
        throw DimensionError("gcn_layer: H " + hv.shape_string() + ", P " + pv.shape_string() +
                             ", W " + wv.shape_string());
    return tape.relu(tape.matmul(propagation, tape.matmul(h, w)));
}

Var upsample_code(Tape& tape, Var code, Var w, Var b, std::size_t rows, std::size_t cols) {
    const Matrix& cv = tape.value(code);
    if (cv.rows() != 1 || cv.cols() != kCodeLength)
        throw ContractError("estimation code must have length 3, got " + cv.shape_string());
    return tape.reshape(tape.add(tape.matmul(code, w), b), rows, cols);
}

namespace {

Var attend(Tape& tape, Var h, Var q, Var k, Var v, GraphVars g, Var w_o) {
    // S = masked_softmax((Q Kᵀ) ⊙ M); out = gcn(S V + H)
    Var scores = tape.hadamard(tape.matmul_nt(q, k), g.mask);
    Var attention = tape.row_softmax(scores, g.mask);
    Var mixed = tape.add(tape.matmul(attention, v), h);
    return gcn_layer(tape, mixed, g.propagation, w_o);
}

} // namespace

Var efm_forward(Tape& tape, Var h, Var e, GraphVars g, AttentionVars w) {
    if (!tape.value(h).same_shape(tape.value(e)))
        throw DimensionError("efm: feature " + tape.value(h).shape_string() + " vs code " +
                             tape.value(e).shape_string());
    Var q = gcn_layer(tape, h, g.propagation, w.q);
    Var v = gcn_layer(tape, h, g.propagation, w.v);
    Var k = gcn_layer(tape, e, g.propagation, w.k);
    return attend(tape, h, q, k, v, g, w.o);
}

Var nsam_forward(Tape& tape, Var h, GraphVars g, AttentionVars w) {
    Var q = gcn_layer(tape, h, g.propagation, w.q);
    Var k = gcn_layer(tape, h, g.propagation, w.k);
    Var v = gcn_layer(tape, h, g.propagation, w.v);
    return attend(tape, h, q, k, v, g, w.o);
}

} // namespace layers

// --- predictor ------------------------------------------------------------

struct SiamesePredictor::Registered {
    std::vector<Var> trunk;
    layers::AttentionVars efm;
    layers::AttentionVars nsam;
    Var upsample_w, upsample_b;
    Var head_basic_w, head_basic_b;
    Var head_estimation_w, head_estimation_b;
};

SiamesePredictor::SiamesePredictor(PredictorConfig config, std::uint64_t seed)
    : config_(config), params_(PredictorParams::initialize(config, seed)) {}

SiamesePredictor::SiamesePredictor(PredictorConfig config, PredictorParams params)
    : config_(config), params_(std::move(params)) {
    config_.validate();
    const PredictorParams reference = PredictorParams::initialize(config_, 0);
    auto want = reference.named();
    auto have = params_.named();
    if (want.size() != have.size())
        throw DimensionError("parameter set does not match config");
    for (std::size_t i = 0; i < want.size(); ++i)
        if (want[i].first != have[i].first || !want[i].second->same_shape(*have[i].second))
            throw DimensionError("parameter '" + have[i].first + "' has shape " +
                                 have[i].second->shape_string() + ", expected " +
                                 want[i].second->shape_string());
}

SiamesePredictor::Registered SiamesePredictor::register_params(Tape& tape) const {
    auto reg = [&](const Matrix& m) {
        return tape.tracking() ? tape.parameter(m) : tape.constant(m);
    };
    Registered r;
    for (const Matrix& w : params_.trunk)
        r.trunk.push_back(reg(w));
    r.efm = {reg(params_.efm_q), reg(params_.efm_k), reg(params_.efm_v), reg(params_.efm_o)};
    if (config_.use_nsam)
        r.nsam = {reg(params_.nsam_q), reg(params_.nsam_k), reg(params_.nsam_v),
                  reg(params_.nsam_o)};
    r.upsample_w = reg(params_.upsample_w);
    r.upsample_b = reg(params_.upsample_b);
    r.head_basic_w = reg(params_.head_basic_w);
    r.head_basic_b = reg(params_.head_basic_b);
    r.head_estimation_w = reg(params_.head_estimation_w);
    r.head_estimation_b = reg(params_.head_estimation_b);
    return r;
}

void SiamesePredictor::check_graph(const GraphInputs& g) const {
    if (g.features.rows() != config_.max_nodes || g.features.cols() != config_.feature_dim ||
        g.propagation.rows() != config_.max_nodes)
        throw DimensionError("graph " + g.features.shape_string() + " does not match predictor " +
                             shape_string(config_.max_nodes, config_.feature_dim));
}

Var SiamesePredictor::trunk_forward(Tape& tape, const Registered& p, const GraphInputs& g,
                                    layers::GraphVars& gv) const {
    check_graph(g);
    gv.propagation = tape.constant(g.propagation);
    gv.mask = tape.constant(g.mask);
    Var h = tape.constant(g.features);
    for (Var w : p.trunk)
        h = layers::gcn_layer(tape, h, gv.propagation, w);
    if (config_.use_nsam)
        h = layers::nsam_forward(tape, h, gv, p.nsam);
    return h;
}

Var SiamesePredictor::basic_head(Tape& tape, const Registered& p, Var trunk_out) const {
    Var pooled = tape.mean_pool_rows(trunk_out);
    return tape.add(tape.matmul(pooled, p.head_basic_w), p.head_basic_b);
}

Var SiamesePredictor::estimation_head(Tape& tape, const Registered& p, Var trunk_out,
                                      layers::GraphVars gv, const EstimationCode& code) const {
    if (!code.normalized)
        throw ContractError("estimation branch expects a normalized code");
    Var c = tape.constant(Matrix(1, kCodeLength,
                                 std::vector<double>(code.values.begin(), code.values.end())));
    Var e = layers::upsample_code(tape, c, p.upsample_w, p.upsample_b, config_.max_nodes,
                                  config_.hidden_dim);
    Var fused = layers::efm_forward(tape, trunk_out, e, gv, p.efm);
    Var pooled = tape.mean_pool_rows(fused);
    return tape.add(tape.matmul(pooled, p.head_estimation_w), p.head_estimation_b);
}

Prediction SiamesePredictor::forward_basic(const GraphInputs& graph) const {
    Tape tape(false);
    Registered p = register_params(tape);
    layers::GraphVars gv;
    Var h = trunk_forward(tape, p, graph, gv);
    return {tape.value(basic_head(tape, p, h))(0, 0), Branch::Basic};
}

Prediction SiamesePredictor::forward_estimation(const GraphInputs& graph,
                                                const EstimationCode& code) const {
    Tape tape(false);
    Registered p = register_params(tape);
    layers::GraphVars gv;
    Var h = trunk_forward(tape, p, graph, gv);
    return {tape.value(estimation_head(tape, p, h, gv, code))(0, 0), Branch::Estimation};
}

Var SiamesePredictor::batch_loss(Tape& tape, const Registered& p,
                                 std::span<const TrainingSample> batch) const {
    if (batch.empty())
        throw ContractError("training batch is empty");
    std::optional<Var> total;
    auto accumulate = [&](Var term) { total = total ? tape.add(*total, term) : term; };
    for (const TrainingSample& s : batch) {
        if (s.graph == nullptr)
            throw ContractError("training sample without a graph");
        if (!(s.accuracy >= 0.0 && s.accuracy <= 1.0))
            throw ContractError("ground-truth accuracy outside [0,1]");
        layers::GraphVars gv;
        Var h = trunk_forward(tape, p, *s.graph, gv);
        Var target = tape.constant(Matrix(1, 1, s.accuracy));
        accumulate(tape.mse_loss(basic_head(tape, p, h), target));
        if (config_.train_estimation)
            accumulate(tape.mse_loss(estimation_head(tape, p, h, gv, s.code), target));
    }
    return tape.scale(*total, 1.0 / static_cast<double>(batch.size()));
}

double SiamesePredictor::loss(std::span<const TrainingSample> batch) const {
    Tape tape(false);
    Registered p = register_params(tape);
    return tape.value(batch_loss(tape, p, batch))(0, 0);
}

SiamesePredictor::LossAndGradients
SiamesePredictor::loss_and_gradients(std::span<const TrainingSample> batch) const {
    Tape tape(true);
    Registered p = register_params(tape);
    Var l = batch_loss(tape, p, batch);
    tape.backward(l);

    LossAndGradients out;
    out.loss = tape.value(l)(0, 0);
    out.gradients = params_.zeros_like();
    std::vector<Var> vars = p.trunk;
    vars.insert(vars.end(), {p.efm.q, p.efm.k, p.efm.v, p.efm.o});
    if (config_.use_nsam)
        vars.insert(vars.end(), {p.nsam.q, p.nsam.k, p.nsam.v, p.nsam.o});
    vars.insert(vars.end(), {p.upsample_w, p.upsample_b, p.head_basic_w, p.head_basic_b,
                             p.head_estimation_w, p.head_estimation_b});
    auto named = out.gradients.named();
    for (std::size_t i = 0; i < vars.size(); ++i)
        *named[i].second = tape.grad(vars[i]);
    return out;
}

double SiamesePredictor::train_step(std::span<const TrainingSample> batch) {
    LossAndGradients lg = loss_and_gradients(batch);
    if (!std::isfinite(lg.loss))
        throw TrainingError("non-finite training loss");
    auto values = params_.named();
    auto grads = lg.gradients.named();
    std::vector<ParamSlot> slots;
    slots.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        slots.push_back({values[i].first, values[i].second, grads[i].second});
    AdamOptions opts;
    opts.learning_rate = config_.learning_rate;
    adam_step(slots, adam_, opts);
    return lg.loss;
}

void SiamesePredictor::set_head_bias(double value) {
    params_.head_basic_b(0, 0) = value;
    params_.head_estimation_b(0, 0) = value;
}

} // namespace spnas
