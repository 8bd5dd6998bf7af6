#pragma once

// Siamese-Predictor: a shared GCN trunk feeding two heads.
//
//   basic branch:      trunk [→ NSAM] → mean pool → head_basic
//   estimation branch: trunk [→ NSAM] → EFM(upsampled code) → mean pool → head_estimation
//
// Graph convolution aggregates each node with its predecessors:
//   gcn(H) = relu(P · H · W),  P = row_normalize(Aᵀ + I)
// and both attention modules restrict node i to itself and its
// predecessors with the mask M = Aᵀ + I before a masked row softmax.

#include "spnas/adam.hpp"
#include "spnas/estimation_code.hpp"
#include "spnas/graph_encoding.hpp"
#include "spnas/tape.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spnas {

struct PredictorConfig {
    std::size_t hidden_dim = 64;
    std::size_t trunk_layers = 3;
    bool use_nsam = false;
    std::size_t max_nodes = 0;
    std::size_t feature_dim = 0;
    std::size_t code_length = kCodeLength;
    double learning_rate = 1e-3;
    /// Train the estimation head jointly. Off for a basic-only predictor.
    bool train_estimation = true;

    /// Throws ConfigError on a violated invariant.
    void validate() const;
    friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

struct PredictorParams {
    std::vector<Matrix> trunk; // d×c, then c×c
    Matrix efm_q, efm_k, efm_v, efm_o;
    Matrix nsam_q, nsam_k, nsam_v, nsam_o; // empty unless use_nsam
    Matrix upsample_w; // 3 × n·c
    Matrix upsample_b; // 1 × n·c
    Matrix head_basic_w, head_basic_b;
    Matrix head_estimation_w, head_estimation_b;

    /// Uniform in ±1/√fan_in for weights; biases start at 0.
    static PredictorParams initialize(const PredictorConfig& config, std::uint64_t seed);
    /// Same shapes, all zero.
    PredictorParams zeros_like() const;

    /// Fixed-order (name, matrix) view; empty NSAM matrices are skipped.
    std::vector<std::pair<std::string, Matrix*>> named();
    std::vector<std::pair<std::string, const Matrix*>> named() const;

    bool all_finite() const;
    friend bool operator==(const PredictorParams&, const PredictorParams&) = default;
};

/// Per-graph constant matrices, computed once per architecture.
struct GraphInputs {
    Matrix propagation; // row_normalize(Aᵀ + I)
    Matrix mask;        // Aᵀ + I
    Matrix features;

    static GraphInputs from(const CellGraph& graph);
};

enum class Branch { Basic, Estimation };

struct Prediction {
    double value = 0.0;
    Branch branch = Branch::Basic;
};

/// Tape-level building blocks, exposed for tests.
namespace layers {

struct GraphVars {
    Var propagation;
    Var mask;
};

struct AttentionVars {
    Var q, k, v, o;
};

Var gcn_layer(Tape& tape, Var h, Var propagation, Var w);
/// code (1×3) → dense → reshape to rows×cols.
Var upsample_code(Tape& tape, Var code, Var w, Var b, std::size_t rows, std::size_t cols);
/// Cross attention: queries/values from `h`, keys from the upsampled code
/// `e`; masked scores, skip connection, output graph convolution.
Var efm_forward(Tape& tape, Var h, Var e, GraphVars g, AttentionVars w);
/// Self attention with q, k, v all from `h`.
Var nsam_forward(Tape& tape, Var h, GraphVars g, AttentionVars w);

} // namespace layers

/// One training example: a prepared graph, its normalized code, and the
/// ground-truth accuracy.
struct TrainingSample {
    const GraphInputs* graph = nullptr;
    EstimationCode code;
    double accuracy = 0.0;
};

class SiamesePredictor {
public:
    SiamesePredictor(PredictorConfig config, std::uint64_t seed);
    SiamesePredictor(PredictorConfig config, PredictorParams params);

    const PredictorConfig& config() const noexcept { return config_; }
    const PredictorParams& params() const noexcept { return params_; }
    PredictorParams& mutable_params() noexcept { return params_; }

    Prediction forward_basic(const GraphInputs& graph) const;
    /// `code` must be normalized.
    Prediction forward_estimation(const GraphInputs& graph, const EstimationCode& code) const;

    /// Joint loss MSE(basic, g) + MSE(estimation, g) over `batch`
    /// (estimation term only when train_estimation).
    double loss(std::span<const TrainingSample> batch) const;

    struct LossAndGradients {
        double loss = 0.0;
        PredictorParams gradients;
    };
    LossAndGradients loss_and_gradients(std::span<const TrainingSample> batch) const;

    /// One Adam step on the joint loss; returns the pre-step loss. A
    /// non-finite loss or gradient raises TrainingError and leaves the
    /// parameters untouched.
    double train_step(std::span<const TrainingSample> batch);

    /// Set both head biases (e.g. to the mean target of the initial pool).
    void set_head_bias(double value);

    void save(const std::filesystem::path& path) const;
    static SiamesePredictor load(const std::filesystem::path& path);
    std::string to_json() const;
    static SiamesePredictor from_json(const std::string& text);

private:
    struct Registered;
    Registered register_params(Tape& tape) const;
    Var trunk_forward(Tape& tape, const Registered& p, const GraphInputs& g,
                      layers::GraphVars& gv) const;
    Var basic_head(Tape& tape, const Registered& p, Var trunk_out) const;
    Var estimation_head(Tape& tape, const Registered& p, Var trunk_out, layers::GraphVars gv,
                        const EstimationCode& code) const;
    Var batch_loss(Tape& tape, const Registered& p, std::span<const TrainingSample> batch) const;
    void check_graph(const GraphInputs& g) const;

    PredictorConfig config_;
    PredictorParams params_;
    AdamState adam_;
};

} // namespace spnas
