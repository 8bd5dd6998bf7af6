#pragma once

#include "spnas/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spnas {

/// A named trainable matrix paired with its gradient for one update.
struct ParamSlot {
    std::string name;
    Matrix* value;
    const Matrix* grad;
};

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment buffers, one pair per slot in slot order.
struct AdamState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::uint64_t step = 0;
};

/// One bias-corrected Adam update applied in place. Every gradient is checked
/// for finiteness before any parameter is touched; a non-finite entry raises
/// TrainingError naming the parameter and leaves params and state unchanged.
void adam_step(std::vector<ParamSlot>& slots, AdamState& state, const AdamOptions& options);

} // namespace spnas
