#include "spnas/adam.hpp"

#include "spnas/error.hpp"

#include <cmath>

namespace spnas {

void adam_step(std::vector<ParamSlot>& slots, AdamState& state, const AdamOptions& options) {
    if (!(options.learning_rate > 0.0))
        throw ContractError("adam: learning rate must be positive");
    if (state.first_moment.empty()) {
        for (const ParamSlot& s : slots) {
            state.first_moment.emplace_back(s.value->rows(), s.value->cols());
            state.second_moment.emplace_back(s.value->rows(), s.value->cols());
        }
    }
    if (state.first_moment.size() != slots.size())
        throw ContractError("adam: optimizer state does not match parameter list");

    for (std::size_t i = 0; i < slots.size(); ++i) {
        const ParamSlot& s = slots[i];
        if (!s.grad->same_shape(*s.value) || !state.first_moment[i].same_shape(*s.value))
            throw DimensionError("adam: shape mismatch for parameter '" + s.name + "'");
        if (!s.grad->all_finite())
            throw TrainingError("non-finite gradient in parameter '" + s.name + "'");
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(options.beta1, t);
    const double bias2 = 1.0 - std::pow(options.beta2, t);
    const double step_size = options.learning_rate / bias1;

    for (std::size_t i = 0; i < slots.size(); ++i) {
        auto w = slots[i].value->data();
        auto g = slots[i].grad->data();
        auto m = state.first_moment[i].data();
        auto v = state.second_moment[i].data();
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = options.beta1 * m[j] + (1.0 - options.beta1) * g[j];
            v[j] = options.beta2 * v[j] + (1.0 - options.beta2) * g[j] * g[j];
            w[j] -= step_size * m[j] / (std::sqrt(v[j] / bias2) + options.epsilon);
        }
    }
}

} // namespace spnas
