#pragma once

#include <cmath>
#include <vector>

#include "ccvgae/errors.hpp"
#include "ccvgae/matrix.hpp"

namespace ccvgae {

// Adam with bias correction. Moments are allocated on the first step and must
// stay shape-aligned with the parameter set afterwards.
struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
};

inline void adam_step(AdamState& state, const std::vector<Matrix*>& params,
                      const std::vector<const Matrix*>& grads) {
    if (params.size() != grads.size())
        throw DimensionError("adam_step: params/grads count mismatch");
    if (state.m.empty()) {
        for (const Matrix* p : params) {
            state.m.emplace_back(p->rows(), p->cols());
            state.v.emplace_back(p->rows(), p->cols());
        }
    }
    if (state.m.size() != params.size())
        throw DimensionError("adam_step: state tracks a different parameter set");

    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& param = *params[p];
        const Matrix& grad = *grads[p];
        param.require_same_shape(grad, "adam_step");
        param.require_same_shape(state.m[p], "adam_step");
        Matrix& mom = state.m[p];
        Matrix& vel = state.v[p];
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double g = grad[i];
            mom[i] = state.beta1 * mom[i] + (1.0 - state.beta1) * g;
            vel[i] = state.beta2 * vel[i] + (1.0 - state.beta2) * g * g;
            const double mhat = mom[i] / bc1;
            const double vhat = vel[i] / bc2;
            param[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

} // namespace ccvgae
