#include "cantcn/nn/adam.hpp"

#include <cmath>

#include <fmt/format.h>

namespace cantcn::nn {

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 std::uint64_t t, const AdamHyper& hyper)
{
    if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
        throw ShapeError(fmt::format("adam: {} parameters, {} gradients, {}/{} moments", params.size(), grads.size(),
                                     m.size(), v.size()));
    if (t == 0)
        throw std::invalid_argument("adam step counter starts at 1");

    const double correction1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
    const double correction2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        params[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
}

AdamOptimizer::AdamOptimizer(const TcnModel& model, AdamHyper hyper)
{
    state_.hyper = hyper;
    state_.m.assign(model.parameter_count(), 0.0);
    state_.v.assign(model.parameter_count(), 0.0);
}

void AdamOptimizer::step(TcnModel& model, const TcnModel& grads)
{
    auto params = model.parameters();
    const auto gparams = grads.parameters();
    if (params.size() != gparams.size())
        throw ShapeError("gradient structure differs from model");

    ++state_.t;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::size_t n = params[i].size();
        if (offset + n > state_.m.size())
            throw ShapeError("optimizer state is smaller than the model");
        adam_update(params[i], gparams[i], std::span(state_.m).subspan(offset, n),
                    std::span(state_.v).subspan(offset, n), state_.t, state_.hyper);
        offset += n;
    }
}

} // namespace cantcn::nn
