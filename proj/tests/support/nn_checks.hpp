#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "cantcn/nn/tcn.hpp"

namespace cantcn::testing {

inline nn::Tensor3 random_tensor(std::mt19937_64& gen, std::size_t B, std::size_t T, std::size_t C,
                                 double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    nn::Tensor3 x(B, T, C);
    for (double& v : x.values())
        v = u(gen);
    return x;
}

/// Gives every bias a small random value so that ReLUs are not all exactly
/// at the kink for zero inputs.
inline void jitter_biases(nn::TcnModel& model, std::mt19937_64& gen, double scale = 0.1)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    auto params = model.parameters();
    for (std::size_t i = 1; i < params.size(); i += 2)
        for (double& b : params[i])
            b = u(gen);
}

/// True when perturbing any position t' > t leaves every output at t..0
/// bit-identical, for every t.
inline bool is_causal(const nn::TcnModel& model, const nn::Tensor3& x, std::mt19937_64& gen)
{
    const auto y = nn::tcn_forward(x, model);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (std::size_t t = 0; t < x.time(); ++t) {
        auto xp = x;
        for (std::size_t b = 0; b < x.batch(); ++b)
            for (std::size_t tp = t + 1; tp < x.time(); ++tp)
                for (std::size_t c = 0; c < x.channels(); ++c)
                    xp(b, tp, c) += u(gen);
        const auto yp = nn::tcn_forward(xp, model);
        for (std::size_t b = 0; b < x.batch(); ++b)
            for (std::size_t tt = 0; tt <= t; ++tt)
                for (std::size_t c = 0; c < y.channels(); ++c)
                    if (yp(b, tt, c) != y(b, tt, c))
                        return false;
    }
    return true;
}

/// Input positions whose perturbation changes the output at position `at`.
inline std::set<std::size_t> sensitive_positions(const nn::TcnModel& model, const nn::Tensor3& x, std::size_t at)
{
    const auto y = nn::tcn_forward(x, model);
    std::set<std::size_t> out;
    for (std::size_t t = 0; t < x.time(); ++t) {
        for (std::size_t c = 0; c < x.channels(); ++c) {
            auto xp = x;
            for (std::size_t b = 0; b < x.batch(); ++b)
                xp(b, t, c) += 0.5;
            const auto yp = nn::tcn_forward(xp, model);
            bool changed = false;
            for (std::size_t b = 0; b < x.batch(); ++b)
                for (std::size_t o = 0; o < y.channels(); ++o)
                    changed = changed || yp(b, at, o) != y(b, at, o);
            if (changed)
                out.insert(t);
        }
    }
    return out;
}

struct GradCheckResult
{
    double max_rel_error = 0.0;       ///< with denominators floored at `floor`
    double max_raw_rel_error = 0.0;   ///< |a - n| / max(|a|, |n|) without a floor
    double raw_worst_gradient = 0.0;  ///< analytic gradient where the raw ratio peaks
    double floor = 0.0;
    double loss = 0.0;
    std::size_t checked = 0;
    std::size_t below_floor = 0;
};

/// Central differences of mse_loss(tcn_forward(x), target) against the
/// analytic gradient. A central difference in double precision cannot resolve
/// a gradient smaller than about eps * |L| / h, so relative error is taken
/// against max(|a|, |n|, eps * |L| / (h * rel_tol)).
inline GradCheckResult gradient_check(const nn::TcnModel& model, const nn::Tensor3& x, const nn::Tensor3& target,
                                      double h = 1e-5, double rel_tol = 1e-4)
{
    const auto analytic = nn::backward(model, x, target);
    auto probe = model;
    auto params = probe.parameters();
    const auto grads = analytic.grads.parameters();
    GradCheckResult r;
    r.loss = analytic.loss;
    r.floor = std::numeric_limits<double>::epsilon() * std::abs(analytic.loss) / (h * rel_tol);
    for (std::size_t a = 0; a < params.size(); ++a) {
        for (std::size_t i = 0; i < params[a].size(); ++i) {
            const double saved = params[a][i];
            params[a][i] = saved + h;
            const double lp = nn::mse_loss(nn::tcn_forward(x, probe), target);
            params[a][i] = saved - h;
            const double lm = nn::mse_loss(nn::tcn_forward(x, probe), target);
            params[a][i] = saved;
            const double numeric = (lp - lm) / (2.0 * h);
            const double g = grads[a][i];
            const double diff = std::abs(g - numeric);
            const double scale = std::max(std::abs(g), std::abs(numeric));
            if (scale > 0.0 && diff / scale > r.max_raw_rel_error) {
                r.max_raw_rel_error = diff / scale;
                r.raw_worst_gradient = g;
            }
            if (scale < r.floor)
                ++r.below_floor;
            r.max_rel_error = std::max(r.max_rel_error, diff / std::max(scale, r.floor));
            ++r.checked;
        }
    }
    return r;
}

} // namespace cantcn::testing
