#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cantcn/nn/tcn.hpp"

namespace cantcn::nn {

struct AdamHyper
{
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState
{
    AdamHyper hyper;
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
};

/// One bias-corrected Adam update of a flat parameter array. t is the step
/// number after incrementing (1 for the first update).
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 std::uint64_t t, const AdamHyper& hyper);

/// Adam over every parameter of a TcnModel. Moments are stored flat in the
/// model's parameter order.
class AdamOptimizer
{
public:
    AdamOptimizer(const TcnModel& model, AdamHyper hyper = {});

    void step(TcnModel& model, const TcnModel& grads);

    const AdamState& state() const { return state_; }

private:
    AdamState state_;
};

} // namespace cantcn::nn
