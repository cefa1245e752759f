#pragma once

#include <cstddef>
#include <span>

#include "vlab/grid.hpp"

namespace vlab::fracops {

enum class Side { left, right };

// Riemann-Liouville integral of order gamma > 0. Left: from 0 up to each node,
// right: from each node up to the horizon. f is treated as piecewise linear,
// so the result is exact for affine data.
SampledFunction frac_integral(const SampledFunction& f, double gamma, Side side);

struct FracDerivative {
    SampledFunction values;
    bool ill_posed = false;  // grid-scale blowup detected
};

// Riemann-Liouville derivative of order gamma in (0,1) as d/dx of I^{1-gamma}.
FracDerivative frac_derivative(const SampledFunction& f, double gamma, Side side);

// (∫∫ |f(x)-f(y)|^p / |x-y|^{1+p·eta} dx dy)^{1/p}; eta = 0 gives the L^p norm.
double slobodetzki_seminorm(const SampledFunction& f, double eta, double p);

// Half the log-log slope of mean squared increments against lag.
double estimate_holder_exponent(std::span<const SampledFunction> paths, std::span<const std::size_t> lags);

// ∫_0^T f for samples of a function behaving like |x - e|^lambda · smooth at
// the ends e. Trapezoid sums on the grid and its 2-, 4- and 8-fold coarsenings
// are combined by Richardson elimination of the leading error powers.
double integrate_sampled(const SampledFunction& f, double endpoint_exponent = 0.0);

}  // namespace vlab::fracops
