#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "vlab/grid.hpp"
#include "vlab/kernels.hpp"
#include "vlab/rng.hpp"

namespace vlab::verify {

struct VerificationReport {
    std::string check_name;
    bool passed = false;
    double metric = 0.0;
    double threshold = 0.0;
    // Stored as JSON text so that numbers, strings and arrays share one map.
    std::map<std::string, std::string> details;

    void set(const std::string& key, double value);
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, std::size_t value);
    void set(const std::string& key, const std::vector<double>& value);
    void finish(double metric_value, double threshold_value);

    std::string to_json() const;
};

// Quadrature covariance against the closed form (fBm families) and against the
// empirical covariance of exact-sampler paths. Metric 1 is the pass boundary:
// max(det_err / (1e-3 max closed diagonal), max |z| / 4).
VerificationReport check_covariance(const kernels::KernelModel& model, const std::vector<double>& nodes,
                                    std::size_t mc_paths, RngSeed seed, std::size_t mc_grid = 64);

enum class ItoFunction { square, cube, cos };
ItoFunction parse_ito_function(const std::string& name);
std::string ito_function_name(ItoFunction f);

// Chain rule f(X_T) = f(0) + ∫ f'(X)∘dX for u ≡ 1, checked by |mean residual| / stderr over
// coupled paths at partition size n. Refuses alpha < 1/2 and the multifractional family.
VerificationReport check_ito_residual(const kernels::KernelModel& model, ItoFunction f, double T, std::size_t n,
                                      std::size_t mc_paths, RngSeed seed, unsigned workers = 1);

// Discrete divergence of a deterministic u under the shift B -> B + ∫v.
VerificationReport check_girsanov_shift(const kernels::KernelModel& model, const SampledFunction& u,
                                        const SampledFunction& v, RngSeed seed);

// ∫_0^T (u - u(S)) 1_[0,S] ∘dX + u(S) X(S) against ∫_0^S u∘dX on one path.
VerificationReport check_restriction(const kernels::KernelModel& model, const SampledFunction& u, double S,
                                     double T, RngSeed seed);

// u ≡ 1 on any grid: the symmetric sum telescopes to X(T).
VerificationReport check_telescoping(const kernels::KernelModel& model, const UniformGrid& grid, RngSeed seed);

// R(u) against R(u - u(T)) + u(T) X(T) on one path.
VerificationReport check_endpoint_correction(const kernels::KernelModel& model, const SampledFunction& u,
                                             RngSeed seed);

}  // namespace vlab::verify
