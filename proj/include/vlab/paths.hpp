#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vlab/grid.hpp"
#include "vlab/kernels.hpp"
#include "vlab/rng.hpp"

namespace vlab::paths {

struct PathBundle {
    UniformGrid grid;
    SampledFunction brownian;
    SampledFunction volterra;
    kernels::KernelModel model;
    RngSeed seed;
};

// Increments ΔB_i = sqrt(h) Z_i, i = 0..n-1.
std::vector<double> brownian_increments(const UniformGrid& grid, RngSeed seed);
SampledFunction sample_brownian(const UniformGrid& grid, RngSeed seed);

// Band table of the linearized-B construction:
// X(t_k) = Σ_i band(k, i) / h · ΔB_i with band(k, i) = ∫_{t_i}^{t_{i+1}} K(t_k, s) ds.
class SynthesisOperator {
public:
    SynthesisOperator(const kernels::KernelModel& model, const UniformGrid& grid, unsigned workers = 1);

    const UniformGrid& grid() const { return grid_; }
    // (n+1) x n matrix of band primitives; row k holds node t_k.
    const Eigen::MatrixXd& bands() const { return bands_; }

    std::vector<double> apply(std::span<const double> increments) const;
    // increments: n x paths; result: (n+1) x paths.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& increments) const;

private:
    UniformGrid grid_;
    Eigen::MatrixXd bands_;
};

SampledFunction synthesize_volterra(const kernels::KernelModel& model, const SampledFunction& brownian);
PathBundle simulate_path(const kernels::KernelModel& model, const UniformGrid& grid, RngSeed seed);

// Exact Gaussian sampling of (X(t_1), ..., X(t_n)) by Cholesky factorization.
class ExactSampler {
public:
    ExactSampler(const kernels::KernelModel& model, const UniformGrid& grid, std::size_t min_cells = 2048);

    SampledFunction draw(RngSeed seed) const;
    const Eigen::MatrixXd& covariance() const { return cov_; }
    double jitter() const { return jitter_; }
    const UniformGrid& grid() const { return grid_; }

private:
    UniformGrid grid_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd chol_;
    double jitter_ = 0.0;
};

SampledFunction sample_volterra_exact(const kernels::KernelModel& model, const UniformGrid& grid, RngSeed seed);

// CSV with header t,B,X.
std::string to_csv(const PathBundle& bundle);

}  // namespace vlab::paths
