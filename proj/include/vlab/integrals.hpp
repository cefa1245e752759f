#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vlab/grid.hpp"
#include "vlab/kernels.hpp"
#include "vlab/paths.hpp"
#include "vlab/rng.hpp"

namespace vlab::integrals {

enum class IntegrandKind { deterministic, composite };

// Either a deterministic function of time or u_t = g(X_t) with g' supplied.
class Integrand {
public:
    static Integrand deterministic(std::function<double(double)> u, std::string name = "u");
    static Integrand deterministic(const SampledFunction& u, std::string name = "u");
    // Checks g' against central differences of g on a probe set.
    static Integrand composite(std::function<double(double)> g, std::function<double(double)> dg,
                               std::string name = "g(X)");

    IntegrandKind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    double at(double t) const { return fn_(t); }  // deterministic value at time t
    double g(double x) const { return fn_(x); }
    double dg(double x) const { return dfn_(x); }

private:
    IntegrandKind kind_ = IntegrandKind::deterministic;
    std::string name_;
    std::function<double(double)> fn_;
    std::function<double(double)> dfn_;
};

// Σ u(t_i)(x(t_{i+1}) - x(t_i)).
double riemann_sum(const SampledFunction& u, const SampledFunction& x);
// Σ (trapezoid average of u over [t_i, t_{i+1}])(x(t_{i+1}) - x(t_i)).
double ss_sum(const SampledFunction& u, const SampledFunction& x);

// Terms of the symmetric sum on one partition.
struct RPiTerms {
    double r_pi = 0.0;        // plug-in sum Σ u(τ_j) ΔX^π_j; equals divergence + cell_trace
    double divergence = 0.0;  // discrete Skorohod part
    double cell_trace = 0.0;  // Σ_i (1/h) ∬_{I_i²} K*(∇_r u)(t) dt dr
};

// Per-level output of the coupled scheme.
struct LevelValues {
    std::size_t n = 0;
    RPiTerms terms;
    double trace = 0.0;  // ∫_0^T of the trace density
    double value = 0.0;  // divergence + trace, endpoint-corrected when alpha < 1/2
    double x_pi_T = 0.0;
    double x_T = 0.0;  // fine-grid X(T) of the same path
};

// Coupled dyadic partitions of [0, T]. One Brownian path is drawn on a grid of
// 2·max(levels) cells; each level aggregates its increments, so all levels see
// the same ω. The integrand is read at interval midpoints from the fine path.
class CoupledLevels {
public:
    CoupledLevels(const kernels::KernelModel& model, double T, std::vector<std::size_t> levels,
                  unsigned workers = 1);

    const UniformGrid& fine_grid() const { return fine_grid_; }
    const std::vector<std::size_t>& levels() const { return level_ns_; }
    double horizon() const { return T_; }

    std::vector<LevelValues> evaluate(const Integrand& u, RngSeed seed) const;
    // Paths use streams seed.stream, seed.stream + 1, ...; output order follows the streams.
    std::vector<std::vector<LevelValues>> evaluate_batch(const Integrand& u, RngSeed seed, std::size_t count) const;

    // Fine-grid Volterra path for a seed (nodes of fine_grid()).
    std::vector<double> fine_path(RngSeed seed) const;

    // Σ_j ½(K(t_{j+1}, r)² - K(t_j, r)²) g'(y_j) at level index `level` for given midpoint values y.
    double trace_density(std::size_t level, const Integrand& u, std::span<const double> y_mid, double r) const;

    // Trace weights W_j = ½(v(t_{j+1}) - v(t_j)) of a level, v the variance of the fine path.
    const std::vector<double>& trace_weights(std::size_t level) const { return levels_[level].trace_w; }
    // Synthesis matrix of a level divided by its step: X^π(t_k) = Σ_i abar(k,i) ΔB_i.
    const Eigen::MatrixXd& abar(std::size_t level) const { return levels_[level].abar; }

private:
    struct Level {
        std::size_t n;
        std::size_t stride;  // fine cells per level cell
        Eigen::MatrixXd abar;
        std::vector<double> w_cell;  // cell double-sum weights
        std::vector<double> w_end;   // same against X(T) for the endpoint form
        std::vector<double> trace_w;
        double var_end;  // variance of the fine path at T
    };

    kernels::KernelModel model_;
    double T_;
    std::vector<std::size_t> level_ns_;
    UniformGrid fine_grid_;
    std::shared_ptr<const paths::SynthesisOperator> fine_;
    std::vector<Level> levels_;
    unsigned workers_;
};

// ∫_0^{t} K(t, r)² dr with singularity-aware quadrature on a grid of `cells` cells across [0, t].
double kernel_energy(const kernels::KernelModel& model, double t, std::size_t cells);

// R^π_T on a single bundle. Midpoint values of X are linearly interpolated from
// the bundle unless supplied (one per interval up to T).
RPiTerms r_pi_sum(const Integrand& u, const paths::PathBundle& bundle, double T,
                  std::span<const double> x_mid = {});

// Literal first term Σ_i (1/h)(∫_{I_i} K*_T u)ΔB_i for midpoint values of u.
double r_pi_first_term(const paths::PathBundle& bundle, std::span<const double> u_mid, double T);

// ∫_0^T of the trace density for a composite integrand on the bundle's partition:
// the density at each node r_i is the step-function adjoint of t -> g'(X_t) K(t, r_i),
// integrated over r by the trapezoid rule with power-law end cells.
double trace_term(const Integrand& u, const paths::PathBundle& bundle, double T, std::span<const double> x_mid = {});

struct IntegralEstimate {
    std::vector<std::pair<std::size_t, double>> levels;  // (n, value)
    std::vector<double> r_pi;                            // raw symmetric sums per level
    // |v_{k+1} - v_k| between neighbouring levels; the median over paths for several paths.
    std::vector<double> successive_differences;
    double extrapolated = 0.0;
    std::optional<double> order;
    double stderr_ = 0.0;
    std::size_t paths = 1;
    std::vector<std::string> warnings;

    std::string to_json() const;
};

// Richardson extrapolation and empirical order from successive differences. When
// successive_differences is already filled (pathwise medians) it drives the order
// and the monotonicity warning; otherwise the level differences themselves do.
void extrapolate(IntegralEstimate& est, double noise_floor);

IntegralEstimate stratonovich_estimate(const Integrand& u, const kernels::KernelModel& model, RngSeed seed, double T,
                                       const std::vector<std::size_t>& levels);
// Monte Carlo average of the per-level values over `paths` coupled paths.
IntegralEstimate stratonovich_estimate_mc(const Integrand& u, const kernels::KernelModel& model, RngSeed seed,
                                          double T, const std::vector<std::size_t>& levels, std::size_t paths,
                                          unsigned workers = 1);

// e(t) = ∫ (K*_1 p_t u)² as the variance of Σ u(τ_j) ΔX_j on `cells` steps over [0, t].
double energy(const Integrand& u, const kernels::KernelModel& model, double t, std::size_t cells = 256);
// Central difference of e at t (one-sided at the ends of [0, horizon]).
double energy_derivative(const Integrand& u, const kernels::KernelModel& model, double t, double dt,
                         std::size_t cells = 256);

}  // namespace vlab::integrals
