#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "vlab/grid.hpp"
#include "vlab/quadrature.hpp"

namespace vlab::specfun {
class Hyp2F1;
}

namespace vlab::kernels {

enum class Family { levy_fbm, stationary_fbm, multifractional };

std::string family_name(Family family);
Family parse_family(const std::string& name);

class KernelModel {
public:
    static KernelModel levy_fbm(double hurst, double horizon = 1.0);
    static KernelModel stationary_fbm(double hurst, double horizon = 1.0);
    // hurst_fn values must lie in (1/2, 1); alpha defaults to half of inf H - 1/2.
    static KernelModel multifractional(SampledFunction hurst_fn, std::optional<double> alpha = std::nullopt);

    Family family() const { return family_; }
    double horizon() const { return horizon_; }
    double alpha() const { return alpha_; }
    // Constant Hurst index; throws for the multifractional family.
    double hurst() const;
    double hurst_at(double t) const;
    double min_hurst() const;
    const std::optional<SampledFunction>& hurst_fn() const { return hurst_fn_; }

    // Number of evaluations near s = 0 moved to the clamp point.
    std::size_t clamped_evaluations() const { return clamp_count_->load(); }
    double clamp_point() const { return 1e-8 * horizon_; }

    // Pointwise kernel; s is clamped from below when `clamp` is set instead of throwing at s <= 0.
    double eval(double t, double s, bool clamp = false) const;

private:
    KernelModel() = default;

    Family family_ = Family::stationary_fbm;
    double hurst_ = 0.5;
    double horizon_ = 1.0;
    double alpha_ = 0.5;
    double inv_gamma_ = 1.0;  // 1/Γ(H + 1/2)
    std::optional<SampledFunction> hurst_fn_;
    std::shared_ptr<const specfun::Hyp2F1> hyp_;
    std::shared_ptr<std::atomic<std::size_t>> clamp_count_;
};

// K(t, s); zero for s >= t. Throws SingularityError for s <= 0 on the stationary families.
double kernel_eval(const KernelModel& model, double t, double s);

// Quadrature rule on [a, b] (b <= t) whose weights already include K(t, ·):
// Σ w_q φ(x_q) ≈ ∫_a^b K(t, s) φ(s) ds for smooth φ.
quad::Rule kernel_rule(const KernelModel& model, double t, double a, double b);

// ∫_a^{min(b,t)} K(t, s) ds.
double kernel_band_primitive(const KernelModel& model, double a, double b, double t);
// Same integral by quadrature only; the Lévy family otherwise uses its closed form.
double kernel_band_primitive_quadrature(const KernelModel& model, double a, double b, double t);

// (Kf)(t_k) = ∫_0^{t_k} K(t_k, s) f(s) ds at every node, f piecewise linear.
SampledFunction apply_K(const KernelModel& model, const SampledFunction& f);

// Stationary family only: K through weighted fractional integrals,
// I^1 x^{H-1/2} I^{H-1/2} x^{1/2-H} for H >= 1/2 and I^{2H} x^{1/2-H} I^{1/2-H} x^{H-1/2} otherwise.
SampledFunction apply_K_factorized(const KernelModel& model, const SampledFunction& f);

// Adjoint on [0, T] of a step function with value u_mid[j] on (t_j, t_{j+1}]:
// (K*_T u)(s_i) = Σ_j u_mid[j] (K(t_{j+1}, s_i) - K(t_j, s_i)). Nodes at or beyond T get 0.
SampledFunction apply_K_adjoint_step(const KernelModel& model, const UniformGrid& grid,
                                     std::span<const double> u_mid, double T);
// Sampled u is read at interval midpoints by linear interpolation.
SampledFunction apply_K_adjoint(const KernelModel& model, const SampledFunction& u, double T);

struct CovarianceOptions {
    std::size_t cells = 2048;  // quadrature cells across [0, horizon]
};

// R(t, s) = ∫_0^{min(t,s)} K(t, r) K(s, r) dr by quadrature.
double covariance(const KernelModel& model, double t, double s, const CovarianceOptions& opts = {});

// Same integral with [0, min(t,s)] split into `ncell` equal quadrature cells.
double covariance_on_cells(const KernelModel& model, double t, double s, std::size_t ncell);

// (V_H / 2)(s^{2H} + t^{2H} - |t - s|^{2H}).
double covariance_fbm_closed(double H, double t, double s);

// Lévy fBm: s^{H+1/2} t^{H-1/2} 2F1(1/2-H, 1; H+3/2; s/t) / ((H+1/2)Γ(H+1/2)^2) for s <= t.
double covariance_levy_closed(double H, double t, double s);

// Closed form where one exists (both fBm families), nothing for the multifractional family.
std::optional<double> covariance_closed(const KernelModel& model, double t, double s);

// Covariance matrix on arbitrary nodes by the scalar quadrature route.
Eigen::MatrixXd covariance_matrix(const KernelModel& model, std::span<const double> nodes,
                                  const CovarianceOptions& opts = {});

// Covariance of (X(t_1), ..., X(t_n)) on a uniform grid from one shared table of
// kernel values, with product integration on each row's singular last cell.
// The quadrature grid refines the sampling grid at least `min_cells` times across the horizon.
Eigen::MatrixXd covariance_matrix_grid(const KernelModel& model, const UniformGrid& grid,
                                       std::size_t min_cells = 2048);

}  // namespace vlab::kernels
