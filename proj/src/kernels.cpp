#include "vlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "vlab/errors.hpp"
#include "vlab/fracops.hpp"
#include "vlab/specfun.hpp"

namespace vlab::kernels {
namespace {

void check_hurst(double H) {
    if (!(H > 0.0 && H < 1.0)) {
        throw DomainError("hurst must lie in (0,1), got " + std::to_string(H));
    }
}

// Stationary kernel with Hurst index H, s already inside (0, t).
double stationary_value(double H, double t, double s, const specfun::Hyp2F1& hyp, double inv_gamma) {
    if (H == 0.5) {
        return 1.0;
    }
    return std::pow(t - s, H - 0.5) * inv_gamma * hyp(1.0 - t / s);
}

const specfun::Hyp2F1& stationary_hyp(double H) {
    // Multifractional evaluations repeat the same H(t) across a whole row.
    thread_local double cached_h = std::numeric_limits<double>::quiet_NaN();
    thread_local std::unique_ptr<specfun::Hyp2F1> cached;
    if (!cached || cached_h != H) {
        cached = std::make_unique<specfun::Hyp2F1>(0.5 - H, H - 0.5, H + 0.5);
        cached_h = H;
    }
    return *cached;
}

bool has_origin_singularity(const KernelModel& model, double t) {
    return model.family() != Family::levy_fbm && model.hurst_at(t) != 0.5;
}

// Rule on [a, b] for an integrand singular at distance gap beyond the right end.
quad::Rule toward_right(double a, double b, double gap, double beta) {
    if (gap <= 0.0) {
        return quad::graded(a, b, quad::End::right, beta);
    }
    const double len = b - a;
    const int levels = std::max(0, static_cast<int>(std::ceil(std::log2(len / gap))));
    quad::Rule rule;
    double outer = len;
    for (int k = 0; k < levels; ++k) {
        const double inner = 0.5 * outer;
        rule.append(quad::gauss_legendre(b - outer, b - inner, 8));
        outer = inner;
    }
    rule.append(quad::gauss_legendre(b - outer, b, 8));
    return rule;
}

int origin_levels(const KernelModel& model, double len) {
    const double ratio = len / model.clamp_point();
    return std::clamp(static_cast<int>(std::floor(std::log2(ratio))), 1, 24);
}

std::size_t regular_points(double dist, double len) {
    const double ratio = dist / len;
    if (ratio >= 32.0) {
        return 2;
    }
    if (ratio >= 4.0) {
        return 4;
    }
    return 8;
}

// Nodes and plain weights on [a, b] adapted to the singularities of K(t, ·).
quad::Rule base_rule(const KernelModel& model, double t, double a, double b, double beta_right,
                     double beta_origin) {
    const double len = b - a;
    const double gap = t - b;
    const bool origin = a <= 0.0 && has_origin_singularity(model, t);
    const bool right_near = gap < len && beta_right != 0.0;
    if (origin && right_near) {
        const double mid = 0.5 * (a + b);
        quad::Rule rule = quad::graded(a, mid, quad::End::left, beta_origin, origin_levels(model, mid - a));
        rule.append(toward_right(mid, b, gap, beta_right));
        return rule;
    }
    if (origin) {
        return quad::graded(a, b, quad::End::left, beta_origin, origin_levels(model, len));
    }
    if (right_near) {
        return toward_right(a, b, gap, beta_right);
    }
    double dist = gap;
    if (model.family() != Family::levy_fbm) {
        dist = std::min(dist, a);
    }
    return quad::gauss_legendre(a, b, regular_points(dist, len));
}

}  // namespace

std::string family_name(Family family) {
    switch (family) {
        case Family::levy_fbm:
            return "levy-fbm";
        case Family::stationary_fbm:
            return "stationary-fbm";
        case Family::multifractional:
            return "multifractional";
    }
    return "unknown";
}

Family parse_family(const std::string& name) {
    if (name == "levy-fbm" || name == "levy_fbm") {
        return Family::levy_fbm;
    }
    if (name == "stationary-fbm" || name == "stationary_fbm") {
        return Family::stationary_fbm;
    }
    if (name == "multifractional") {
        return Family::multifractional;
    }
    throw DomainError("unknown kernel family '" + name + "' (expected levy-fbm, stationary-fbm or multifractional)");
}

KernelModel KernelModel::levy_fbm(double hurst, double horizon) {
    check_hurst(hurst);
    if (!(horizon > 0.0)) {
        throw DomainError("horizon must be positive");
    }
    KernelModel m;
    m.family_ = Family::levy_fbm;
    m.hurst_ = hurst;
    m.horizon_ = horizon;
    m.alpha_ = hurst;
    m.inv_gamma_ = 1.0 / std::tgamma(hurst + 0.5);
    m.clamp_count_ = std::make_shared<std::atomic<std::size_t>>(0);
    return m;
}

KernelModel KernelModel::stationary_fbm(double hurst, double horizon) {
    KernelModel m = levy_fbm(hurst, horizon);
    m.family_ = Family::stationary_fbm;
    m.hyp_ = std::make_shared<specfun::Hyp2F1>(0.5 - hurst, hurst - 0.5, hurst + 0.5);
    return m;
}

KernelModel KernelModel::multifractional(SampledFunction hurst_fn, std::optional<double> alpha) {
    double lo = 1.0;
    for (double v : hurst_fn.values()) {
        if (!(v > 0.5 && v < 1.0)) {
            throw DomainError("multifractional: H(t) must lie in (1/2, 1), got " + std::to_string(v));
        }
        lo = std::min(lo, v);
    }
    const double bound = lo - 0.5;
    const double a = alpha.value_or(0.5 * bound);
    if (!(a > 0.0 && a < bound)) {
        throw DomainError("multifractional: alpha must lie in (0, inf H - 1/2) = (0, " + std::to_string(bound) +
                          "), got " + std::to_string(a));
    }
    KernelModel m;
    m.family_ = Family::multifractional;
    m.hurst_ = lo;
    m.horizon_ = hurst_fn.grid().horizon();
    m.alpha_ = a;
    m.hurst_fn_ = std::move(hurst_fn);
    m.clamp_count_ = std::make_shared<std::atomic<std::size_t>>(0);
    return m;
}

double KernelModel::hurst() const {
    if (family_ == Family::multifractional) {
        throw DomainError("multifractional model has no constant Hurst index");
    }
    return hurst_;
}

double KernelModel::hurst_at(double t) const {
    if (hurst_fn_) {
        return hurst_fn_->at(t);
    }
    return hurst_;
}

double KernelModel::min_hurst() const { return hurst_; }

double KernelModel::eval(double t, double s, bool clamp) const {
    if (!(s < t)) {
        return 0.0;
    }
    if (family_ == Family::levy_fbm) {
        if (s < 0.0) {
            throw DomainError("kernel_eval: s must be non-negative");
        }
        if (hurst_ == 0.5) {
            return 1.0;
        }
        return std::pow(t - s, hurst_ - 0.5) * inv_gamma_;
    }
    if (s <= 0.0 && !clamp) {
        throw SingularityError("kernel_eval: stationary kernels are singular at s <= 0");
    }
    if (s < clamp_point()) {
        s = clamp_point();
        clamp_count_->fetch_add(1, std::memory_order_relaxed);
        if (!(s < t)) {
            return 0.0;
        }
    }
    if (family_ == Family::stationary_fbm) {
        return stationary_value(hurst_, t, s, *hyp_, inv_gamma_);
    }
    const double H = hurst_at(t);
    return stationary_value(H, t, s, stationary_hyp(H), 1.0 / std::tgamma(H + 0.5));
}

double kernel_eval(const KernelModel& model, double t, double s) { return model.eval(t, s); }

quad::Rule kernel_rule(const KernelModel& model, double t, double a, double b) {
    b = std::min(b, t);
    if (!(b > a)) {
        return {};
    }
    const double H = model.hurst_at(t);
    quad::Rule rule = base_rule(model, t, a, b, H - 0.5, -std::abs(H - 0.5));
    for (std::size_t q = 0; q < rule.size(); ++q) {
        rule.weights[q] *= model.eval(t, rule.nodes[q], true);
    }
    return rule;
}

double kernel_band_primitive_quadrature(const KernelModel& model, double a, double b, double t) {
    if (!(a >= 0.0 && b > a)) {
        throw DomainError("kernel_band_primitive: need 0 <= a < b");
    }
    const quad::Rule rule = kernel_rule(model, t, a, b);
    double acc = 0.0;
    for (double w : rule.weights) {
        acc += w;
    }
    return acc;
}

double kernel_band_primitive(const KernelModel& model, double a, double b, double t) {
    if (!(a >= 0.0 && b > a)) {
        throw DomainError("kernel_band_primitive: need 0 <= a < b");
    }
    if (t <= a) {
        return 0.0;
    }
    if (model.family() == Family::levy_fbm) {
        const double e = model.hurst() + 0.5;
        const double hi = std::min(b, t);
        const double scale = 1.0 / std::tgamma(e + 1.0);
        return scale * (std::pow(t - a, e) - std::pow(t - hi, e));
    }
    return kernel_band_primitive_quadrature(model, a, b, t);
}

SampledFunction apply_K(const KernelModel& model, const SampledFunction& f) {
    const UniformGrid& grid = f.grid();
    const double h = grid.step();
    const auto v = f.values();
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t k = 1; k <= grid.n(); ++k) {
        const double t = grid.node(k);
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double left = grid.node(i);
            const quad::Rule rule = kernel_rule(model, t, left, grid.node(i + 1));
            const double slope = (v[i + 1] - v[i]) / h;
            for (std::size_t q = 0; q < rule.size(); ++q) {
                acc += rule.weights[q] * (v[i] + slope * (rule.nodes[q] - left));
            }
        }
        out[k] = acc;
    }
    return SampledFunction(grid, std::move(out));
}

SampledFunction apply_K_factorized(const KernelModel& model, const SampledFunction& f) {
    if (model.family() != Family::stationary_fbm) {
        throw DomainError("apply_K_factorized: only the stationary fBm kernel factorizes this way");
    }
    const double H = model.hurst();
    const UniformGrid& grid = f.grid();
    const double h = grid.step();
    // Power weight on the grid; the value at 0 keeps the first-cell mass of x^p exact.
    auto weight = [&](double p) {
        std::vector<double> w(grid.size());
        for (std::size_t i = 1; i < w.size(); ++i) {
            w[i] = std::pow(grid.node(i), p);
        }
        w[0] = 2.0 * std::pow(h, p) / (p + 1.0) - w[1];
        return w;
    };
    auto multiply = [&](const SampledFunction& g, const std::vector<double>& w) {
        std::vector<double> out(g.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = g[i] * w[i];
        }
        return SampledFunction(grid, std::move(out));
    };
    using fracops::Side;
    if (H == 0.5) {
        return fracops::frac_integral(f, 1.0, Side::left);
    }
    if (H > 0.5) {
        SampledFunction g = multiply(f, weight(0.5 - H));
        g = fracops::frac_integral(g, H - 0.5, Side::left);
        g = multiply(g, weight(H - 0.5));
        return fracops::frac_integral(g, 1.0, Side::left);
    }
    SampledFunction g = multiply(f, weight(H - 0.5));
    g = fracops::frac_integral(g, 0.5 - H, Side::left);
    g = multiply(g, weight(0.5 - H));
    return fracops::frac_integral(g, 2.0 * H, Side::left);
}

SampledFunction apply_K_adjoint_step(const KernelModel& model, const UniformGrid& grid,
                                     std::span<const double> u_mid, double T) {
    if (T > grid.horizon() * (1.0 + 1e-12)) {
        throw DomainError("apply_K_adjoint: T beyond the grid horizon");
    }
    const std::size_t nt = grid.index_of(T);
    if (u_mid.size() < nt) {
        throw DomainError("apply_K_adjoint: need one value per interval up to T");
    }
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 0; i < nt; ++i) {
        const double s = grid.node(i);
        // Summation by parts: Σ_j u_j (K_{j+1} - K_j) = u_{N-1} K_N - Σ_{j>i} (u_j - u_{j-1}) K_j.
        double acc = 0.0;
        for (std::size_t j = i + 1; j < nt; ++j) {
            const double du = u_mid[j] - u_mid[j - 1];
            if (du != 0.0) {
                acc -= du * model.eval(grid.node(j), s, true);
            }
        }
        if (u_mid[nt - 1] != 0.0) {
            acc += u_mid[nt - 1] * model.eval(grid.node(nt), s, true);
        }
        out[i] = acc;
    }
    return SampledFunction(grid, std::move(out));
}

SampledFunction apply_K_adjoint(const KernelModel& model, const SampledFunction& u, double T) {
    const UniformGrid& grid = u.grid();
    std::vector<double> mid(grid.n());
    for (std::size_t j = 0; j < mid.size(); ++j) {
        mid[j] = 0.5 * (u[j] + u[j + 1]);
    }
    return apply_K_adjoint_step(model, grid, mid, T);
}

double covariance_on_cells(const KernelModel& model, double t, double s, std::size_t ncell) {
    const double lo = std::min(t, s);
    const double hi = std::max(t, s);
    if (lo < 0.0 || hi > model.horizon() * (1.0 + 1e-12)) {
        throw DomainError("covariance: times must lie in [0, horizon]");
    }
    if (lo <= 0.0) {
        return 0.0;
    }
    if (ncell == 0) {
        throw DomainError("covariance: need at least one quadrature cell");
    }
    const double gap = hi - lo;
    const double hq = lo / static_cast<double>(ncell);
    const double H_lo = model.hurst_at(lo);
    const double H_hi = model.hurst_at(hi);
    const double beta_end = (H_lo - 0.5) + (gap == 0.0 ? H_hi - 0.5 : 0.0);
    const double beta_origin = -std::abs(H_lo - 0.5) - std::abs(H_hi - 0.5);
    const bool origin = has_origin_singularity(model, lo) || has_origin_singularity(model, hi);

    double acc = 0.0;
    for (std::size_t c = 0; c < ncell; ++c) {
        const double a = static_cast<double>(c) * hq;
        const double b = c + 1 == ncell ? lo : a + hq;
        quad::Rule rule;
        const bool first = c == 0 && origin;
        const bool last = c + 1 == ncell && beta_end != 0.0;
        if (first && last) {
            rule = quad::graded(a, 0.5 * (a + b), quad::End::left, beta_origin, origin_levels(model, 0.5 * hq));
            rule.append(quad::graded(0.5 * (a + b), b, quad::End::right, beta_end));
        } else if (first) {
            rule = quad::graded(a, b, quad::End::left, beta_origin, origin_levels(model, hq));
        } else if (last) {
            rule = quad::graded(a, b, quad::End::right, beta_end);
        } else {
            const double to_end = static_cast<double>(ncell - 1 - c) * hq;
            const double to_origin = model.family() == Family::levy_fbm ? to_end : a;
            rule = quad::gauss_legendre(a, b, regular_points(std::min(to_end, to_origin), hq));
        }
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double r = rule.nodes[q];
            acc += rule.weights[q] * model.eval(lo, r, true) * model.eval(hi, r, true);
        }
    }
    return acc;
}

double covariance(const KernelModel& model, double t, double s, const CovarianceOptions& opts) {
    const double lo = std::min(t, s);
    if (lo <= 0.0) {
        return covariance_on_cells(model, t, s, 1);
    }
    const auto ncell = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(lo / model.horizon() * static_cast<double>(opts.cells) - 1e-9)));
    return covariance_on_cells(model, t, s, ncell);
}

double covariance_fbm_closed(double H, double t, double s) {
    check_hurst(H);
    const double e = 2.0 * H;
    return 0.5 * specfun::v_h(H) * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(t - s), e));
}

double covariance_levy_closed(double H, double t, double s) {
    check_hurst(H);
    const double lo = std::min(t, s);
    const double hi = std::max(t, s);
    if (lo <= 0.0) {
        return 0.0;
    }
    const double g = std::tgamma(H + 0.5);
    if (lo == hi) {
        return std::pow(hi, 2.0 * H) / (2.0 * H * g * g);
    }
    return std::pow(lo, H + 0.5) * std::pow(hi, H - 0.5) * specfun::hyp2f1(0.5 - H, 1.0, H + 1.5, lo / hi) /
           ((H + 0.5) * g * g);
}

std::optional<double> covariance_closed(const KernelModel& model, double t, double s) {
    switch (model.family()) {
        case Family::levy_fbm:
            return covariance_levy_closed(model.hurst(), t, s);
        case Family::stationary_fbm:
            return covariance_fbm_closed(model.hurst(), t, s);
        case Family::multifractional:
            return std::nullopt;
    }
    return std::nullopt;
}

Eigen::MatrixXd covariance_matrix(const KernelModel& model, std::span<const double> nodes,
                                  const CovarianceOptions& opts) {
    const auto m = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd r(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            r(i, j) = covariance(model, nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)], opts);
            r(j, i) = r(i, j);
        }
    }
    return r;
}

}  // namespace vlab::kernels
