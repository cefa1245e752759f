#include "vlab/fracops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vlab/errors.hpp"
#include "vlab/specfun.hpp"

namespace vlab::fracops {
namespace {

// Second difference (m+1)^p - 2m^p + (m-1)^p, computed without cancellation of the leading terms.
double second_difference(std::size_t m, double p) {
    if (m == 1) {
        return std::pow(2.0, p) - 2.0;
    }
    const double x = 1.0 / static_cast<double>(m);
    return std::pow(static_cast<double>(m), p) *
           (std::expm1(p * std::log1p(x)) + std::expm1(p * std::log1p(-x)));
}

// (k-1)^p - (k-p)k^{p-1} for the first node.
double first_weight(std::size_t k, double p) {
    if (k == 1) {
        return p - 1.0;
    }
    const double x = 1.0 / static_cast<double>(k);
    return std::pow(static_cast<double>(k), p) * (std::expm1(p * std::log1p(-x)) + p * x);
}

std::vector<double> left_integral(std::span<const double> f, double h, double gamma) {
    const std::size_t n = f.size() - 1;
    const double p = gamma + 1.0;
    std::vector<double> inner(n + 1, 0.0);
    for (std::size_t m = 1; m < n; ++m) {
        inner[m] = second_difference(m, p);
    }
    const double scale = std::pow(h, gamma) / std::tgamma(gamma + 2.0);
    std::vector<double> g(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        double acc = first_weight(k, p) * f[0];
        for (std::size_t j = 1; j < k; ++j) {
            acc += inner[k - j] * f[j];
        }
        acc += f[k];
        g[k] = scale * acc;
    }
    return g;
}

// Left integral with starting weights on the first nodes so that the powers t^p, p in `powers`,
// are integrated exactly (the product rule alone only reproduces 1 and t).
std::vector<double> left_integral_corrected(std::span<const double> f, double h, double gamma,
                                            std::vector<double> powers) {
    std::vector<double> g = left_integral(f, h, gamma);
    const std::size_t n = f.size() - 1;
    const std::size_t s = powers.size();
    if (n + 1 < s) {
        return g;
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
    Eigen::MatrixXd resid(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(n + 1));
    std::vector<double> phi(n + 1);
    for (std::size_t q = 0; q < s; ++q) {
        const double p = powers[q];
        for (std::size_t j = 0; j <= n; ++j) {
            phi[j] = j == 0 ? (p == 0.0 ? 1.0 : 0.0) : std::pow(static_cast<double>(j), p);
        }
        for (std::size_t j = 0; j < s; ++j) {
            a(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)) = phi[j];
        }
        const std::vector<double> scheme = left_integral(phi, 1.0, gamma);
        const double c = std::exp(std::lgamma(p + 1.0) - std::lgamma(p + 1.0 + gamma));
        for (std::size_t k = 0; k <= n; ++k) {
            const double exact = k == 0 ? 0.0 : c * std::pow(static_cast<double>(k), p + gamma);
            resid(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k)) = exact - scheme[k];
        }
    }
    const Eigen::MatrixXd w = a.fullPivLu().solve(resid);
    const double scale = std::pow(h, gamma);
    for (std::size_t k = 1; k <= n; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
            acc += w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * f[j];
        }
        g[k] += scale * acc;
    }
    return g;
}

}  // namespace

SampledFunction frac_integral(const SampledFunction& f, double gamma, Side side) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw DomainError("frac_integral: order must be positive, got " + std::to_string(gamma));
    }
    const double h = f.grid().step();
    if (side == Side::left) {
        return SampledFunction(f.grid(), left_integral(f.values(), h, gamma));
    }
    std::vector<double> reversed(f.values().rbegin(), f.values().rend());
    std::vector<double> g = left_integral(reversed, h, gamma);
    std::reverse(g.begin(), g.end());
    return SampledFunction(f.grid(), std::move(g));
}

FracDerivative frac_derivative(const SampledFunction& f, double gamma, Side side) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw DomainError("frac_derivative: order must lie in (0,1), got " + std::to_string(gamma));
    }
    const std::size_t n = f.grid().n();
    const double h = f.grid().step();
    // Inputs of the form I^gamma(smooth) start like t^gamma; the corrected rule keeps the
    // differentiated integral accurate up to the boundary.
    std::vector<double> powers{0.0, 1.0};
    for (double p : {gamma, 1.0 + gamma}) {
        if (std::none_of(powers.begin(), powers.end(), [&](double q) { return std::abs(q - p) < 0.1; })) {
            powers.push_back(p);
        }
    }
    std::vector<double> gv;
    if (side == Side::left) {
        gv = left_integral_corrected(f.values(), h, 1.0 - gamma, powers);
    } else {
        std::vector<double> reversed(f.values().rbegin(), f.values().rend());
        gv = left_integral_corrected(reversed, h, 1.0 - gamma, powers);
        std::reverse(gv.begin(), gv.end());
    }
    const std::span<const double> g = gv;
    const double sign = side == Side::left ? 1.0 : -1.0;
    std::vector<double> d(n + 1);
    d[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
    d[n] = (3.0 * g[n] - 4.0 * g[n - 1] + g[n - 2]) / (2.0 * h);
    for (std::size_t i = 1; i < n; ++i) {
        d[i] = (g[i + 1] - g[i - 1]) / (2.0 * h);
    }
    double max_d = 0.0;
    for (double& v : d) {
        v *= sign;
        max_d = std::max(max_d, std::abs(v));
    }
    const bool blowup = max_d > f.max_abs() / (h * h);
    return {SampledFunction(f.grid(), std::move(d)), blowup};
}

double slobodetzki_seminorm(const SampledFunction& f, double eta, double p) {
    if (!(eta >= 0.0) || !(p >= 1.0)) {
        throw DomainError("slobodetzki_seminorm: need eta >= 0 and p >= 1");
    }
    if (eta * p >= 2.0) {
        throw DomainError("slobodetzki_seminorm: eta * p must be below 2");
    }
    const auto v = f.values();
    const std::size_t n = f.grid().n();
    const double h = f.grid().step();
    std::vector<double> w(n + 1, h);
    w.front() = w.back() = 0.5 * h;

    if (eta == 0.0) {
        double acc = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            acc += w[i] * std::pow(std::abs(v[i]), p);
        }
        return std::pow(acc, 1.0 / p);
    }

    const double q = 1.0 + p * eta;
    auto integrand = [&](std::size_t i, std::size_t j) {
        const double dx = h * std::abs(static_cast<double>(i) - static_cast<double>(j));
        return std::pow(std::abs(v[i] - v[j]), p) / std::pow(dx, q);
    };
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = i + 1; j <= n; ++j) {
            acc += 2.0 * w[i] * w[j] * integrand(i, j);
        }
        double diag = 0.0;
        int count = 0;
        if (i > 0) {
            diag += integrand(i, i - 1);
            ++count;
        }
        if (i < n) {
            diag += integrand(i, i + 1);
            ++count;
        }
        acc += w[i] * w[i] * diag / count;
    }
    return std::pow(acc, 1.0 / p);
}

double estimate_holder_exponent(std::span<const SampledFunction> paths, std::span<const std::size_t> lags) {
    if (paths.size() < 100) {
        throw DomainError("estimate_holder_exponent: need at least 100 paths, got " + std::to_string(paths.size()));
    }
    if (lags.size() < 2) {
        throw DomainError("estimate_holder_exponent: need at least two lags");
    }
    const UniformGrid& grid = paths.front().grid();
    const auto [min_lag, max_lag] = std::minmax_element(lags.begin(), lags.end());
    if (*min_lag == 0 || *max_lag >= grid.n()) {
        throw DomainError("estimate_holder_exponent: lags must lie in [1, n)");
    }
    if (*max_lag < 10 * *min_lag) {
        throw DomainError("estimate_holder_exponent: lags must span at least one decade");
    }
    for (const auto& path : paths) {
        if (!(path.grid() == grid)) {
            throw DomainError("estimate_holder_exponent: paths live on different grids");
        }
    }

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t lag : lags) {
        double acc = 0.0;
        std::size_t count = 0;
        for (const auto& path : paths) {
            const auto v = path.values();
            for (std::size_t i = 0; i + lag < v.size(); ++i) {
                const double d = v[i + lag] - v[i];
                acc += d * d;
            }
            count += v.size() - lag;
        }
        const double msd = acc / static_cast<double>(count);
        if (!(msd > 0.0) || !std::isfinite(msd)) {
            throw EstimationError("estimate_holder_exponent: degenerate increments at lag " + std::to_string(lag));
        }
        xs.push_back(std::log(static_cast<double>(lag) * grid.step()));
        ys.push_back(std::log(msd));
    }
    const double k = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= k;
    my /= k;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (!(sxx > 0.0)) {
        throw EstimationError("estimate_holder_exponent: lags must be distinct");
    }
    return 0.5 * sxy / sxx;
}

double integrate_sampled(const SampledFunction& f, double endpoint_exponent) {
    if (!(endpoint_exponent > -1.0)) {
        throw DomainError("integrate_sampled: endpoint exponent must exceed -1");
    }
    const auto v = f.values();
    const std::size_t n = f.grid().n();
    const double h = f.grid().step();

    std::vector<double> sums;
    std::vector<double> steps;
    for (std::size_t stride = 1; sums.size() < 4 && n % stride == 0 && n / stride >= 2; stride *= 2) {
        double acc = 0.5 * (v.front() + v.back());
        for (std::size_t i = stride; i < n; i += stride) {
            acc += v[i];
        }
        const double hs = h * static_cast<double>(stride);
        sums.push_back(hs * acc);
        steps.push_back(hs);
    }

    std::vector<double> powers;
    const double lam = endpoint_exponent;
    for (double cand : {lam + 1.0, 2.0, lam + 2.0, lam + 3.0, 4.0}) {
        const bool dup = std::any_of(powers.begin(), powers.end(),
                                     [&](double q) { return std::abs(q - cand) < 1e-6; });
        if (!dup) {
            powers.push_back(cand);
        }
    }
    std::sort(powers.begin(), powers.end());
    const std::size_t terms = std::min(powers.size(), sums.size() - 1);

    const auto rows = static_cast<Eigen::Index>(terms + 1);
    Eigen::MatrixXd a(rows, rows);
    Eigen::VectorXd rhs(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        a(r, 0) = 1.0;
        for (std::size_t j = 0; j < terms; ++j) {
            // scaled by the finest step to keep the system well conditioned
            a(r, static_cast<Eigen::Index>(j + 1)) = std::pow(steps[static_cast<std::size_t>(r)] / h, powers[j]);
        }
        rhs(r) = sums[static_cast<std::size_t>(r)];
    }
    return a.fullPivLu().solve(rhs)(0);
}

}  // namespace vlab::fracops
