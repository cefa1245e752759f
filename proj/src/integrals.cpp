#include "vlab/integrals.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <string>

#include "vlab/errors.hpp"
#include "vlab/parallel.hpp"

namespace vlab::integrals {
namespace {

constexpr std::size_t kBlock = 32;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<double> midpoint_values(const Integrand& u, std::size_t n, double h) {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = u.at((static_cast<double>(j) + 0.5) * h);
    }
    return out;
}

std::vector<double> interpolated_midpoints(const SampledFunction& x, std::size_t count) {
    std::vector<double> mid(count);
    for (std::size_t j = 0; j < count; ++j) {
        mid[j] = 0.5 * (x[j] + x[j + 1]);
    }
    return mid;
}

nlohmann::json number_or_null(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return nullptr;
}

}  // namespace

Integrand Integrand::deterministic(std::function<double(double)> u, std::string name) {
    Integrand out;
    out.kind_ = IntegrandKind::deterministic;
    out.name_ = std::move(name);
    out.fn_ = std::move(u);
    return out;
}

Integrand Integrand::deterministic(const SampledFunction& u, std::string name) {
    return deterministic([u](double t) { return u.at(t); }, std::move(name));
}

Integrand Integrand::composite(std::function<double(double)> g, std::function<double(double)> dg, std::string name) {
    constexpr double eps = 1e-5;
    for (double x : {-2.0, -1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0}) {
        const double fd = (g(x + eps) - g(x - eps)) / (2.0 * eps);
        if (!(std::abs(fd - dg(x)) <= 1e-4)) {
            throw DomainError("Integrand::composite: g' inconsistent with g at x = " + std::to_string(x));
        }
    }
    Integrand out;
    out.kind_ = IntegrandKind::composite;
    out.name_ = std::move(name);
    out.fn_ = std::move(g);
    out.dfn_ = std::move(dg);
    return out;
}

double riemann_sum(const SampledFunction& u, const SampledFunction& x) {
    require_same_grid(u, x);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        acc += u[i] * (x[i + 1] - x[i]);
    }
    return acc;
}

double ss_sum(const SampledFunction& u, const SampledFunction& x) {
    require_same_grid(u, x);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        acc += 0.5 * (u[i] + u[i + 1]) * (x[i + 1] - x[i]);
    }
    return acc;
}

double kernel_energy(const kernels::KernelModel& model, double t, std::size_t cells) {
    return kernels::covariance_on_cells(model, t, t, cells);
}

CoupledLevels::CoupledLevels(const kernels::KernelModel& model, double T, std::vector<std::size_t> levels,
                             unsigned workers)
    : model_(model),
      T_(T),
      level_ns_(std::move(levels)),
      fine_grid_(2 * (level_ns_.empty() ? 1 : *std::max_element(level_ns_.begin(), level_ns_.end())), T),
      workers_(workers) {
    if (level_ns_.empty()) {
        throw DomainError("CoupledLevels: need at least one level");
    }
    if (!(T > 0.0) || T > model.horizon() * (1.0 + 1e-12)) {
        throw DomainError("CoupledLevels: T must lie in (0, horizon]");
    }
    for (std::size_t k = 0; k < level_ns_.size(); ++k) {
        if (level_ns_[k] < 2 || !is_power_of_two(level_ns_[k])) {
            throw DomainError("CoupledLevels: levels must be powers of two >= 2");
        }
        if (k > 0 && level_ns_[k] <= level_ns_[k - 1]) {
            throw DomainError("CoupledLevels: levels must be strictly increasing");
        }
    }
    fine_ = std::make_shared<paths::SynthesisOperator>(model, fine_grid_, workers);
    const Eigen::MatrixXd& bands = fine_->bands();
    const std::size_t nf = fine_grid_.n();

    for (std::size_t n : level_ns_) {
        Level lv;
        lv.n = n;
        lv.stride = nf / n;
        const std::size_t r = lv.stride;
        const double h = T / static_cast<double>(n);
        const auto ni = static_cast<Eigen::Index>(n);
        lv.abar = Eigen::MatrixXd::Zero(ni + 1, ni);
        Eigen::MatrixXd am = Eigen::MatrixXd::Zero(ni, ni);
        for (std::size_t i = 0; i < n; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            const auto first = static_cast<Eigen::Index>(r * i);
            const auto width = static_cast<Eigen::Index>(r);
            for (std::size_t j = 0; j <= n; ++j) {
                const auto row = static_cast<Eigen::Index>(r * j);
                lv.abar(static_cast<Eigen::Index>(j), col) = bands.row(row).segment(first, width).sum() / h;
            }
            for (std::size_t j = 0; j < n; ++j) {
                const auto row = static_cast<Eigen::Index>(r * j + r / 2);
                am(static_cast<Eigen::Index>(j), col) = bands.row(row).segment(first, width).sum() / h;
            }
        }
        lv.w_cell.resize(n);
        lv.w_end.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto row = static_cast<Eigen::Index>(j);
            const Eigen::RowVectorXd dabar = lv.abar.row(row + 1) - lv.abar.row(row);
            lv.w_cell[j] = h * am.row(row).dot(dabar);
            lv.w_end[j] = h * lv.abar.row(ni).dot(dabar);
        }
        // Variance of the synthesized fine path at the level nodes. The band average loses
        // the within-cell variance of K, so R(t, t) itself would bias the trace.
        const double hf = fine_grid_.step();
        std::vector<double> energy(n + 1, 0.0);
        for (std::size_t j = 1; j <= n; ++j) {
            energy[j] = bands.row(static_cast<Eigen::Index>(r * j)).squaredNorm() / hf;
        }
        lv.trace_w.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            lv.trace_w[j] = 0.5 * (energy[j + 1] - energy[j]);
        }
        lv.var_end = energy[n];
        levels_.push_back(std::move(lv));
    }
}

std::vector<double> CoupledLevels::fine_path(RngSeed seed) const {
    return fine_->apply(paths::brownian_increments(fine_grid_, seed));
}

std::vector<std::vector<LevelValues>> CoupledLevels::evaluate_batch(const Integrand& u, RngSeed seed,
                                                                    std::size_t count) const {
    std::vector<std::vector<LevelValues>> out(count);
    const std::size_t blocks = (count + kBlock - 1) / kBlock;
    const std::size_t nf = fine_grid_.n();
    const bool endpoint = model_.alpha() < 0.5;

    parallel_for(blocks, workers_, [&](std::size_t b) {
        const std::size_t first = b * kBlock;
        const std::size_t m = std::min(kBlock, count - first);
        const auto mi = static_cast<Eigen::Index>(m);
        Eigen::MatrixXd db(static_cast<Eigen::Index>(nf), mi);
        for (std::size_t p = 0; p < m; ++p) {
            const auto inc = paths::brownian_increments(fine_grid_, seed.with_stream(seed.stream + first + p));
            db.col(static_cast<Eigen::Index>(p)) = Eigen::Map<const Eigen::VectorXd>(inc.data(), static_cast<Eigen::Index>(nf));
        }
        const Eigen::MatrixXd xf = fine_->apply(db);
        for (std::size_t p = 0; p < m; ++p) {
            out[first + p].resize(levels_.size());
        }

        for (std::size_t L = 0; L < levels_.size(); ++L) {
            const Level& lv = levels_[L];
            const std::size_t n = lv.n;
            const std::size_t r = lv.stride;
            const double h = T_ / static_cast<double>(n);
            Eigen::MatrixXd dbl(static_cast<Eigen::Index>(n), mi);
            for (std::size_t i = 0; i < n; ++i) {
                dbl.row(static_cast<Eigen::Index>(i)) =
                    db.middleRows(static_cast<Eigen::Index>(r * i), static_cast<Eigen::Index>(r)).colwise().sum();
            }
            const Eigen::MatrixXd xpi = lv.abar * dbl;
            const std::vector<double> u_det =
                u.kind() == IntegrandKind::deterministic ? midpoint_values(u, n, h) : std::vector<double>{};
            const double u_det_end = u.kind() == IntegrandKind::deterministic ? u.at(T_) : 0.0;

            for (std::size_t p = 0; p < m; ++p) {
                const auto col = static_cast<Eigen::Index>(p);
                LevelValues v;
                v.n = n;
                v.x_pi_T = xpi(static_cast<Eigen::Index>(n), col);
                v.x_T = xf(static_cast<Eigen::Index>(nf), col);
                double plug = 0.0;
                if (u.kind() == IntegrandKind::deterministic) {
                    for (std::size_t j = 0; j < n; ++j) {
                        const auto row = static_cast<Eigen::Index>(j);
                        plug += u_det[j] * (xpi(row + 1, col) - xpi(row, col));
                    }
                    v.terms = {plug, plug, 0.0};
                    v.trace = 0.0;
                    if (endpoint) {
                        double shifted = 0.0;
                        for (std::size_t j = 0; j < n; ++j) {
                            const auto row = static_cast<Eigen::Index>(j);
                            shifted += (u_det[j] - u_det_end) * (xpi(row + 1, col) - xpi(row, col));
                        }
                        v.value = shifted + u_det_end * v.x_pi_T;
                    } else {
                        v.value = plug;
                    }
                } else {
                    double cell = 0.0;
                    double trace = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const auto row = static_cast<Eigen::Index>(j);
                        const double y = xf(static_cast<Eigen::Index>(r * j + r / 2), col);
                        const double dg = u.dg(y);
                        plug += u.g(y) * (xpi(row + 1, col) - xpi(row, col));
                        cell += dg * lv.w_cell[j];
                        trace += dg * lv.trace_w[j];
                    }
                    v.terms = {plug, plug - cell, cell};
                    v.trace = trace;
                    v.value = plug - cell + trace;
                    if (endpoint) {
                        // u - u(T) with u(T) = g(X_T): the constant part contributes g'(X_T)
                        // against X^π(T) in the cell sum and K(T, r)² in the trace.
                        const double y_end = xf(static_cast<Eigen::Index>(nf), col);
                        const double g_end = u.g(y_end);
                        const double dg_end = u.dg(y_end);
                        const double sum_end = std::accumulate(lv.w_end.begin(), lv.w_end.end(), 0.0);
                        const double plug_shift = plug - g_end * v.x_pi_T;
                        const double cell_shift = cell - dg_end * sum_end;
                        const double trace_shift = trace - dg_end * lv.var_end;
                        v.value = plug_shift - cell_shift + trace_shift + g_end * v.x_pi_T;
                    }
                }
                out[first + p][L] = v;
            }
        }
    });
    return out;
}

std::vector<LevelValues> CoupledLevels::evaluate(const Integrand& u, RngSeed seed) const {
    return evaluate_batch(u, seed, 1).front();
}

double CoupledLevels::trace_density(std::size_t level, const Integrand& u, std::span<const double> y_mid,
                                    double r) const {
    const Level& lv = levels_.at(level);
    if (y_mid.size() != lv.n) {
        throw DomainError("trace_density: need one midpoint value per interval");
    }
    if (u.kind() != IntegrandKind::composite) {
        return 0.0;
    }
    const double h = T_ / static_cast<double>(lv.n);
    double acc = 0.0;
    double k_prev = 0.0;
    for (std::size_t j = 0; j < lv.n; ++j) {
        const double k_next = model_.eval(static_cast<double>(j + 1) * h, r, true);
        acc += u.dg(y_mid[j]) * 0.5 * (k_next * k_next - k_prev * k_prev);
        k_prev = k_next;
    }
    return acc;
}

RPiTerms r_pi_sum(const Integrand& u, const paths::PathBundle& bundle, double T, std::span<const double> x_mid) {
    const UniformGrid& grid = bundle.grid;
    const std::size_t nt = grid.index_of(T);
    if (nt < 2) {
        throw DomainError("r_pi_sum: T must be at least the second grid node");
    }
    const double h = grid.step();
    const auto& x = bundle.volterra;
    if (u.kind() == IntegrandKind::deterministic) {
        double acc = 0.0;
        for (std::size_t j = 0; j < nt; ++j) {
            acc += u.at((static_cast<double>(j) + 0.5) * h) * (x[j + 1] - x[j]);
        }
        return {acc, acc, 0.0};
    }
    std::vector<double> mid = x_mid.empty() ? interpolated_midpoints(x, nt) : std::vector<double>(x_mid.begin(), x_mid.end());
    if (mid.size() < nt) {
        throw DomainError("r_pi_sum: need one midpoint value per interval up to T");
    }
    if (!is_power_of_two(nt)) {
        throw DomainError("r_pi_sum: composite integrands need a power-of-two number of intervals up to T");
    }
    // Cell weights from a band table with midpoints as nodes.
    const auto fine_bands = paths::SynthesisOperator(bundle.model, UniformGrid(2 * nt, T)).bands();
    auto band_sum = [&](std::size_t row, std::size_t i) {
        return (fine_bands(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(2 * i)) +
                fine_bands(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(2 * i + 1))) /
               h;
    };
    double plug = 0.0;
    double cell = 0.0;
    for (std::size_t j = 0; j < nt; ++j) {
        plug += u.g(mid[j]) * (x[j + 1] - x[j]);
        double w = 0.0;
        for (std::size_t i = 0; i <= j; ++i) {
            w += band_sum(2 * j + 1, i) * (band_sum(2 * j + 2, i) - band_sum(2 * j, i));
        }
        cell += u.dg(mid[j]) * h * w;
    }
    return {plug, plug - cell, cell};
}

double r_pi_first_term(const paths::PathBundle& bundle, std::span<const double> u_mid, double T) {
    const UniformGrid& grid = bundle.grid;
    const std::size_t nt = grid.index_of(T);
    if (u_mid.size() < nt) {
        throw DomainError("r_pi_first_term: need one value per interval up to T");
    }
    const paths::SynthesisOperator op(bundle.model, grid);
    const auto& bands = op.bands();
    const double h = grid.step();
    double acc = 0.0;
    for (std::size_t i = 0; i < nt; ++i) {
        // (1/h)∫_{I_i} K*_T u = Σ_j u_j (band(t_{j+1}, I_i) - band(t_j, I_i)) / h
        double avg = 0.0;
        for (std::size_t j = i; j < nt; ++j) {
            avg += u_mid[j] * (bands(static_cast<Eigen::Index>(j + 1), static_cast<Eigen::Index>(i)) -
                               bands(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
        }
        acc += avg / h * (bundle.brownian[i + 1] - bundle.brownian[i]);
    }
    return acc;
}

double trace_term(const Integrand& u, const paths::PathBundle& bundle, double T, std::span<const double> x_mid) {
    if (u.kind() != IntegrandKind::composite) {
        return 0.0;
    }
    const UniformGrid& grid = bundle.grid;
    const kernels::KernelModel& model = bundle.model;
    const std::size_t nt = grid.index_of(T);
    if (nt < 2) {
        throw DomainError("trace_term: T must be at least the second grid node");
    }
    std::vector<double> mid =
        x_mid.empty() ? interpolated_midpoints(bundle.volterra, nt) : std::vector<double>(x_mid.begin(), x_mid.end());
    if (mid.size() < nt) {
        throw DomainError("trace_term: need one midpoint value per interval up to T");
    }
    std::vector<double> dg(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        dg[j] = u.dg(mid[j]);
    }
    const bool origin_singular = model.family() != kernels::Family::levy_fbm;
    // D(r_i) = Σ_{j>=i} g'(y_j) ½(K(t_{j+1}, r_i)² - K(t_j, r_i)²): the step-function adjoint of
    // t -> g'(X_t) K(t, r_i) with trapezoid interval averages of the kernel factor.
    std::vector<double> density(nt, 0.0);
    for (std::size_t i = origin_singular ? 1 : 0; i < nt; ++i) {
        const double r = grid.node(i);
        double acc = 0.0;
        double k_prev_sq = 0.0;
        for (std::size_t j = i; j < nt; ++j) {
            const double k = model.eval(grid.node(j + 1), r, true);
            acc += dg[j] * 0.5 * (k * k - k_prev_sq);
            k_prev_sq = k * k;
        }
        if (!std::isfinite(acc)) {
            throw EvaluationError("trace_term: non-finite kernel values at r = " + std::to_string(r));
        }
        density[i] = acc;
    }
    const double h = grid.step();
    // Trapezoid over r; the end cells integrate the power behaviour of K(T, r)² exactly.
    double acc = 0.0;
    if (origin_singular) {
        const double lambda = 1.0 - 2.0 * model.hurst_at(T);
        acc += density[1] * h / (lambda + 1.0);
    } else {
        acc += 0.5 * h * (density[0] + density[1]);
    }
    for (std::size_t i = 1; i + 1 < nt; ++i) {
        acc += 0.5 * h * (density[i] + density[i + 1]);
    }
    acc += density[nt - 1] * h / (2.0 * model.hurst_at(T));
    return acc;
}

void extrapolate(IntegralEstimate& est, double noise_floor) {
    const std::size_t L = est.levels.size();
    est.order.reset();
    est.extrapolated = est.levels.back().second;
    if (L < 3) {
        est.warnings.emplace_back("fewer than three levels; no order reported");
        return;
    }
    std::vector<double> diffs;
    for (std::size_t k = 0; k + 1 < L; ++k) {
        diffs.push_back(est.levels[k + 1].second - est.levels[k].second);
    }
    // Pathwise magnitudes when supplied (several paths), else the differences themselves.
    const bool pathwise = est.successive_differences.size() == diffs.size();
    if (!pathwise) {
        est.successive_differences.clear();
        for (double d : diffs) {
            est.successive_differences.push_back(std::abs(d));
        }
    }
    const auto& mag = est.successive_differences;
    const double mag_floor = pathwise ? 0.0 : noise_floor;
    for (std::size_t k = 0; k + 1 < mag.size(); ++k) {
        if (mag[k + 1] > mag[k] + mag_floor) {
            est.warnings.emplace_back("non-monotone successive differences between levels " +
                                      std::to_string(est.levels[k + 1].first) + " and " +
                                      std::to_string(est.levels[k + 2].first));
            break;
        }
    }
    const double m_prev = mag[mag.size() - 2];
    const double m_last = mag.back();
    if (m_last <= mag_floor || m_prev == 0.0) {
        est.warnings.emplace_back("successive differences below the noise floor; finest level reported");
        return;
    }
    const double p = std::log2(m_prev / m_last);
    est.order = p;
    if (!(p > 0.0) || !std::isfinite(p)) {
        est.warnings.emplace_back("non-positive empirical order; extrapolation skipped");
        return;
    }
    const double d_last = diffs.back();
    if (std::abs(d_last) <= noise_floor) {
        est.warnings.emplace_back("last difference of the estimate below the noise floor; finest level reported");
        return;
    }
    est.extrapolated = est.levels.back().second + d_last / (std::exp2(p) - 1.0);
}

std::string IntegralEstimate::to_json() const {
    nlohmann::json j;
    j["levels"] = nlohmann::json::array();
    for (const auto& [n, v] : levels) {
        j["levels"].push_back({{"n", n}, {"value", number_or_null(v)}});
    }
    j["r_pi"] = nlohmann::json::array();
    for (double v : r_pi) {
        j["r_pi"].push_back(number_or_null(v));
    }
    j["successive_differences"] = nlohmann::json::array();
    for (double v : successive_differences) {
        j["successive_differences"].push_back(number_or_null(v));
    }
    j["extrapolated"] = number_or_null(extrapolated);
    j["order"] = order ? number_or_null(*order) : nlohmann::json(nullptr);
    j["stderr"] = number_or_null(stderr_);
    j["paths"] = paths;
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

namespace {

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) {
        return *mid;
    }
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

void check_levels(const std::vector<std::size_t>& levels) {
    if (levels.size() < 3) {
        throw DomainError("stratonovich_estimate: need at least three dyadic levels");
    }
    for (std::size_t k = 1; k < levels.size(); ++k) {
        if (levels[k] != 2 * levels[k - 1]) {
            throw DomainError("stratonovich_estimate: levels must double from one to the next");
        }
    }
}

}  // namespace

IntegralEstimate stratonovich_estimate(const Integrand& u, const kernels::KernelModel& model, RngSeed seed, double T,
                                       const std::vector<std::size_t>& levels) {
    check_levels(levels);
    const CoupledLevels scheme(model, T, levels);
    const auto values = scheme.evaluate(u, seed);
    IntegralEstimate est;
    double scale = 0.0;
    for (const auto& v : values) {
        est.levels.emplace_back(v.n, v.value);
        est.r_pi.push_back(v.terms.r_pi);
        scale = std::max(scale, std::abs(v.value));
    }
    est.stderr_ = std::numeric_limits<double>::quiet_NaN();
    extrapolate(est, 1e-12 * std::max(scale, 1.0));
    return est;
}

IntegralEstimate stratonovich_estimate_mc(const Integrand& u, const kernels::KernelModel& model, RngSeed seed,
                                          double T, const std::vector<std::size_t>& levels, std::size_t paths,
                                          unsigned workers) {
    check_levels(levels);
    if (paths < 2) {
        throw DomainError("stratonovich_estimate_mc: need at least two paths");
    }
    const CoupledLevels scheme(model, T, levels, workers);
    const auto all = scheme.evaluate_batch(u, seed, paths);
    const std::size_t L = levels.size();
    const double m = static_cast<double>(paths);
    std::vector<double> mean(L, 0.0);
    std::vector<double> mean_r(L, 0.0);
    for (const auto& path : all) {
        for (std::size_t k = 0; k < L; ++k) {
            mean[k] += path[k].value;
            mean_r[k] += path[k].terms.r_pi;
        }
    }
    for (std::size_t k = 0; k < L; ++k) {
        mean[k] /= m;
        mean_r[k] /= m;
    }
    auto stderr_of = [&](auto&& sample) {
        double mu = 0.0;
        for (const auto& path : all) {
            mu += sample(path);
        }
        mu /= m;
        double ss = 0.0;
        for (const auto& path : all) {
            const double d = sample(path) - mu;
            ss += d * d;
        }
        return std::sqrt(ss / (m - 1.0) / m);
    };
    IntegralEstimate est;
    est.paths = paths;
    for (std::size_t k = 0; k < L; ++k) {
        est.levels.emplace_back(levels[k], mean[k]);
        est.r_pi.push_back(mean_r[k]);
    }
    est.stderr_ = stderr_of([&](const auto& path) { return path[L - 1].value; });
    // Median over paths of |v_{k+1} - v_k|: the coupled Cauchy test behind the empirical order.
    for (std::size_t k = 0; k + 1 < L; ++k) {
        std::vector<double> d;
        d.reserve(paths);
        for (const auto& path : all) {
            d.push_back(std::abs(path[k + 1].value - path[k].value));
        }
        est.successive_differences.push_back(median(d));
    }
    double floor = 0.0;
    for (std::size_t k = 0; k + 1 < L; ++k) {
        floor = std::max(floor, 2.0 * stderr_of([&](const auto& path) { return path[k + 1].value - path[k].value; }));
    }
    extrapolate(est, floor);
    return est;
}

double energy(const Integrand& u, const kernels::KernelModel& model, double t, std::size_t cells) {
    if (u.kind() != IntegrandKind::deterministic) {
        throw DomainError("energy: deterministic integrand required");
    }
    if (!(t > 0.0) || t > model.horizon() * (1.0 + 1e-12)) {
        throw DomainError("energy: t must lie in (0, horizon]");
    }
    const UniformGrid grid(cells, t);
    const auto n = static_cast<Eigen::Index>(cells);
    Eigen::MatrixXd r(n, n);
    if (kernels::covariance_closed(model, t, t)) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                r(i, j) = *kernels::covariance_closed(model, grid.node(static_cast<std::size_t>(i) + 1),
                                                      grid.node(static_cast<std::size_t>(j) + 1));
                r(j, i) = r(i, j);
            }
        }
    } else {
        r = kernels::covariance_matrix_grid(model, grid);
    }
    // Σ_j u_j (X_{j+1} - X_j) = Σ_k (u_{k-1} - u_k) X_k with u_cells = 0.
    const auto mid = midpoint_values(u, cells, grid.step());
    Eigen::VectorXd a(n);
    for (std::size_t k = 1; k <= cells; ++k) {
        const double next = k < cells ? mid[k] : 0.0;
        a(static_cast<Eigen::Index>(k) - 1) = mid[k - 1] - next;
    }
    return a.dot(r * a);
}

double energy_derivative(const Integrand& u, const kernels::KernelModel& model, double t, double dt,
                         std::size_t cells) {
    if (!(dt > 0.0)) {
        throw DomainError("energy_derivative: dt must be positive");
    }
    const double horizon = model.horizon() * (1.0 + 1e-12);
    if (!(t > 0.0) || t > horizon) {
        throw DomainError("energy_derivative: t must lie in (0, horizon]");
    }
    if (t - dt > 0.0 && t + dt <= horizon) {
        return (energy(u, model, t + dt, cells) - energy(u, model, t - dt, cells)) / (2.0 * dt);
    }
    if (t + dt <= horizon) {
        return (energy(u, model, t + dt, cells) - energy(u, model, t, cells)) / dt;
    }
    return (energy(u, model, t, cells) - energy(u, model, t - dt, cells)) / dt;
}

}  // namespace vlab::integrals
