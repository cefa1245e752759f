#include "vlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "vlab/errors.hpp"
#include "vlab/integrals.hpp"
#include "vlab/paths.hpp"
#include "vlab/specfun.hpp"

namespace vlab::verify {
namespace {

nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return nullptr;
}

void set_model(VerificationReport& r, const kernels::KernelModel& model) {
    r.set("family", kernels::family_name(model.family()));
    if (model.family() != kernels::Family::multifractional) {
        r.set("hurst", model.hurst());
    }
    r.set("horizon", model.horizon());
    r.set("alpha", model.alpha());
}

void set_seed(VerificationReport& r, RngSeed seed) {
    r.set("seed", static_cast<std::size_t>(seed.master));
    r.set("stream", static_cast<std::size_t>(seed.stream));
}

// Smallest uniform grid (n <= 4096) over [0, max node] holding every node.
std::optional<UniformGrid> grid_through(const std::vector<double>& nodes, std::size_t min_n) {
    const double top = *std::max_element(nodes.begin(), nodes.end());
    for (std::size_t n = std::max<std::size_t>(min_n, 2); n <= 4096; ++n) {
        const UniformGrid g(n, top);
        if (std::all_of(nodes.begin(), nodes.end(), [&](double t) { return g.has_node(t); })) {
            return g;
        }
    }
    return std::nullopt;
}

}  // namespace

void VerificationReport::set(const std::string& key, double value) { details[key] = finite_or_null(value).dump(); }

void VerificationReport::set(const std::string& key, const std::string& value) {
    details[key] = nlohmann::json(value).dump();
}

void VerificationReport::set(const std::string& key, std::size_t value) { details[key] = nlohmann::json(value).dump(); }

void VerificationReport::set(const std::string& key, const std::vector<double>& value) {
    nlohmann::json arr = nlohmann::json::array();
    for (double v : value) {
        arr.push_back(finite_or_null(v));
    }
    details[key] = arr.dump();
}

void VerificationReport::finish(double metric_value, double threshold_value) {
    metric = metric_value;
    threshold = threshold_value;
    passed = metric <= threshold;
}

std::string VerificationReport::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = check_name;
    j["passed"] = passed;
    j["metric"] = finite_or_null(metric);
    j["threshold"] = threshold;
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    for (const auto& [k, v] : details) {
        d[k] = nlohmann::ordered_json::parse(v);
    }
    j["details"] = d;
    return j.dump(2) + "\n";
}

VerificationReport check_covariance(const kernels::KernelModel& model, const std::vector<double>& nodes,
                                    std::size_t mc_paths, RngSeed seed, std::size_t mc_grid) {
    if (nodes.size() < 2) {
        throw DomainError("check_covariance: need at least two nodes");
    }
    for (double t : nodes) {
        if (!(t > 0.0) || t > model.horizon() * (1.0 + 1e-12)) {
            throw DomainError("check_covariance: nodes must lie in (0, horizon]");
        }
    }
    VerificationReport rep;
    rep.check_name = "covariance";
    set_model(rep, model);
    set_seed(rep, seed);
    rep.set("nodes", nodes);
    rep.set("mc_paths", mc_paths);

    const std::size_t m = nodes.size();
    const Eigen::MatrixXd quad = kernels::covariance_matrix(model, nodes);
    auto flatten = [m](const Eigen::MatrixXd& a) {
        std::vector<double> out;
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(m); ++j) {
                out.push_back(a(i, j));
            }
        }
        return out;
    };
    rep.set("quadrature", flatten(quad));
    double det_metric = 0.0;
    if (kernels::covariance_closed(model, nodes[0], nodes[0])) {
        double err = 0.0;
        double diag = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            diag = std::max(diag, *kernels::covariance_closed(model, nodes[i], nodes[i]));
            for (std::size_t j = 0; j < m; ++j) {
                const double c = *kernels::covariance_closed(model, nodes[i], nodes[j]);
                err = std::max(err, std::abs(quad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - c));
            }
        }
        Eigen::MatrixXd closed(quad.rows(), quad.cols());
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                closed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    *kernels::covariance_closed(model, nodes[i], nodes[j]);
            }
        }
        rep.set("closed_form", flatten(closed));
        rep.set("closed_form_max_error", err);
        rep.set("closed_form_tolerance", 1e-3 * diag);
        det_metric = err / (1e-3 * diag);
    }

    double mc_metric = 0.0;
    if (mc_paths >= 2) {
        const auto grid = grid_through(nodes, mc_grid);
        if (!grid) {
            throw DomainError("check_covariance: nodes do not fit a uniform grid of at most 4096 cells");
        }
        rep.set("mc_grid_n", grid->n());
        const paths::ExactSampler sampler(model, *grid);
        rep.set("mc_jitter", sampler.jitter());
        std::vector<std::size_t> idx(m);
        for (std::size_t i = 0; i < m; ++i) {
            idx[i] = grid->index_of(nodes[i]);
        }
        const auto mi = static_cast<Eigen::Index>(m);
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(mi, mi);
        Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(mi, mi);
        Eigen::VectorXd x(mi);
        for (std::size_t p = 0; p < mc_paths; ++p) {
            const SampledFunction path = sampler.draw(seed.with_stream(seed.stream + p));
            for (std::size_t i = 0; i < m; ++i) {
                x(static_cast<Eigen::Index>(i)) = path[idx[i]];
            }
            const Eigen::MatrixXd prod = x * x.transpose();
            sum += prod;
            sum_sq += prod.cwiseProduct(prod);
        }
        const double M = static_cast<double>(mc_paths);
        const Eigen::MatrixXd mean = sum / M;
        const Eigen::MatrixXd var = (sum_sq / M - mean.cwiseProduct(mean)) * (M / (M - 1.0));
        const Eigen::MatrixXd se_mat = (var / M).cwiseSqrt();
        rep.set("mc_mean", flatten(mean));
        rep.set("mc_stderr", flatten(se_mat));
        double zmax = 0.0;
        for (Eigen::Index i = 0; i < mi; ++i) {
            for (Eigen::Index j = 0; j < mi; ++j) {
                const double se = se_mat(i, j);
                const double z = se > 0.0 ? std::abs(mean(i, j) - quad(i, j)) / se : 0.0;
                zmax = std::max(zmax, z);
            }
        }
        rep.set("mc_max_abs_z", zmax);
        mc_metric = zmax / 4.0;
    }
    rep.finish(std::max(det_metric, mc_metric), 1.0);
    return rep;
}

ItoFunction parse_ito_function(const std::string& name) {
    if (name == "square") {
        return ItoFunction::square;
    }
    if (name == "cube") {
        return ItoFunction::cube;
    }
    if (name == "cos") {
        return ItoFunction::cos;
    }
    throw ConfigError("unknown test function '" + name + "' (expected square, cube or cos)");
}

std::string ito_function_name(ItoFunction f) {
    switch (f) {
        case ItoFunction::square:
            return "square";
        case ItoFunction::cube:
            return "cube";
        case ItoFunction::cos:
            return "cos";
    }
    return "?";
}

VerificationReport check_ito_residual(const kernels::KernelModel& model, ItoFunction f, double T, std::size_t n,
                                      std::size_t mc_paths, RngSeed seed, unsigned workers) {
    if (model.alpha() < 0.5) {
        throw UnsupportedRegime("ito-check: the chain rule is only asserted for alpha >= 1/2 (got alpha = " +
                                std::to_string(model.alpha()) + ")");
    }
    if (model.family() == kernels::Family::multifractional) {
        throw UnsupportedRegime("ito-check: the multifractional family has no closed-form bracket");
    }
    if (mc_paths < 2) {
        throw DomainError("ito-check: need at least two paths");
    }
    std::function<double(double)> fn;
    std::function<double(double)> d1;
    std::function<double(double)> d2;
    switch (f) {
        case ItoFunction::square:
            fn = [](double x) { return x * x; };
            d1 = [](double x) { return 2.0 * x; };
            d2 = [](double) { return 2.0; };
            break;
        case ItoFunction::cube:
            fn = [](double x) { return x * x * x; };
            d1 = [](double x) { return 3.0 * x * x; };
            d2 = [](double x) { return 6.0 * x; };
            break;
        case ItoFunction::cos:
            fn = [](double x) { return std::cos(x); };
            d1 = [](double x) { return -std::sin(x); };
            d2 = [](double x) { return -std::cos(x); };
            break;
    }
    const auto u = integrals::Integrand::composite(d1, d2, "f'(X)");
    const integrals::CoupledLevels scheme(model, T, {n}, workers);
    const auto all = scheme.evaluate_batch(u, seed, mc_paths);

    // For both fBm families ½ d/ds R(s,s) = ∂₁R(t,s)|_{t=s}, so the two bracket terms cancel.
    const double bracket = 0.0;
    double mean = 0.0;
    for (const auto& path : all) {
        mean += fn(path[0].x_T) - fn(0.0) - path[0].value - bracket;
    }
    const double M = static_cast<double>(mc_paths);
    mean /= M;
    double ss = 0.0;
    for (const auto& path : all) {
        const double d = fn(path[0].x_T) - fn(0.0) - path[0].value - bracket - mean;
        ss += d * d;
    }
    const double se = std::sqrt(ss / (M - 1.0) / M);
    const double metric = se > 0.0 ? std::abs(mean) / se : (mean == 0.0 ? 0.0 : INFINITY);

    VerificationReport rep;
    rep.check_name = "ito_residual";
    set_model(rep, model);
    set_seed(rep, seed);
    rep.set("function", ito_function_name(f));
    rep.set("T", T);
    rep.set("n", n);
    rep.set("fine_n", scheme.fine_grid().n());
    rep.set("mc_paths", mc_paths);
    rep.set("mean_residual", mean);
    rep.set("stderr", se);
    rep.finish(metric, 3.0);
    return rep;
}

VerificationReport check_girsanov_shift(const kernels::KernelModel& model, const SampledFunction& u,
                                        const SampledFunction& v, RngSeed seed) {
    require_same_grid(u, v);
    const UniformGrid& grid = u.grid();
    const double h = grid.step();
    const auto db = paths::brownian_increments(grid, seed);
    const SampledFunction kstar = kernels::apply_K_adjoint(model, u, grid.horizon());
    double original = 0.0;
    double shifted = 0.0;
    double shift = 0.0;
    for (std::size_t i = 0; i < grid.n(); ++i) {
        const double dv = v[i] * h;
        original += kstar[i] * db[i];
        shifted += kstar[i] * (db[i] + dv);
        shift += kstar[i] * dv;
    }
    VerificationReport rep;
    rep.check_name = "girsanov_shift";
    set_model(rep, model);
    set_seed(rep, seed);
    rep.set("n", grid.n());
    rep.set("original", original);
    rep.set("shifted", shifted);
    rep.set("shift", shift);
    rep.finish(std::abs(shifted - (original + shift)), 1e-10);
    return rep;
}

VerificationReport check_restriction(const kernels::KernelModel& model, const SampledFunction& u, double S, double T,
                                     RngSeed seed) {
    const UniformGrid& grid = u.grid();
    if (!(S <= T) || !grid.has_node(S) || !grid.has_node(T) || grid.index_of(S) < 2) {
        throw DomainError("check_restriction: need grid nodes 0 < S <= T");
    }
    const auto bundle = paths::simulate_path(model, grid, seed);
    const double uS = u.at(S);
    const double xS = bundle.volterra[grid.index_of(S)];

    const auto shifted = integrals::Integrand::deterministic([&](double t) { return u.at(t) - uS; });
    const auto truncated =
        integrals::Integrand::deterministic([&](double t) { return t <= S ? u.at(t) - uS : 0.0; });
    const auto plain = integrals::Integrand::deterministic([&](double t) { return u.at(t); });

    const double leg_s = integrals::r_pi_sum(shifted, bundle, S).r_pi + uS * xS;
    const double leg_t = integrals::r_pi_sum(truncated, bundle, T).r_pi + uS * xS;
    const double leg_s_plain = integrals::r_pi_sum(plain, bundle, S).r_pi;

    VerificationReport rep;
    rep.check_name = "restriction";
    set_model(rep, model);
    set_seed(rep, seed);
    rep.set("n", grid.n());
    rep.set("S", S);
    rep.set("T", T);
    rep.set("leg_T", leg_t);
    rep.set("leg_S", leg_s);
    rep.set("leg_S_plain", leg_s_plain);
    rep.finish(std::abs(leg_t - leg_s), 1e-10);
    return rep;
}

VerificationReport check_telescoping(const kernels::KernelModel& model, const UniformGrid& grid, RngSeed seed) {
    const auto bundle = paths::simulate_path(model, grid, seed);
    const auto one = integrals::Integrand::deterministic([](double) { return 1.0; }, "1");
    const double sum = integrals::r_pi_sum(one, bundle, grid.horizon()).r_pi;
    const double x_end = bundle.volterra[grid.n()];
    VerificationReport rep;
    rep.check_name = "telescoping";
    set_model(rep, model);
    set_seed(rep, seed);
    rep.set("n", grid.n());
    rep.set("sum", sum);
    rep.set("x_T", x_end);
    rep.finish(std::abs(sum - x_end), 1e-12);
    return rep;
}

VerificationReport check_endpoint_correction(const kernels::KernelModel& model, const SampledFunction& u,
                                             RngSeed seed) {
    const UniformGrid& grid = u.grid();
    const double T = grid.horizon();
    const auto bundle = paths::simulate_path(model, grid, seed);
    const double uT = u.at(T);
    const auto plain = integrals::Integrand::deterministic([&](double t) { return u.at(t); });
    const auto shifted = integrals::Integrand::deterministic([&](double t) { return u.at(t) - uT; });
    const double direct = integrals::r_pi_sum(plain, bundle, T).r_pi;
    const double corrected = integrals::r_pi_sum(shifted, bundle, T).r_pi + uT * bundle.volterra[grid.n()];
    VerificationReport rep;
    rep.check_name = "endpoint_correction";
    set_model(rep, model);
    set_seed(rep, seed);
    rep.set("n", grid.n());
    rep.set("direct", direct);
    rep.set("corrected", corrected);
    rep.finish(std::abs(direct - corrected), 1e-10);
    return rep;
}

}  // namespace vlab::verify
