#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <vector>

#include "vlab/errors.hpp"
#include "vlab/integrals.hpp"
#include "vlab/kernels.hpp"
#include "vlab/paths.hpp"

using namespace vlab;
using integrals::Integrand;
using kernels::KernelModel;

namespace {

paths::PathBundle bundle_for(double H, std::size_t n, std::uint64_t stream = 0) {
    return paths::simulate_path(KernelModel::stationary_fbm(H), UniformGrid(n, 1.0), RngSeed{11, stream});
}

Integrand identity() {
    return Integrand::composite([](double x) { return x; }, [](double) { return 1.0; }, "X");
}

}  // namespace

TEST_CASE("Riemann and trapezoid sums") {
    const UniformGrid g(64, 1.0);
    const auto one = SampledFunction::from(g, [](double) { return 1.0; });
    const auto t = SampledFunction::from(g, [](double s) { return s; });
    const auto x = bundle_for(0.7, 64).volterra;
    CHECK(std::abs(integrals::riemann_sum(one, x) - x[64]) <= 1e-14);
    CHECK(std::abs(integrals::ss_sum(one, x) - x[64]) <= 1e-14);
    const double h = g.step();
    CHECK(std::abs(integrals::riemann_sum(t, t) - (0.5 - 0.5 * h)) <= 1e-14);
    CHECK(std::abs(integrals::ss_sum(t, t) - 0.5) <= 1e-14);
    // an indicator of [0, t_k) integrates to X(t_k)
    const auto ind = SampledFunction::from(g, [](double s) { return s < 0.25 - 1e-12 ? 1.0 : 0.0; });
    CHECK(std::abs(integrals::riemann_sum(ind, x) - x[16]) <= 1e-14);
    CHECK_THROWS_AS(integrals::riemann_sum(one, SampledFunction::zeros(UniformGrid(32, 1.0))), DomainError);
}

TEST_CASE("composite integrands check the supplied derivative") {
    CHECK_NOTHROW(Integrand::composite([](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }));
    CHECK_THROWS_AS(Integrand::composite([](double x) { return x * x; }, [](double x) { return x; }), DomainError);
    const auto c = identity();
    CHECK(c.kind() == integrals::IntegrandKind::composite);
    CHECK(c.g(2.5) == 2.5);
    CHECK(c.dg(2.5) == 1.0);
}

TEST_CASE("symmetric sum of u = 1 telescopes") {
    for (double H : {0.3, 0.5, 0.7}) {
        const auto b = bundle_for(H, 128);
        const auto one = Integrand::deterministic([](double) { return 1.0; });
        const auto terms = integrals::r_pi_sum(one, b, 1.0);
        CHECK(std::abs(terms.r_pi - b.volterra[128]) <= 1e-12);
        CHECK(terms.cell_trace == 0.0);
        CHECK(std::abs(terms.divergence - terms.r_pi) <= 1e-12);
        const std::vector<double> ones(64, 1.0);
        CHECK(std::abs(integrals::r_pi_first_term(b, ones, 0.5) - b.volterra[64]) <= 1e-12);
    }
}

TEST_CASE("at H = 1/2 the symmetric sum of X is the midpoint Brownian sum") {
    const auto b = bundle_for(0.5, 64);
    const auto terms = integrals::r_pi_sum(identity(), b, 1.0);
    double direct = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
        direct += 0.5 * (b.volterra[i] + b.volterra[i + 1]) * (b.volterra[i + 1] - b.volterra[i]);
    }
    CHECK(std::abs(terms.r_pi - direct) <= 1e-12);
    CHECK(std::abs(terms.r_pi - 0.5 * b.brownian[64] * b.brownian[64]) <= 1e-12);
    CHECK(std::abs(terms.divergence + terms.cell_trace - terms.r_pi) <= 1e-12);
}

TEST_CASE("deterministic symmetric sums are centred") {
    const auto u = Integrand::deterministic([](double t) { return 1.0 + t * t; });
    const std::size_t M = 4000;
    double s1 = 0.0;
    double s2 = 0.0;
    const auto model = KernelModel::stationary_fbm(0.7);
    const UniformGrid g(32, 1.0);
    for (std::size_t p = 0; p < M; ++p) {
        const auto b = paths::simulate_path(model, g, RngSeed{13, p});
        const double v = integrals::r_pi_sum(u, b, 1.0).r_pi;
        s1 += v;
        s2 += v * v;
    }
    const double mean = s1 / M;
    const double se = std::sqrt((s2 / M - mean * mean) / M);
    CHECK(std::abs(mean) <= 4.0 * se);
}

TEST_CASE("trace term of X") {
    SUBCASE("H = 1/2 gives T/2") {
        const auto b = bundle_for(0.5, 256);
        CHECK(std::abs(integrals::trace_term(identity(), b, 1.0) - 0.5) <= 1e-2);
    }
    SUBCASE("H = 0.7 converges to R(T, T)/2") {
        const double want = 0.5 * kernels::covariance_fbm_closed(0.7, 1.0, 1.0);
        double prev = 1.0;
        for (std::size_t n : {128u, 256u, 512u, 1024u}) {
            const double err = std::abs(integrals::trace_term(identity(), bundle_for(0.7, n), 1.0) / want - 1.0);
            CHECK(err < prev);
            prev = err;
        }
        CHECK(prev <= 0.02);
    }
    SUBCASE("constant g has no trace") {
        const auto c = Integrand::composite([](double) { return 3.0; }, [](double) { return 0.0; });
        CHECK(integrals::trace_term(c, bundle_for(0.7, 64), 1.0) == 0.0);
    }
}

TEST_CASE("coupled levels share one Brownian path") {
    const auto model = KernelModel::stationary_fbm(0.7);
    const integrals::CoupledLevels cl(model, 1.0, {16, 32, 64});
    CHECK(cl.fine_grid().n() == 128);
    const auto one = Integrand::deterministic([](double) { return 1.0; });
    const auto vals = cl.evaluate(one, RngSeed{3, 0});
    REQUIRE(vals.size() == 3);
    for (const auto& v : vals) {
        CHECK(std::abs(v.terms.r_pi - v.x_pi_T) <= 1e-12);
        CHECK(std::abs(v.value - v.x_pi_T) <= 1e-12);
    }
    const auto batch = cl.evaluate_batch(one, RngSeed{3, 0}, 3);
    CHECK(batch[0][2].value == vals[2].value);
    CHECK(batch[1][2].value == cl.evaluate(one, RngSeed{3, 1})[2].value);
    // the trace weights telescope to half the variance at T
    for (std::size_t l = 0; l < 3; ++l) {
        double sum = 0.0;
        for (double w : cl.trace_weights(l)) {
            sum += w;
        }
        CHECK(std::abs(sum - 0.5 * kernels::covariance_fbm_closed(0.7, 1.0, 1.0)) <= 1e-2);
    }
    CHECK_THROWS_AS(integrals::CoupledLevels(model, 1.0, {16, 24}), DomainError);
    CHECK_THROWS_AS(integrals::CoupledLevels(model, 1.0, {32, 16}), DomainError);
    CHECK_THROWS_AS(integrals::CoupledLevels(model, 2.0, {16}), DomainError);
}

TEST_CASE("endpoint form below alpha = 1/2") {
    const auto model = KernelModel::stationary_fbm(0.3);
    const auto u = Integrand::deterministic([](double t) { return 2.0 + t; });
    const auto est = integrals::stratonovich_estimate(u, model, RngSeed{5, 0}, 1.0, {32, 64, 128});
    const integrals::CoupledLevels cl(model, 1.0, {32, 64, 128});
    const auto vals = cl.evaluate(u, RngSeed{5, 0});
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(std::abs(est.levels[l].second - vals[l].value) <= 1e-12);
        // the deterministic sum is linear in u, so the endpoint shift cancels
        CHECK(std::abs(vals[l].value - vals[l].terms.r_pi) <= 1e-10);
    }
}

TEST_CASE("extrapolation") {
    SUBCASE("geometric sequence") {
        integrals::IntegralEstimate est;
        for (std::size_t k = 0; k < 4; ++k) {
            est.levels.emplace_back(std::size_t{16} << k, 1.0 + std::ldexp(1.0, -static_cast<int>(k)));
        }
        integrals::extrapolate(est, 1e-14);
        REQUIRE(est.order.has_value());
        CHECK(std::abs(*est.order - 1.0) <= 1e-12);
        CHECK(std::abs(est.extrapolated - 1.0) <= 1e-12);
        CHECK(est.warnings.empty());
    }
    SUBCASE("non-monotone differences warn") {
        integrals::IntegralEstimate est;
        for (double v : {1.0, 1.1, 1.3, 1.35}) {
            est.levels.emplace_back(est.levels.size() + 1, v);
        }
        integrals::extrapolate(est, 1e-14);
        CHECK(!est.warnings.empty());
    }
    SUBCASE("differences under the noise floor") {
        integrals::IntegralEstimate est;
        for (double v : {1.0, 1.0 + 1e-13, 1.0 + 1.5e-13}) {
            est.levels.emplace_back(est.levels.size() + 1, v);
        }
        integrals::extrapolate(est, 1e-12);
        CHECK(!est.order.has_value());
        CHECK(est.extrapolated == 1.0 + 1.5e-13);
    }
    SUBCASE("too few levels") {
        CHECK_THROWS_AS(integrals::stratonovich_estimate(identity(), KernelModel::stationary_fbm(0.7), RngSeed{},
                                                         1.0, {64, 128}),
                        DomainError);
    }
}

TEST_CASE("estimate JSON") {
    const auto est = integrals::stratonovich_estimate(identity(), KernelModel::stationary_fbm(0.7), RngSeed{1, 0},
                                                      1.0, {32, 64, 128, 256});
    const auto j = nlohmann::json::parse(est.to_json());
    for (const char* key :
         {"levels", "r_pi", "successive_differences", "extrapolated", "order", "stderr", "paths", "warnings"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["levels"].size() == 4);
    CHECK(j["paths"] == 1);
    CHECK(est.to_json() == integrals::stratonovich_estimate(identity(), KernelModel::stationary_fbm(0.7),
                                                            RngSeed{1, 0}, 1.0, {32, 64, 128, 256})
                               .to_json());
}

TEST_CASE("Monte Carlo mean of the integral of X against X") {
    const auto est = integrals::stratonovich_estimate_mc(identity(), KernelModel::stationary_fbm(0.7), RngSeed{17, 0},
                                                         1.0, {64, 128, 256}, 2000);
    const double want = 0.5 * kernels::covariance_fbm_closed(0.7, 1.0, 1.0);
    CHECK(est.paths == 2000);
    CHECK(est.stderr_ > 0.0);
    CHECK(std::abs(est.levels.back().second - want) <= 4.0 * est.stderr_);
}

TEST_CASE("multi-path order comes from pathwise differences") {
    const auto est = integrals::stratonovich_estimate_mc(identity(), KernelModel::stationary_fbm(0.7), RngSeed{19, 0},
                                                         1.0, {128, 256, 512, 1024}, 60);
    REQUIRE(est.successive_differences.size() == 3);
    for (double d : est.successive_differences) {
        CHECK(d > 0.0);
    }
    REQUIRE(est.order.has_value());
    CHECK(*est.order ==
          doctest::Approx(std::log2(est.successive_differences[1] / est.successive_differences[2])).epsilon(1e-12));
    CHECK(*est.order > 0.0);
}

TEST_CASE("energy and its derivative") {
    const auto one = Integrand::deterministic([](double) { return 1.0; });
    const auto m7 = KernelModel::stationary_fbm(0.7);
    CHECK(std::abs(integrals::energy(one, m7, 0.5) / kernels::covariance_fbm_closed(0.7, 0.5, 0.5) - 1.0) <= 1e-3);
    const double v = kernels::covariance_fbm_closed(0.7, 1.0, 1.0);
    const double want = 1.4 * v * std::pow(0.5, 0.4);
    CHECK(std::abs(integrals::energy_derivative(one, m7, 0.5, 1e-3) / want - 1.0) <= 1e-3);
    CHECK(std::abs(integrals::energy_derivative(one, KernelModel::stationary_fbm(0.5), 0.3, 1e-3) - 1.0) <= 1e-6);
    CHECK(std::abs(integrals::kernel_energy(m7, 0.8, 512) / kernels::covariance_fbm_closed(0.7, 0.8, 0.8) - 1.0) <=
          1e-3);
    CHECK_THROWS_AS(integrals::energy(identity(), m7, 0.5), DomainError);
    CHECK_THROWS_AS(integrals::energy_derivative(one, m7, 0.5, 0.0), DomainError);
}
