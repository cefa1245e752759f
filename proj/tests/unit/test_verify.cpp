#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "vlab/errors.hpp"
#include "vlab/kernels.hpp"
#include "vlab/verify.hpp"

using namespace vlab;
using kernels::KernelModel;

namespace {

void check_report_shape(const verify::VerificationReport& r) {
    CHECK(r.passed == (r.metric <= r.threshold));
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["name"] == r.check_name);
    CHECK(j["passed"] == r.passed);
    CHECK(j.contains("metric"));
    CHECK(j.contains("threshold"));
    CHECK(j["details"].contains("seed"));
    CHECK(j["details"].contains("hurst"));
}

}  // namespace

TEST_CASE("report helpers") {
    verify::VerificationReport r;
    r.check_name = "demo";
    r.set("x", 1.5);
    r.set("s", std::string("text"));
    r.set("k", std::size_t{7});
    r.set("v", std::vector<double>{1.0, 2.0});
    r.finish(0.5, 1.0);
    CHECK(r.passed);
    r.finish(std::nan(""), 1.0);
    CHECK(!r.passed);
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["details"]["s"] == "text");
    CHECK(j["details"]["k"] == 7);
    CHECK(j["details"]["v"].size() == 2);
}

TEST_CASE("covariance check") {
    const std::vector<double> nodes{0.25, 0.5, 0.75, 1.0};
    const auto r5 = verify::check_covariance(KernelModel::stationary_fbm(0.5), nodes, 0, RngSeed{1, 0});
    CHECK(r5.passed);
    CHECK(r5.metric <= 1e-3);
    check_report_shape(r5);
    const auto r7 = verify::check_covariance(KernelModel::stationary_fbm(0.7), nodes, 4000, RngSeed{1, 0});
    CHECK(r7.passed);
    check_report_shape(r7);
    CHECK(r7.to_json() == verify::check_covariance(KernelModel::stationary_fbm(0.7), nodes, 4000, RngSeed{1, 0})
                               .to_json());
    CHECK_THROWS_AS(verify::check_covariance(KernelModel::stationary_fbm(0.7), {0.5}, 0, RngSeed{}), DomainError);
    CHECK_THROWS_AS(verify::check_covariance(KernelModel::stationary_fbm(0.7), {0.5, 1.5}, 0, RngSeed{}),
                    DomainError);
}

TEST_CASE("Ito check") {
    SUBCASE("Brownian square") {
        const auto r = verify::check_ito_residual(KernelModel::stationary_fbm(0.5), verify::ItoFunction::square, 1.0,
                                                  256, 2000, RngSeed{2, 0});
        CHECK(r.passed);
        check_report_shape(r);
    }
    SUBCASE("regimes refused") {
        CHECK_THROWS_AS(verify::check_ito_residual(KernelModel::stationary_fbm(0.3), verify::ItoFunction::square, 1.0,
                                                   64, 10, RngSeed{}),
                        UnsupportedRegime);
        const auto hfn = SampledFunction::from(UniformGrid(16, 1.0), [](double t) { return 0.6 + 0.2 * t; });
        CHECK_THROWS_AS(verify::check_ito_residual(KernelModel::multifractional(hfn), verify::ItoFunction::square,
                                                   1.0, 64, 10, RngSeed{}),
                        UnsupportedRegime);
    }
    SUBCASE("function names") {
        for (auto f : {verify::ItoFunction::square, verify::ItoFunction::cube, verify::ItoFunction::cos}) {
            CHECK(verify::parse_ito_function(verify::ito_function_name(f)) == f);
        }
        CHECK_THROWS_AS(verify::parse_ito_function("tan"), ConfigError);
    }
}

TEST_CASE("Girsanov shift") {
    const UniformGrid g(256, 1.0);
    const auto u = SampledFunction::from(g, [](double t) { return 1.0 + t - 2.0 * t * t; });
    const auto v = SampledFunction::from(g, [](double t) { return 0.5 - t; });
    for (double H : {0.3, 0.5, 0.7}) {
        const auto r = verify::check_girsanov_shift(KernelModel::stationary_fbm(H), u, v, RngSeed{4, 0});
        CHECK(r.passed);
        CHECK(r.metric <= 1e-10);
        check_report_shape(r);
    }
    const auto zero = verify::check_girsanov_shift(KernelModel::stationary_fbm(0.7), u, SampledFunction::zeros(g),
                                                   RngSeed{4, 0});
    CHECK(zero.metric == 0.0);
}

TEST_CASE("restriction, telescoping and endpoint checks") {
    const UniformGrid g(128, 1.0);
    const auto u = SampledFunction::from(g, [](double t) { return std::cos(3.0 * t); });
    for (double H : {0.3, 0.7}) {
        const auto model = KernelModel::stationary_fbm(H);
        const auto rr = verify::check_restriction(model, u, 0.5, 1.0, RngSeed{6, 0});
        CHECK(rr.passed);
        CHECK(rr.metric <= 1e-10);
        const auto rs = verify::check_restriction(model, u, 1.0, 1.0, RngSeed{6, 0});
        CHECK(rs.metric <= 1e-12);
        const auto rt = verify::check_telescoping(model, g, RngSeed{6, 0});
        CHECK(rt.passed);
        CHECK(rt.metric <= 1e-12);
        const auto re = verify::check_endpoint_correction(model, u, RngSeed{6, 0});
        CHECK(re.passed);
        CHECK(re.metric <= 1e-10);
        check_report_shape(re);
    }
    CHECK_THROWS_AS(verify::check_restriction(KernelModel::stationary_fbm(0.7), u, 0.0, 1.0, RngSeed{}), DomainError);
}
