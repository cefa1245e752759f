#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "vlab/errors.hpp"
#include "vlab/quadrature.hpp"

using namespace vlab::quad;

namespace {

template <class F>
double apply(const Rule& r, F f) {
    double acc = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) {
        acc += r.weights[q] * f(r.nodes[q]);
    }
    return acc;
}

}  // namespace

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2m-1 exactly") {
    for (std::size_t m : {1u, 2u, 4u, 6u, 8u, 12u}) {
        const Rule& r = gauss_legendre(m);
        REQUIRE(r.size() == m);
        for (std::size_t k = 0; k < 2 * m; ++k) {
            const double want = k % 2 == 1 ? 0.0 : 2.0 / static_cast<double>(k + 1);
            CHECK(apply(r, [k](double x) { return std::pow(x, static_cast<double>(k)); }) ==
                  doctest::Approx(want).epsilon(1e-14));
        }
    }
}

TEST_CASE("mapped Gauss-Legendre rule") {
    const Rule r = gauss_legendre(0.5, 2.0, 5);
    CHECK(apply(r, [](double x) { return x * x * x; }) == doctest::Approx((16.0 - 0.0625) / 4.0).epsilon(1e-14));
    CHECK_THROWS_AS(gauss_legendre(0), vlab::DomainError);
}

TEST_CASE("graded rule integrates endpoint power singularities") {
    for (double beta : {-0.6, -0.4, -0.2, 0.3}) {
        const Rule left = graded(0.0, 1.0, End::left, beta);
        CHECK(apply(left, [beta](double x) { return std::pow(x, beta); }) ==
              doctest::Approx(1.0 / (beta + 1.0)).epsilon(1e-12));
        const Rule right = graded(0.0, 2.0, End::right, beta);
        CHECK(apply(right, [beta](double x) { return std::pow(2.0 - x, beta); }) ==
              doctest::Approx(std::pow(2.0, beta + 1.0) / (beta + 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("graded rule against an adaptive oracle on a smooth times singular integrand") {
    boost::math::quadrature::tanh_sinh<double> ts;
    const double want = ts.integrate([](double x) { return std::pow(x, -0.4) * std::cos(3.0 * x); }, 0.0, 1.0);
    const Rule r = graded(0.0, 1.0, End::left, -0.4);
    CHECK(apply(r, [](double x) { return std::pow(x, -0.4) * std::cos(3.0 * x); }) ==
          doctest::Approx(want).epsilon(1e-10));

    const Rule both = graded_both(0.0, 1.0, -0.3, -0.2);
    const double want_both =
        ts.integrate([](double x, double xc) { return std::pow(x, -0.3) * std::pow(x > 0.5 ? xc : 1.0 - x, -0.2); },
                     0.0, 1.0);
    CHECK(apply(both, [](double x) { return std::pow(x, -0.3) * std::pow(1.0 - x, -0.2); }) ==
          doctest::Approx(want_both).epsilon(1e-10));
}

TEST_CASE("graded rule domain errors") {
    CHECK_THROWS_AS(graded(1.0, 1.0, End::left, 0.0), vlab::DomainError);
    CHECK_THROWS_AS(graded(0.0, 1.0, End::left, -1.0), vlab::DomainError);
}

TEST_CASE("rules append") {
    Rule a = gauss_legendre(0.0, 1.0, 3);
    a.append(gauss_legendre(1.0, 2.0, 3));
    CHECK(a.size() == 6);
    CHECK(apply(a, [](double x) { return x; }) == doctest::Approx(2.0).epsilon(1e-14));
}
