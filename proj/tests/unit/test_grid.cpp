#include <doctest.h>

#include <cmath>
#include <limits>

#include "vlab/errors.hpp"
#include "vlab/grid.hpp"

using vlab::SampledFunction;
using vlab::UniformGrid;

TEST_CASE("uniform grid nodes") {
    const UniformGrid g(10, 2.0);
    CHECK(g.n() == 10);
    CHECK(g.size() == 11);
    CHECK(g.step() == doctest::Approx(0.2));
    CHECK(g.node(0) == 0.0);
    CHECK(g.node(10) == 2.0);
    CHECK(g.midpoint(0) == doctest::Approx(0.1));
    const auto nodes = g.nodes();
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        CHECK(nodes[i] > nodes[i - 1]);
    }
    CHECK(g.index_of(1.2) == 6);
    CHECK(g.has_node(0.4));
    CHECK_FALSE(g.has_node(0.5));
    CHECK_THROWS_AS(g.index_of(0.5), vlab::DomainError);
}

TEST_CASE("uniform grid invariants") {
    CHECK_THROWS_AS(UniformGrid(1, 1.0), vlab::DomainError);
    CHECK_THROWS_AS(UniformGrid(4, 0.0), vlab::DomainError);
    CHECK_THROWS_AS(UniformGrid(4, std::numeric_limits<double>::infinity()), vlab::DomainError);
    CHECK(UniformGrid(4, 1.0) == UniformGrid(4, 1.0));
    CHECK_FALSE(UniformGrid(4, 1.0) == UniformGrid(8, 1.0));
}

TEST_CASE("sampled function validation and interpolation") {
    const UniformGrid g(4, 1.0);
    CHECK_THROWS_AS(SampledFunction(g, {0.0, 1.0}), vlab::DomainError);
    CHECK_THROWS_AS(SampledFunction(g, {0.0, 1.0, std::nan(""), 0.0, 0.0}), vlab::DomainError);
    const auto f = SampledFunction::from(g, [](double t) { return 3.0 * t - 1.0; });
    CHECK(f.size() == 5);
    CHECK(f[4] == doctest::Approx(2.0));
    CHECK(f.at(0.3) == doctest::Approx(-0.1));
    CHECK(f.at(-1.0) == doctest::Approx(-1.0));
    CHECK(f.at(2.0) == doctest::Approx(2.0));
    CHECK(f.max_abs() == doctest::Approx(2.0));
    CHECK(SampledFunction::zeros(g).max_abs() == 0.0);
    CHECK_THROWS_AS(vlab::require_same_grid(f, SampledFunction::zeros(UniformGrid(8, 1.0))), vlab::DomainError);
}
