#pragma once

#include <cstddef>
#include <vector>

namespace vlab::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
    void append(const Rule& other);
};

// m-point Gauss-Legendre rule on [-1, 1]; tables are cached per m.
const Rule& gauss_legendre(std::size_t m);

// Gauss-Legendre rule mapped to [a, b].
Rule gauss_legendre(double a, double b, std::size_t m);

enum class End { left, right };

// Rule on [a, b] for integrands behaving like |x - e|^beta near the end e.
// The interval is bisected geometrically towards e for `levels` levels with an
// m-point Gauss-Legendre rule per piece; the remaining sliver of width d is
// integrated with one node at distance d from e, weighted as if the integrand
// were an exact power with exponent beta (beta > -1).
Rule graded(double a, double b, End singular_end, double beta, int levels = 24, std::size_t m = 8);

// Rule on [a, b] graded towards both ends (split at the midpoint).
Rule graded_both(double a, double b, double beta_left, double beta_right, int levels = 24,
                 std::size_t m = 8);

}  // namespace vlab::quad
