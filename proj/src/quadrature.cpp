#include "vlab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "vlab/errors.hpp"

namespace vlab::quad {
namespace {

Rule compute_gauss_legendre(std::size_t m) {
    Rule rule;
    rule.nodes.resize(m);
    rule.weights.resize(m);
    const double md = static_cast<double>(m);
    for (std::size_t i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (md + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= m; ++k) {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            dp = md * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[m - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[m - 1 - i] = w;
    }
    return rule;
}

}  // namespace

void Rule::append(const Rule& other) {
    nodes.insert(nodes.end(), other.nodes.begin(), other.nodes.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
}

const Rule& gauss_legendre(std::size_t m) {
    static std::mutex mutex;
    static std::map<std::size_t, Rule> cache;
    if (m == 0) {
        throw DomainError("gauss_legendre: need at least one node");
    }
    std::lock_guard lock(mutex);
    auto it = cache.find(m);
    if (it == cache.end()) {
        it = cache.emplace(m, compute_gauss_legendre(m)).first;
    }
    return it->second;
}

Rule gauss_legendre(double a, double b, std::size_t m) {
    const Rule& ref = gauss_legendre(m);
    Rule rule;
    rule.nodes.resize(m);
    rule.weights.resize(m);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < m; ++i) {
        rule.nodes[i] = mid + half * ref.nodes[i];
        rule.weights[i] = half * ref.weights[i];
    }
    return rule;
}

Rule graded(double a, double b, End singular_end, double beta, int levels, std::size_t m) {
    if (!(b > a)) {
        throw DomainError("graded: empty interval");
    }
    if (!(beta > -1.0)) {
        throw DomainError("graded: endpoint exponent must exceed -1");
    }
    const double len = b - a;
    Rule rule;
    double outer = len;
    for (int k = 0; k < levels; ++k) {
        const double inner = 0.5 * outer;
        // piece at distance [inner, outer] from the singular end
        const double lo = singular_end == End::left ? a + inner : b - outer;
        const double hi = singular_end == End::left ? a + outer : b - inner;
        rule.append(gauss_legendre(lo, hi, m));
        outer = inner;
    }
    const double d = outer;
    rule.nodes.push_back(singular_end == End::left ? a + d : b - d);
    rule.weights.push_back(d / (beta + 1.0));
    return rule;
}

Rule graded_both(double a, double b, double beta_left, double beta_right, int levels, std::size_t m) {
    const double mid = 0.5 * (a + b);
    Rule rule = graded(a, mid, End::left, beta_left, levels, m);
    rule.append(graded(mid, b, End::right, beta_right, levels, m));
    return rule;
}

}  // namespace vlab::quad
