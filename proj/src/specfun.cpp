#include "vlab/specfun.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "vlab/errors.hpp"

namespace vlab::specfun {
namespace {

constexpr double kSeriesTol = 1e-16;
constexpr int kMaxTerms = 10000;
// Below this distance of c - a - b from an integer the connection formula
// loses too many digits and is replaced by interpolation in b.
constexpr double kNearIntegerGap = 1e-5;

bool is_nonpositive_integer(double x) {
    return x <= 0.0 && x == std::floor(x);
}

std::string describe(double a, double b, double c, double z) {
    std::ostringstream os;
    os.precision(17);
    os << "(a=" << a << ", b=" << b << ", c=" << c << ", z=" << z << ")";
    return os.str();
}

double series(double a, double b, double c, double z) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < kMaxTerms; ++k) {
        const double kd = static_cast<double>(k);
        term *= (a + kd) * (b + kd) / ((c + kd) * (kd + 1.0)) * z;
        sum += term;
        if (term == 0.0 || std::abs(term) < kSeriesTol * std::abs(sum)) {
            return sum;
        }
    }
    throw EvaluationError("hyp2f1: series did not converge within " + std::to_string(kMaxTerms) +
                          " terms at " + describe(a, b, c, z));
}

}  // namespace

double gamma_fn(double x) {
    if (!std::isfinite(x)) {
        throw DomainError("gamma_fn: non-finite argument");
    }
    if (is_nonpositive_integer(x)) {
        throw DomainError("gamma_fn: pole at x = " + std::to_string(x));
    }
    return std::tgamma(x);
}

double rgamma(double x) {
    if (is_nonpositive_integer(x)) {
        return 0.0;
    }
    return 1.0 / std::tgamma(x);
}

Hyp2F1::Connection Hyp2F1::make_connection(double a, double b, double c) {
    Connection conn{a, b, c, c - a - b, 0.0, 0.0, false};
    const double nearest = std::round(conn.m);
    conn.near_integer = std::abs(conn.m - nearest) < kNearIntegerGap;
    if (!conn.near_integer) {
        const double gc = std::tgamma(c);
        conn.coef1 = gc * std::tgamma(conn.m) * rgamma(c - a) * rgamma(c - b);
        conn.coef2 = gc * std::tgamma(-conn.m) * rgamma(a) * rgamma(b);
    }
    return conn;
}

// F(a, b; c; x) for x in [0, 1).
double Hyp2F1::eval_unit(const Connection& conn, double x) {
    if (x <= 0.5) {
        return series(conn.a, conn.b, conn.c, x);
    }
    const double y = 1.0 - x;
    if (!conn.near_integer) {
        double value = 0.0;
        if (conn.coef1 != 0.0) {
            value += conn.coef1 * series(conn.a, conn.b, 1.0 - conn.m, y);
        }
        if (conn.coef2 != 0.0) {
            value += conn.coef2 * std::pow(y, conn.m) *
                     series(conn.c - conn.a, conn.c - conn.b, 1.0 + conn.m, y);
        }
        return value;
    }
    // F is entire in b, so cubic interpolation across the logarithmic case
    // from four shifted parameter values is accurate to O(gap^4).
    const double m0 = std::round(conn.m);
    const double d = 2.0 * kNearIntegerGap;
    const std::array<double, 4> offsets{-2.0 * d, -d, d, 2.0 * d};
    std::array<double, 4> values{};
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        const double b_shift = conn.b - (m0 + offsets[k] - conn.m);
        values[k] = eval_unit(make_connection(conn.a, b_shift, conn.c), x);
    }
    const double s = conn.m - m0;
    double result = 0.0;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        double weight = 1.0;
        for (std::size_t j = 0; j < offsets.size(); ++j) {
            if (j != k) {
                weight *= (s - offsets[j]) / (offsets[k] - offsets[j]);
            }
        }
        result += weight * values[k];
    }
    return result;
}

Hyp2F1::Hyp2F1(double a, double b, double c) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
        throw DomainError("hyp2f1: non-finite parameter");
    }
    if (is_nonpositive_integer(c)) {
        throw DomainError("hyp2f1: c must not be a non-positive integer, got c = " + std::to_string(c));
    }
    if (a > b) {
        std::swap(a, b);
    }
    a_ = a;
    b_ = b;
    c_ = c;
    polynomial_ = is_nonpositive_integer(a) || is_nonpositive_integer(b);
    if (!polynomial_) {
        direct_ = make_connection(a, b, c);
        pfaff_ = make_connection(a, c - b, c);
    }
}

double Hyp2F1::operator()(double z) const {
    if (!(z < 1.0)) {
        throw DomainError("hyp2f1: real argument must satisfy z < 1, got " + describe(a_, b_, c_, z));
    }
    if (z == 0.0 || a_ == 0.0 || b_ == 0.0) {
        return 1.0;
    }
    if (polynomial_ || std::abs(z) <= 0.5) {
        return series(a_, b_, c_, z);
    }
    if (z > 0.0) {
        return eval_unit(direct_, z);
    }
    // Pfaff: F(a,b;c;z) = (1-z)^{-a} F(a, c-b; c; z/(z-1)), mapping z < -1/2 into (1/3, 1).
    const double w = z / (z - 1.0);
    return std::pow(1.0 - z, -a_) * eval_unit(pfaff_, w);
}

double hyp2f1(const HypergeometricArgs& args) {
    return Hyp2F1(args.a, args.b, args.c)(args.z);
}

double hyp2f1(double a, double b, double c, double z) {
    return Hyp2F1(a, b, c)(z);
}

double v_h(double H) {
    if (!(H > 0.0 && H < 1.0)) {
        throw DomainError("v_h: H must lie in (0,1), got " + std::to_string(H));
    }
    // cos(πH)/(1-2H) rewritten with ε = 1/2 - H so the removable point needs no special case.
    const double eps = 0.5 - H;
    const double x = std::numbers::pi * eps;
    const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
    return std::tgamma(2.0 - 2.0 * H) * sinc / (2.0 * H);
}

}  // namespace vlab::specfun
