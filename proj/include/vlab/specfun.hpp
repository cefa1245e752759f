#pragma once

namespace vlab::specfun {

struct HypergeometricArgs {
    double a;
    double b;
    double c;
    double z;
};

// Γ(x); throws DomainError at the poles 0, -1, -2, ...
double gamma_fn(double x);

// 1/Γ(x), equal to zero at the poles.
double rgamma(double x);

// Gauss hypergeometric 2F1(a, b; c; z) for real z < 1.
double hyp2f1(const HypergeometricArgs& args);
double hyp2f1(double a, double b, double c, double z);

// 2F1 with fixed parameters and precomputed connection coefficients.
// Evaluation is much cheaper than the free function when the same (a, b, c)
// is used many times, as in kernel tabulation.
class Hyp2F1 {
public:
    Hyp2F1(double a, double b, double c);

    double operator()(double z) const;

    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }

private:
    struct Connection {
        double a, b, c;
        double m;        // c - a - b
        double coef1;    // Γ(c)Γ(m) / (Γ(c-a)Γ(c-b))
        double coef2;    // Γ(c)Γ(-m) / (Γ(a)Γ(b))
        bool near_integer;
    };

    static Connection make_connection(double a, double b, double c);
    static double eval_unit(const Connection& conn, double x);

    double a_, b_, c_;
    bool polynomial_;
    Connection direct_;  // parameters (a, b, c) for z in (1/2, 1)
    Connection pfaff_;   // parameters (a, c - b, c) after the Pfaff map
};

// fBm variance constant Γ(2-2H)cos(πH) / (πH(1-2H)); equals 1 at H = 1/2.
double v_h(double H);

}  // namespace vlab::specfun
