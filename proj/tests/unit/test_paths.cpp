#include <doctest.h>

#include <cmath>
#include <sstream>

#include "vlab/errors.hpp"
#include "vlab/kernels.hpp"
#include "vlab/paths.hpp"
#include "vlab/specfun.hpp"

using namespace vlab;
using kernels::KernelModel;

TEST_CASE("Brownian paths are reproducible and start at zero") {
    const UniformGrid g(256, 1.0);
    const auto a = paths::sample_brownian(g, RngSeed{1, 2});
    const auto b = paths::sample_brownian(g, RngSeed{1, 2});
    CHECK(a[0] == 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(a[i] == b[i]);
    }
    const auto c = paths::sample_brownian(g, RngSeed{1, 3});
    CHECK(c[g.n()] != a[g.n()]);
}

TEST_CASE("Brownian endpoint and increment statistics") {
    const UniformGrid g(16, 1.0);
    const std::size_t m = 10000;
    double s1 = 0.0;
    double s2 = 0.0;
    double v1 = 0.0;
    double v2 = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
        const auto b = paths::sample_brownian(g, RngSeed{3, p});
        s1 += b[16];
        s2 += b[16] * b[16];
        v1 += (b[9] - b[8]) * (b[9] - b[8]);
        v2 += (b[10] - b[8]) * (b[10] - b[8]);
    }
    const double M = static_cast<double>(m);
    CHECK(std::abs(s1 / M) <= 4.0 / std::sqrt(M));
    CHECK(std::abs(s2 / M - 1.0) <= 0.05);
    CHECK(std::abs(v2 / v1 - 2.0) <= 0.2);
}

TEST_CASE("synthesis reduces to B at H = 1/2 and is linear") {
    const UniformGrid g(128, 1.0);
    const auto b = paths::sample_brownian(g, RngSeed{9, 0});
    const auto x = paths::synthesize_volterra(KernelModel::stationary_fbm(0.5), b);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(x[i] - b[i]) <= 1e-12);
    }
    const auto zero = paths::synthesize_volterra(KernelModel::stationary_fbm(0.7), SampledFunction::zeros(g));
    CHECK(zero.max_abs() == 0.0);
    const auto bundle = paths::simulate_path(KernelModel::levy_fbm(0.3), g, RngSeed{9, 0});
    CHECK(bundle.volterra[0] == 0.0);
    CHECK(bundle.brownian[g.n()] == b[g.n()]);
}

TEST_CASE("synthesis operator matches the band primitive definition") {
    const UniformGrid g(16, 1.0);
    const auto m = KernelModel::stationary_fbm(0.3);
    const paths::SynthesisOperator op(m, g);
    for (std::size_t k = 1; k <= g.n(); ++k) {
        for (std::size_t i = 0; i < g.n(); ++i) {
            const double want = kernels::kernel_band_primitive(m, g.node(i), g.node(i + 1), g.node(k));
            CHECK(std::abs(op.bands()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) - want) <=
                  1e-9 * std::max(1.0, std::abs(want)));
        }
    }
    CHECK_THROWS_AS(op.apply(std::vector<double>(3, 0.0)), DomainError);
    CHECK_THROWS_AS(paths::SynthesisOperator(m, UniformGrid(8, 2.0)), DomainError);
}

TEST_CASE("Levy synthesis variance at T = 1") {
    const double H = 0.75;
    const UniformGrid g(256, 1.0);
    const paths::SynthesisOperator op(KernelModel::levy_fbm(H), g);
    const std::size_t m = 10000;
    Eigen::MatrixXd inc(static_cast<Eigen::Index>(g.n()), static_cast<Eigen::Index>(m));
    for (std::size_t p = 0; p < m; ++p) {
        const auto d = paths::brownian_increments(g, RngSeed{21, p});
        inc.col(static_cast<Eigen::Index>(p)) = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
    }
    const Eigen::MatrixXd x = op.apply(inc);
    const double var = x.row(static_cast<Eigen::Index>(g.n())).squaredNorm() / static_cast<double>(m);
    const double gh = specfun::gamma_fn(H + 0.5);
    CHECK(std::abs(var / (1.0 / (2.0 * H * gh * gh)) - 1.0) <= 0.05);
}

TEST_CASE("synthesized covariance approaches the model covariance under refinement") {
    const auto m = KernelModel::stationary_fbm(0.7);
    std::vector<double> det_gap;
    std::vector<double> mc_gap;
    double max_se = 0.0;
    for (std::size_t n : {64u, 256u, 1024u}) {
        const UniformGrid g(n, 1.0);
        const paths::SynthesisOperator op(m, g);
        const std::size_t stride = n / 8;
        // exact covariance of the synthesized vector: bands bandsᵀ / h
        double gap = 0.0;
        for (std::size_t a = 1; a <= 8; ++a) {
            for (std::size_t b = 1; b <= 8; ++b) {
                const auto ra = static_cast<Eigen::Index>(a * stride);
                const auto rb = static_cast<Eigen::Index>(b * stride);
                const double c = op.bands().row(ra).dot(op.bands().row(rb)) / g.step();
                gap = std::max(gap, std::abs(c - kernels::covariance_fbm_closed(0.7, g.node(a * stride),
                                                                                g.node(b * stride))));
            }
        }
        det_gap.push_back(gap);

        const std::size_t M = 10000;
        Eigen::MatrixXd inc(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(M));
        for (std::size_t p = 0; p < M; ++p) {
            const auto d = paths::brownian_increments(g, RngSeed{31, p});
            inc.col(static_cast<Eigen::Index>(p)) = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(n));
        }
        const Eigen::MatrixXd x = op.apply(inc);
        double emp_gap = 0.0;
        for (std::size_t a = 1; a <= 8; ++a) {
            for (std::size_t b = 1; b <= 8; ++b) {
                const Eigen::ArrayXd prod = x.row(static_cast<Eigen::Index>(a * stride)).array() *
                                            x.row(static_cast<Eigen::Index>(b * stride)).array();
                const double mean = prod.mean();
                const double se = std::sqrt((prod - mean).square().sum() / (M - 1.0) / M);
                max_se = std::max(max_se, se);
                emp_gap = std::max(emp_gap, std::abs(mean - kernels::covariance_fbm_closed(0.7, g.node(a * stride),
                                                                                           g.node(b * stride))));
            }
        }
        mc_gap.push_back(emp_gap);
    }
    CHECK(det_gap[1] < det_gap[0]);
    CHECK(det_gap[2] < det_gap[1]);
    CHECK(mc_gap[1] <= mc_gap[0] + 4.0 * max_se);
    CHECK(mc_gap[2] <= mc_gap[1] + 4.0 * max_se);
}

TEST_CASE("exact sampler reproduces the covariance") {
    const UniformGrid g(16, 1.0);
    for (double H : {0.5, 0.7}) {
        const paths::ExactSampler sampler(KernelModel::stationary_fbm(H), g);
        CHECK(sampler.jitter() <= 1e-6 * sampler.covariance().trace() / 16.0);
        const std::size_t M = 20000;
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(8, 8);
        Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(8, 8);
        for (std::size_t p = 0; p < M; ++p) {
            const auto x = sampler.draw(RngSeed{41, p});
            CHECK(x[0] == 0.0);
            Eigen::VectorXd v(8);
            for (int i = 0; i < 8; ++i) {
                v(i) = x[static_cast<std::size_t>(2 * (i + 1))];
            }
            const Eigen::MatrixXd prod = v * v.transpose();
            sum += prod;
            sum_sq += prod.cwiseProduct(prod);
        }
        const Eigen::MatrixXd mean = sum / static_cast<double>(M);
        const Eigen::MatrixXd var = sum_sq / static_cast<double>(M) - mean.cwiseProduct(mean);
        for (int i = 0; i < 8; ++i) {
            for (int j = 0; j < 8; ++j) {
                const double t = g.node(static_cast<std::size_t>(2 * (i + 1)));
                const double s = g.node(static_cast<std::size_t>(2 * (j + 1)));
                const double se = std::sqrt(var(i, j) / static_cast<double>(M));
                CHECK(std::abs(mean(i, j) - kernels::covariance_fbm_closed(H, t, s)) <= 4.0 * se);
            }
        }
    }
}

TEST_CASE("exact sampler streams are independent") {
    const UniformGrid g(8, 1.0);
    const paths::ExactSampler sampler(KernelModel::stationary_fbm(0.7), g);
    const std::size_t M = 10000;
    double sab = 0.0;
    double sa = 0.0;
    double sb = 0.0;
    for (std::size_t p = 0; p < M; ++p) {
        const double a = sampler.draw(RngSeed{51, 2 * p})[8];
        const double b = sampler.draw(RngSeed{51, 2 * p + 1})[8];
        sab += a * b;
        sa += a * a;
        sb += b * b;
    }
    CHECK(std::abs(sab / std::sqrt(sa * sb)) <= 4.0 / std::sqrt(static_cast<double>(M)));
    const auto once = paths::sample_volterra_exact(KernelModel::stationary_fbm(0.7), g, RngSeed{51, 0});
    CHECK(once[8] == sampler.draw(RngSeed{51, 0})[8]);
}

TEST_CASE("path CSV export") {
    const UniformGrid g(4, 1.0);
    const auto bundle = paths::simulate_path(KernelModel::stationary_fbm(0.7), g, RngSeed{1, 0});
    const std::string csv = paths::to_csv(bundle);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,B,X");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    CHECK(rows == 5);
    CHECK(csv.back() == '\n');
}
