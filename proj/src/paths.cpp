#include "vlab/paths.hpp"

#include <cmath>
#include <sstream>

#include "vlab/errors.hpp"
#include "vlab/parallel.hpp"
#include "vlab/quadrature.hpp"

namespace vlab::paths {
namespace {

void fill_band_row(const kernels::KernelModel& model, const UniformGrid& grid, std::size_t k,
                   Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
    const double t = grid.node(k);
    const double h = grid.step();
    if (model.family() == kernels::Family::levy_fbm) {
        for (std::size_t i = 0; i < k; ++i) {
            row(static_cast<Eigen::Index>(i)) = kernels::kernel_band_primitive(model, grid.node(i), grid.node(i + 1), t);
        }
        return;
    }
    const quad::Rule& gl2 = quad::gauss_legendre(2);
    const quad::Rule& gl4 = quad::gauss_legendre(4);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t to_end = k - i - 1;
        const std::size_t near = std::min(i, to_end);
        const double a = grid.node(i);
        double band = 0.0;
        if (near >= 4) {
            // Away from both singular points a fixed Gauss-Legendre rule suffices.
            const quad::Rule& ref = near >= 32 ? gl2 : gl4;
            for (std::size_t q = 0; q < ref.size(); ++q) {
                const double s = a + 0.5 * h * (ref.nodes[q] + 1.0);
                band += 0.5 * h * ref.weights[q] * model.eval(t, s, true);
            }
        } else {
            band = kernels::kernel_band_primitive(model, a, grid.node(i + 1), t);
        }
        row(static_cast<Eigen::Index>(i)) = band;
    }
}

}  // namespace

std::vector<double> brownian_increments(const UniformGrid& grid, RngSeed seed) {
    GaussianStream stream(seed);
    const double sd = std::sqrt(grid.step());
    std::vector<double> inc(grid.n());
    for (double& v : inc) {
        v = sd * stream.next();
    }
    return inc;
}

SampledFunction sample_brownian(const UniformGrid& grid, RngSeed seed) {
    const auto inc = brownian_increments(grid, seed);
    std::vector<double> b(grid.size(), 0.0);
    for (std::size_t i = 0; i < inc.size(); ++i) {
        b[i + 1] = b[i] + inc[i];
    }
    return SampledFunction(grid, std::move(b));
}

SynthesisOperator::SynthesisOperator(const kernels::KernelModel& model, const UniformGrid& grid, unsigned workers)
    : grid_(grid) {
    if (grid.horizon() > model.horizon() * (1.0 + 1e-12)) {
        throw DomainError("SynthesisOperator: grid extends beyond the model horizon");
    }
    const auto n = static_cast<Eigen::Index>(grid.n());
    bands_ = Eigen::MatrixXd::Zero(n + 1, n);
    parallel_for(grid.n(), workers, [&](std::size_t r) {
        const std::size_t k = r + 1;
        fill_band_row(model, grid, k, bands_.row(static_cast<Eigen::Index>(k)));
    });
}

std::vector<double> SynthesisOperator::apply(std::span<const double> increments) const {
    if (increments.size() != grid_.n()) {
        throw DomainError("SynthesisOperator: expected one increment per interval");
    }
    const Eigen::Map<const Eigen::VectorXd> db(increments.data(), static_cast<Eigen::Index>(increments.size()));
    const Eigen::VectorXd x = bands_ * db / grid_.step();
    return {x.data(), x.data() + x.size()};
}

Eigen::MatrixXd SynthesisOperator::apply(const Eigen::MatrixXd& increments) const {
    if (increments.rows() != static_cast<Eigen::Index>(grid_.n())) {
        throw DomainError("SynthesisOperator: expected one increment row per interval");
    }
    return bands_ * increments / grid_.step();
}

SampledFunction synthesize_volterra(const kernels::KernelModel& model, const SampledFunction& brownian) {
    const UniformGrid& grid = brownian.grid();
    std::vector<double> inc(grid.n());
    for (std::size_t i = 0; i < inc.size(); ++i) {
        inc[i] = brownian[i + 1] - brownian[i];
    }
    const SynthesisOperator op(model, grid);
    return SampledFunction(grid, op.apply(inc));
}

PathBundle simulate_path(const kernels::KernelModel& model, const UniformGrid& grid, RngSeed seed) {
    SampledFunction b = sample_brownian(grid, seed);
    SampledFunction x = synthesize_volterra(model, b);
    return {grid, std::move(b), std::move(x), model, seed};
}

ExactSampler::ExactSampler(const kernels::KernelModel& model, const UniformGrid& grid, std::size_t min_cells)
    : grid_(grid), cov_(kernels::covariance_matrix_grid(model, grid, min_cells)) {
    const auto n = cov_.rows();
    const double scale = cov_.trace() / static_cast<double>(n);
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    double jitter = 1e-12 * scale;
    while (llt.info() != Eigen::Success) {
        if (jitter > 1e-6 * scale * (1.0 + 1e-9)) {
            throw SamplingError("ExactSampler: covariance not positive definite after maximal jitter");
        }
        llt.compute(cov_ + jitter * Eigen::MatrixXd::Identity(n, n));
        jitter_ = jitter;
        jitter *= 10.0;
    }
    chol_ = llt.matrixL();
}

SampledFunction ExactSampler::draw(RngSeed seed) const {
    GaussianStream stream(seed);
    const auto n = chol_.rows();
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i) = stream.next();
    }
    const Eigen::VectorXd x = chol_.triangularView<Eigen::Lower>() * z;
    std::vector<double> values(grid_.size(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        values[static_cast<std::size_t>(i) + 1] = x(i);
    }
    return SampledFunction(grid_, std::move(values));
}

SampledFunction sample_volterra_exact(const kernels::KernelModel& model, const UniformGrid& grid, RngSeed seed) {
    return ExactSampler(model, grid).draw(seed);
}

std::string to_csv(const PathBundle& bundle) {
    std::ostringstream os;
    os.precision(17);
    os << "t,B,X\n";
    for (std::size_t i = 0; i < bundle.grid.size(); ++i) {
        os << bundle.grid.node(i) << ',' << bundle.brownian[i] << ',' << bundle.volterra[i] << '\n';
    }
    return os.str();
}

}  // namespace vlab::paths
