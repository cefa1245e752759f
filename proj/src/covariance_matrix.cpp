#include <algorithm>
#include <cmath>
#include <vector>

#include "vlab/errors.hpp"
#include "vlab/kernels.hpp"

namespace vlab::kernels {
namespace {

constexpr std::size_t kCellPoints = 4;

// Lagrange basis of the cell nodes evaluated at x.
void lagrange(std::span<const double> nodes, double x, std::span<double> out) {
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        double l = 1.0;
        for (std::size_t p = 0; p < nodes.size(); ++p) {
            if (p != q) {
                l *= (x - nodes[p]) / (nodes[q] - nodes[p]);
            }
        }
        out[q] = l;
    }
}

}  // namespace

Eigen::MatrixXd covariance_matrix_grid(const KernelModel& model, const UniformGrid& grid, std::size_t min_cells) {
    if (grid.horizon() > model.horizon() * (1.0 + 1e-12)) {
        throw DomainError("covariance_matrix_grid: grid extends beyond the model horizon");
    }
    const std::size_t n = grid.n();
    const std::size_t refine =
        std::max<std::size_t>(2, (min_cells + n - 1) / n);
    const std::size_t ncell = refine * n;
    const double hq = grid.horizon() / static_cast<double>(ncell);

    // Shared node set: cell 0 graded towards the origin for the stationary families.
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<std::size_t> cell_start(ncell + 1);
    const bool origin = model.family() != Family::levy_fbm;
    for (std::size_t c = 0; c < ncell; ++c) {
        cell_start[c] = nodes.size();
        const double a = static_cast<double>(c) * hq;
        quad::Rule rule;
        if (c == 0 && origin) {
            const double beta = -std::abs(1.0 - 2.0 * model.min_hurst());
            const int levels = std::clamp(static_cast<int>(std::floor(std::log2(hq / model.clamp_point()))), 1, 24);
            rule = quad::graded(a, a + hq, quad::End::left, beta, levels);
        } else {
            rule = quad::gauss_legendre(a, a + hq, kCellPoints);
        }
        nodes.insert(nodes.end(), rule.nodes.begin(), rule.nodes.end());
        weights.insert(weights.end(), rule.weights.begin(), rule.weights.end());
    }
    cell_start[ncell] = nodes.size();
    const auto nq = static_cast<Eigen::Index>(nodes.size());
    const auto ni = static_cast<Eigen::Index>(n);

    Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(ni, nq);
    Eigen::MatrixXd amat = Eigen::MatrixXd::Zero(ni, nq);
    Eigen::VectorXd diag(ni);
    std::vector<double> basis(kCellPoints);
    for (std::size_t i = 1; i <= n; ++i) {
        const auto row = static_cast<Eigen::Index>(i - 1);
        const double t = grid.node(i);
        const std::size_t last = i * refine - 1;
        const std::size_t end = cell_start[last + 1];
        for (std::size_t q = 0; q < end; ++q) {
            kmat(row, static_cast<Eigen::Index>(q)) = model.eval(t, nodes[q], true);
        }
        double d = 0.0;
        for (std::size_t q = 0; q < cell_start[last]; ++q) {
            const double k = kmat(row, static_cast<Eigen::Index>(q));
            amat(row, static_cast<Eigen::Index>(q)) = weights[q] * k;
            d += weights[q] * k * k;
        }
        // Last cell: product integration of the singular K(t, ·) against the cell's interpolant.
        const double a = static_cast<double>(last) * hq;
        const double H = model.hurst_at(t);
        const std::span<const double> cell_nodes(nodes.data() + cell_start[last], kCellPoints);
        const quad::Rule sing = quad::graded(a, t, quad::End::right, H - 0.5);
        const quad::Rule sing2 = quad::graded(a, t, quad::End::right, 2.0 * H - 1.0);
        for (std::size_t p = 0; p < sing.size(); ++p) {
            const double k = model.eval(t, sing.nodes[p], true);
            lagrange(cell_nodes, sing.nodes[p], basis);
            for (std::size_t q = 0; q < kCellPoints; ++q) {
                amat(row, static_cast<Eigen::Index>(cell_start[last] + q)) += sing.weights[p] * k * basis[q];
            }
        }
        for (std::size_t p = 0; p < sing2.size(); ++p) {
            const double k = model.eval(t, sing2.nodes[p], true);
            d += sing2.weights[p] * k * k;
        }
        diag(row) = d;
    }

    // Row i weights against the kernel of every later node: R_ij = Σ_q A_iq K(t_j, r_q).
    Eigen::MatrixXd r = amat * kmat.transpose();
    for (Eigen::Index i = 0; i < ni; ++i) {
        r(i, i) = diag(i);
        for (Eigen::Index j = i + 1; j < ni; ++j) {
            r(j, i) = r(i, j);
        }
    }
    return r;
}

}  // namespace vlab::kernels
