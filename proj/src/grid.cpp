#include "vlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vlab/errors.hpp"

namespace vlab {

UniformGrid::UniformGrid(std::size_t n, double horizon) : n_(n), horizon_(horizon) {
    if (n < 2) {
        throw DomainError("UniformGrid: need n >= 2 intervals, got " + std::to_string(n));
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw DomainError("UniformGrid: horizon must be positive and finite");
    }
}

double UniformGrid::node(std::size_t i) const {
    if (i == n_) {
        return horizon_;
    }
    return static_cast<double>(i) * horizon_ / static_cast<double>(n_);
}

std::vector<double> UniformGrid::nodes() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = node(i);
    }
    return out;
}

bool UniformGrid::has_node(double t) const {
    const double x = t / step();
    const double r = std::round(x);
    return r >= 0.0 && r <= static_cast<double>(n_) && std::abs(x - r) <= 1e-9 * std::max(1.0, r);
}

std::size_t UniformGrid::index_of(double t) const {
    if (!has_node(t)) {
        throw DomainError("time " + std::to_string(t) + " is not a grid node");
    }
    return static_cast<std::size_t>(std::llround(t / step()));
}

SampledFunction::SampledFunction(UniformGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw DomainError("SampledFunction: expected " + std::to_string(grid_.size()) + " values, got " +
                          std::to_string(values_.size()));
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw DomainError("SampledFunction: non-finite value");
        }
    }
}

SampledFunction SampledFunction::from(const UniformGrid& grid, const std::function<double(double)>& f) {
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = f(grid.node(i));
    }
    return SampledFunction(grid, std::move(values));
}

SampledFunction SampledFunction::zeros(const UniformGrid& grid) {
    return SampledFunction(grid, std::vector<double>(grid.size(), 0.0));
}

double SampledFunction::at(double t) const {
    const double h = grid_.step();
    const double x = std::clamp(t, 0.0, grid_.horizon()) / h;
    auto i = static_cast<std::size_t>(std::floor(x));
    if (i >= grid_.n()) {
        return values_.back();
    }
    const double frac = x - static_cast<double>(i);
    return values_[i] + frac * (values_[i + 1] - values_[i]);
}

double SampledFunction::max_abs() const {
    double m = 0.0;
    for (double v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

void require_same_grid(const SampledFunction& a, const SampledFunction& b) {
    if (!(a.grid() == b.grid())) {
        throw DomainError("sampled functions live on different grids");
    }
}

}  // namespace vlab
