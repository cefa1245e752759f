#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace vlab {

class UniformGrid {
public:
    UniformGrid(std::size_t n, double horizon);

    std::size_t n() const { return n_; }
    double horizon() const { return horizon_; }
    double step() const { return horizon_ / static_cast<double>(n_); }
    std::size_t size() const { return n_ + 1; }

    double node(std::size_t i) const;
    double midpoint(std::size_t i) const { return (static_cast<double>(i) + 0.5) * step(); }
    std::vector<double> nodes() const;

    // Index of the node equal to t (within a relative tolerance); throws DomainError otherwise.
    std::size_t index_of(double t) const;
    bool has_node(double t) const;

    bool operator==(const UniformGrid& other) const = default;

private:
    std::size_t n_;
    double horizon_;
};

class SampledFunction {
public:
    SampledFunction(UniformGrid grid, std::vector<double> values);

    static SampledFunction from(const UniformGrid& grid, const std::function<double(double)>& f);
    static SampledFunction zeros(const UniformGrid& grid);

    const UniformGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    // Piecewise-linear interpolation; t is clamped to [0, horizon].
    double at(double t) const;
    double max_abs() const;

private:
    UniformGrid grid_;
    std::vector<double> values_;
};

void require_same_grid(const SampledFunction& a, const SampledFunction& b);

}  // namespace vlab
