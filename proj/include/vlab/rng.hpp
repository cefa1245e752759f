#pragma once

#include <array>
#include <cstdint>

namespace vlab {

struct RngSeed {
    std::uint64_t master = 0;
    std::uint64_t stream = 0;

    RngSeed with_stream(std::uint64_t s) const { return {master, s}; }
};

// Philox4x32-10 block cipher keyed by the master seed.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

// Standard normal variates from the counter (stream, block index); every
// variate is a pure function of (master, stream, position).
class GaussianStream {
public:
    explicit GaussianStream(RngSeed seed) : seed_(seed) {}

    double next();
    void skip_to(std::uint64_t position);

private:
    void refill();

    RngSeed seed_;
    std::uint64_t block_ = 0;
    std::array<double, 2> buffer_{};
    int available_ = 0;
};

}  // namespace vlab
