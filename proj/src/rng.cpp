#include "vlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace vlab {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

// 53-bit uniform in (0, 1).
double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    return (static_cast<double>(bits & ((1ULL << 53) - 1)) + 0.5) / 9007199254740992.0;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

void GaussianStream::refill() {
    const std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(seed_.stream), static_cast<std::uint32_t>(seed_.stream >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_.master),
                                           static_cast<std::uint32_t>(seed_.master >> 32)};
    const auto out = philox4x32(ctr, key);
    ++block_;
    const double u1 = to_unit(out[0], out[1]);
    const double u2 = to_unit(out[2], out[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    buffer_ = {r * std::cos(theta), r * std::sin(theta)};
    available_ = 2;
}

double GaussianStream::next() {
    if (available_ == 0) {
        refill();
    }
    return buffer_[2 - available_--];
}

void GaussianStream::skip_to(std::uint64_t position) {
    block_ = position / 2;
    available_ = 0;
    if (position % 2 == 1) {
        refill();
        available_ = 1;
    }
}

}  // namespace vlab
