#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vlab::cli {

// Effective configuration of one run. Defaults are listed by `vlab --help`.
struct RunConfig {
    std::string family = "stationary-fbm";
    double hurst = 0.7;
    std::string hurst_csv;  // (t, H(t)) pairs for the multifractional family
    std::optional<double> alpha;
    std::size_t n = 1024;
    double horizon = 1.0;
    std::optional<double> T;  // integration end; defaults to the horizon
    std::uint64_t seed = 42;
    std::size_t paths = 1;
    std::vector<std::size_t> levels{128, 256, 512, 1024};
    std::vector<double> nodes;  // covariance nodes; default 8 equispaced in (0, horizon]
    std::string integrand = "X";
    std::string function = "square";
    std::vector<double> u_poly{1.0};  // girsanov-check coefficients, lowest degree first
    std::vector<double> v_poly{1.0};
    unsigned workers = 1;
    std::string output_dir = ".";
    bool quick = false;

    double end_time() const { return T.value_or(horizon); }
};

// Keys accepted in config files; flags use the same names with '-' for '_'.
const std::vector<std::string>& config_keys();

// Assigns one textual value; throws ConfigError naming the key on type or range errors.
void apply_value(RunConfig& cfg, const std::string& key, const std::string& value);
// Cross-field checks (hurst range, files exist, dyadic levels).
void validate(const RunConfig& cfg);

// Plain `key = value` lines, '#' starts a comment. Unknown keys are reported together.
RunConfig load_config(const std::string& path);
void load_config_into(RunConfig& cfg, const std::string& path);

// Seed fallback from VLAB_SEED when no seed is given.
std::uint64_t default_seed();

// Entry point; returns 0 on success, 1 on a failed verification, 2 on usage or config errors.
int run(const std::vector<std::string>& argv);

}  // namespace vlab::cli
