#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vlab/cli.hpp"
#include "vlab/errors.hpp"
#include "vlab/kernels.hpp"

namespace vlab::cli {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string v = trim(text);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
        throw ConfigError("config key '" + key + "': expected a real number, got '" + text + "'");
    }
    return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    const std::string v = trim(text);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + text + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string v = trim(text);
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    throw ConfigError("config key '" + key + "': expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::string normalize(std::string key) {
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "family", "hurst",    "hurst_csv", "alpha",  "n",      "horizon", "T",          "seed",  "paths", "levels",
        "nodes",  "integrand", "function", "u_poly", "v_poly", "workers", "output_dir", "quick"};
    return keys;
}

void apply_value(RunConfig& cfg, const std::string& raw_key, const std::string& value) {
    const std::string key = normalize(raw_key);
    if (key == "family") {
        cfg.family = trim(value);
        try {
            (void)kernels::parse_family(cfg.family);
        } catch (const std::exception&) {
            throw ConfigError("config key 'family': unknown kernel family '" + cfg.family +
                              "' (expected levy-fbm, stationary-fbm or multifractional)");
        }
    } else if (key == "hurst") {
        cfg.hurst = parse_double(key, value);
        if (!(cfg.hurst > 0.0 && cfg.hurst < 1.0)) {
            throw ConfigError("config key 'hurst': must lie in the open interval (0, 1), got " + trim(value));
        }
    } else if (key == "hurst_csv") {
        cfg.hurst_csv = trim(value);
    } else if (key == "alpha") {
        cfg.alpha = parse_double(key, value);
    } else if (key == "n") {
        cfg.n = parse_unsigned(key, value);
    } else if (key == "horizon") {
        cfg.horizon = parse_double(key, value);
        if (!(cfg.horizon > 0.0)) {
            throw ConfigError("config key 'horizon': must be positive");
        }
    } else if (key == "T") {
        cfg.T = parse_double(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_unsigned(key, value);
    } else if (key == "paths") {
        cfg.paths = parse_unsigned(key, value);
    } else if (key == "levels") {
        cfg.levels.clear();
        for (const auto& item : split_list(value)) {
            cfg.levels.push_back(parse_unsigned(key, item));
        }
    } else if (key == "nodes") {
        cfg.nodes.clear();
        for (const auto& item : split_list(value)) {
            cfg.nodes.push_back(parse_double(key, item));
        }
    } else if (key == "integrand") {
        cfg.integrand = trim(value);
    } else if (key == "function") {
        cfg.function = trim(value);
    } else if (key == "u_poly" || key == "v_poly") {
        std::vector<double> coeffs;
        for (const auto& item : split_list(value)) {
            coeffs.push_back(parse_double(key, item));
        }
        if (coeffs.empty()) {
            throw ConfigError("config key '" + key + "': need at least one coefficient");
        }
        (key == "u_poly" ? cfg.u_poly : cfg.v_poly) = std::move(coeffs);
    } else if (key == "workers") {
        const auto w = parse_unsigned(key, value);
        if (w == 0) {
            throw ConfigError("config key 'workers': must be at least 1");
        }
        cfg.workers = static_cast<unsigned>(w);
    } else if (key == "output_dir") {
        cfg.output_dir = trim(value);
    } else if (key == "quick") {
        cfg.quick = parse_bool(key, value);
    } else {
        throw ConfigError("unknown config key '" + raw_key + "'");
    }
}

void validate(const RunConfig& cfg) {
    const auto family = kernels::parse_family(cfg.family);
    if (family == kernels::Family::multifractional) {
        if (cfg.hurst_csv.empty()) {
            throw ConfigError("config key 'hurst_csv': required for the multifractional family");
        }
    }
    if (!cfg.hurst_csv.empty() && !std::filesystem::exists(cfg.hurst_csv)) {
        throw ConfigError("config key 'hurst_csv': file '" + cfg.hurst_csv + "' does not exist");
    }
    if (cfg.n < 2) {
        throw ConfigError("config key 'n': need at least 2 cells");
    }
    if (cfg.T && !(*cfg.T > 0.0 && *cfg.T <= cfg.horizon)) {
        throw ConfigError("config key 'T': must lie in (0, horizon]");
    }
    for (std::size_t k = 0; k < cfg.levels.size(); ++k) {
        const auto v = cfg.levels[k];
        if (v < 2 || (v & (v - 1)) != 0) {
            throw ConfigError("config key 'levels': every level must be a power of two >= 2");
        }
        if (k > 0 && v != 2 * cfg.levels[k - 1]) {
            throw ConfigError("config key 'levels': levels must double from one to the next");
        }
    }
    for (double t : cfg.nodes) {
        if (!(t > 0.0 && t <= cfg.horizon)) {
            throw ConfigError("config key 'nodes': nodes must lie in (0, horizon]");
        }
    }
}

void load_config_into(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::vector<std::string> unknown;
    const auto& keys = config_keys();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (std::find(keys.begin(), keys.end(), normalize(key)) == keys.end()) {
            unknown.push_back(key);
            continue;
        }
        apply_value(cfg, key, value);
    }
    if (!unknown.empty()) {
        std::string msg = "unknown config keys in '" + path + "':";
        for (const auto& k : unknown) {
            msg += " " + k;
        }
        throw ConfigError(msg);
    }
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    cfg.seed = default_seed();
    load_config_into(cfg, path);
    return cfg;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("VLAB_SEED"); env != nullptr && *env != '\0') {
        return parse_unsigned("VLAB_SEED", env);
    }
    return 42;
}

}  // namespace vlab::cli
