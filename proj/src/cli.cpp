#include "vlab/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <map>
#include <sstream>

#include "vlab/errors.hpp"
#include "vlab/fracops.hpp"
#include "vlab/integrals.hpp"
#include "vlab/kernels.hpp"
#include "vlab/paths.hpp"
#include "vlab/specfun.hpp"
#include "vlab/verify.hpp"

namespace vlab::cli {
namespace {

using json = nlohmann::ordered_json;

constexpr const char* kDefaults = R"(Defaults (config keys; flags use '-' for '_'):
  family = stationary-fbm     levy-fbm | stationary-fbm | multifractional
  hurst = 0.7                 constant Hurst index in (0, 1)
  hurst_csv =                 (t, H(t)) rows for the multifractional family
  alpha =                     multifractional regularity; default (inf H - 1/2) / 2
  n = 1024                    grid cells / partition size
  horizon = 1                 time horizon of the kernel
  T = horizon                 integration end
  seed = 42                   falls back to $VLAB_SEED when set
  paths =                     simulate 1, covariance 20000, integrate 1, ito-check 1000, holder 200
  levels = 128,256,512,1024   dyadic partition sizes for integrate
  nodes =                     covariance nodes; default 8 equispaced in (0, horizon]
  integrand = X               X | X^2 | sinX | cosX | 1 | t | t^2
  function = square           ito-check test function: square | cube | cos
  u_poly = 1, v_poly = 1      girsanov-check polynomial coefficients, lowest degree first
  workers = 1                 threads for path generation; 1 keeps output bit-reproducible
  output_dir = .              where JSON and CSV files are written
  quick = false               selftest without Monte Carlo checks
Exit codes: 0 success, 1 failed verification, 2 usage or configuration error.)";

double json_number(double v) { return v; }

json to_json(const RunConfig& cfg, const std::string& command, std::size_t paths) {
    json j;
    j["command"] = command;
    j["family"] = cfg.family;
    if (kernels::parse_family(cfg.family) == kernels::Family::multifractional) {
        j["hurst_csv"] = cfg.hurst_csv;
        j["alpha"] = cfg.alpha ? json(*cfg.alpha) : json(nullptr);
    } else {
        j["hurst"] = json_number(cfg.hurst);
    }
    j["n"] = cfg.n;
    j["horizon"] = cfg.horizon;
    j["T"] = cfg.end_time();
    j["seed"] = cfg.seed;
    j["paths"] = paths;
    j["levels"] = cfg.levels;
    j["nodes"] = cfg.nodes;
    j["integrand"] = cfg.integrand;
    j["function"] = cfg.function;
    j["u_poly"] = cfg.u_poly;
    j["v_poly"] = cfg.v_poly;
    j["workers"] = cfg.workers;
    j["quick"] = cfg.quick;
    return j;
}

SampledFunction read_hurst_csv(const std::string& path, double horizon) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open hurst_csv file '" + path + "'");
    }
    std::vector<std::pair<double, double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double t = 0.0;
        double h = 0.0;
        if (!(ss >> t >> h)) {
            if (rows.empty()) {
                continue;  // header
            }
            throw ConfigError("hurst_csv: malformed row '" + line + "'");
        }
        rows.emplace_back(t, h);
    }
    if (rows.size() < 2) {
        throw ConfigError("hurst_csv: need at least two (t, H) rows");
    }
    std::sort(rows.begin(), rows.end());
    const UniformGrid grid(256, horizon);
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.node(i);
        if (t <= rows.front().first) {
            values[i] = rows.front().second;
        } else if (t >= rows.back().first) {
            values[i] = rows.back().second;
        } else {
            const auto hi = std::lower_bound(rows.begin(), rows.end(), std::make_pair(t, -std::numeric_limits<double>::infinity()));
            const auto lo = hi - 1;
            const double w = (t - lo->first) / (hi->first - lo->first);
            values[i] = (1.0 - w) * lo->second + w * hi->second;
        }
    }
    return SampledFunction(grid, std::move(values));
}

kernels::KernelModel build_model(const RunConfig& cfg) {
    switch (kernels::parse_family(cfg.family)) {
        case kernels::Family::levy_fbm:
            return kernels::KernelModel::levy_fbm(cfg.hurst, cfg.horizon);
        case kernels::Family::stationary_fbm:
            return kernels::KernelModel::stationary_fbm(cfg.hurst, cfg.horizon);
        case kernels::Family::multifractional:
            return kernels::KernelModel::multifractional(read_hurst_csv(cfg.hurst_csv, cfg.horizon), cfg.alpha);
    }
    throw ConfigError("unknown family");
}

std::filesystem::path output_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output_dir);
    return std::filesystem::path(cfg.output_dir) / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string fmt_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void print_table(const std::vector<verify::VerificationReport>& reports) {
    std::size_t width = 5;
    for (const auto& r : reports) {
        width = std::max(width, r.check_name.size());
    }
    std::cout << std::string(width - 5, ' ') << "check  result        metric     threshold\n";
    for (const auto& r : reports) {
        char line[160];
        std::snprintf(line, sizeof line, "%*s  %-6s  %12s  %12s\n", static_cast<int>(width), r.check_name.c_str(),
                      r.passed ? "PASS" : "FAIL", fmt_number(r.metric).c_str(), fmt_number(r.threshold).c_str());
        std::cout << line;
    }
}

json report_json(const verify::VerificationReport& r) { return json::parse(r.to_json()); }

int finish_reports(const RunConfig& cfg, const std::string& command, std::size_t paths,
                   const std::vector<verify::VerificationReport>& reports) {
    json j;
    j["config"] = to_json(cfg, command, paths);
    j["reports"] = json::array();
    bool ok = true;
    for (const auto& r : reports) {
        j["reports"].push_back(report_json(r));
        ok = ok && r.passed;
    }
    j["passed"] = ok;
    j["metadata"] = json::object();
    const auto path = output_path(cfg, command + ".json");
    write_file(path, dump(j));
    print_table(reports);
    std::cout << "report: " << path.string() << "\n";
    return ok ? 0 : 1;
}

SampledFunction polynomial(const UniformGrid& grid, const std::vector<double>& coeffs) {
    return SampledFunction::from(grid, [&](double t) {
        double acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
            acc = acc * t + *it;
        }
        return acc;
    });
}

integrals::Integrand parse_integrand(const std::string& name) {
    using integrals::Integrand;
    if (name == "X") {
        return Integrand::composite([](double x) { return x; }, [](double) { return 1.0; }, name);
    }
    if (name == "X^2") {
        return Integrand::composite([](double x) { return x * x; }, [](double x) { return 2.0 * x; }, name);
    }
    if (name == "sinX") {
        return Integrand::composite([](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }, name);
    }
    if (name == "cosX") {
        return Integrand::composite([](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); },
                                    name);
    }
    if (name == "1") {
        return Integrand::deterministic([](double) { return 1.0; }, name);
    }
    if (name == "t") {
        return Integrand::deterministic([](double t) { return t; }, name);
    }
    if (name == "t^2") {
        return Integrand::deterministic([](double t) { return t * t; }, name);
    }
    throw ConfigError("config key 'integrand': unknown integrand '" + name + "'");
}

int cmd_simulate(const RunConfig& cfg, std::size_t paths) {
    const auto model = build_model(cfg);
    const UniformGrid grid(cfg.n, cfg.horizon);
    const paths::SynthesisOperator op(model, grid, cfg.workers);
    json manifest;
    manifest["config"] = to_json(cfg, "simulate", paths);
    manifest["files"] = json::array();
    for (std::size_t p = 0; p < paths; ++p) {
        const RngSeed seed{cfg.seed, p};
        SampledFunction b = paths::sample_brownian(grid, seed);
        std::vector<double> inc(grid.n());
        for (std::size_t i = 0; i < inc.size(); ++i) {
            inc[i] = b[i + 1] - b[i];
        }
        SampledFunction x(grid, op.apply(inc));
        const paths::PathBundle bundle{grid, std::move(b), std::move(x), model, seed};
        const std::string name = "path_" + std::to_string(p) + ".csv";
        write_file(output_path(cfg, name), paths::to_csv(bundle));
        manifest["files"].push_back({{"file", name}, {"seed", cfg.seed}, {"stream", p}});
    }
    manifest["clamped_evaluations"] = model.clamped_evaluations();
    manifest["metadata"] = json::object();
    const auto path = output_path(cfg, "manifest.json");
    write_file(path, dump(manifest));
    std::cout << "wrote " << paths << " path file(s) and " << path.string() << "\n";
    return 0;
}

int cmd_covariance(const RunConfig& cfg, std::size_t paths) {
    const auto model = build_model(cfg);
    std::vector<double> nodes = cfg.nodes;
    if (nodes.empty()) {
        for (int k = 1; k <= 8; ++k) {
            nodes.push_back(cfg.horizon * k / 8.0);
        }
    }
    const auto rep = verify::check_covariance(model, nodes, paths, RngSeed{cfg.seed, 0});
    auto detail = [&](const std::string& key) {
        const auto it = rep.details.find(key);
        return it == rep.details.end() ? json(nullptr) : json::parse(it->second);
    };
    const json quad = detail("quadrature");
    const json closed = detail("closed_form");
    const json mc = detail("mc_mean");
    const json mc_se = detail("mc_stderr");
    auto cell = [](const json& arr, std::size_t k) -> std::string {
        if (arr.is_null() || arr[k].is_null()) {
            return "";
        }
        std::ostringstream os;
        os.precision(17);
        os << arr[k].get<double>();
        return os.str();
    };
    std::ostringstream csv;
    csv.precision(17);
    csv << "t,s,quadrature,closed_form,mc,mc_stderr\n";
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const std::size_t k = i * nodes.size() + j;
            csv << nodes[i] << ',' << nodes[j] << ',' << cell(quad, k) << ',' << cell(closed, k) << ','
                << cell(mc, k) << ',' << cell(mc_se, k) << '\n';
        }
    }
    write_file(output_path(cfg, "covariance.csv"), csv.str());
    return finish_reports(cfg, "covariance", paths, {rep});
}

int cmd_integrate(const RunConfig& cfg, std::size_t paths) {
    const auto model = build_model(cfg);
    const auto u = parse_integrand(cfg.integrand);
    const RngSeed seed{cfg.seed, 0};
    const auto est = paths > 1 ? integrals::stratonovich_estimate_mc(u, model, seed, cfg.end_time(), cfg.levels,
                                                                     paths, cfg.workers)
                               : integrals::stratonovich_estimate(u, model, seed, cfg.end_time(), cfg.levels);
    json j;
    j["config"] = to_json(cfg, "integrate", paths);
    j["estimate"] = json::parse(est.to_json());
    j["metadata"] = json::object();
    write_file(output_path(cfg, "integrate.json"), dump(j));
    std::ostringstream csv;
    csv.precision(17);
    csv << "n,quantity,value\n";
    for (std::size_t k = 0; k < est.levels.size(); ++k) {
        csv << est.levels[k].first << ",value," << est.levels[k].second << '\n';
        csv << est.levels[k].first << ",r_pi," << est.r_pi[k] << '\n';
    }
    write_file(output_path(cfg, "convergence.csv"), csv.str());
    std::cout << "       n  value\n";
    for (const auto& [n, v] : est.levels) {
        char line[64];
        std::snprintf(line, sizeof line, "%8zu  %.10g\n", n, v);
        std::cout << line;
    }
    std::cout << "extrapolated " << fmt_number(est.extrapolated);
    if (est.order) {
        std::cout << "  order " << fmt_number(*est.order);
    }
    std::cout << "\n";
    for (const auto& w : est.warnings) {
        std::cout << "warning: " << w << "\n";
    }
    return 0;
}

int cmd_ito(const RunConfig& cfg, std::size_t paths) {
    const auto model = build_model(cfg);
    const auto f = verify::parse_ito_function(cfg.function);
    const auto rep = verify::check_ito_residual(model, f, cfg.end_time(), cfg.n, paths, RngSeed{cfg.seed, 0},
                                                cfg.workers);
    return finish_reports(cfg, "ito-check", paths, {rep});
}

int cmd_girsanov(const RunConfig& cfg) {
    const auto model = build_model(cfg);
    const UniformGrid grid(cfg.n, cfg.end_time());
    const auto rep = verify::check_girsanov_shift(model, polynomial(grid, cfg.u_poly), polynomial(grid, cfg.v_poly),
                                                  RngSeed{cfg.seed, 0});
    return finish_reports(cfg, "girsanov-check", 1, {rep});
}

int cmd_holder(const RunConfig& cfg, std::size_t paths) {
    const auto model = build_model(cfg);
    const UniformGrid grid(cfg.n, cfg.horizon);
    const paths::SynthesisOperator op(model, grid, cfg.workers);
    std::vector<SampledFunction> sample;
    for (std::size_t p = 0; p < paths; ++p) {
        sample.emplace_back(grid, op.apply(paths::brownian_increments(grid, RngSeed{cfg.seed, p})));
    }
    std::vector<std::size_t> lags;
    for (std::size_t lag = 1; lag * 16 <= cfg.n; lag *= 2) {
        lags.push_back(lag);
    }
    const double estimate = fracops::estimate_holder_exponent(sample, lags);
    verify::VerificationReport rep;
    rep.check_name = "holder";
    rep.set("family", cfg.family);
    rep.set("n", cfg.n);
    rep.set("paths", paths);
    rep.set("seed", static_cast<std::size_t>(cfg.seed));
    rep.set("estimate", estimate);
    std::vector<double> lag_values(lags.begin(), lags.end());
    rep.set("lags", lag_values);
    if (model.family() == kernels::Family::multifractional) {
        rep.set("min_hurst", model.min_hurst());
        rep.finish(0.0, 0.05);
    } else {
        rep.set("hurst", cfg.hurst);
        rep.finish(std::abs(estimate - cfg.hurst), 0.05);
    }
    return finish_reports(cfg, "holder", paths, {rep});
}

verify::VerificationReport scalar_report(const std::string& name, double value, double expected, double tol) {
    verify::VerificationReport r;
    r.check_name = name;
    r.set("value", value);
    r.set("expected", expected);
    r.finish(std::abs(value - expected), tol);
    return r;
}

int cmd_selftest(const RunConfig& cfg) {
    std::vector<verify::VerificationReport> reports;
    const RngSeed seed{cfg.seed, 0};
    reports.push_back(scalar_report("hyp2f1_1_1_2_half", specfun::hyp2f1(1.0, 1.0, 2.0, 0.5), 2.0 * std::log(2.0),
                                    1e-10));
    reports.push_back(scalar_report("v_h_left_of_half", specfun::v_h(0.5 - 1e-6), 1.0, 1e-4));
    reports.push_back(scalar_report("v_h_right_of_half", specfun::v_h(0.5 + 1e-6), 1.0, 1e-4));
    {
        const UniformGrid g(1024, 1.0);
        const auto f = SampledFunction::from(g, [](double x) { return x; });
        const auto half = fracops::frac_integral(f, 0.5, fracops::Side::left);
        double err = 0.0;
        const double c = specfun::gamma_fn(2.0) / specfun::gamma_fn(2.5);
        for (std::size_t i = 0; i < g.size(); ++i) {
            err = std::max(err, std::abs(half[i] - c * std::pow(g.node(i), 1.5)));
        }
        reports.push_back(scalar_report("frac_integral_monomial", err, 0.0, 1e-6));
    }
    const auto stationary = kernels::KernelModel::stationary_fbm(0.7);
    const UniformGrid grid(256, 1.0);
    reports.push_back(verify::check_telescoping(stationary, grid, seed));
    const auto linear = SampledFunction::from(grid, [](double t) { return 1.0 - 2.0 * t; });
    reports.push_back(verify::check_restriction(stationary, linear, 0.5, 1.0, seed));
    reports.push_back(verify::check_endpoint_correction(stationary, linear, seed));
    reports.push_back(verify::check_girsanov_shift(stationary, linear,
                                                   SampledFunction::from(grid, [](double t) { return 1.0 - t * t; }),
                                                   seed));
    reports.push_back(
        verify::check_covariance(kernels::KernelModel::stationary_fbm(0.5), {0.25, 0.5, 1.0}, 0, seed));
    reports.push_back(verify::check_covariance(stationary, {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0}, 0,
                                               seed));
    if (!cfg.quick) {
        reports.push_back(verify::check_covariance(stationary, {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0},
                                                   20000, seed));
        reports.push_back(verify::check_ito_residual(stationary, verify::ItoFunction::square, 1.0, 256, 1000, seed,
                                                     cfg.workers));
    }
    return finish_reports(cfg, "selftest", 0, reports);
}

struct Bound {
    std::string key;
    CLI::Option* opt;
    std::string* value;
};

}  // namespace

int run(const std::vector<std::string>& argv) {
    CLI::App app{"Volterra process toolkit", argv.empty() ? "vlab" : argv[0]};
    app.footer(kDefaults);
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "Sample Brownian and Volterra paths on a grid (CSV per path + manifest.json)"},
        {"covariance", "Compare quadrature, closed-form and Monte Carlo covariances"},
        {"integrate", "Symmetric partition sums on coupled dyadic levels with extrapolation"},
        {"ito-check", "Chain-rule residual f(X_T) - f(0) - ∫f'(X)∘dX over Monte Carlo paths"},
        {"girsanov-check", "Discrete divergence under a deterministic shift of B"},
        {"holder", "Hölder exponent regression from path increments"},
        {"selftest", "Deterministic identity suite; Monte Carlo checks unless --quick"}};

    std::map<std::string, std::string> raw;
    std::map<std::string, std::vector<Bound>> bound;
    std::map<std::string, std::string> config_file;
    std::map<std::string, bool> quick_flag;
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        subs.push_back(sub);
        sub->add_option("--config", config_file[name], "Config file of key = value lines");
        for (const auto& key : config_keys()) {
            if (key == "quick") {
                continue;
            }
            std::string flag = "--" + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            std::string* slot = &raw[name + "/" + key];
            CLI::Option* opt = sub->add_option(flag, *slot);
            bound[name].push_back({key, opt, slot});
        }
        if (name == "selftest") {
            sub->add_flag("--quick", quick_flag[name], "Skip Monte Carlo checks");
        }
    }

    std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* chosen = nullptr;
    for (CLI::App* sub : subs) {
        if (sub->parsed()) {
            chosen = sub;
        }
    }
    const std::string command = chosen->get_name();

    try {
        RunConfig cfg;
        cfg.seed = default_seed();
        if (!config_file[command].empty()) {
            load_config_into(cfg, config_file[command]);
        }
        std::optional<std::size_t> paths_flag;
        for (const auto& b : bound[command]) {
            if (b.opt->count() > 0) {
                apply_value(cfg, b.key, *b.value);
                if (b.key == "paths") {
                    paths_flag = cfg.paths;
                }
            }
        }
        if (quick_flag[command]) {
            cfg.quick = true;
        }
        validate(cfg);

        // The per-command default applies unless a file or flag set `paths`.
        const bool paths_set = paths_flag.has_value() || cfg.paths != RunConfig{}.paths;
        auto paths_or = [&](std::size_t fallback) { return paths_set ? cfg.paths : fallback; };

        if (command == "simulate") {
            return cmd_simulate(cfg, paths_or(1));
        }
        if (command == "covariance") {
            return cmd_covariance(cfg, paths_or(20000));
        }
        if (command == "integrate") {
            return cmd_integrate(cfg, paths_or(1));
        }
        if (command == "ito-check") {
            return cmd_ito(cfg, paths_or(1000));
        }
        if (command == "girsanov-check") {
            return cmd_girsanov(cfg);
        }
        if (command == "holder") {
            return cmd_holder(cfg, paths_or(200));
        }
        return cmd_selftest(cfg);
    } catch (const UnsupportedRegime& e) {
        std::cerr << "unsupported regime: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace vlab::cli
