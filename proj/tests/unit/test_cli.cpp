#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "vlab/cli.hpp"
#include "vlab/errors.hpp"

using namespace vlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("vlab_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string error_of(const std::string& file) {
    try {
        cli::load_config(file);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("config files") {
    const auto dir = fresh_dir("config");
    write_text(dir / "empty.cfg", "# nothing here\n\n");
    const auto def = cli::load_config((dir / "empty.cfg").string());
    const cli::RunConfig ref;
    CHECK(def.hurst == ref.hurst);
    CHECK(def.n == ref.n);
    CHECK(def.levels == ref.levels);
    CHECK(def.end_time() == 1.0);

    write_text(dir / "ok.cfg", "family = levy-fbm\nhurst = 0.3  # rough\nlevels = 64,128,256\nT = 0.5\nseed = 9\n");
    const auto cfg = cli::load_config((dir / "ok.cfg").string());
    CHECK(cfg.family == "levy-fbm");
    CHECK(cfg.hurst == 0.3);
    CHECK(cfg.levels == std::vector<std::size_t>{64, 128, 256});
    CHECK(cfg.end_time() == 0.5);
    CHECK(cfg.seed == 9);

    write_text(dir / "bad_h.cfg", "hurst = 1.5\n");
    CHECK(error_of((dir / "bad_h.cfg").string()).find("(0, 1)") != std::string::npos);
    write_text(dir / "unknown.cfg", "hurst = 0.6\nfoo = 1\nbar = 2\n");
    const auto unk = error_of((dir / "unknown.cfg").string());
    CHECK(unk.find("foo") != std::string::npos);
    CHECK(unk.find("bar") != std::string::npos);
    write_text(dir / "type.cfg", "n = many\n");
    CHECK(error_of((dir / "type.cfg").string()).find("'n'") != std::string::npos);
    CHECK(!error_of((dir / "missing.cfg").string()).empty());
}

TEST_CASE("seed fallback") {
    ::setenv("VLAB_SEED", "1234", 1);
    CHECK(cli::default_seed() == 1234);
    ::unsetenv("VLAB_SEED");
    CHECK(cli::default_seed() == 42);
}

TEST_CASE("flags override the config file") {
    const auto dir = fresh_dir("precedence");
    write_text(dir / "run.cfg", "hurst = 0.7\nn = 32\nseed = 5\n");
    const int rc = cli::run({"vlab", "simulate", "--config", (dir / "run.cfg").string(), "--hurst", "0.3",
                             "--output-dir", dir.string()});
    REQUIRE(rc == 0);
    const auto manifest = nlohmann::json::parse(read_text(dir / "manifest.json"));
    CHECK(manifest["config"]["hurst"] == 0.3);
    CHECK(manifest["config"]["n"] == 32);
    CHECK(manifest["config"]["seed"] == 5);
}

TEST_CASE("simulate writes one CSV per path") {
    const auto dir = fresh_dir("simulate");
    REQUIRE(cli::run({"vlab", "simulate", "--n", "64", "--paths", "4", "--output-dir", dir.string()}) == 0);
    for (int p = 0; p < 4; ++p) {
        const auto text = read_text(dir / ("path_" + std::to_string(p) + ".csv"));
        CHECK(text.rfind("t,B,X\n", 0) == 0);
    }
    CHECK(fs::exists(dir / "manifest.json"));
    const auto first = read_text(dir / "path_0.csv");
    REQUIRE(cli::run({"vlab", "simulate", "--n", "64", "--paths", "4", "--output-dir", dir.string()}) == 0);
    CHECK(read_text(dir / "path_0.csv") == first);
}

TEST_CASE("exit codes") {
    const auto dir = fresh_dir("codes");
    const std::string out = dir.string();
    CHECK(cli::run({"vlab", "ito-check", "--hurst", "0.3", "--output-dir", out}) == 2);
    CHECK(cli::run({"vlab", "simulate", "--hurst", "1.5", "--output-dir", out}) == 2);
    CHECK(cli::run({"vlab", "simulate", "--no-such-flag", "--output-dir", out}) == 2);
    CHECK(cli::run({"vlab", "no-such-command"}) == 2);
    CHECK(cli::run({"vlab", "simulate", "--config", (dir / "absent.cfg").string()}) == 2);
    CHECK(cli::run({"vlab", "selftest", "--quick", "--output-dir", out}) == 0);
    const auto report = nlohmann::json::parse(read_text(dir / "selftest.json"));
    CHECK(report["passed"] == true);
    CHECK(report["reports"].size() > 0);
}

TEST_CASE("verification commands write reports") {
    const auto dir = fresh_dir("reports");
    const std::string out = dir.string();
    CHECK(cli::run({"vlab", "covariance", "--hurst", "0.7", "--paths", "2000", "--nodes", "0.25,0.5,1",
                    "--output-dir", out}) == 0);
    CHECK(fs::exists(dir / "covariance.csv"));
    CHECK(cli::run({"vlab", "girsanov-check", "--n", "128", "--u-poly", "1,2", "--v-poly", "0.5,-1",
                    "--output-dir", out}) == 0);
    CHECK(fs::exists(dir / "girsanov-check.json"));
    CHECK(cli::run({"vlab", "integrate", "--levels", "32,64,128", "--output-dir", out}) == 0);
    const auto est = nlohmann::json::parse(read_text(dir / "integrate.json"));
    CHECK(est["estimate"].contains("extrapolated"));
    CHECK(fs::exists(dir / "convergence.csv"));
}
