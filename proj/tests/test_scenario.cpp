#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "qfilter/minitoml.hpp"
#include "qfilter/scenario.hpp"
#include "qfilter/svg.hpp"
#include "qfilter/linalg.hpp"

using namespace qfilter;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string free_particle_toml(double t_end, const std::string& extra = "") {
    return "[scenario]\n"
           "kind = \"free_particle\"\n"
           "seed = 7\n"
           "n_trajectories = 1\n"
           "[model]\n"
           "m = 1.0\n"
           "lambda = 2.0\n"
           "theta0 = [0.0, 0.0]\n"
           "[time]\n"
           "t_end = " + std::to_string(t_end) + "\n"
           "dt = 0.001\n" + extra;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("toml subset parser") {
    std::string text =
        "# comment\n"
        "title = \"hello # not a comment\"\n"
        "count = 42\n"
        "rate = -1.5e-3\n"
        "flag = true\n"
        "values = [1, 2.5, 3]\n"
        "[outer.inner]\n"
        "key = \"v\"\n";
    auto t = minitoml::parse(text);
    CHECK(minitoml::get_string(t, "title") == "hello # not a comment");
    CHECK(minitoml::get_int(t, "count") == 42);
    CHECK(minitoml::get_double(t, "rate") == doctest::Approx(-1.5e-3));
    CHECK(minitoml::get_bool(t, "flag", false));
    CHECK(minitoml::get(t, "values").as_array().size() == 3);
    CHECK(minitoml::get(t, "values").as_array()[1].as_double() == doctest::Approx(2.5));
    CHECK(minitoml::get_string(t, "outer.inner.key") == "v");
    CHECK(minitoml::get_double(t, "missing", 9.0) == 9.0);
    CHECK_FALSE(minitoml::has(t, "missing"));

    CHECK_THROWS_AS(minitoml::parse("a ="), ConfigError);
    CHECK_THROWS_AS(minitoml::parse("no_equals_here"), ConfigError);
    CHECK_THROWS_AS(minitoml::parse("x = 1\nx = 2"), ConfigError);
    CHECK_THROWS_AS(minitoml::parse("[bad\nx = 1"), ConfigError);
    CHECK_THROWS_AS(minitoml::parse("v = \"unterminated"), ConfigError);
    try {
        minitoml::parse("good = 1\nbad here\n");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("scenario parsing and validation") {
    ScenarioConfig cfg = parse_scenario(free_particle_toml(1.0));
    CHECK(cfg.kind == "free_particle");
    CHECK(cfg.seed == 7);
    CHECK(cfg.dt == doctest::Approx(1e-3));

    CHECK_THROWS_AS(parse_scenario("[scenario]\nkind = \"unknown_kind\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("[scenario]\nkind = \"free_particle\"\n[time]\ndt = -0.1\n"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_scenario("[scenario]\nkind = \"free_particle\"\n[outputs]\nselectors = [\"nope\"]\n"),
        ConfigError);
}

TEST_CASE("manifest digests are reproducible") {
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    TempDir dir_a("qf_test_run_a"), dir_b("qf_test_run_b");
    ScenarioConfig cfg = parse_scenario(free_particle_toml(0.2));
    RunManifest a = run_scenario(cfg, dir_a.path.string());
    RunManifest b = run_scenario(cfg, dir_b.path.string());
    REQUIRE(a.outputs.size() == b.outputs.size());
    CHECK(a.outputs.size() >= 2);  // belief csv + summary
    for (size_t i = 0; i < a.outputs.size(); ++i) {
        CHECK(a.outputs[i].name == b.outputs[i].name);
        CHECK(a.outputs[i].digest == b.outputs[i].digest);
        CHECK(read_file(dir_a.path / a.outputs[i].name) == read_file(dir_b.path / b.outputs[i].name));
    }
    CHECK(fs::exists(dir_a.path / "manifest.json"));
    auto mj = json::parse(read_file(dir_a.path / "manifest.json"));
    CHECK(mj["config_digest"] == a.config_digest);
}

TEST_CASE("zero trajectories produce an empty manifest") {
    TempDir dir("qf_test_zero");
    std::string text = free_particle_toml(0.2);
    text.replace(text.find("n_trajectories = 1"), 18, "n_trajectories = 0");
    ScenarioConfig cfg = parse_scenario(text);
    RunManifest mf = run_scenario(cfg, dir.path.string());
    CHECK(mf.outputs.empty());
    CHECK(fs::exists(dir.path / "manifest.json"));
    CHECK_FALSE(fs::exists(dir.path / "summary.json"));
}

TEST_CASE("free particle scenario reports the stationary width") {
    TempDir dir("qf_test_fp");
    ScenarioConfig cfg = parse_scenario(free_particle_toml(20.0));
    run_scenario(cfg, dir.path.string());
    auto summary = json::parse(read_file(dir.path / "summary.json"));
    CHECK(summary["omega_limit_error"].get<double>() < 1e-8);
    CHECK(summary["correlation_scalar"].get<double>() == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(summary["dispersion_product"].get<double>() == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("qubit scenario in reference mode reports the martingale mean") {
    TempDir dir("qf_test_qubit");
    std::string text =
        "[scenario]\n"
        "kind = \"qubit_homodyne\"\n"
        "seed = 3\n"
        "n_trajectories = 50\n"
        "[model]\n"
        "h = [0.3, 0.0, 0.0]\n"
        "l_re = [0.0, 0.0, 1.0]\n"
        "l_im = [0.0, 0.0, 0.0]\n"
        "bloch0 = [1.0, 0.0, 0.0]\n"
        "mode = \"reference\"\n"
        "[time]\n"
        "t_end = 0.5\n"
        "dt = 0.002\n"
        "[outputs]\n"
        "selectors = []\n";
    ScenarioConfig cfg = parse_scenario(text);
    RunManifest mf = run_scenario(cfg, dir.path.string());
    auto summary = json::parse(read_file(dir.path / "summary.json"));
    CHECK(summary["martingale_mean"].get<double>() > 0.5);
    CHECK(summary["martingale_mean"].get<double>() < 1.5);
    // selectors empty: only summary.json in the output list
    CHECK(mf.outputs.size() == 1);
}

TEST_CASE("toyfock scenario summary") {
    TempDir dir("qf_test_tf");
    std::string text =
        "[scenario]\n"
        "kind = \"toyfock_oracle\"\n"
        "seed = 1\n"
        "[model]\n"
        "n_slots = 6\n"
        "h = [0.3, 0.0, 0.0]\n"
        "l_re = [0.0, 0.0, 1.0]\n"
        "l_im = [0.0, 0.0, 0.0]\n"
        "bloch0 = [1.0, 0.0, 0.0]\n"
        "[time]\n"
        "t_end = 0.3\n"
        "dt = 0.05\n";
    ScenarioConfig cfg = parse_scenario(text);
    run_scenario(cfg, dir.path.string());
    auto summary = json::parse(read_file(dir.path / "summary.json"));
    CHECK(std::abs(summary["total_probability"].get<double>() - 1.0) < 1e-10);
    CHECK(summary["tower_property_residual"].get<double>() < 1e-10);
    CHECK(summary["ito_table_deviation"].get<double>() == 0.0);
    CHECK(fs::exists(dir.path / "records.csv"));
}

TEST_CASE("convergence report fits an order") {
    ScenarioConfig cfg = parse_scenario(free_particle_toml(1.0));
    auto report = json::parse(convergence_report(cfg, {0.02, 0.01, 0.005}));
    CHECK(report["points"].size() == 3);
    double order = report["observed_order"].get<double>();
    CHECK(order > 3.0);  // rk4 on both flows
    CHECK_THROWS_AS(convergence_report(cfg, {0.01}), ConfigError);
}

TEST_CASE("sweep writes one run per value") {
    TempDir dir("qf_test_sweep");
    ScenarioConfig cfg = parse_scenario(free_particle_toml(0.2));
    auto report = json::parse(sweep_report(cfg, "model.lambda", {1.0, 2.0}, dir.path.string()));
    CHECK(report["runs"].size() == 2);
    CHECK(fs::exists(dir.path / "sweep_000" / "manifest.json"));
    CHECK(fs::exists(dir.path / "sweep_001" / "summary.json"));
}

TEST_CASE("svg output is deterministic and labelled") {
    SvgSeries s;
    s.label = "series";
    s.x = {0, 1, 2};
    s.y = {0.5, -0.25, 1.0};
    std::string a = render_line_plot("title", "time", "value", {s});
    std::string b = render_line_plot("title", "time", "value", {s});
    CHECK(a == b);
    CHECK(a.find("<svg") != std::string::npos);
    CHECK(a.find("time") != std::string::npos);
    CHECK(a.find("value") != std::string::npos);
    CHECK(a.find("polyline") != std::string::npos);
}
