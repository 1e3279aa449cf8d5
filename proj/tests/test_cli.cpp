#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pwf/common.hpp"
#include "pwf_cli/runner.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

using namespace pwf::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("pwf-cli-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

bool mentions(const std::vector<std::string>& errors, const std::string& text)
{
    for (const auto& e : errors)
        if (e.find(text) != std::string::npos) return true;
    return false;
}

json higgs_config()
{
    return json::parse(R"({"experiment": "higgs-spectrum", "seed": 4,
        "theory": {"mu": 1.0, "lambda": 0.5, "e": 0.7, "box_length": 6.283185307179586, "cutoff": 1.0},
        "linearization": {"amplitudes": [1e-2, 3e-3, 1e-3]}})");
}

int shell(const std::string& cmd)
{
    int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST_CASE("doubles carry 17 significant digits")
{
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-300) == "-2.5e-300");
    CHECK(format_double(1e23) == "9.9999999999999992e+22");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    for (double v : {pwf::pi, 1.0 / 3.0, 6.02214076e23, 4.9e-324}) CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("csv round trip")
{
    Table t{"t", "", {"n", "x", "label"}, {}};
    t.add_row({std::int64_t(3), 0.1, std::string("plain")});
    t.add_row({std::int64_t(-7), 1e-300, std::string("comma, \"quote\"\nnewline")});
    t.add_row({std::int64_t(0), 2.0, std::string("12")});
    t.add_row({std::int64_t(1), -0.0, std::string()});
    std::stringstream s;
    write_csv(s, t);
    std::string text = s.str();
    CHECK(text.rfind("n,x,label\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.back() == '\n');
    Table back = read_csv(s, "t");
    REQUIRE(back.columns == t.columns);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        CHECK(back.number(r, 0) == t.number(r, 0));
        CHECK(back.number(r, 1) == t.number(r, 1));
        CHECK(back.rows[r][2] == t.rows[r][2]);
    }
    CHECK(std::holds_alternative<std::int64_t>(back.rows[0][0]));
    CHECK(std::holds_alternative<std::int64_t>(back.rows[2][1])); // an integral double loads as an integer
    CHECK(std::holds_alternative<std::string>(back.rows[2][2]));
    // re-serializing what was read gives the same bytes
    std::stringstream again;
    write_csv(again, back);
    CHECK(again.str() == text);

    std::stringstream bad("a,b\n1\n");
    CHECK_THROWS(read_csv(bad));
    CHECK_THROWS(t.add_row({1.0}));
    CHECK_THROWS(t.column("missing"));
}

TEST_CASE("config validation collects every error with its path")
{
    auto empty = validate_config(json::object());
    CHECK(mentions(empty, "experiment"));
    CHECK(mentions(empty, "seed"));

    auto c = higgs_config();
    CHECK(validate_config(c).empty());
    c["theory"]["lambda"] = -1.0;
    c["theory"]["extra"] = 1;
    c["linearization"]["amplitudes"] = json::array({-1.0});
    c.erase("seed");
    auto errors = validate_config(c);
    CHECK(errors.size() >= 4);
    CHECK(mentions(errors, "theory.lambda"));
    CHECK(mentions(errors, "theory.extra"));
    CHECK(mentions(errors, "linearization.amplitudes"));
    CHECK(mentions(errors, "seed"));
    CHECK_THROWS_AS(parse_config(c), pwf::ConfigError);

    auto eq = json::parse(R"({"experiment": "equivariance", "seed": 1,
        "theory": {"kind": "free-em-bohm", "box_length": 6.28, "cutoff": 1.5},
        "functional": {"kind": "coherent", "modes": [{"n": [0, 0, 1], "pol": 0, "re": 0.5},
                                                     {"n": [0, 0, 1], "pol": 0, "re": 0.1}]},
        "ensemble": {"samples": 100, "final_time": 1.0, "checkpoints": 3}})");
    CHECK(mentions(validate_config(eq), "functional.modes[1]"));
    eq["functional"]["modes"].erase(1);
    CHECK(validate_config(eq).empty());
    eq["ensemble"].erase("final_time");
    CHECK(mentions(validate_config(eq), "ensemble.final_time"));

    auto unknown = higgs_config();
    unknown["experiment"] = "warp-drive";
    CHECK(mentions(validate_config(unknown), "experiment"));
    auto escape = higgs_config();
    escape["output"] = "../elsewhere";
    CHECK(mentions(validate_config(escape), "output"));
}

TEST_CASE("every experiment name has a description")
{
    CHECK(experiment_names().size() == 8);
    for (const auto& n : experiment_names()) CHECK(!describe_experiment(n).empty());
}

TEST_CASE("bundles are byte-deterministic and carry sidecars")
{
    auto config = parse_config(higgs_config());
    auto a = scratch("det-a"), b = scratch("det-b");
    auto first = run_experiment(config);
    auto second = run_experiment(config);
    REQUIRE(first.complete);
    CHECK(first.pass());
    write_bundle(first, a, config.source);
    write_bundle(second, b, config.source);
    for (const auto& t : first.tables) {
        auto csv = t.name + ".csv";
        REQUIRE(fs::exists(a / csv));
        CHECK(slurp(a / csv) == slurp(b / csv));
        CHECK(fs::exists(a / (t.name + ".json")));
        CHECK(read_csv(a / csv).rows.size() == t.rows.size());
    }
    std::ifstream in(a / "summary.json");
    auto s = json::parse(in);
    CHECK(s["experiment"] == "higgs-spectrum");
    CHECK(s["pass"] == true);
    CHECK(s["checks"].size() == first.checks.size());
    CHECK(s.contains("runtime_seconds"));
    CHECK(s["config"] == config.source);
}

TEST_CASE("plot data and its failure modes")
{
    auto config = parse_config(higgs_config());
    auto dir = scratch("plots");
    write_bundle(run_experiment(config), dir, config.source);
    auto kinds = plot_kinds(dir);
    REQUIRE(!kinds.empty());
    for (const auto& k : kinds) {
        Table t = plot_data(dir, k);
        CHECK(t.columns == std::vector<std::string>{"series", "x", "y", "y_err"});
        CHECK(!t.rows.empty());
    }
    CHECK_THROWS_WITH(plot_data(dir, "no-such-kind"), doctest::Contains("no plot kind"));

    // a table missing a column the plot needs
    Table lin = read_csv(dir / "linearization.csv");
    lin.columns[1] = "renamed";
    write_csv(dir / "linearization.csv", lin);
    CHECK_THROWS_WITH(plot_data(dir, "linearization"), doctest::Contains("relative_error"));
    fs::remove(dir / "linearization.csv");
    CHECK_THROWS_WITH(plot_data(dir, "linearization"), doctest::Contains("missing series file"));
    CHECK_THROWS(plot_data(scratch("empty"), "dispersion"));
}

TEST_CASE("failed runs keep a partial bundle")
{
    auto j = json::parse(R"({"experiment": "trajectory", "seed": 2,
        "theory": {"kind": "schrodinger-field", "box_length": 6.283185307179586, "cutoff": 1.0, "m": 1.0},
        "functional": {"kind": "coherent", "modes": [{"n": [0, 0, 1], "re": 0.5}]},
        "trajectory": {"final_time": 1.0, "checkpoints": 3},
        "tolerances": {"max_steps": 2}})");
    auto config = parse_config(j);
    auto b = run_experiment(config);
    CHECK_FALSE(b.complete);
    CHECK_FALSE(b.pass());
    CHECK(!b.message.empty());
    auto dir = scratch("partial");
    write_bundle(b, dir, config.source);
    std::ifstream in(dir / "summary.json");
    auto s = json::parse(in);
    CHECK(s["complete"] == false);
    CHECK(fs::exists(dir / "path.csv"));
}

TEST_CASE("output root follows the environment")
{
    ::setenv("PWFIELD_OUTPUT_ROOT", "/tmp/pwf-root", 1);
    CHECK(output_root() == fs::path("/tmp/pwf-root"));
    ::unsetenv("PWFIELD_OUTPUT_ROOT");
    CHECK(output_root("fallback") == fs::path("fallback"));
}

TEST_CASE("command line exit codes")
{
    const std::string exe = PWFIELD_EXE;
    auto dir = scratch("exe");
    auto good = dir / "higgs.json", bad = dir / "bad.json";
    std::ofstream(good) << "// comments are allowed\n" << higgs_config().dump(2);
    std::ofstream(bad) << R"({"experiment": "higgs-spectrum"})";
    std::string env = "PWFIELD_OUTPUT_ROOT=" + (dir / "out").string() + " ";
    CHECK(shell(exe + " list-experiments") == 0);
    CHECK(shell(exe + " validate " + good.string()) == 0);
    CHECK(shell(exe + " validate " + bad.string()) == 2);
    CHECK(shell(exe + " validate " + (dir / "absent.json").string()) == 2);
    CHECK(shell(env + exe + " run " + bad.string()) == 2);
    CHECK(shell(env + exe + " run " + good.string()) == 0);
    auto bundle = dir / "out" / "higgs-spectrum-seed4";
    CHECK(fs::exists(bundle / "summary.json"));
    CHECK(shell(exe + " emit-plots " + bundle.string() + " dispersion") == 0);
    CHECK(fs::exists(bundle / "plot-dispersion.csv"));
    CHECK(shell(exe + " emit-plots " + bundle.string() + " nonsense") == 1);
    CHECK(shell(exe + " frobnicate") == 2);
}
