#pragma once

#include "pwf_cli/config.hpp"
#include "pwf_cli/table.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pwf::cli {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

// One curve family of a plot: a y column (and optional error column) of a table,
// split into one series per value of `group` when that is set.
struct PlotSeries {
    std::string name;
    std::string y;
    std::string y_err;
    std::string group;
};

struct PlotSpec {
    std::string kind;
    std::string table;
    std::string x;
    std::vector<PlotSeries> series;
};

struct Bundle {
    std::string experiment;
    std::uint64_t seed = 0;
    std::vector<Table> tables;
    std::vector<Check> checks;
    std::vector<PlotSpec> plots;
    json summary = json::object(); // scalar results
    bool complete = true;
    std::string message;
    double seconds = 0.0;

    bool pass() const;
    const Table& table(const std::string& name) const;
};

Bundle run_experiment(const ExperimentConfig& config);

// Writes <dir>/<table>.csv with a <table>.json sidecar per table and <dir>/summary.json.
void write_bundle(const Bundle& bundle, const std::filesystem::path& dir, const json& config);

// Output root: the environment override when set, otherwise the given default.
std::filesystem::path output_root(const std::filesystem::path& fallback = "results");

// Tidy long-format plot data (series, x, y, y_err) from a written bundle.
Table plot_data(const std::filesystem::path& bundle_dir, const std::string& kind);
std::vector<std::string> plot_kinds(const std::filesystem::path& bundle_dir);

std::string describe_experiment(const std::string& name);

} // namespace pwf::cli
