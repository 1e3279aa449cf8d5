#pragma once

#include "pwf/experiments.hpp"
#include "pwf/quartic.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace pwf::cli {

using json = nlohmann::ordered_json;

struct OverlapScanOptions {
    std::string family;
    int n_min = 1;
    int n_max = 1;
    std::size_t samples = 0;
};

struct HollandOptions {
    std::vector<std::size_t> region_sizes;
    std::vector<double> fractions;
    std::size_t configs = 0;
    std::size_t moment_samples = 0;
    double factor = 10.0;
    double lattice_spacing = 0.0;
    double density = 0.0;
    double margin = 10.0;
};

struct HiggsOptions {
    double mu = 0, lambda = 0, e = 0;
    double box_length = 0, cutoff = 0;
    std::vector<double> amplitudes;
};

using ExperimentOptions = std::variant<EquivarianceExperimentOptions, RelaxationOptions, OverlapScanOptions,
                                       HollandOptions, QuarticExperimentOptions, HiggsOptions,
                                       GaugeEquivalenceOptions, TrajectoryOptions>;

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string output; // bundle directory name under the output root
    ExperimentOptions options;
    json source;
};

const std::vector<std::string>& experiment_names();

// Every schema violation, each prefixed by the dotted path of the offending field.
std::vector<std::string> validate_config(const json& config);

// Throws ConfigError listing all violations.
ExperimentConfig parse_config(const json& config);
json load_config_file(const std::filesystem::path& path);

} // namespace pwf::cli
