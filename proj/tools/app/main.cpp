#include "pwf_cli/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

using namespace pwf::cli;

constexpr int exit_pass = 0;
constexpr int exit_fail = 1;
constexpr int exit_config = 2;

int cmd_validate(const std::string& path)
{
    json j;
    try {
        j = load_config_file(path);
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return exit_config;
    }
    auto errors = validate_config(j);
    for (const auto& e : errors) std::cerr << "error: " << e << '\n';
    if (!errors.empty()) return exit_config;
    std::cout << path << ": valid " << j["experiment"].get<std::string>() << " config\n";
    return exit_pass;
}

int cmd_run(const std::string& path)
{
    ExperimentConfig config;
    try {
        config = parse_config(load_config_file(path));
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return exit_config;
    }
    std::cerr << "running " << config.experiment << " (seed " << config.seed << ")\n";
    Bundle b = run_experiment(config);
    auto dir = output_root() / config.output;
    try {
        write_bundle(b, dir, config.source);
    } catch (const std::exception& e) {
        std::cerr << "error writing bundle: " << e.what() << '\n';
        return exit_fail;
    }
    for (const auto& c : b.checks)
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
    if (!b.complete) std::cout << "INCOMPLETE " << b.message << '\n';
    std::cout << "bundle: " << dir.string() << '\n';
    return b.pass() ? exit_pass : exit_fail;
}

int cmd_emit(const std::string& bundle, const std::string& kind)
{
    try {
        Table t = plot_data(bundle, kind);
        auto path = std::filesystem::path(bundle) / ("plot-" + kind + ".csv");
        write_csv(path, t);
        std::cout << path.string() << '\n';
        return exit_pass;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_fail;
    }
}

int cmd_list()
{
    for (const auto& n : experiment_names()) std::cout << n << '\t' << describe_experiment(n) << '\n';
    return exit_pass;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"pilot-wave field simulations"};
    app.require_subcommand(1);
    std::string config, bundle, kind;
    auto* run = app.add_subcommand("run", "run an experiment and write its result bundle");
    run->add_option("config", config, "experiment config file")->required();
    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config, "experiment config file")->required();
    auto* emit = app.add_subcommand("emit-plots", "write tidy plot data from a result bundle");
    emit->add_option("bundle", bundle, "bundle directory")->required();
    emit->add_option("kind", kind, "plot kind listed in the bundle summary")->required();
    auto* list = app.add_subcommand("list-experiments", "list available experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_pass : exit_config;
    }
    if (*run) return cmd_run(config);
    if (*validate) return cmd_validate(config);
    if (*emit) return cmd_emit(bundle, kind);
    if (*list) return cmd_list();
    return exit_config;
}
