#include "pwf_cli/runner.hpp"

#include "pwf/holland.hpp"
#include "pwf/overlap.hpp"
#include "pwf/rng.hpp"
#include "pwf/stats.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>

namespace pwf::cli {

namespace fs = std::filesystem;

bool Bundle::pass() const
{
    if (!complete) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const Table& Bundle::table(const std::string& name) const
{
    for (const auto& t : tables)
        if (t.name == name) return t;
    throw std::out_of_range("bundle has no table " + name);
}

namespace {

using I = std::int64_t;

Table make_table(std::string name, std::string description, std::vector<std::string> columns)
{
    Table t;
    t.name = std::move(name);
    t.description = std::move(description);
    t.columns = std::move(columns);
    return t;
}

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

void run(const EquivarianceExperimentOptions& o, Bundle& b)
{
    auto r = run_equivariance_experiment(o);
    Table ks = make_table("ks", "KS statistic per marginal and checkpoint", {"t", "marginal", "ks", "critical", "analytic"});
    Table cp = make_table("checkpoints", "worst KS ratio per checkpoint", {"t", "worst_ratio", "pass"});
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        const auto& rep = r.reports[k];
        for (std::size_t m = 0; m < rep.names.size(); ++m)
            ks.add_row({r.times[k], rep.names[m], rep.ks[m], rep.critical, I(rep.analytic[m])});
        cp.add_row({r.times[k], rep.worst_ratio, I(rep.pass)});
    }
    b.tables = {ks, cp};
    bool all = !r.reports.empty();
    for (const auto& rep : r.reports) all = all && rep.pass;
    b.checks.push_back({"ks-below-critical", all, "family-wise level " + sci(o.alpha)});
    b.checks.push_back({"flagged-fraction", !r.evolution_failed,
                        std::to_string(r.flagged) + " of " + std::to_string(o.samples) + " trajectories flagged"});
    b.checks.push_back({"sampler-converged", !r.sampler.flagged, "split R-hat " + sci(r.sampler.rhat)});
    b.summary["theory"] = to_string(o.theory.kind);
    b.summary["functional"] = o.functional.kind;
    b.summary["samples"] = o.samples;
    b.summary["flagged"] = r.flagged;
    b.summary["sampler"] = {{"method", r.sampler.method},
                            {"acceptance_rate", r.sampler.acceptance_rate},
                            {"rhat", r.sampler.rhat},
                            {"chains", r.sampler.chains}};
    if (!r.message.empty()) b.message = r.message;
    b.plots.push_back({"ks", "ks", "t", {{"", "ks", "", "marginal"}, {"critical", "critical", "", ""}}});
}

void run(const RelaxationOptions& o, Bundle& b)
{
    auto r = run_relaxation_experiment(o);
    Table h = make_table("h_function", "coarse-grained H at each checkpoint", {"t", "h", "noise_floor"});
    for (std::size_t k = 0; k < r.times.size(); ++k) h.add_row({r.times[k], r.h[k], r.noise_floor[k]});
    b.tables = {h};
    b.summary["slope"] = r.slope;
    b.summary["slope_error"] = r.slope_error;
    b.summary["flagged"] = r.flagged;
    b.checks.push_back({"h-non-increasing", r.pass, "fitted slope " + sci(r.slope) + " +- " + sci(r.slope_error)});
    if (!r.message.empty()) b.message = r.message;
    b.plots.push_back({"h-function", "h_function", "t", {{"H", "h", "", ""}, {"noise floor", "noise_floor", "", ""}}});
}

void run(const OverlapScanOptions& o, std::uint64_t seed, Bundle& b)
{
    auto r = n_particle_overlap_scan(o.family, o.n_min, o.n_max, o.samples, seed);
    Table t = make_table("overlap", "overlap per particle number", {"n", "overlap", "error", "analytic"});
    bool within = true;
    for (const auto& row : r.rows) {
        t.add_row({I(row.n), row.overlap, row.error, row.analytic});
        if (std::isfinite(row.analytic) && std::abs(row.overlap - row.analytic) > 4 * row.error) within = false;
    }
    b.tables = {t};
    b.summary["family"] = o.family;
    b.summary["fit"] = {{"slope", r.slope}, {"intercept", r.intercept}, {"r2", r.r2}};
    b.checks.push_back({"slope-negative", r.slope < 0, "slope " + sci(r.slope)});
    if (r.rows.size() >= 3) b.checks.push_back({"fit-quality", r.r2 > 0.9, "R^2 " + sci(r.r2)});
    b.checks.push_back({"matches-closed-form", within, "every n within 4 standard errors"});
    b.plots.push_back({"overlap", "overlap", "n", {{o.family, "overlap", "error", ""}, {"analytic", "analytic", "", ""}}});
}

void run(const HollandOptions& o, std::uint64_t seed, Bundle& b)
{
    SeedTree tree(seed);
    Table m = make_table("moments", "sampled alpha moments against closed forms",
                         {"state", "samples", "mean", "mean_expected", "sd", "sd_expected"});
    bool moments_ok = true;
    for (int s : {1, -1}) {
        auto a = sample_alpha(s, o.moment_samples, tree.derive("moments", s > 0 ? 0 : 1));
        auto mo = moments(a);
        double sd = std::sqrt(mo.variance);
        m.add_row({std::string(s > 0 ? "occupied" : "empty"), I(o.moment_samples), mo.mean, holland_mean_alpha(s), sd,
                   holland_alpha_spread()});
        moments_ok = moments_ok && std::abs(mo.mean / holland_mean_alpha(s) - 1) < 0.01 &&
                     std::abs(sd / holland_alpha_spread() - 1) < 0.01;
    }
    auto cells = holland_sweep(o.region_sizes, o.fractions, o.configs, tree.derive("sweep"), o.factor);
    Table sw = make_table("sweep", "analytic criterion against sampled separation",
                          {"n_l", "fraction", "n", "lhs", "rhs", "analytic_pass", "separation", "empirical_pass", "agree"});
    bool agree = true;
    for (const auto& c : cells) {
        sw.add_row({I(c.n_l), c.fraction, I(c.n), c.analytic.lhs, c.analytic.rhs, I(c.analytic.pass), c.separation,
                    I(c.empirical_pass), I(c.agree)});
        agree = agree && c.agree;
    }
    auto ls = length_scale_criterion(o.lattice_spacing, o.density, o.margin);
    Table l = make_table("length_scale", "region size above which matter is distinguishable",
                         {"lattice_spacing", "density", "threshold", "margin", "length"});
    l.add_row({o.lattice_spacing, o.density, ls.threshold, o.margin, ls.length});
    b.tables = {m, sw, l};
    b.summary["rhs_constant"] = 4.0 / pi * holland_alpha_spread();
    b.checks.push_back({"moments-within-1pct", moments_ok, "mean and spread of alpha for both states"});
    b.checks.push_back({"sweep-agrees", agree, std::to_string(cells.size()) + " grid cells"});
    b.plots.push_back({"separation", "sweep", "fraction", {{"n_l=", "separation", "", "n_l"}}});
}

void run(const QuarticExperimentOptions& o, Bundle& b)
{
    auto r = run_quartic_experiment(o);
    Table t = make_table("ks", "KS statistic of both velocity laws", {"t", "ks_correct", "ks_naive", "critical"});
    for (std::size_t k = 0; k < r.times.size(); ++k) t.add_row({r.times[k], r.ks_correct[k], r.ks_naive[k], r.critical});
    b.tables = {t};
    b.summary["ks_initial"] = r.ks_initial;
    b.summary["critical"] = r.critical;
    b.summary["plane_wave_difference"] = r.plane_wave_difference;
    b.summary["max_norm_drift"] = r.max_norm_drift;
    b.summary["continuity_residual"] = r.continuity_residual;
    b.summary["flagged"] = {{"correct", r.flagged_correct}, {"naive", r.flagged_naive}};
    b.checks.push_back({"correct-velocity-passes", r.correct_passes, "all checkpoints below " + sci(r.critical)});
    b.checks.push_back({"naive-velocity-fails", r.naive_fails_final, "final KS " + sci(r.ks_naive.back())});
    b.checks.push_back({"plane-wave-agreement", r.plane_wave_difference < 1e-10, sci(r.plane_wave_difference)});
    b.plots.push_back({"ks", "ks", "t", {{"correct", "ks_correct", "", ""}, {"naive", "ks_naive", "", ""},
                                          {"critical", "critical", "", ""}}});
}

void run(const HiggsOptions& o, std::uint64_t seed, Bundle& b)
{
    TheoryParameters p{.e = o.e, .mu = o.mu, .lambda = o.lambda};
    ModeBasis basis(o.box_length, o.cutoff, FieldKind::ScalarReal);
    auto s = higgs_quadratic_spectrum(o.mu, o.lambda, o.e, basis);
    Table d = make_table("dispersion", "quadratic-sector dispersion", {"sector", "nx", "ny", "nz", "k", "omega"});
    for (const auto& r : s.scalar) d.add_row({std::string("scalar"), I(r.n[0]), I(r.n[1]), I(r.n[2]), r.k, r.omega});
    for (const auto& r : s.vector) d.add_row({std::string("vector"), I(r.n[0]), I(r.n[1]), I(r.n[2]), r.k, r.omega});
    // oracle: minimum of V(r) = -mu^2 r^2 / 2 + lambda r^4 / 4 by Newton, curvature there
    double r = 1.0;
    for (int i = 0; i < 100; ++i) r -= (-o.mu * o.mu * r + o.lambda * r * r * r) / (-o.mu * o.mu + 3 * o.lambda * r * r);
    double m_scalar = std::sqrt(-o.mu * o.mu + 3 * o.lambda * r * r);
    double m_vector = o.e * r;
    // the oscillators of the quadratic theory at k = 0 carry the masses the dynamics sees
    TheoryModel quad(TheoryKind::HiggsQuadratic, p, o.box_length, o.cutoff);
    double osc_scalar = -1, osc_vector = -1;
    for (std::size_t j = 0; j < quad.oscillators().size(); ++j) {
        auto [sec, local] = quad.space()->locate(j);
        const ModeBasis& sb = *quad.space()->sectors()[sec].basis;
        if (sb.k2(sb.coordinates()[local].mode) != 0.0) continue;
        (sec == 0 ? osc_scalar : osc_vector) = quad.oscillators()[j].omega;
    }
    b.summary["v"] = s.v;
    b.summary["scalar_mass"] = s.scalar_mass;
    b.summary["vector_mass"] = s.vector_mass;
    double err = std::max({std::abs(s.v - r), std::abs(s.scalar_mass - m_scalar), std::abs(s.vector_mass - m_vector)});
    b.checks.push_back({"mass-formulas", err <= 1e-10, "largest deviation from the potential " + sci(err)});
    double osc_err = std::abs(osc_scalar - m_scalar);
    if (osc_vector >= 0) osc_err = std::max(osc_err, std::abs(osc_vector - m_vector));
    b.checks.push_back({"oscillator-masses", osc_scalar >= 0 && osc_err <= 1e-10, "k = 0 frequencies " + sci(osc_err)});
    b.tables = {d};
    if (o.e > 0) {
        TheoryModel full(TheoryKind::AbelianHiggs, p, o.box_length, o.cutoff);
        auto probes = higgs_linearization_scan(full, quad, o.amplitudes, seed);
        Table l = make_table("linearization", "quadratic against linearized full guidance", {"amplitude", "relative_error"});
        std::vector<double> lx, ly;
        for (const auto& pr : probes) {
            l.add_row({pr.amplitude, pr.relative_error});
            lx.push_back(std::log(pr.amplitude));
            ly.push_back(std::log(pr.relative_error));
        }
        b.tables.push_back(l);
        bool linear = false;
        if (lx.size() >= 2) {
            auto fit = fit_line(lx, ly);
            b.summary["linearization_order"] = fit.slope;
            linear = std::abs(fit.slope - 1.0) < 0.1;
            b.checks.push_back({"linear-convergence", linear, "log-log slope " + sci(fit.slope)});
        }
        b.plots.push_back({"linearization", "linearization", "amplitude", {{"relative error", "relative_error", "", ""}}});
    }
    b.plots.push_back({"dispersion", "dispersion", "k", {{"", "omega", "", "sector"}}});
}

void run(const GaugeEquivalenceOptions& o, Bundle& b)
{
    auto r = run_gauge_equivalence(o);
    Table t = make_table("b_difference", "largest B-field difference between the two gauges",
                         {"t", "max_difference", "b_scale"});
    for (std::size_t k = 0; k < r.times.size(); ++k) t.add_row({r.times[k], r.b_difference[k], r.b_scale[k]});
    b.tables = {t};
    double worst = 0;
    for (double d : r.b_difference) worst = std::max(worst, d);
    b.summary["max_difference"] = worst;
    b.summary["longitudinal_velocity"] = r.longitudinal_velocity;
    b.summary["longitudinal_drift"] = r.longitudinal_drift;
    b.checks.push_back({"b-field-agreement", !r.b_difference.empty() && worst <= o.tolerance && r.message.empty(),
                        "max difference " + sci(worst)});
    b.checks.push_back({"longitudinal-static", r.longitudinal_velocity == 0.0 && r.longitudinal_drift == 0.0,
                        "velocity " + sci(r.longitudinal_velocity) + ", drift " + sci(r.longitudinal_drift)});
    if (!r.message.empty()) {
        b.message = r.message;
        b.complete = false;
    }
    b.plots.push_back({"b-difference", "b_difference", "t", {{"max |dB|", "max_difference", "", ""}}});
}

void run(const TrajectoryOptions& o, Bundle& b)
{
    auto r = run_trajectory(o);
    const auto& tr = r.trajectory;
    Table t = make_table("trajectory", "configuration along the path", {"t", "coordinate", "value"});
    Table p = make_table("path", "log density along the path", {"t", "log_density"});
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        for (std::size_t j = 0; j < tr.states[k].size(); ++j) t.add_row({tr.times[k], I(j), tr.states[k][j]});
        p.add_row({tr.times[k], r.log_density[k]});
    }
    b.tables = {t, p};
    b.summary["steps"] = tr.stats.steps;
    b.summary["rejections"] = tr.stats.rejections;
    b.summary["degenerate_events"] = tr.stats.degenerate_events;
    b.summary["projection_residual"] = tr.stats.projection_residual;
    b.checks.push_back({"trajectory-complete", !tr.stats.flagged, tr.stats.message});
    if (tr.stats.flagged) {
        b.complete = false;
        b.message = tr.stats.message;
    }
    b.plots.push_back({"trajectory", "trajectory", "t", {{"x", "value", "", "coordinate"}}});
}

} // namespace

Bundle run_experiment(const ExperimentConfig& config)
{
    auto t0 = std::chrono::steady_clock::now();
    Bundle b;
    b.experiment = config.experiment;
    b.seed = config.seed;
    try {
        std::visit(
            [&](const auto& o) {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, OverlapScanOptions> || std::is_same_v<T, HollandOptions> ||
                              std::is_same_v<T, HiggsOptions>)
                    run(o, config.seed, b);
                else
                    run(o, b);
            },
            config.options);
    } catch (const std::exception& e) {
        // partial artifacts are kept; the summary marks the run incomplete
        b.complete = false;
        b.message = e.what();
    }
    b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return b;
}

fs::path output_root(const fs::path& fallback)
{
    if (const char* env = std::getenv("PWFIELD_OUTPUT_ROOT"); env && *env) return fs::path(env);
    return fallback;
}

namespace {

json plot_json(const PlotSpec& p)
{
    json s = json::array();
    for (const auto& x : p.series) s.push_back({{"name", x.name}, {"y", x.y}, {"y_err", x.y_err}, {"group", x.group}});
    return {{"table", p.table}, {"x", p.x}, {"series", s}};
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace

void write_bundle(const Bundle& b, const fs::path& dir, const json& config)
{
    fs::create_directories(dir);
    json files = json::array();
    for (const auto& t : b.tables) {
        write_csv(dir / (t.name + ".csv"), t);
        json side{{"table", t.name},
                  {"description", t.description},
                  {"experiment", b.experiment},
                  {"seed", b.seed},
                  {"columns", t.columns},
                  {"rows", t.rows.size()},
                  {"format", {{"delimiter", ","}, {"header", true}, {"encoding", "UTF-8"}, {"line_ending", "LF"},
                              {"significant_digits", 17}}}};
        write_json(dir / (t.name + ".json"), side);
        files.push_back(t.name + ".csv");
    }
    json checks = json::array();
    for (const auto& c : b.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    json plots = json::object();
    for (const auto& p : b.plots) plots[p.kind] = plot_json(p);
    SeedTree tree(b.seed);
    json summary{{"experiment", b.experiment},
                 {"seed", b.seed},
                 {"complete", b.complete},
                 {"pass", b.pass()},
                 {"message", b.message},
                 {"runtime_seconds", b.seconds},
                 {"checks", checks},
                 {"results", b.summary},
                 {"files", files},
                 {"plots", plots},
                 {"config", config}};
    write_json(dir / "summary.json", summary);
}

std::vector<std::string> plot_kinds(const fs::path& dir)
{
    std::ifstream in(dir / "summary.json");
    if (!in) throw std::runtime_error("no summary.json in " + dir.string());
    json s = json::parse(in);
    std::vector<std::string> k;
    for (const auto& [name, v] : s["plots"].items()) k.push_back(name);
    return k;
}

Table plot_data(const fs::path& dir, const std::string& kind)
{
    std::ifstream in(dir / "summary.json");
    if (!in) throw std::runtime_error("no summary.json in " + dir.string());
    json s = json::parse(in);
    if (!s.contains("plots") || !s["plots"].contains(kind)) {
        std::string have;
        for (const auto& [name, v] : s["plots"].items()) have += (have.empty() ? "" : ", ") + name;
        throw std::runtime_error("bundle has no plot kind '" + kind + "' (available: " + have + ")");
    }
    const json& p = s["plots"][kind];
    std::string table = p["table"].get<std::string>();
    fs::path csv = dir / (table + ".csv");
    if (!fs::exists(csv)) throw std::runtime_error("plot '" + kind + "' needs missing series file " + csv.string());
    Table t = read_csv(csv);
    Table out = make_table(kind, "plot data", {"series", "x", "y", "y_err"});
    auto need = [&](const std::string& c) {
        if (!t.has_column(c)) throw std::runtime_error("plot '" + kind + "' needs missing series '" + c + "' in " + table);
        return t.column(c);
    };
    std::size_t xc = need(p["x"].get<std::string>());
    for (const auto& ser : p["series"]) {
        std::size_t yc = need(ser["y"].get<std::string>());
        std::string ec = ser["y_err"].get<std::string>(), gc = ser["group"].get<std::string>();
        std::optional<std::size_t> e, g;
        if (!ec.empty()) e = need(ec);
        if (!gc.empty()) g = need(gc);
        std::string base = ser["name"].get<std::string>();
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            std::string name = base;
            if (g) {
                std::string gv = format_cell(t.rows[r][*g]);
                name = base + gv;
            }
            out.add_row({name, t.number(r, xc), t.number(r, yc), e ? Cell(t.number(r, *e)) : Cell(std::string())});
        }
    }
    return out;
}

std::string describe_experiment(const std::string& name)
{
    static const std::map<std::string, std::string> d{
        {"equivariance", "transport a |Psi|^2 ensemble by the guidance law and KS-test every checkpoint"},
        {"relaxation", "coarse-grained H of a nonequilibrium ensemble under a Fock superposition"},
        {"overlap-scan", "density overlap against particle number with an exponential fit"},
        {"holland-sweep", "angular-beable moments, distinguishability sweep and length scale"},
        {"appendix-a", "naive against corrected velocity for quartic dispersion on a 1-D grid"},
        {"higgs-spectrum", "Higgs masses, dispersion tables and the linearization check"},
        {"gauge-equivalence", "Bohm and Valentini electromagnetic trajectories compared through B"},
        {"trajectory", "a single guidance trajectory with its log density"}};
    auto it = d.find(name);
    return it == d.end() ? std::string() : it->second;
}

} // namespace pwf::cli
