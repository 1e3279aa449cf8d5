#include "pwf_cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace pwf::cli {

const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names{"equivariance", "relaxation",        "overlap-scan", "holland-sweep",
                                                "appendix-a",   "higgs-spectrum",    "gauge-equivalence",
                                                "trajectory"};
    return names;
}

namespace {

using Errors = std::vector<std::string>;
constexpr double inf = std::numeric_limits<double>::infinity();

// A JSON object being read against the schema. Missing, mistyped, out-of-range and
// unknown fields are all collected rather than thrown.
class Section {
public:
    Section(const json* obj, std::string path, Errors& err) : obj_(obj), path_(std::move(path)), err_(&err)
    {
        if (obj_ && !obj_->is_object()) {
            fail("", "must be an object");
            obj_ = nullptr;
        }
    }

    bool present() const { return obj_ != nullptr; }
    bool has(const std::string& k) const { return obj_ && obj_->contains(k); }

    const json* raw(const std::string& k)
    {
        seen_.insert(k);
        if (!obj_ || !obj_->contains(k)) return nullptr;
        return &(*obj_)[k];
    }

    Section sub(const std::string& k, bool required)
    {
        const json* j = raw(k);
        if (!j && required && obj_) fail(k, "missing required section");
        return Section(j, join(k), *err_);
    }

    double number(const std::string& k, std::optional<double> def = {}, double lo = -inf, double hi = inf,
                  bool strict_lo = false)
    {
        const json* j = raw(k);
        if (!j) {
            if (!def && obj_) fail(k, "missing required field");
            return def.value_or(0.0);
        }
        if (!j->is_number()) {
            fail(k, "must be a number");
            return def.value_or(0.0);
        }
        double v = j->get<double>();
        if (!std::isfinite(v) || v < lo || (strict_lo && v == lo) || v > hi) {
            fail(k, range_text(lo, hi, strict_lo));
            return def.value_or(0.0);
        }
        return v;
    }

    std::int64_t integer(const std::string& k, std::optional<std::int64_t> def = {}, std::int64_t lo = 0,
                         std::int64_t hi = std::numeric_limits<std::int64_t>::max())
    {
        const json* j = raw(k);
        if (!j) {
            if (!def && obj_) fail(k, "missing required field");
            return def.value_or(lo);
        }
        if (!j->is_number_integer()) {
            fail(k, "must be an integer");
            return def.value_or(lo);
        }
        std::int64_t v = j->get<std::int64_t>();
        if (v < lo || v > hi) {
            fail(k, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return def.value_or(lo);
        }
        return v;
    }

    std::uint64_t seed(const std::string& k)
    {
        const json* j = raw(k);
        if (!j) {
            if (obj_) fail(k, "missing required field (runs are seeded explicitly)");
            return 0;
        }
        if (!j->is_number_unsigned()) {
            fail(k, "must be a non-negative integer");
            return 0;
        }
        return j->get<std::uint64_t>();
    }

    std::string text(const std::string& k, std::optional<std::string> def = {},
                     const std::vector<std::string>& allowed = {})
    {
        const json* j = raw(k);
        if (!j) {
            if (!def && obj_) fail(k, "missing required field");
            return def.value_or("");
        }
        if (!j->is_string()) {
            fail(k, "must be a string");
            return def.value_or("");
        }
        auto v = j->get<std::string>();
        if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            fail(k, "must be one of: " + list);
        }
        return v;
    }

    std::vector<double> numbers(const std::string& k, bool required, double lo = -inf)
    {
        const json* j = raw(k);
        std::vector<double> out;
        if (!j) {
            if (required && obj_) fail(k, "missing required field");
            return out;
        }
        if (!j->is_array() || j->empty()) {
            fail(k, "must be a non-empty array of numbers");
            return out;
        }
        for (std::size_t i = 0; i < j->size(); ++i) {
            const auto& e = (*j)[i];
            if (!e.is_number() || e.get<double>() < lo) {
                fail(k + "[" + std::to_string(i) + "]", "must be a number" + (lo > -inf ? " >= " + fmt(lo) : ""));
                continue;
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    // fields never read are schema violations
    void finish()
    {
        if (!obj_) return;
        for (const auto& [k, v] : obj_->items())
            if (!seen_.count(k)) fail(k, "unknown field");
    }

    Errors& errors() { return *err_; }
    void fail(const std::string& k, const std::string& what) { err_->push_back(join(k) + ": " + what); }
    std::string join(const std::string& k) const
    {
        if (k.empty()) return path_.empty() ? "<root>" : path_;
        return path_.empty() ? k : path_ + "." + k;
    }

private:
    static std::string fmt(double v)
    {
        std::ostringstream s;
        s << v;
        return s.str();
    }
    static std::string range_text(double lo, double hi, bool strict)
    {
        if (lo == -inf && hi == inf) return "must be a finite number";
        if (hi == inf) return std::string("must be ") + (strict ? "> " : ">= ") + fmt(lo);
        return "must lie in " + std::string(strict ? "(" : "[") + fmt(lo) + ", " + fmt(hi) + "]";
    }

    const json* obj_;
    std::string path_;
    Errors* err_;
    std::set<std::string> seen_;
};

std::vector<std::string> theory_names()
{
    return {"schrodinger-field", "free-em-bohm", "free-em-valentini", "massive-spin1", "higgs-quadratic"};
}

TheorySpec read_theory(Section s, std::optional<std::string> fixed_kind = {})
{
    TheorySpec t;
    std::string kind = fixed_kind ? s.text("kind", *fixed_kind, {*fixed_kind}) : s.text("kind", {}, theory_names());
    if (s.present()) {
        try {
            t.kind = theory_kind_from_string(kind);
        } catch (const std::exception&) {
        }
    }
    t.box_length = s.number("box_length", {}, 0.0, inf, true);
    t.cutoff = s.number("cutoff", {}, 0.0);
    switch (t.kind) {
    case TheoryKind::SchrodingerFieldBoson:
    case TheoryKind::MassiveSpin1: t.params.m = s.number("m", {}, 0.0, inf, true); break;
    case TheoryKind::HiggsQuadratic:
        t.params.mu = s.number("mu", {}, 0.0, inf, true);
        t.params.lambda = s.number("lambda", {}, 0.0, inf, true);
        t.params.e = s.number("e", {}, 0.0, inf, true);
        break;
    default: break;
    }
    s.finish();
    return t;
}

ModeCoefficients read_modes(Section& parent, const std::string& key, bool required)
{
    ModeCoefficients out;
    const json* j = parent.raw(key);
    if (!j) {
        if (required && parent.present()) parent.fail(key, "missing required field");
        return out;
    }
    if (!j->is_array() || j->empty()) {
        parent.fail(key, "must be a non-empty array of modes");
        return out;
    }
    for (std::size_t i = 0; i < j->size(); ++i) {
        Section e(&(*j)[i], parent.join(key + "[" + std::to_string(i) + "]"), parent.errors());
        if (!e.present()) continue;
        ModeKey k;
        const json* n = e.raw("n");
        bool ok = n && n->is_array() && n->size() == 3 &&
                  std::all_of(n->begin(), n->end(), [](const json& v) { return v.is_number_integer(); });
        if (ok) k.n = {(*n)[0].get<int>(), (*n)[1].get<int>(), (*n)[2].get<int>()};
        else e.fail("n", "must be three integers");
        k.pol = int(e.integer("pol", 0, 0, 2));
        k.sector = std::size_t(e.integer("sector", 0, 0, 1));
        double re = e.number("re"), im = e.number("im", 0.0);
        e.finish();
        if (out.count(k)) e.fail("", "repeats an earlier mode");
        out[k] = cplx(re, im);
    }
    return out;
}

FunctionalSpec read_functional(Section s)
{
    FunctionalSpec f;
    f.kind = s.text("kind", {}, {"vacuum", "coherent", "one-particle", "superposition"});
    bool needs_modes = f.kind != "vacuum";
    f.coefficients = read_modes(s, "modes", needs_modes);
    if (f.kind == "superposition") {
        f.second = read_modes(s, "second", true);
        auto w = s.numbers("weights", true);
        if (!w.empty() && w.size() != 4) s.fail("weights", "must hold four numbers: re1, im1, re2, im2");
        else if (w.size() == 4) f.weights = {cplx(w[0], w[1]), cplx(w[2], w[3])};
    }
    s.finish();
    return f;
}

Tolerances read_tolerances(Section s, Tolerances def)
{
    Tolerances t = def;
    if (!s.present()) return t;
    t.rtol = s.number("rtol", def.rtol, 0.0, inf, true);
    t.atol = s.number("atol", def.atol, 0.0, inf, true);
    t.initial_step = s.number("initial_step", def.initial_step, 0.0, inf, true);
    t.min_step = s.number("min_step", def.min_step, 0.0, inf, true);
    t.max_step = s.number("max_step", 1e300, 0.0, inf, true);
    if (t.max_step == 1e300) t.max_step = def.max_step;
    t.max_steps = std::size_t(s.integer("max_steps", std::int64_t(def.max_steps), 1));
    s.finish();
    return t;
}

std::size_t count(Section& s, const std::string& k, std::int64_t lo = 1, std::int64_t hi = 100000000)
{
    return std::size_t(s.integer(k, {}, lo, hi));
}

ExperimentConfig parse(const json& config, Errors& err)
{
    ExperimentConfig c;
    c.source = config;
    Section root(&config, "", err);
    if (!root.present()) return c;
    c.experiment = root.text("experiment", {}, experiment_names());
    c.seed = root.seed("seed");
    c.output = root.text("output", c.experiment.empty() ? "run" : c.experiment + "-seed" + std::to_string(c.seed));
    if (c.output.find("..") != std::string::npos || (!c.output.empty() && c.output.front() == '/'))
        root.fail("output", "must be a relative directory name inside the output root");
    const std::string& x = c.experiment;

    if (x == "equivariance") {
        EquivarianceExperimentOptions o;
        o.theory = read_theory(root.sub("theory", true));
        o.functional = read_functional(root.sub("functional", true));
        auto e = root.sub("ensemble", true);
        o.samples = count(e, "samples", 10);
        o.final_time = e.number("final_time", {}, 0.0, inf, true);
        o.checkpoints = count(e, "checkpoints", 2, 1000);
        e.finish();
        auto t = root.sub("test", false);
        o.alpha = t.number("alpha", 0.01, 0.0, 1.0, true);
        o.projections = std::size_t(t.integer("projections", 4, 0, 1000));
        t.finish();
        o.tolerances = read_tolerances(root.sub("tolerances", false), o.tolerances);
        o.seed = c.seed;
        c.options = o;
    } else if (x == "relaxation") {
        RelaxationOptions o;
        auto th = read_theory(root.sub("theory", true), std::string("free-em-bohm"));
        o.box_length = th.box_length;
        o.cutoff = th.cutoff;
        auto r = root.sub("relaxation", true);
        o.max_quanta = int(r.integer("max_quanta", {}, 1, 8));
        o.samples = count(r, "samples", 10);
        o.final_time = r.number("final_time", {}, 0.0, inf, true);
        o.checkpoints = count(r, "checkpoints", 3, 1000);
        o.bin_fraction = r.number("bin_fraction", 0.05, 0.0, 1.0, true);
        r.finish();
        o.tolerances = read_tolerances(root.sub("tolerances", false), o.tolerances);
        o.seed = c.seed;
        c.options = o;
    } else if (x == "overlap-scan") {
        OverlapScanOptions o;
        auto s = root.sub("overlap", true);
        o.family = s.text("family", {}, {"excitation", "holland"});
        o.n_min = int(s.integer("n_min", {}, 1, max_particle_number));
        o.n_max = int(s.integer("n_max", {}, 1, max_particle_number));
        if (s.has("n_min") && s.has("n_max") && o.n_max < o.n_min) s.fail("n_max", "must not be below n_min");
        o.samples = count(s, "samples", 100);
        s.finish();
        c.options = o;
    } else if (x == "holland-sweep") {
        HollandOptions o;
        auto s = root.sub("holland", true);
        for (double v : s.numbers("region_sizes", true, 1.0)) {
            if (v != std::floor(v)) s.fail("region_sizes", "must hold integers");
            o.region_sizes.push_back(std::size_t(v));
        }
        o.fractions = s.numbers("fractions", true, 0.0);
        for (double f : o.fractions)
            if (f > 1.0) s.fail("fractions", "must lie in [0, 1]");
        o.configs = count(s, "configs", 2);
        o.moment_samples = count(s, "moment_samples", 2);
        o.factor = s.number("factor", 10.0, 0.0, inf, true);
        o.lattice_spacing = s.number("lattice_spacing", {}, 0.0, inf, true);
        o.density = s.number("density", {}, 0.0, inf, true);
        o.margin = s.number("margin", 10.0, 0.0, inf, true);
        s.finish();
        c.options = o;
    } else if (x == "appendix-a") {
        QuarticExperimentOptions o;
        auto q = root.sub("quartic", true);
        o.alpha1 = q.number("alpha1", {}, 0.0, inf, true);
        o.alpha2 = q.number("alpha2", {}, 0.0, inf, true);
        o.points = int(q.integer("points", {}, 16, 1 << 22));
        o.box = q.number("box", {}, 0.0, inf, true);
        o.center = q.number("center", {});
        o.sigma = q.number("sigma", {}, 0.0, inf, true);
        o.momentum = q.number("momentum", {});
        o.final_time = q.number("final_time", {}, 0.0, inf, true);
        o.checkpoints = int(q.integer("checkpoints", {}, 2, 1000));
        o.samples = count(q, "samples", 10);
        o.steps = count(q, "steps", 1);
        q.finish();
        auto t = root.sub("test", false);
        o.alpha = t.number("alpha", 0.01, 0.0, 1.0, true);
        t.finish();
        o.seed = c.seed;
        c.options = o;
    } else if (x == "higgs-spectrum") {
        HiggsOptions o;
        auto t = root.sub("theory", true);
        o.mu = t.number("mu", {}, 0.0, inf, true);
        o.lambda = t.number("lambda", {}, 0.0, inf, true);
        o.e = t.number("e", {}, 0.0);
        o.box_length = t.number("box_length", {}, 0.0, inf, true);
        o.cutoff = t.number("cutoff", {}, 0.0, inf, true);
        t.finish();
        auto l = root.sub("linearization", false);
        o.amplitudes = l.numbers("amplitudes", false, 0.0);
        if (o.amplitudes.empty()) o.amplitudes = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
        l.finish();
        c.options = o;
    } else if (x == "gauge-equivalence") {
        GaugeEquivalenceOptions o;
        auto th = root.sub("theory", true);
        o.box_length = th.number("box_length", {}, 0.0, inf, true);
        o.cutoff = th.number("cutoff", {}, 0.0, inf, true);
        th.finish();
        o.functional = read_functional(root.sub("functional", true));
        auto g = root.sub("gauge", true);
        o.trajectories = count(g, "trajectories", 1, 100000);
        o.final_time = g.number("final_time", {}, 0.0, inf, true);
        o.checkpoints = count(g, "checkpoints", 2, 1000);
        o.longitudinal_scale = g.number("longitudinal_scale", {}, 0.0);
        g.finish();
        auto t = root.sub("test", false);
        o.tolerance = t.number("tolerance", 1e-6, 0.0, inf, true);
        t.finish();
        o.tolerances = read_tolerances(root.sub("tolerances", false), o.tolerances);
        o.seed = c.seed;
        c.options = o;
    } else if (x == "trajectory") {
        TrajectoryOptions o;
        o.theory = read_theory(root.sub("theory", true));
        o.functional = read_functional(root.sub("functional", true));
        auto t = root.sub("trajectory", true);
        o.final_time = t.number("final_time", {}, 0.0, inf, true);
        o.checkpoints = count(t, "checkpoints", 2, 100000);
        o.start = t.numbers("start", false);
        t.finish();
        o.tolerances = read_tolerances(root.sub("tolerances", false), o.tolerances);
        o.seed = c.seed;
        c.options = o;
    } else if (!x.empty()) {
        // unknown name already reported by the enumeration check
        return c;
    }
    root.finish();
    return c;
}

} // namespace

std::vector<std::string> validate_config(const json& config)
{
    Errors err;
    auto c = parse(config, err);
    if (!err.empty()) return err;
    // semantic checks that need the constructed objects
    try {
        std::visit(
            [&](const auto& o) {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, EquivarianceExperimentOptions> || std::is_same_v<T, TrajectoryOptions>) {
                    TheoryModel th = o.theory.build();
                    build_functional(th, o.functional);
                    if constexpr (std::is_same_v<T, TrajectoryOptions>)
                        if (!o.start.empty() && o.start.size() != th.space()->dimension())
                            err.push_back("trajectory.start: must hold " + std::to_string(th.space()->dimension()) +
                                          " coordinates");
                } else if constexpr (std::is_same_v<T, GaugeEquivalenceOptions>) {
                    TheoryModel th(TheoryKind::FreeEM_Bohm, {}, o.box_length, o.cutoff);
                    build_functional(th, o.functional);
                } else if constexpr (std::is_same_v<T, RelaxationOptions>) {
                    TheoryModel th(TheoryKind::FreeEM_Bohm, {}, o.box_length, o.cutoff);
                    const ModeBasis& b = *th.space()->sectors()[0].basis;
                    if (!b.index_of({1, 1, 0}) || !b.index_of({0, 0, 1}))
                        err.push_back("theory.cutoff: the relaxation modes need a cutoff of at least sqrt 2");
                }
            },
            c.options);
    } catch (const std::exception& e) {
        err.push_back(std::string("functional: ") + e.what());
    }
    return err;
}

ExperimentConfig parse_config(const json& config)
{
    auto err = validate_config(config);
    if (!err.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : err) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    Errors none;
    return parse(config, none);
}

json load_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration " + path.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("configuration " + path.string() + " is not valid JSON: " + e.what());
    }
}

} // namespace pwf::cli
