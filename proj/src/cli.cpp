#include "twophase/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "twophase/errors.hpp"

#ifndef TWOPHASE_VERSION
#define TWOPHASE_VERSION "0.0.0"
#endif
#ifndef TWOPHASE_GIT
#define TWOPHASE_GIT "unknown"
#endif

namespace twophase::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum class Kind { Real, OptReal, Int, Bool, Text };

struct KeyDef {
    const char* key;
    Kind kind;
    const char* value;
};

// Defaults. Exactly one of spec.u_minus / spec.delta is non-empty; setting
// one clears the other.
const std::vector<KeyDef>& schema() {
    static const std::vector<KeyDef> defs = {
        {"seed", Kind::Int, "0"},
        {"spec.A1", Kind::Real, "1"},
        {"spec.A2", Kind::Real, "1"},
        {"spec.gamma", Kind::Real, "1"},
        {"spec.alpha", Kind::Real, "1"},
        {"spec.mu", Kind::Real, "1"},
        {"spec.rho_plus", Kind::Real, "1"},
        {"spec.n_plus", Kind::Real, "1"},
        {"spec.u_plus", Kind::Real, "-2"},
        {"spec.u_minus", Kind::OptReal, ""},
        {"spec.delta", Kind::OptReal, "0.05"},
        {"spec.sonic", Kind::Bool, "false"},
        {"spec.sonic_tolerance", Kind::Real, "1e-9"},
        {"grid.length", Kind::Real, "100"},
        {"grid.cells", Kind::Int, "1024"},
        {"steady.sigma_seed", Kind::Real, "0.001"},
        {"steady.eps_seed", Kind::Real, "0"},
        {"steady.x_far", Kind::Real, "0"},
        {"steady.max_delta", Kind::Real, "0.1"},
        {"steady.allow_large_delta", Kind::Bool, "false"},
        {"steady.x_domain", Kind::Real, "100"},
        {"steady.max_sonic_domain", Kind::Real, "100000"},
        {"steady.segment_length", Kind::Real, "2"},
        {"steady.max_shoot_length", Kind::Real, "10000"},
        {"steady.points", Kind::Int, "2048"},
        {"steady.ode_tolerance", Kind::Real, "1e-10"},
        {"steady.newton_tolerance", Kind::Real, "1e-12"},
        {"steady.max_iter", Kind::Int, "50"},
        {"steady.match_tolerance", Kind::Real, "1e-8"},
        {"steady.farfield_tolerance", Kind::Real, "5e-3"},
        {"steady.fit_lo", Kind::OptReal, ""},
        {"steady.fit_hi", Kind::OptReal, ""},
        {"evolve.t_end", Kind::Real, "10"},
        {"evolve.cfl", Kind::Real, "0.4"},
        {"evolve.drag_limit", Kind::Bool, "false"},
        {"evolve.observer_stride", Kind::Int, "0"},
        {"evolve.observer_interval", Kind::Real, "0"},
        {"evolve.wall_budget", Kind::Real, "0"},
        {"evolve.max_steps", Kind::Int, "100000000"},
        {"evolve.reference", Kind::Text, "equilibrium"},
        {"evolve.equilibrium_tolerance", Kind::Real, "1e-11"},
        {"evolve.pert_shape", Kind::Text, "gaussian"},
        {"evolve.pert_amplitude", Kind::Real, "0"},
        {"evolve.pert_center", Kind::Real, "10"},
        {"evolve.pert_width", Kind::Real, "2"},
        {"evolve.pert_components", Kind::Text, "u"},
        {"evolve.pert_file", Kind::Text, ""},
        {"evolve.pert_weight", Kind::Text, "none"},
        {"diagnostics.weights", Kind::Text, ""},
        {"diagnostics.input", Kind::Text, ""},
        {"diagnostics.fit_norm", Kind::Text, "h1"},
        {"diagnostics.fit_model", Kind::Text, "exponential"},
        {"diagnostics.fit_t_lo", Kind::OptReal, ""},
        {"diagnostics.fit_t_hi", Kind::OptReal, ""},
        {"diagnostics.r2_threshold", Kind::Real, "0.95"},
        {"diagnostics.forms", Kind::Text, "M1,M2,M3,M4"},
        {"diagnostics.nu", Kind::OptReal, ""},
        {"diagnostics.sigma", Kind::OptReal, ""},
        {"diagnostics.k", Kind::OptReal, ""},
        {"diagnostics.zero_tolerance", Kind::Real, "1e-10"},
        {"output.directory", Kind::Text, ""},
        {"output.prefix", Kind::Text, ""},
        {"sweep.parameter", Kind::Text, ""},
        {"sweep.values", Kind::Text, ""},
        {"sweep.samples", Kind::Int, "0"},
        {"sweep.lo", Kind::OptReal, ""},
        {"sweep.hi", Kind::OptReal, ""},
        {"sweep.subcommand", Kind::Text, "steady"},
        {"sweep.workers", Kind::Int, "1"},
    };
    return defs;
}

const KeyDef* find_key(const std::string& key) {
    for (const auto& d : schema())
        if (key == d.key) return &d;
    return nullptr;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_real(const std::string& key, const std::string& text) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (text.empty() || end != begin + text.size() || !std::isfinite(v))
        throw ConfigError(key + ": expected a finite number, got '" + text + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& text) {
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(begin, &end, 10);
    if (text.empty() || end != begin + text.size() || errno != 0)
        throw ConfigError(key + ": expected an integer, got '" + text + "'");
    return v;
}

std::string canonical(const KeyDef& def, const std::string& raw) {
    const std::string key = def.key;
    const std::string v = trim(raw);
    switch (def.kind) {
        case Kind::Real: return format_real(parse_real(key, v));
        case Kind::OptReal: return v.empty() ? std::string() : format_real(parse_real(key, v));
        case Kind::Int: return std::to_string(parse_int(key, v));
        case Kind::Bool: {
            std::string low = v;
            std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return std::tolower(c); });
            if (low == "true" || low == "1" || low == "yes" || low == "on") return "true";
            if (low == "false" || low == "0" || low == "no" || low == "off") return "false";
            throw ConfigError(key + ": expected true or false, got '" + v + "'");
        }
        case Kind::Text: return v;
    }
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key + ": " + what);
}

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

// Writes a file under a temporary name and renames it into place, so a
// failed run never leaves a truncated file under a final name.
class Emitter {
public:
    Emitter(fs::path dir, std::string prefix, std::vector<std::string>& outputs)
        : dir_(std::move(dir)), prefix_(std::move(prefix)), outputs_(outputs) {}

    fs::path path(const std::string& name) const { return dir_ / (prefix_ + name); }

    void text(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const fs::path final_path = path(name);
        const fs::path tmp = final_path.string() + ".partial";
        try {
            std::ofstream os(tmp);
            if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
            body(os);
            os.flush();
            if (!os) throw IoError("write failed for " + tmp.string());
        } catch (...) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw;
        }
        commit(tmp, final_path);
    }

    void snapshot(const std::string& name, const EvolutionState& state, const Grid1D& grid, const std::string& hash) {
        const fs::path final_path = path(name);
        const fs::path tmp = final_path.string() + ".partial";
        try {
            write_snapshot(tmp.string(), state, grid, hash);
        } catch (...) {
            std::error_code ec;
            fs::remove(tmp, ec);
            fs::remove(tmp.string() + ".meta", ec);
            throw;
        }
        commit(tmp, final_path);
        commit(tmp.string() + ".meta", final_path.string() + ".meta");
    }

private:
    void commit(const fs::path& tmp, const fs::path& final_path) {
        std::error_code ec;
        fs::rename(tmp, final_path, ec);
        if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
        outputs_.push_back(final_path.string());
    }

    fs::path dir_;
    std::string prefix_;
    std::vector<std::string>& outputs_;
};

json fit_json(const SpatialDecayFit& f) {
    return json{{"law", f.law == SpatialLaw::Exponential ? "exponential" : "algebraic"},
                {"rate_or_slope", f.rate_or_slope},
                {"prefactor", f.prefactor},
                {"r_squared", f.r_squared},
                {"window", {f.window.first, f.window.second}},
                {"samples", f.samples}};
}

json norm_json(const NormRecord& r) {
    json j{{"t", r.t}, {"l2", r.l2}, {"h1", r.h1}, {"linf", r.linf}, {"drag_l2", r.drag_l2}};
    for (const auto& [k, v] : r.weighted) j[k] = v;
    return j;
}

void write_json(Emitter& out, const std::string& name, const json& j) {
    out.text(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b, double ref) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] * b[i] - ref) / std::abs(ref));
    return m;
}

// Subcommand bodies. Each writes its files through the emitter and may set
// the status to Truncated.
using Body = std::function<void(const ExperimentConfig&, Emitter&, RunRecord&, const RunOptions&)>;

SteadySolveOptions evolve_steady_options(const ExperimentConfig& c, const Grid1D& grid) {
    SteadySolveOptions o = c.steady_options();
    o.x_domain = std::max(o.x_domain, grid.length + grid.dx);
    return o;
}

void run_steady(const ExperimentConfig& c, Emitter& out, RunRecord&, const RunOptions&) {
    const ModelSpec spec = c.model_spec();
    const SteadyProfile p = solve_steady(spec, c.steady_options());
    out.text("profile.csv", [&](std::ostream& os) { write_profile_csv(os, p); });

    const double j1 = p.far.rho_plus * p.far.u_plus;
    const double j2 = p.far.n_plus * p.far.u_plus;
    const double up = p.far.u_plus;
    const double b1 = std::abs(p.rho_t.front() * p.achieved_u_minus / p.far.rho_plus - up) / std::abs(up);
    const double b2 = std::abs(p.n_t.front() * p.achieved_v_minus / p.far.n_plus - up) / std::abs(up);

    json rep{{"regime", to_string(p.regime.cls)},
             {"mach", p.regime.mach},
             {"method", p.info.method},
             {"delta", p.delta},
             {"u_minus", spec.u_minus()},
             {"achieved_u_minus", p.achieved_u_minus},
             {"achieved_v_minus", p.achieved_v_minus},
             {"boundary_compatible", p.boundary_compatible},
             {"v_mismatch", p.info.v_mismatch},
             {"newton_iterations", p.info.newton_iterations},
             {"boundary_residual", p.info.boundary_residual},
             {"x_far", p.info.x_far},
             {"points", p.size()},
             {"length", p.length()},
             {"residual", steady_residual(spec, p)},
             {"mass_flux_error", std::max(max_rel(p.rho_t, p.u_t, j1), max_rel(p.n_t, p.v_t, j2))},
             {"boundary_relation_error", std::max(b1, b2)}};

    if (p.delta > 0.0) {
        const double lo = c.optional_real("steady.fit_lo").value_or(0.5 * p.length());
        const double hi = c.optional_real("steady.fit_hi").value_or(p.length());
        const bool sonic = p.regime.cls == RegimeClass::Sonic;
        try {
            const auto fit = fit_spatial_decay(p, ProfileQuantity::U,
                                               sonic ? SpatialLaw::Algebraic : SpatialLaw::Exponential, {lo, hi});
            rep["decay_fit"] = fit_json(fit);
        } catch (const std::exception& e) {
            rep["decay_fit"] = json{{"error", e.what()}};
        }
        if (sonic) {
            rep["a"] = derived_constants(spec).a;
            try {
                rep["curvature_ratio"] = sonic_curvature_ratio(p, {lo, hi});
            } catch (const std::exception& e) {
                rep["curvature_ratio"] = json{{"error", e.what()}};
            }
        }
    }
    write_json(out, "steady_report.json", rep);
}

void run_evolve(const ExperimentConfig& c, Emitter& out, RunRecord& rec, const RunOptions&) {
    const ModelSpec spec0 = c.model_spec();
    const Grid1D grid = c.grid();
    const SteadyProfile p = solve_steady(spec0, evolve_steady_options(c, grid));
    const ModelSpec spec = spec0.with_u_minus(p.achieved_u_minus);
    const Problem problem(spec, grid, BoundaryData::from_profile(spec, p, grid));

    const EvolutionState init = initialize(p, grid, c.perturbation());
    EvolutionState reference = sample_state(p, grid);
    const std::string ref_kind = c.text("evolve.reference");
    if (ref_kind == "equilibrium") {
        EquilibriumOptions eo;
        eo.tolerance = c.real("evolve.equilibrium_tolerance");
        reference = discrete_equilibrium(reference, problem, eo);
    }

    std::optional<SigmaParams> sigma;
    if (p.delta > 0.0) sigma = SigmaParams{derived_constants(spec).a, p.delta};
    NormSeries series;
    const std::vector<Observer> observers{norm_observer(series, reference, grid, c.weights(), sigma)};

    const EvolveResult res = evolve(init, problem, c.evolve_options(), observers);
    if (res.truncated) {
        rec.status = RunStatus::Truncated;
        rec.reason = "wall-clock budget or step limit reached at t=" + format_real(res.state.t);
    }

    out.text("norms.csv", [&](std::ostream& os) { write_norm_csv(os, series); });
    out.snapshot("final.csv", res.state, grid, c.hash());

    json rep{{"regime", to_string(p.regime.cls)},
             {"reference", ref_kind},
             {"reference_residual", discrete_residual(reference, problem)},
             {"steps", res.steps},
             {"t_final", res.state.t},
             {"truncated", res.truncated},
             {"records", series.records.size()}};
    if (!series.records.empty()) {
        rep["initial"] = norm_json(series.records.front());
        rep["final"] = norm_json(series.records.back());
    }
    write_json(out, "evolve_report.json", rep);
}

void run_decay_fit(const ExperimentConfig& c, Emitter& out, RunRecord&, const RunOptions&) {
    const std::string input = c.text("diagnostics.input");
    require(!input.empty(), "diagnostics.input", "decay-fit needs a norm-series CSV path");
    const NormSeries series = read_norm_csv(input);
    const std::string model = c.text("diagnostics.fit_model");
    const TemporalLaw law = model == "algebraic" ? TemporalLaw::Algebraic : TemporalLaw::Exponential;
    std::optional<std::pair<double, double>> window;
    const auto lo = c.optional_real("diagnostics.fit_t_lo");
    const auto hi = c.optional_real("diagnostics.fit_t_hi");
    if (lo || hi) {
        const auto t = series.times();
        require(!t.empty(), "diagnostics.input", "norm series is empty");
        window = std::make_pair(lo.value_or(t.front()), hi.value_or(t.back()));
    }
    const auto fit = fit_temporal_decay(series, c.text("diagnostics.fit_norm"), law, window);
    const double threshold = c.real("diagnostics.r2_threshold");
    json rep{{"input", input},
             {"norm", c.text("diagnostics.fit_norm")},
             {"model", to_string(fit.model)},
             {"rate", fit.rate},
             {"prefactor", fit.prefactor},
             {"r_squared", fit.r_squared},
             {"window", {fit.window.first, fit.window.second}},
             {"samples", fit.samples},
             {"r2_threshold", threshold},
             {"trustworthy", fit.r_squared >= threshold}};
    write_json(out, "fit_report.json", rep);
}

void run_matrix_check(const ExperimentConfig& c, Emitter& out, RunRecord&, const RunOptions&) {
    const ModelSpec spec = c.model_spec();
    const FormContext ctx = c.form_context();
    const double tol = c.real("diagnostics.zero_tolerance");
    json forms = json::array();
    for (FormName f : c.forms()) forms.push_back(json::parse(assemble_quadratic_form(f, spec, ctx, tol).to_text()));
    json rep{{"spec", spec.describe()},
             {"regime", to_string(classify_regime(spec, c.real("spec.sonic_tolerance")).cls)},
             {"sonic_condition_margin", sonic_pressure_condition(spec).margin},
             {"forms", forms}};
    write_json(out, "forms.json", rep);
}

void run_regime(const ExperimentConfig& c, Emitter& out, RunRecord&, const RunOptions&) {
    const ModelSpec spec = c.model_spec();
    const Regime r = classify_regime(spec, c.real("spec.sonic_tolerance"));
    const DerivedConstants d = derived_constants(spec);
    const SonicCondition sc = sonic_pressure_condition(spec);
    const FarFieldJacobian jac = farfield_jacobian(spec);
    const EigenSystem es = eigensystem(jac);

    const Eigen::Matrix3d& J = jac.entries;
    const double tr = J.trace();
    const double det = J.determinant();
    const double inv2 = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0) + J(0, 0) * J(2, 2) - J(0, 2) * J(2, 0) +
                        J(1, 1) * J(2, 2) - J(1, 2) * J(2, 1);
    const auto& l = es.lambdas;
    const double sum = (l[0] + l[1] + l[2]).real();
    const double pair = (l[0] * l[1] + l[0] * l[2] + l[1] * l[2]).real();
    const double prod = (l[0] * l[1] * l[2]).real();
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };

    json eig = json::array();
    for (const auto& z : l) eig.push_back(json{{"re", z.real()}, {"im", z.imag()}});
    json rep{{"spec", spec.describe()},
             {"c_plus", d.c_plus},
             {"mach", r.mach},
             {"class", to_string(r.cls)},
             {"eigenvalues", eig},
             {"sign_pattern", es.pattern_string()},
             {"vieta_residuals", {{"sum", rel(sum, tr)}, {"pair_sum", rel(pair, inv2)}, {"product", rel(prod, det)}}},
             {"a", d.a},
             {"b", d.b},
             {"lambda_star", d.lambda_star},
             {"sonic_condition", {{"holds", sc.holds}, {"margin", sc.margin}}}};
    write_json(out, "regime.json", rep);
}

void run_sweep(const ExperimentConfig& c, Emitter& out, RunRecord& rec, const RunOptions& opts) {
    const std::string param = c.text("sweep.parameter");
    require(!param.empty(), "sweep.parameter", "sweep needs a parameter key");
    require(find_key(param) != nullptr, "sweep.parameter", "unknown key '" + param + "'");
    require(param.rfind("sweep.", 0) != 0 && param != "output.directory", "sweep.parameter",
            "cannot sweep '" + param + "'");
    const std::string sub = c.text("sweep.subcommand");
    require(sub != "sweep" && std::find(subcommands().begin(), subcommands().end(), sub) != subcommands().end(),
            "sweep.subcommand", "must name a non-sweep subcommand, got '" + sub + "'");

    std::vector<std::string> values = split_list(c.text("sweep.values"));
    const long long samples = c.integer("sweep.samples");
    if (samples > 0) {
        const auto lo = c.optional_real("sweep.lo");
        const auto hi = c.optional_real("sweep.hi");
        require(lo && hi && *lo < *hi, "sweep.lo", "random sampling needs sweep.lo < sweep.hi");
        std::mt19937_64 gen(c.seed());
        std::uniform_real_distribution<double> dist(*lo, *hi);
        for (long long i = 0; i < samples; ++i) values.push_back(format_real(dist(gen)));
    }
    require(!values.empty(), "sweep.values", "no sweep values (set sweep.values or sweep.samples)");

    struct Job {
        ExperimentConfig config;
        std::string value;
        std::string hash;
        RunRecord record;
    };
    std::vector<Job> jobs;
    std::set<std::string> seen;
    for (const auto& v : values) {
        ExperimentConfig child = c;
        child.set(param, v);
        child.set("output.directory", "");
        child.validate();
        const std::string h = child.hash();
        if (!seen.insert(h).second) continue;
        jobs.push_back({child, child.values().at(param), h, {}});
    }
    std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.hash < b.hash; });

    const fs::path root = opts.out_dir;
    int workers = opts.workers > 0 ? opts.workers : static_cast<int>(c.integer("sweep.workers"));
    workers = std::clamp(workers, 1, static_cast<int>(jobs.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            RunOptions child_opts{(root / jobs[i].hash).string(), 1};
            jobs[i].record = run_subcommand(sub, jobs[i].config, child_opts);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int failed = 0;
    int worst = 0;
    for (const auto& j : jobs) {
        if (j.record.exit_code != 0) {
            ++failed;
            worst = std::max(worst, j.record.exit_code);
        }
    }
    out.text("index.csv", [&](std::ostream& os) {
        os << "hash,parameter,value,status,exit_code,directory\n";
        for (const auto& j : jobs)
            os << j.hash << ',' << param << ',' << j.value << ',' << to_string(j.record.status) << ','
               << j.record.exit_code << ',' << j.hash << '\n';
    });
    if (failed > 0) {
        rec.status = RunStatus::Aborted;
        rec.reason = std::to_string(failed) + " of " + std::to_string(jobs.size()) + " sweep runs failed";
        rec.exit_code = worst;
    }
}

const std::map<std::string, Body>& bodies() {
    static const std::map<std::string, Body> m = {
        {"steady", run_steady},         {"evolve", run_evolve}, {"decay-fit", run_decay_fit},
        {"matrix-check", run_matrix_check}, {"regime", run_regime}, {"sweep", run_sweep},
    };
    return m;
}

void write_record(const RunRecord& rec, const fs::path& dir, const std::string& prefix) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path path = dir / (prefix + "run.json");
    const fs::path tmp = path.string() + ".partial";
    {
        std::ofstream os(tmp);
        if (!os) throw IoError("cannot write run record " + path.string());
        os << rec.to_json() << '\n';
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename run record: " + ec.message());
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
    for (const auto& d : schema()) values_[d.key] = canonical(d, d.value);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const KeyDef* def = find_key(key);
    if (!def) throw ConfigError(key + ": unknown key");
    const std::string v = canonical(*def, value);
    values_[key] = v;
    if (!v.empty() && key == "spec.u_minus") values_["spec.delta"] = "";
    if (!v.empty() && key == "spec.delta") values_["spec.u_minus"] = "";
}

void ExperimentConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "': expected section.key=value");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

bool ExperimentConfig::is_set(const std::string& key) const {
    const auto it = values_.find(key);
    return it != values_.end() && !it->second.empty();
}

const std::string& ExperimentConfig::text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key + ": unknown key");
    return it->second;
}

double ExperimentConfig::real(const std::string& key) const { return parse_real(key, text(key)); }

std::optional<double> ExperimentConfig::optional_real(const std::string& key) const {
    const std::string& v = text(key);
    if (v.empty()) return std::nullopt;
    return parse_real(key, v);
}

long long ExperimentConfig::integer(const std::string& key) const { return parse_int(key, text(key)); }

bool ExperimentConfig::flag(const std::string& key) const { return text(key) == "true"; }

std::string ExperimentConfig::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    for (const auto& [k, v] : values_) {
        const std::string line = k + "=" + v + "\n";
        for (unsigned char ch : line) {
            h ^= ch;
            h *= 1099511628211ull;
        }
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string ExperimentConfig::echo() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    return os.str();
}

ModelSpec ExperimentConfig::model_spec() const {
    FluidConstants f;
    f.A1 = real("spec.A1");
    f.A2 = real("spec.A2");
    f.gamma = real("spec.gamma");
    f.alpha = real("spec.alpha");
    f.mu = real("spec.mu");
    FarFieldState far;
    far.rho_plus = real("spec.rho_plus");
    far.n_plus = real("spec.n_plus");
    far.u_plus = real("spec.u_plus");
    const auto u_minus = optional_real("spec.u_minus");
    const auto delta = optional_real("spec.delta");
    if (!u_minus && !delta) throw ConfigError("spec.u_minus: one of spec.u_minus or spec.delta must be set");
    if (delta) require(*delta >= 0.0, "spec.delta", "delta must be >= 0");
    try {
        f.validate();
        if (flag("spec.sonic")) far = sonic_far_state(f, far.rho_plus, far.n_plus);
        return u_minus ? ModelSpec(f, far, *u_minus) : ModelSpec::with_delta(f, far, *delta);
    } catch (const ConfigError& e) {
        std::string what = e.what();
        std::string field = what.substr(0, what.find(' '));
        if (field == "u_minus" && !u_minus) field = "delta";
        throw ConfigError("spec." + field + ": " + what);
    }
}

Grid1D ExperimentConfig::grid() const {
    const double length = real("grid.length");
    const long long cells = integer("grid.cells");
    require(length > 0.0, "grid.length", "length must be > 0");
    require(cells >= 2 && cells <= 100'000'000, "grid.cells", "cells must be in [2, 1e8]");
    return Grid1D::uniform(length, static_cast<int>(cells));
}

SteadySolveOptions ExperimentConfig::steady_options() const {
    SteadySolveOptions o;
    auto positive = [&](const char* key) {
        const double v = real(key);
        require(v > 0.0, key, "must be > 0");
        return v;
    };
    auto nonneg = [&](const char* key) {
        const double v = real(key);
        require(v >= 0.0, key, "must be >= 0");
        return v;
    };
    o.sigma_seed = positive("steady.sigma_seed");
    o.eps_seed = nonneg("steady.eps_seed");
    o.x_far = nonneg("steady.x_far");
    o.max_delta = positive("steady.max_delta");
    o.allow_large_delta = flag("steady.allow_large_delta");
    o.x_domain = positive("steady.x_domain");
    o.max_sonic_domain = positive("steady.max_sonic_domain");
    o.segment_length = positive("steady.segment_length");
    o.max_shoot_length = positive("steady.max_shoot_length");
    const long long points = integer("steady.points");
    require(points >= 5 && points <= 10'000'000, "steady.points", "points must be in [5, 1e7]");
    o.points = static_cast<int>(points);
    o.ode_tolerance = positive("steady.ode_tolerance");
    o.newton_tolerance = positive("steady.newton_tolerance");
    const long long it = integer("steady.max_iter");
    require(it >= 1 && it <= 10000, "steady.max_iter", "max_iter must be in [1, 10000]");
    o.max_iter = static_cast<int>(it);
    o.match_tolerance = positive("steady.match_tolerance");
    o.farfield_tolerance = positive("steady.farfield_tolerance");
    o.sonic_tolerance = positive("spec.sonic_tolerance");
    if (!o.allow_large_delta) {
        if (const auto d = optional_real("spec.delta"))
            require(*d <= o.max_delta, "spec.delta",
                    "delta exceeds steady.max_delta (set steady.allow_large_delta = true to override)");
    }
    return o;
}

EvolveOptions ExperimentConfig::evolve_options() const {
    EvolveOptions o;
    o.t_end = real("evolve.t_end");
    require(o.t_end >= 0.0, "evolve.t_end", "t_end must be >= 0");
    o.cfl = real("evolve.cfl");
    require(o.cfl > 0.0 && o.cfl < 1.0, "evolve.cfl", "cfl must be in (0, 1)");
    o.drag_limit = flag("evolve.drag_limit");
    const long long stride = integer("evolve.observer_stride");
    require(stride >= 0, "evolve.observer_stride", "must be >= 0");
    o.observer_stride = static_cast<int>(stride);
    o.observer_interval = real("evolve.observer_interval");
    require(o.observer_interval >= 0.0, "evolve.observer_interval", "must be >= 0");
    if (o.observer_stride == 0 && o.observer_interval == 0.0 && o.t_end > 0.0) o.observer_interval = o.t_end / 200.0;
    o.wall_budget_seconds = real("evolve.wall_budget");
    require(o.wall_budget_seconds >= 0.0, "evolve.wall_budget", "must be >= 0");
    const long long ms = integer("evolve.max_steps");
    require(ms >= 1, "evolve.max_steps", "must be >= 1");
    o.max_steps = static_cast<std::size_t>(ms);
    const std::string& ref = text("evolve.reference");
    require(ref == "equilibrium" || ref == "profile", "evolve.reference", "must be 'equilibrium' or 'profile'");
    require(real("evolve.equilibrium_tolerance") > 0.0, "evolve.equilibrium_tolerance", "must be > 0");
    return o;
}

PerturbationSpec ExperimentConfig::perturbation() const {
    PerturbationSpec p;
    try {
        p.shape = parse_shape(text("evolve.pert_shape"));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("evolve.pert_shape: ") + e.what());
    }
    p.amplitude = real("evolve.pert_amplitude");
    p.center = real("evolve.pert_center");
    p.width = real("evolve.pert_width");
    require(p.width > 0.0, "evolve.pert_width", "width must be > 0");
    p.components = 0;
    for (const auto& name : split_list(text("evolve.pert_components"))) {
        if (name == "rho") p.components |= component::rho;
        else if (name == "u") p.components |= component::u;
        else if (name == "n") p.components |= component::n;
        else if (name == "v") p.components |= component::v;
        else throw ConfigError("evolve.pert_components: unknown component '" + name + "' (rho, u, n, v)");
    }
    p.file = text("evolve.pert_file");
    if (p.shape == PerturbationShape::FromFile)
        require(!p.file.empty(), "evolve.pert_file", "required when evolve.pert_shape = file");
    try {
        p.weight_tag = WeightTag::parse(text("evolve.pert_weight"));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("evolve.pert_weight: ") + e.what());
    }
    if (p.shape == PerturbationShape::WeightedTail)
        require(p.weight_tag.kind != WeightTag::Kind::None, "evolve.pert_weight",
                "a weight class is required when evolve.pert_shape = tail");
    return p;
}

std::vector<WeightTag> ExperimentConfig::weights() const {
    std::vector<WeightTag> out;
    for (const auto& item : split_list(text("diagnostics.weights"))) {
        try {
            out.push_back(WeightTag::parse(item));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("diagnostics.weights: ") + e.what());
        }
    }
    return out;
}

std::vector<FormName> ExperimentConfig::forms() const {
    std::vector<FormName> out;
    for (const auto& item : split_list(text("diagnostics.forms"))) {
        try {
            out.push_back(parse_form_name(item));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("diagnostics.forms: ") + e.what());
        }
    }
    return out;
}

FormContext ExperimentConfig::form_context() const {
    FormContext ctx{optional_real("diagnostics.nu"), optional_real("diagnostics.sigma"), optional_real("diagnostics.k")};
    if (ctx.k) require(*ctx.k > 0.0 && *ctx.k < 1.0, "diagnostics.k", "k must be in (0, 1)");
    if (ctx.sigma) require(*ctx.sigma > 0.0, "diagnostics.sigma", "sigma must be > 0");
    return ctx;
}

std::uint64_t ExperimentConfig::seed() const {
    const long long s = integer("seed");
    require(s >= 0, "seed", "seed must be >= 0");
    return static_cast<std::uint64_t>(s);
}

void ExperimentConfig::validate() const {
    (void)model_spec();
    (void)grid();
    (void)steady_options();
    (void)evolve_options();
    (void)perturbation();
    (void)weights();
    (void)forms();
    (void)form_context();
    (void)seed();
    const std::string& model = text("diagnostics.fit_model");
    require(model == "algebraic" || model == "exponential", "diagnostics.fit_model",
            "must be 'algebraic' or 'exponential'");
    const double r2 = real("diagnostics.r2_threshold");
    require(r2 >= 0.0 && r2 <= 1.0, "diagnostics.r2_threshold", "must be in [0, 1]");
    require(real("diagnostics.zero_tolerance") > 0.0, "diagnostics.zero_tolerance", "must be > 0");
    require(integer("sweep.samples") >= 0, "sweep.samples", "must be >= 0");
    require(integer("sweep.workers") >= 1, "sweep.workers", "must be >= 1");
    const std::string& prefix = text("output.prefix");
    require(prefix.find('/') == std::string::npos, "output.prefix", "must not contain '/'");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'section.key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (!find_key(key)) throw ConfigError(key + ": unknown key (" + where + ")");
        if (!seen.insert(key).second) throw ConfigError(key + ": duplicate key (" + where + ")");
        cfg.set(key, line.substr(eq + 1));
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config file not found or unreadable: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    ExperimentConfig cfg = parse_config_text(ss.str(), path);
    cfg.validate();
    return cfg;
}

std::vector<std::string> known_keys() {
    std::vector<std::string> out;
    for (const auto& d : schema()) out.emplace_back(d.key);
    return out;
}

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Completed: return "Completed";
        case RunStatus::Aborted: return "Aborted";
        case RunStatus::Truncated: return "Truncated";
    }
    return "?";
}

std::string RunRecord::to_json() const {
    json j{{"subcommand", subcommand},
           {"config_hash", config_hash},
           {"version", version},
           {"start_time", start_time},
           {"end_time", end_time},
           {"status", cli::to_string(status)},
           {"reason", reason},
           {"exit_code", exit_code},
           {"seed", seed},
           {"directory", directory},
           {"outputs", outputs}};
    return j.dump(2);
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"steady", "evolve", "decay-fit", "matrix-check", "regime", "sweep"};
    return names;
}

std::string version_string() { return std::string(TWOPHASE_VERSION) + "+" + TWOPHASE_GIT; }

std::string resolve_output_dir(const std::optional<std::string>& cli_out, const ExperimentConfig& config) {
    if (cli_out && !cli_out->empty()) return *cli_out;
    if (config.is_set("output.directory")) return config.text("output.directory");
    if (const char* env = std::getenv("TWOPHASE_OUT"); env && *env) return env;
    return "twophase_out";
}

RunRecord record_failure(const std::string& name, const std::string& out_dir, int exit_code,
                         const std::string& reason) {
    RunRecord rec;
    rec.subcommand = name;
    rec.version = version_string();
    rec.start_time = rec.end_time = iso_now();
    rec.status = RunStatus::Aborted;
    rec.reason = reason;
    rec.exit_code = exit_code;
    rec.directory = out_dir;
    try {
        write_record(rec, out_dir, "");
    } catch (const std::exception&) {
    }
    return rec;
}

RunRecord run_subcommand(const std::string& name, const ExperimentConfig& config, const RunOptions& options) {
    RunRecord rec;
    rec.subcommand = name;
    rec.version = version_string();
    rec.start_time = iso_now();
    rec.directory = options.out_dir;
    rec.config_hash = config.hash();
    const std::string prefix = config.text("output.prefix");

    try {
        rec.seed = config.seed();
        const auto it = bodies().find(name);
        if (it == bodies().end()) throw ConfigError("subcommand: unknown subcommand '" + name + "'");
        config.validate();
        std::error_code ec;
        fs::create_directories(options.out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + options.out_dir + ": " + ec.message());
        Emitter out(options.out_dir, prefix, rec.outputs);
        out.text("config.txt", [&](std::ostream& os) { os << config.echo(); });
        it->second(config, out, rec, options);
    } catch (const Error& e) {
        rec.status = RunStatus::Aborted;
        rec.reason = e.what();
        rec.exit_code = e.exit_code();
    } catch (const fs::filesystem_error& e) {
        rec.status = RunStatus::Aborted;
        rec.reason = e.what();
        rec.exit_code = static_cast<int>(ErrorKind::Io);
    } catch (const std::exception& e) {
        rec.status = RunStatus::Aborted;
        rec.reason = e.what();
        rec.exit_code = static_cast<int>(ErrorKind::Solver);
    }
    rec.end_time = iso_now();
    try {
        write_record(rec, options.out_dir, prefix);
    } catch (const std::exception& e) {
        if (rec.exit_code == 0) {
            rec.status = RunStatus::Aborted;
            rec.reason = e.what();
            rec.exit_code = static_cast<int>(ErrorKind::Io);
        }
    }
    return rec;
}

}  // namespace twophase::cli
