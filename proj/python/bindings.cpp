#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "twophase/cli.hpp"
#include "twophase/diagnostics.hpp"
#include "twophase/errors.hpp"
#include "twophase/ibvp.hpp"
#include "twophase/model.hpp"
#include "twophase/steady.hpp"

namespace py = pybind11;
using namespace twophase;

namespace {

ModelSpec make_spec(double A1, double A2, double gamma, double alpha, double mu, double rho_plus, double n_plus,
                    double u_plus, double u_minus) {
    return ModelSpec(FluidConstants{A1, A2, gamma, alpha, mu}, FarFieldState{rho_plus, n_plus, u_plus}, u_minus);
}

py::dict evolve_norms(const ModelSpec& spec0, const SteadyProfile& profile, double length, int cells, double t_end,
                      const PerturbationSpec& pert, double cfl, double interval, bool equilibrium_reference,
                      const std::vector<std::string>& weights) {
    const Grid1D grid = Grid1D::uniform(length, cells);
    const ModelSpec spec = spec0.with_u_minus(profile.achieved_u_minus);
    const Problem problem(spec, grid, BoundaryData::from_profile(spec, profile, grid));
    EvolutionState reference = sample_state(profile, grid);
    if (equilibrium_reference) reference = discrete_equilibrium(reference, problem);
    std::vector<WeightTag> tags;
    for (const auto& w : weights) tags.push_back(WeightTag::parse(w));
    std::optional<SigmaParams> sigma;
    if (profile.delta > 0.0) sigma = SigmaParams{derived_constants(spec).a, profile.delta};

    NormSeries series;
    EvolveOptions opts;
    opts.t_end = t_end;
    opts.cfl = cfl;
    opts.observer_interval = interval > 0.0 ? interval : t_end / 100.0;
    EvolveResult res;
    {
        py::gil_scoped_release release;
        res = evolve(initialize(profile, grid, pert), problem, opts,
                     {norm_observer(series, reference, grid, tags, sigma)});
    }
    py::dict out;
    out["t"] = series.times();
    for (const char* k : {"l2", "h1", "linf", "drag_l2"}) out[k] = series.column(k);
    for (const auto& k : series.weighted_keys()) out[k.c_str()] = series.column(k);
    out["steps"] = res.steps;
    out["truncated"] = res.truncated;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Steady states, evolution and decay diagnostics for viscous two-phase outflow";

    static py::exception<Error> base_exc(m, "TwophaseError");
    static py::exception<ConfigError> config_exc(m, "ConfigError", base_exc.ptr());
    static py::exception<SolverError> solver_exc(m, "SolverError", base_exc.ptr());
    static py::exception<NumericalAbort> numerical_exc(m, "NumericalAbort", base_exc.ptr());
    static py::exception<IoError> io_exc(m, "IoError", base_exc.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            config_exc(e.what());
        } catch (const SolverError& e) {
            solver_exc(e.what());
        } catch (const NumericalAbort& e) {
            numerical_exc(e.what());
        } catch (const IoError& e) {
            io_exc(e.what());
        }
    });

    py::enum_<RegimeClass>(m, "RegimeClass")
        .value("Supersonic", RegimeClass::Supersonic)
        .value("Sonic", RegimeClass::Sonic)
        .value("Subsonic", RegimeClass::Subsonic);

    py::class_<FluidConstants>(m, "FluidConstants")
        .def(py::init<>())
        .def_readwrite("A1", &FluidConstants::A1)
        .def_readwrite("A2", &FluidConstants::A2)
        .def_readwrite("gamma", &FluidConstants::gamma)
        .def_readwrite("alpha", &FluidConstants::alpha)
        .def_readwrite("mu", &FluidConstants::mu);

    py::class_<FarFieldState>(m, "FarFieldState")
        .def(py::init<>())
        .def_readwrite("rho_plus", &FarFieldState::rho_plus)
        .def_readwrite("n_plus", &FarFieldState::n_plus)
        .def_readwrite("u_plus", &FarFieldState::u_plus);

    py::class_<ModelSpec>(m, "ModelSpec")
        .def(py::init(&make_spec), py::kw_only(), py::arg("A1") = 1.0, py::arg("A2") = 1.0, py::arg("gamma") = 1.0,
             py::arg("alpha") = 1.0, py::arg("mu") = 1.0, py::arg("rho_plus") = 1.0, py::arg("n_plus") = 1.0,
             py::arg("u_plus") = -2.0, py::arg("u_minus") = -2.05)
        .def_static("with_delta", &ModelSpec::with_delta)
        .def_property_readonly("fluids", &ModelSpec::fluids)
        .def_property_readonly("far", &ModelSpec::far)
        .def_property_readonly("u_minus", &ModelSpec::u_minus)
        .def_property_readonly("delta", &ModelSpec::delta)
        .def("with_u_minus", &ModelSpec::with_u_minus)
        .def("__repr__", &ModelSpec::describe);

    m.def("sound_speed", py::overload_cast<const ModelSpec&>(&sound_speed));
    m.def("sonic_far_state", &sonic_far_state);
    m.def(
        "classify_regime",
        [](const ModelSpec& s, double tol) {
            const Regime r = classify_regime(s, tol);
            return py::dict(py::arg("mach") = r.mach, py::arg("cls") = r.cls);
        },
        py::arg("spec"), py::arg("sonic_tolerance") = kDefaultSonicTolerance);
    m.def("derived_constants", [](const ModelSpec& s) {
        const DerivedConstants d = derived_constants(s);
        return py::dict(py::arg("c_plus") = d.c_plus, py::arg("a") = d.a, py::arg("b") = d.b,
                        py::arg("lambda_star") = d.lambda_star);
    });
    m.def("sonic_pressure_condition", [](const ModelSpec& s) {
        const SonicCondition c = sonic_pressure_condition(s);
        return py::dict(py::arg("holds") = c.holds, py::arg("margin") = c.margin);
    });
    m.def("farfield_jacobian", [](const ModelSpec& s) {
        const Eigen::Matrix3d J = farfield_jacobian(s).entries;
        std::vector<std::vector<double>> rows(3, std::vector<double>(3));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) rows[i][j] = J(i, j);
        return rows;
    });
    m.def("eigensystem", [](const ModelSpec& s) {
        const EigenSystem es = eigensystem(farfield_jacobian(s));
        std::vector<std::complex<double>> l(es.lambdas.begin(), es.lambdas.end());
        return py::dict(py::arg("eigenvalues") = l, py::arg("sign_pattern") = es.pattern_string());
    });

    py::class_<SteadySolveOptions>(m, "SteadySolveOptions")
        .def(py::init<>())
        .def_readwrite("max_delta", &SteadySolveOptions::max_delta)
        .def_readwrite("allow_large_delta", &SteadySolveOptions::allow_large_delta)
        .def_readwrite("sigma_seed", &SteadySolveOptions::sigma_seed)
        .def_readwrite("x_domain", &SteadySolveOptions::x_domain)
        .def_readwrite("points", &SteadySolveOptions::points);

    py::class_<SteadyProfile>(m, "SteadyProfile")
        .def_readonly("x", &SteadyProfile::x)
        .def_readonly("rho", &SteadyProfile::rho_t)
        .def_readonly("u", &SteadyProfile::u_t)
        .def_readonly("n", &SteadyProfile::n_t)
        .def_readonly("v", &SteadyProfile::v_t)
        .def_readonly("ux", &SteadyProfile::ux_t)
        .def_readonly("vx", &SteadyProfile::vx_t)
        .def_readonly("delta", &SteadyProfile::delta)
        .def_readonly("achieved_u_minus", &SteadyProfile::achieved_u_minus)
        .def_readonly("boundary_compatible", &SteadyProfile::boundary_compatible)
        .def_property_readonly("regime", [](const SteadyProfile& p) { return p.regime.cls; })
        .def_property_readonly("method", [](const SteadyProfile& p) { return p.info.method; });

    m.def("solve_steady", &solve_steady, py::arg("spec"), py::arg("options") = SteadySolveOptions{},
          py::call_guard<py::gil_scoped_release>());
    m.def("steady_residual", &steady_residual);
    m.def(
        "fit_spatial_decay",
        [](const SteadyProfile& p, bool algebraic, double lo, double hi) {
            const auto f = fit_spatial_decay(p, ProfileQuantity::U,
                                             algebraic ? SpatialLaw::Algebraic : SpatialLaw::Exponential, {lo, hi});
            return py::dict(py::arg("rate_or_slope") = f.rate_or_slope, py::arg("r_squared") = f.r_squared);
        },
        py::arg("profile"), py::arg("algebraic"), py::arg("lo"), py::arg("hi"));

    py::enum_<PerturbationShape>(m, "PerturbationShape")
        .value("Gaussian", PerturbationShape::Gaussian)
        .value("CompactBump", PerturbationShape::CompactBump)
        .value("FromFile", PerturbationShape::FromFile)
        .value("WeightedTail", PerturbationShape::WeightedTail);

    py::class_<PerturbationSpec>(m, "PerturbationSpec")
        .def(py::init<>())
        .def_readwrite("shape", &PerturbationSpec::shape)
        .def_readwrite("amplitude", &PerturbationSpec::amplitude)
        .def_readwrite("center", &PerturbationSpec::center)
        .def_readwrite("width", &PerturbationSpec::width)
        .def_readwrite("components", &PerturbationSpec::components)
        .def_readwrite("file", &PerturbationSpec::file)
        .def_property(
            "weight_tag", [](const PerturbationSpec& p) { return p.weight_tag.label(); },
            [](PerturbationSpec& p, const std::string& s) { p.weight_tag = WeightTag::parse(s); });

    m.def("evolve_norms", &evolve_norms, py::arg("spec"), py::arg("profile"), py::arg("length"), py::arg("cells"),
          py::arg("t_end"), py::arg("perturbation") = PerturbationSpec{}, py::arg("cfl") = 0.4,
          py::arg("interval") = 0.0, py::arg("equilibrium_reference") = true,
          py::arg("weights") = std::vector<std::string>{},
          "Evolves the perturbed profile and returns the norm series of the deviation from the reference.");

    m.def(
        "phi_potential",
        [](const ModelSpec& s, double density, double ref, int phase) {
            return phi_potential(s.fluids(), density, ref, phase == 1 ? Phase::One : Phase::Two);
        },
        py::arg("spec"), py::arg("density"), py::arg("ref_density"), py::arg("phase"));

    m.def(
        "assemble_quadratic_form",
        [](const std::string& name, const ModelSpec& s, std::optional<double> nu, std::optional<double> sigma,
           std::optional<double> k) {
            const auto r = assemble_quadratic_form(parse_form_name(name), s, FormContext{nu, sigma, k});
            return py::dict(py::arg("eigenvalues") = r.eigenvalues, py::arg("verdict") = to_string(r.verdict),
                            py::arg("text") = r.to_text());
        },
        py::arg("name"), py::arg("spec"), py::arg("nu") = py::none(), py::arg("sigma") = py::none(),
        py::arg("k") = py::none());

    m.def(
        "fit_temporal_decay",
        [](const std::vector<double>& t, const std::vector<double>& v, const std::string& model,
           std::optional<std::pair<double, double>> window) {
            const TemporalLaw law = model == "algebraic" ? TemporalLaw::Algebraic : TemporalLaw::Exponential;
            const auto f = fit_temporal_decay(t, v, law, window);
            return py::dict(py::arg("rate") = f.rate, py::arg("prefactor") = f.prefactor,
                            py::arg("r_squared") = f.r_squared, py::arg("samples") = f.samples);
        },
        py::arg("t"), py::arg("values"), py::arg("model") = "exponential", py::arg("window") = py::none());

    m.def(
        "run",
        [](const std::string& subcommand, const std::string& config_text, const std::string& out_dir,
           const std::vector<std::string>& overrides) {
            cli::ExperimentConfig cfg = cli::parse_config_text(config_text);
            for (const auto& o : overrides) cfg.apply_override(o);
            cli::RunRecord rec;
            {
                py::gil_scoped_release release;
                rec = cli::run_subcommand(subcommand, cfg, {out_dir, 1});
            }
            return rec.to_json();
        },
        py::arg("subcommand"), py::arg("config_text"), py::arg("out_dir"),
        py::arg("overrides") = std::vector<std::string>{},
        "Runs a CLI subcommand on config text and returns the run record as JSON.");
    m.def("config_hash", [](const std::string& text) { return cli::parse_config_text(text).hash(); });
    m.def("version", &cli::version_string);
}
