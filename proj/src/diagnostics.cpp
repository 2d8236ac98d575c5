#include "twophase/diagnostics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "twophase/errors.hpp"
#include "twophase/fit.hpp"
#include "twophase/linalg.hpp"

namespace twophase {

PerturbationField perturbation(const EvolutionState& state, const EvolutionState& ref) {
    if (state.size() != ref.size()) throw std::invalid_argument("perturbation: state and reference sizes differ");
    PerturbationField f;
    const std::size_t n = state.size();
    f.phi.resize(n);
    f.psi.resize(n);
    f.phi_bar.resize(n);
    f.psi_bar.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.phi[i] = state.rho[i] - ref.rho[i];
        f.psi[i] = state.u[i] - ref.u[i];
        f.phi_bar[i] = state.n[i] - ref.n[i];
        f.psi_bar[i] = state.v[i] - ref.v[i];
    }
    return f;
}

PerturbationField perturbation(const EvolutionState& state, const SteadyProfile& profile, const Grid1D& grid) {
    if (state.size() != grid.centers.size()) throw std::invalid_argument("perturbation: state does not match the grid");
    return perturbation(state, sample_state(profile, grid));
}

double phi_potential(const FluidConstants& fl, double rho, double ref, Phase phase) {
    if (!(rho > 0.0) || !(ref > 0.0)) throw std::domain_error("phi_potential: densities must be > 0");
    const double A = phase == Phase::One ? fl.A1 : fl.A2;
    const double g = phase == Phase::One ? fl.gamma : fl.alpha;
    if (g == 1.0) {
        // ln(r) + 1/r - 1 with r = rho/ref
        const double r = rho / ref;
        return A * (std::log(r) + 1.0 / r - 1.0);
    }
    // ref^{g-1} [ (r^{g-1} - 1)/(g-1) + 1/r - 1 ]; expm1 keeps small deviations accurate
    const double lr = std::log(rho / ref);
    const double first = std::expm1((g - 1.0) * lr) / (g - 1.0);
    const double second = std::expm1(-lr);
    return A * std::pow(ref, g - 1.0) * (first + second);
}

namespace {

double energy_sum(const EvolutionState& s, const std::vector<double>& rt, const std::vector<double>& ut,
                  const std::vector<double>& nt, const std::vector<double>& vt, double dx, const FluidConstants& fl) {
    double e = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double psi = s.u[i] - ut[i];
        const double psib = s.v[i] - vt[i];
        e += s.rho[i] * (0.5 * psi * psi + phi_potential(fl, s.rho[i], rt[i], Phase::One));
        e += s.n[i] * (0.5 * psib * psib + phi_potential(fl, s.n[i], nt[i], Phase::Two));
    }
    return e * dx;
}

}  // namespace

double energy_total(const EvolutionState& state, const EvolutionState& ref, const Grid1D& grid,
                    const FluidConstants& fluids) {
    if (state.size() != ref.size() || state.size() != grid.centers.size()) {
        throw std::invalid_argument("energy_total: size mismatch");
    }
    return energy_sum(state, ref.rho, ref.u, ref.n, ref.v, grid.dx, fluids);
}

double energy_total(const EvolutionState& state, const SteadyProfile& profile, const Grid1D& grid,
                    const FluidConstants& fluids) {
    return energy_total(state, sample_state(profile, grid), grid, fluids);
}

double max_exponential_lambda(const Grid1D& grid) {
    return 2.0 * std::log(DBL_MAX) / std::max(grid.centers.back(), grid.dx);
}

double log_weight(const WeightTag& tag, double x, const std::optional<SigmaParams>& sigma) {
    switch (tag.kind) {
        case WeightTag::Kind::None: return 0.0;
        case WeightTag::Kind::AlgebraicNu: return tag.value * std::log1p(x);
        case WeightTag::Kind::SigmaNu: {
            if (!sigma || !(sigma->sigma0 > 0.0) || !(sigma->a > 0.0)) {
                throw ConfigError("sigma weight needs sigma parameters a > 0 and sigma0 > 0");
            }
            return -tag.value * std::log(sigma_profile(sigma->a, sigma->sigma0, x));
        }
        case WeightTag::Kind::ExponentialLambda: return tag.value * x;
    }
    return 0.0;
}

double NormRecord::value(const std::string& name) const {
    if (name == "l2") return l2;
    if (name == "h1") return h1;
    if (name == "linf") return linf;
    if (name == "drag_l2") return drag_l2;
    if (name == "l2_phi") return l2_components[0];
    if (name == "l2_psi") return l2_components[1];
    if (name == "l2_phi_bar") return l2_components[2];
    if (name == "l2_psi_bar") return l2_components[3];
    for (const auto& [k, v] : weighted) {
        if (k == name) return v;
    }
    throw std::invalid_argument("unknown norm '" + name + "'");
}

namespace {

/// sqrt(sum exp(lw_i) * q_i) evaluated with a running maximum of the exponents.
class LogSum {
public:
    void add(double log_w, double q) {
        if (!(q > 0.0)) return;
        const double e = log_w + std::log(q);
        if (e > max_) {
            sum_ = sum_ * std::exp(max_ - e) + 1.0;
            max_ = e;
        } else {
            sum_ += std::exp(e - max_);
        }
    }
    double sqrt_value() const {
        if (sum_ == 0.0) return 0.0;
        return std::exp(0.5 * max_) * std::sqrt(sum_);
    }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

}  // namespace

NormRecord norms(const PerturbationField& f, const Grid1D& grid, const std::vector<WeightTag>& weights,
                 const std::optional<SigmaParams>& sigma, double t) {
    const std::size_t n = f.size();
    if (n != grid.centers.size() || f.psi.size() != n || f.phi_bar.size() != n || f.psi_bar.size() != n) {
        throw std::invalid_argument("norms: field does not match the grid");
    }
    const double dx = grid.dx;
    const std::array<const std::vector<double>*, 4> comps{&f.phi, &f.psi, &f.phi_bar, &f.psi_bar};
    NormRecord r;
    r.t = t;
    double seminorm2 = 0.0;
    double drag2 = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        const auto& v = *comps[c];
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += v[i] * v[i];
            r.linf = std::max(r.linf, std::abs(v[i]));
            if (i + 1 < n) {
                const double d = v[i + 1] - v[i];
                seminorm2 += d * d / dx;
            }
        }
        r.l2_components[c] = std::sqrt(s * dx);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double d = f.psi_bar[i] - f.psi[i];
        drag2 += d * d;
    }
    double l2sq = 0.0;
    for (double c : r.l2_components) l2sq += c * c;
    r.l2 = std::sqrt(l2sq);
    r.h1 = std::sqrt(l2sq + seminorm2);
    r.drag_l2 = std::sqrt(drag2 * dx);

    for (const auto& tag : weights) {
        if (tag.kind == WeightTag::Kind::ExponentialLambda) {
            const double lmax = max_exponential_lambda(grid);
            if (tag.value > lmax) {
                char buf[200];
                std::snprintf(buf, sizeof buf,
                              "exponential weight e^{%g x} overflows binary64 on [0, %g]; largest admissible lambda is %.6g",
                              tag.value, grid.length, lmax);
                throw NumericalAbort(buf);
            }
        }
        LogSum plain, grad;
        for (std::size_t i = 0; i < n; ++i) {
            const double lw = log_weight(tag, grid.centers[i], sigma);
            double q = 0.0;
            for (const auto* v : comps) q += (*v)[i] * (*v)[i];
            plain.add(lw, q * dx);
            grad.add(lw, q * dx);
            if (i + 1 < n) {
                const double lwm = log_weight(tag, grid.centers[i] + 0.5 * dx, sigma);
                double dq = 0.0;
                for (const auto* v : comps) {
                    const double d = (*v)[i + 1] - (*v)[i];
                    dq += d * d;
                }
                grad.add(lwm, dq / dx);
            }
        }
        const double wl2 = plain.sqrt_value();
        const double wh1 = grad.sqrt_value();
        if (!std::isfinite(wl2) || !std::isfinite(wh1)) {
            throw NumericalAbort("weighted norm " + tag.label() + " overflowed binary64");
        }
        r.weighted.emplace_back("w_" + tag.label(), wl2);
        r.weighted.emplace_back("wh1_" + tag.label(), wh1);
    }
    return r;
}

void NormSeries::append(NormRecord rec) {
    if (!records.empty() && !(rec.t > records.back().t)) {
        throw std::invalid_argument("NormSeries: times must be strictly increasing");
    }
    records.push_back(std::move(rec));
}

std::vector<double> NormSeries::times() const {
    std::vector<double> t;
    t.reserve(records.size());
    for (const auto& r : records) t.push_back(r.t);
    return t;
}

std::vector<double> NormSeries::column(const std::string& name) const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.value(name));
    return out;
}

std::vector<std::string> NormSeries::weighted_keys() const {
    std::vector<std::string> keys;
    if (records.empty()) return keys;
    for (const auto& kv : records.front().weighted) keys.push_back(kv.first);
    return keys;
}

Observer norm_observer(NormSeries& series, const EvolutionState& reference, const Grid1D& grid,
                       std::vector<WeightTag> weights, std::optional<SigmaParams> sigma) {
    return [&series, reference, grid, weights = std::move(weights), sigma](const EvolutionState& s) {
        series.append(norms(perturbation(s, reference), grid, weights, sigma, s.t));
    };
}

namespace {

std::vector<std::string> csv_keys(const NormSeries& s) {
    // plain weighted entries first, then their H1 counterparts
    std::vector<std::string> w, wh;
    for (const auto& k : s.weighted_keys()) (k.rfind("wh1_", 0) == 0 ? wh : w).push_back(k);
    w.insert(w.end(), wh.begin(), wh.end());
    return w;
}

}  // namespace

void write_norm_csv(std::ostream& os, const NormSeries& s) {
    const auto keys = csv_keys(s);
    os << "t,l2,h1,linf,drag_l2";
    for (const auto& k : keys) os << ',' << k;
    os << '\n';
    char buf[64];
    for (const auto& r : s.records) {
        std::snprintf(buf, sizeof buf, "%.17g", r.t);
        os << buf;
        for (double v : {r.l2, r.h1, r.linf, r.drag_l2}) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            os << buf;
        }
        for (const auto& k : keys) {
            std::snprintf(buf, sizeof buf, ",%.17g", r.value(k));
            os << buf;
        }
        os << '\n';
    }
}

void write_norm_csv(const std::string& path, const NormSeries& s) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write norm series: " + path);
    write_norm_csv(os, s);
    if (!os) throw IoError("error while writing norm series: " + path);
}

NormSeries read_norm_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read norm series: " + path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("norm series " + path + ": empty file");
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    const std::vector<std::string> fixed{"t", "l2", "h1", "linf", "drag_l2"};
    if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
        throw IoError("norm series " + path + ": header must start with t,l2,h1,linf,drag_l2");
    }
    NormSeries s;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("norm series " + path + ": bad number on line " + std::to_string(lineno));
            }
        }
        if (vals.size() != header.size()) {
            throw IoError("norm series " + path + ": wrong column count on line " + std::to_string(lineno));
        }
        NormRecord r;
        r.t = vals[0];
        r.l2 = vals[1];
        r.h1 = vals[2];
        r.linf = vals[3];
        r.drag_l2 = vals[4];
        for (std::size_t k = 5; k < header.size(); ++k) r.weighted.emplace_back(header[k], vals[k]);
        try {
            s.append(std::move(r));
        } catch (const std::invalid_argument&) {
            throw IoError("norm series " + path + ": times not increasing at line " + std::to_string(lineno));
        }
    }
    return s;
}

const char* to_string(FormName f) {
    static const char* names[] = {"M1", "M2", "M3", "M4", "M5", "M6"};
    return names[static_cast<int>(f)];
}

FormName parse_form_name(const std::string& text) {
    for (int i = 0; i < 6; ++i) {
        if (text == to_string(static_cast<FormName>(i))) return static_cast<FormName>(i);
    }
    throw ConfigError("unknown quadratic form '" + text + "' (expected M1..M6)");
}

const char* to_string(Definiteness d) {
    switch (d) {
        case Definiteness::PositiveDefinite: return "PositiveDefinite";
        case Definiteness::PositiveSemidefinite: return "PositiveSemidefinite";
        case Definiteness::Indefinite: return "Indefinite";
    }
    return "?";
}

Definiteness classify_definiteness(const std::vector<double>& ev, double tol) {
    double scale = 1.0;
    for (double e : ev) scale = std::max(scale, std::abs(e));
    const double zero = tol * scale;
    bool any_zero = false;
    for (double e : ev) {
        if (e < -zero) return Definiteness::Indefinite;
        if (e <= zero) any_zero = true;
    }
    return any_zero ? Definiteness::PositiveSemidefinite : Definiteness::PositiveDefinite;
}

namespace {

Eigen::Matrix3d m3_matrix(const ModelSpec& spec) {
    const auto& f = spec.fluids();
    const double rho = spec.far().rho_plus, n = spec.far().n_plus, u = spec.far().u_plus;
    const double p1 = f.A1 * f.gamma * std::pow(rho, f.gamma - 1.0);  // p1'(rho)
    const double p2 = f.A2 * f.alpha * std::pow(n, f.alpha - 1.0);
    Eigen::Matrix3d m;
    m << -p1 / rho * u, 0.0, -p1,
         0.0, -p2 / n * u, -p2,
         -p1, -p2, -(rho + n) * u;
    return m;
}

Eigen::Matrix2d phase_matrix(double A, double g, double d, double u) {
    const double dp = A * g * std::pow(d, g - 1.0);
    const double off = (u * u - dp) / (2.0 * u);
    Eigen::Matrix2d m;
    m << d, off, off, A * g * (g - 1.0) * std::pow(d, g - 2.0) / 2.0;
    return m;
}

double require(const std::optional<double>& v, const char* what, FormName name) {
    if (!v) throw ConfigError(std::string(to_string(name)) + " needs context parameter " + what);
    return *v;
}

}  // namespace

QuadraticFormReport assemble_quadratic_form(FormName name, const ModelSpec& spec, const FormContext& ctx,
                                            double tol) {
    const auto& f = spec.fluids();
    const double rho = spec.far().rho_plus, n = spec.far().n_plus, u = spec.far().u_plus;
    QuadraticFormReport rep;
    rep.name = name;
    rep.context = ctx;
    rep.zero_tolerance = tol;
    switch (name) {
        case FormName::M1: rep.matrix = phase_matrix(f.A1, f.gamma, rho, u); break;
        case FormName::M2: rep.matrix = phase_matrix(f.A2, f.alpha, n, u); break;
        case FormName::M3:
        case FormName::M4: rep.matrix = m3_matrix(spec); break;
        case FormName::M5:
        case FormName::M6: {
            const double nu = require(ctx.nu, "nu", name);
            const double sigma = require(ctx.sigma, "sigma", name);
            double k = 0.75;
            if (name == FormName::M6) {
                k = require(ctx.k, "k", name);
                if (!(k > 0.0 && k < 1.0)) throw ConfigError("M6 needs k in (0, 1)");
            }
            const DerivedConstants dc = derived_constants(spec);
            const double b2 = dc.b * dc.b;
            const double K = (f.A1 * f.gamma * (f.gamma + 1.0) * std::pow(rho, f.gamma) +
                              f.A2 * f.alpha * (f.alpha + 1.0) * std::pow(n, f.alpha)) /
                             (2.0 * u * u);
            const double off = std::sqrt((f.mu + n) * n) / 2.0 * dc.a * dc.b * nu * sigma;
            double bracket = (1.0 + nu) - nu * (nu - 1.0) / (2.0 * (1.0 + b2));
            if (name == FormName::M6) bracket += (nu - 1.0) * (nu - 1.0) / (4.0 * (1.0 + b2));
            Eigen::Matrix2d m;
            m << k * n, off, off, k * dc.a * K * bracket * sigma * sigma;
            rep.matrix = m;
            break;
        }
    }
    if (rep.matrix.rows() == 2) {
        const auto se = linalg::symmetric_eigen(Eigen::Matrix2d(rep.matrix));
        rep.eigenvalues = {se.values(0), se.values(1)};
    } else {
        const auto se = linalg::symmetric_eigen(Eigen::Matrix3d(rep.matrix));
        rep.eigenvalues = {se.values(0), se.values(1), se.values(2)};
    }
    rep.verdict = classify_definiteness(rep.eigenvalues, tol);
    return rep;
}

std::string QuadraticFormReport::to_text() const {
    std::ostringstream os;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "{\n  \"name\": \"" << to_string(name) << "\",\n  \"matrix\": [";
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        os << (i ? ", " : "") << '[';
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) os << (j ? ", " : "") << num(matrix(i, j));
        os << ']';
    }
    os << "],\n  \"eigenvalues\": [";
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) os << (i ? ", " : "") << num(eigenvalues[i]);
    os << "],\n  \"verdict\": \"" << to_string(verdict) << "\",\n  \"zero_tolerance\": " << num(zero_tolerance)
       << ",\n  \"context\": {";
    bool first = true;
    auto field = [&](const char* key, const std::optional<double>& v) {
        if (!v) return;
        os << (first ? "" : ", ") << '"' << key << "\": " << num(*v);
        first = false;
    };
    field("nu", context.nu);
    field("sigma", context.sigma);
    field("k", context.k);
    os << "}\n}\n";
    return os.str();
}

HatCoordinates HatTransform::apply(const Eigen::Vector3d& w) const {
    const Eigen::Vector3d kernel = P.col(2);
    return {P.col(0).dot(w), P.col(1).dot(w), kernel.dot(w) / kernel.squaredNorm()};
}

HatTransform hat_transform(const ModelSpec& spec, double tol) {
    const Eigen::Matrix3d m = m3_matrix(spec);
    const auto se = linalg::symmetric_eigen(m);
    const double scale = std::max(1.0, se.values.cwiseAbs().maxCoeff());
    if (!(std::abs(se.values(0)) <= tol * scale)) {
        throw ConfigError("hat_transform: M4 has no zero eigenvalue (smallest " + std::to_string(se.values(0)) +
                          "); the far state is not sonic");
    }
    HatTransform h;
    const double rho = spec.far().rho_plus, n = spec.far().n_plus, u = spec.far().u_plus;
    h.P.col(0) = se.vectors.col(1);
    h.P.col(1) = se.vectors.col(2);
    h.P.col(2) = Eigen::Vector3d(-rho / u, -n / u, 1.0);
    h.lambdas = Eigen::Vector2d(se.values(1), se.values(2));
    return h;
}

HatCoordinates hat_transform(const ModelSpec& spec, const Eigen::Vector3d& triple) {
    return hat_transform(spec).apply(triple);
}

const char* to_string(TemporalLaw law) { return law == TemporalLaw::Algebraic ? "Algebraic" : "Exponential"; }

TemporalDecayFit fit_temporal_decay(const std::vector<double>& t, const std::vector<double>& values,
                                    TemporalLaw model, std::optional<std::pair<double, double>> window) {
    if (t.size() != values.size()) throw std::invalid_argument("fit_temporal_decay: size mismatch");
    std::pair<double, double> w;
    if (window) {
        w = *window;
    } else {
        if (t.empty()) throw std::invalid_argument("fit_temporal_decay: empty series");
        w = {t[t.size() / 2], t.back()};
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < w.first || t[i] > w.second) continue;
        if (!(values[i] > 0.0)) throw std::domain_error("fit_temporal_decay: non-positive norm in window");
        xs.push_back(model == TemporalLaw::Algebraic ? std::log1p(t[i]) : t[i]);
        ys.push_back(std::log(values[i]));
    }
    if (xs.size() < 8) throw std::invalid_argument("fit_temporal_decay: fewer than 8 records in window");
    const LineFit lf = least_squares_line(xs, ys);
    TemporalDecayFit out;
    out.model = model;
    out.rate = -lf.slope;
    out.prefactor = std::exp(lf.intercept);
    out.r_squared = lf.r_squared;
    out.window = w;
    out.samples = xs.size();
    return out;
}

TemporalDecayFit fit_temporal_decay(const NormSeries& series, const std::string& which, TemporalLaw model,
                                    std::optional<std::pair<double, double>> window) {
    return fit_temporal_decay(series.times(), series.column(which), model, window);
}

}  // namespace twophase
