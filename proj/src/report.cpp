#include "ptlab/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "ptlab/ode.hpp"

namespace ptlab {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr double PI = 3.14159265358979323846;

const char* kInitialStates[] = {"ket0", "maximally_mixed", "biorthogonal_mixed", "custom"};

} // namespace

std::string_view formalism_name(Formalism f) {
    switch (f) {
        case Formalism::HermitianAdjoint: return "hermitian_adjoint";
        case Formalism::Biorthogonal: return "biorthogonal";
        case Formalism::Isospectral: return "isospectral";
    }
    return "unknown";
}

Formalism formalism_from_name(std::string_view name) {
    if (name == "hermitian_adjoint") return Formalism::HermitianAdjoint;
    if (name == "biorthogonal") return Formalism::Biorthogonal;
    if (name == "isospectral") return Formalism::Isospectral;
    throw ConfigError("unknown formalism: " + std::string(name));
}

std::string format_sig17(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string format_alpha(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", alpha);
    return buf;
}

void validate_spec(const SweepSpec& spec) {
    if (spec.theta_values.empty()) throw ConfigError("sweep: theta_values is empty");
    if (spec.samples < 2) throw ConfigError("sweep: samples must be at least 2");
    if (!(spec.t_max > 0.0)) throw ConfigError("sweep: t_max must be positive");
    if (spec.formalisms.empty()) throw ConfigError("sweep: no formalisms selected");
    if (!(spec.r >= 0.0) || !(spec.d >= 0.0))
        throw ConfigError("sweep: r and d must be non-negative");
    if (spec.norm_power < 0) throw ConfigError("sweep: norm_power must be non-negative");
    const bool known = std::any_of(std::begin(kInitialStates), std::end(kInitialStates),
                                   [&](const char* s) { return spec.initial_state == s; });
    if (!known) throw ConfigError("sweep: unknown initial_state '" + spec.initial_state + "'");
    if (spec.initial_state == "custom") {
        if (spec.custom_amplitudes.size() != 2)
            throw ConfigError("sweep: custom initial state needs two amplitudes");
        if (std::abs(spec.custom_amplitudes[0]) + std::abs(spec.custom_amplitudes[1]) == 0.0)
            throw ConfigError("sweep: custom initial state is the zero vector");
    }
    for (const double a : spec.alphas)
        if (!(a > 0.0)) throw ConfigError("sweep: Renyi orders must be positive");
}

SweepSpec spec_from_json(const nlohmann::json& j) {
    static const char* kKeys[] = {"r", "d", "theta_values", "t_max", "samples",
                                  "initial_state", "custom_amplitudes", "formalisms",
                                  "alphas", "norm_power"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(std::begin(kKeys), std::end(kKeys),
                         [&](const char* k) { return key == k; }) == std::end(kKeys))
            throw ConfigError("config: unknown key '" + key + "'");
    }
    SweepSpec spec;
    spec.r = j.value("r", spec.r);
    spec.d = j.value("d", spec.d);
    if (j.contains("theta_values"))
        spec.theta_values = j.at("theta_values").get<std::vector<double>>();
    spec.t_max = j.value("t_max", spec.t_max);
    spec.samples = j.value("samples", spec.samples);
    spec.initial_state = j.value("initial_state", spec.initial_state);
    if (j.contains("custom_amplitudes")) {
        spec.custom_amplitudes.clear();
        for (const auto& entry : j.at("custom_amplitudes")) {
            if (!entry.is_array() || entry.size() != 2)
                throw ConfigError("config: custom_amplitudes entries are [re, im] pairs");
            spec.custom_amplitudes.emplace_back(entry[0].get<double>(),
                                                entry[1].get<double>());
        }
    }
    if (j.contains("formalisms")) {
        spec.formalisms.clear();
        for (const auto& name : j.at("formalisms"))
            spec.formalisms.push_back(formalism_from_name(name.get<std::string>()));
    }
    if (j.contains("alphas")) spec.alphas = j.at("alphas").get<std::vector<double>>();
    spec.norm_power = j.value("norm_power", spec.norm_power);
    validate_spec(spec);
    return spec;
}

} // namespace

SweepSpec sweep_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    return spec_from_json(j);
}

SweepSpec sweep_from_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config file: " + file.string());
    std::ostringstream text;
    text << in.rdbuf();
    return sweep_from_json_text(text.str());
}

std::string sweep_to_json(const SweepSpec& spec) {
    nlohmann::json j;
    j["r"] = spec.r;
    j["d"] = spec.d;
    j["theta_values"] = spec.theta_values;
    j["t_max"] = spec.t_max;
    j["samples"] = spec.samples;
    j["initial_state"] = spec.initial_state;
    if (!spec.custom_amplitudes.empty()) {
        auto& arr = j["custom_amplitudes"] = nlohmann::json::array();
        for (const cplx c : spec.custom_amplitudes) arr.push_back({c.real(), c.imag()});
    }
    auto& formalisms = j["formalisms"] = nlohmann::json::array();
    for (const Formalism f : spec.formalisms) formalisms.push_back(formalism_name(f));
    j["alphas"] = spec.alphas;
    j["norm_power"] = spec.norm_power;
    return j.dump(2);
}

namespace {

struct Row {
    double theta = 0.0, t = 0.0;
    Regime regime = Regime::Unbroken;
    cplx trace{};
    double purity = 0.0, von_neumann = 0.0;
    std::vector<double> renyi;
    double bloch_x = 0.0, bloch_y = 0.0, bloch_z = 0.0;
    bool valid = false;
};

struct JobResult {
    std::vector<Row> rows;
    ThetaSummary summary;
};

Vec2 initial_ket(const SweepSpec& spec) {
    if (spec.initial_state == "custom")
        return {spec.custom_amplitudes[0], spec.custom_amplitudes[1]};
    return {1.0, 0.0};
}

DensityState initial_density(const SweepSpec& spec, Formalism f, const ModelParams& p,
                             const Tolerances& tol) {
    if (spec.initial_state == "ket0" || spec.initial_state == "custom") {
        const Vec2 psi = initial_ket(spec);
        if (f == Formalism::HermitianAdjoint)
            return density_from_ensemble({{1.0, psi}}, f, p, tol);
        DensityState b = biorthogonal_projector(psi, p, spec.norm_power, tol);
        if (f == Formalism::Biorthogonal) return b;
        return map_to_isospectral(b, tol);
    }
    if (spec.initial_state == "maximally_mixed") return maximally_mixed(f, p);
    // biorthogonal_mixed: equal-weight mixture of the two eigenstates
    const SpectralData sd = eigensystem(p, Normalization::CPTOrthonormal, tol);
    return density_from_ensemble({{0.5, sd.v_plus}, {0.5, sd.v_minus}}, f, p, tol);
}

bool pure_initial_state(const SweepSpec& spec) {
    return spec.initial_state == "ket0" || spec.initial_state == "custom";
}

// least-squares slope of ln|trace| over the trailing half of the window
std::optional<double> fit_growth_rate(const std::vector<Row>& rows) {
    std::vector<std::pair<double, double>> pts;
    for (const Row& row : rows) {
        const double m = std::abs(row.trace);
        if (row.t >= 0.5 * rows.back().t && m > 0.0) pts.emplace_back(row.t, std::log(m));
    }
    if (pts.size() < 2) return std::nullopt;
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (const auto& [t, y] : pts) {
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double n = static_cast<double>(pts.size());
    const double denom = n * stt - st * st;
    if (denom == 0.0) return std::nullopt;
    return (n * sty - st * sy) / denom;
}

JobResult run_job(const SweepSpec& spec, Formalism f, double theta, const Tolerances& tol) {
    const ModelParams p = make_params(spec.r, spec.d, theta, tol.ep);
    JobResult result;
    result.summary.theta = theta;
    result.summary.regime = p.regime;

    const std::vector<double> times = linspace(0.0, spec.t_max, spec.samples);
    auto emit_nan_rows = [&] {
        result.rows.clear();
        for (const double t : times) {
            Row row;
            row.theta = theta;
            row.t = t;
            row.regime = p.regime;
            row.renyi.assign(spec.alphas.size(), 0.0);
            row.valid = false;
            result.rows.push_back(std::move(row));
        }
    };

    try {
        const DensityState rho0 = initial_density(spec, f, p, tol);
        const auto traj = density_trajectory(rho0, times, tol);
        const bool pure = pure_initial_state(spec);
        const Vec2 psi0 = initial_ket(spec);

        for (std::size_t i = 0; i < traj.size(); ++i) {
            Row row;
            row.theta = theta;
            row.t = times[i];
            row.regime = p.regime;
            row.trace = tr(traj[i].rho);
            const EntropyReport er = entropy(traj[i], spec.alphas, tol);
            row.purity = er.purity;
            row.von_neumann = er.von_neumann;
            for (const auto& [alpha, value] : er.renyi) {
                (void)alpha;
                row.renyi.push_back(value);
            }
            if (pure) {
                const BlochPoint bp = bloch_point(evolve_state(psi0, p, times[i]));
                row.bloch_x = bp.x;
                row.bloch_y = bp.y;
                row.bloch_z = bp.z;
            } else {
                row.bloch_x = row.bloch_y = row.bloch_z =
                    std::numeric_limits<double>::quiet_NaN();
            }
            row.valid = true;
            result.rows.push_back(std::move(row));
        }

        if (p.regime == Regime::Unbroken) {
            result.summary.period = detect_scalar_period(
                [&](double t) { return tr(evolve_density(rho0, t, tol).rho).real(); },
                spec.t_max);
        } else if (p.regime == Regime::Broken) {
            result.summary.growth_rate = fit_growth_rate(result.rows);
        }
    } catch (const PtlabError& e) {
        result.summary.error = e.what();
        emit_nan_rows();
    }
    return result;
}

void write_rows_csv(const std::filesystem::path& file, const SweepSpec& spec,
                    const std::vector<Row>& rows) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << "theta,t,regime,trace_re,trace_im,purity,von_neumann";
    for (const double a : spec.alphas) out << ",renyi_" << format_alpha(a);
    out << ",bloch_x,bloch_y,bloch_z\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const Row& row : rows) {
        out << format_sig17(row.theta) << ',' << format_sig17(row.t) << ','
            << regime_name(row.regime);
        auto cell = [&](double v) { out << ',' << format_sig17(row.valid ? v : nan); };
        cell(row.trace.real());
        cell(row.trace.imag());
        cell(row.purity);
        cell(row.von_neumann);
        for (std::size_t k = 0; k < spec.alphas.size(); ++k)
            cell(k < row.renyi.size() ? row.renyi[k] : nan);
        cell(row.bloch_x);
        cell(row.bloch_y);
        cell(row.bloch_z);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + file.string());
}

nlohmann::json tolerances_json(const Tolerances& tol) {
    return {{"ep", tol.ep},         {"mat", tol.mat},
            {"eig", tol.eig},       {"ode_abs", tol.ode_abs},
            {"ode_rel", tol.ode_rel}, {"trace", tol.trace}};
}

} // namespace

SweepSummary run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir,
                       const std::string& stem, const Tolerances& tol, unsigned threads) {
    validate_spec(spec);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());

    struct Job {
        std::size_t formalism_index, theta_index;
    };
    std::vector<Job> jobs;
    for (std::size_t fi = 0; fi < spec.formalisms.size(); ++fi)
        for (std::size_t ti = 0; ti < spec.theta_values.size(); ++ti)
            jobs.push_back({fi, ti});

    std::vector<JobResult> results(jobs.size());
    unsigned workers = threads ? threads : std::thread::hardware_concurrency();
    workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(jobs.size()));

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> worker_errors(workers);
    auto work = [&](unsigned w) {
        try {
            for (std::size_t k = next.fetch_add(1); k < jobs.size(); k = next.fetch_add(1)) {
                const Job& job = jobs[k];
                results[k] = run_job(spec, spec.formalisms[job.formalism_index],
                                     spec.theta_values[job.theta_index], tol);
            }
        } catch (...) {
            worker_errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    for (const auto& err : worker_errors)
        if (err) std::rethrow_exception(err);

    SweepSummary summary;
    nlohmann::json meta;
    meta["config"] = nlohmann::json::parse(sweep_to_json(spec));
    meta["tolerances"] = tolerances_json(tol);
    meta["conventions"] = {
        {"branch", "sqrt(disc) = +i sqrt(-disc) for disc < 0 (principal)"},
        {"bloch", "ket0 at the north pole; x = 2 Re(conj(psi1) psi2), "
                  "y = 2 Im(conj(psi1) psi2), z = |psi1|^2 - |psi2|^2"},
        {"normalization_variant",
         "pure biorthogonal projectors divided by (CPT norm)^" +
             std::to_string(spec.norm_power)},
        {"time_window", "uniform grid of " + std::to_string(spec.samples) +
                            " samples on [0, t_max]"}};
    auto& results_json = meta["results"] = nlohmann::json::object();

    for (std::size_t fi = 0; fi < spec.formalisms.size(); ++fi) {
        const std::string fname{formalism_name(spec.formalisms[fi])};
        std::vector<Row> rows;
        std::vector<ThetaSummary> theta_summaries;
        auto& fj = results_json[fname] = nlohmann::json::array();
        for (std::size_t ti = 0; ti < spec.theta_values.size(); ++ti) {
            JobResult& jr = results[fi * spec.theta_values.size() + ti];
            rows.insert(rows.end(), jr.rows.begin(), jr.rows.end());
            nlohmann::json entry{{"theta", jr.summary.theta},
                                 {"regime", std::string(regime_name(jr.summary.regime))}};
            if (jr.summary.period) entry["period"] = *jr.summary.period;
            if (jr.summary.growth_rate) entry["growth_rate"] = *jr.summary.growth_rate;
            if (!jr.summary.error.empty()) entry["error"] = jr.summary.error;
            fj.push_back(std::move(entry));
            theta_summaries.push_back(jr.summary);
        }
        const std::filesystem::path csv =
            out_dir / (spec.formalisms.size() == 1 ? stem + ".csv"
                                                   : stem + "_" + fname + ".csv");
        write_rows_csv(csv, spec, rows);
        summary.csv_files.push_back(csv);
        summary.per_formalism[fname] = std::move(theta_summaries);
    }

    summary.metadata_file = out_dir / (stem + "_meta.json");
    std::ofstream meta_out(summary.metadata_file);
    if (!meta_out) throw IoError("cannot write " + summary.metadata_file.string());
    meta_out << meta.dump(2) << '\n';
    return summary;
}

namespace {

void svg_portrait(const std::filesystem::path& file, const ModelParams& p,
                  const FixedPointReport& report, std::size_t grid) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    auto sx = [](double x) { return 300.0 + 230.0 * x; };
    auto sy = [](double y) { return 300.0 - 230.0 * y; };
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
           "viewBox=\"0 0 600 600\">\n"
        << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n"
        << "<circle cx=\"300\" cy=\"300\" r=\"230\" fill=\"none\" stroke=\"#888\"/>\n";
    for (std::size_t iy = 0; iy < grid; ++iy) {
        for (std::size_t ix = 0; ix < grid; ++ix) {
            const double re = -1.0 + 2.0 * static_cast<double>(ix) /
                                         static_cast<double>(grid - 1);
            const double im = -1.0 + 2.0 * static_cast<double>(iy) /
                                         static_cast<double>(grid - 1);
            const cplx z{re, im};
            if (std::abs(z) > 1.0) continue;
            const cplx v = phase_velocity({z, Chart::Z}, p);
            const double mag = std::abs(v);
            if (mag < 1e-14) continue;
            const cplx tip = z + 0.06 * v / mag;
            out << "<line x1=\"" << sx(re) << "\" y1=\"" << sy(im) << "\" x2=\""
                << sx(tip.real()) << "\" y2=\"" << sy(tip.imag())
                << "\" stroke=\"#1f77b4\" stroke-width=\"1\"/>\n";
        }
    }
    for (const Polarization& loc : report.locations) {
        const cplx z = loc.chart == Chart::Z ? loc.value : 1.0 / loc.value;
        if (std::abs(z) > 1.3) continue;
        out << "<circle cx=\"" << sx(z.real()) << "\" cy=\"" << sy(z.imag())
            << "\" r=\"5\" fill=\"#d62728\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace

PortraitSummary emit_portrait(const ModelParams& p, std::size_t grid,
                              const std::filesystem::path& out_dir, bool with_svg,
                              const Tolerances& tol) {
    (void)tol;
    if (grid < 8) throw ConfigError("portrait: grid must be at least 8x8");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());

    PortraitSummary summary;
    summary.fixed_points = stationary_points(p);

    summary.field_csv = out_dir / "portrait_field.csv";
    {
        std::ofstream out(summary.field_csv);
        if (!out) throw IoError("cannot write " + summary.field_csv.string());
        out << "chart,re,im,vel_re,vel_im\n";
        for (const Chart chart : {Chart::Z, Chart::W}) {
            for (std::size_t iy = 0; iy < grid; ++iy) {
                for (std::size_t ix = 0; ix < grid; ++ix) {
                    const double re = -1.0 + 2.0 * static_cast<double>(ix) /
                                                 static_cast<double>(grid - 1);
                    const double im = -1.0 + 2.0 * static_cast<double>(iy) /
                                                 static_cast<double>(grid - 1);
                    const cplx v{re, im};
                    if (std::abs(v) > 1.0 + 1e-12) continue;
                    const cplx vel = phase_velocity({v, chart}, p);
                    out << (chart == Chart::Z ? 'z' : 'w') << ',' << format_sig17(re)
                        << ',' << format_sig17(im) << ',' << format_sig17(vel.real())
                        << ',' << format_sig17(vel.imag()) << '\n';
                }
            }
        }
    }

    summary.points_json = out_dir / "portrait_points.json";
    {
        nlohmann::json j;
        j["params"] = {{"r", p.r}, {"d", p.d}, {"theta", p.theta}, {"disc", p.disc},
                       {"regime", std::string(regime_name(p.regime))}};
        const char* kind = summary.fixed_points.kind == FixedPointKind::Center
                               ? "center"
                               : summary.fixed_points.kind == FixedPointKind::PointDipole
                                     ? "point_dipole"
                                     : "source_sink";
        j["kind"] = kind;
        auto& pts = j["fixed_points"] = nlohmann::json::array();
        for (std::size_t k = 0; k < summary.fixed_points.locations.size(); ++k) {
            const Polarization& loc = summary.fixed_points.locations[k];
            const auto& lin = summary.fixed_points.linearization[k];
            pts.push_back({{"chart", loc.chart == Chart::Z ? "z" : "w"},
                           {"re", loc.value.real()},
                           {"im", loc.value.imag()},
                           {"linearization",
                            {{lin.first.real(), lin.first.imag()},
                             {lin.second.real(), lin.second.imag()}}}});
        }
        // projective positions of common reference states
        j["markers"] = {{"ket0", {{"chart", "w"}, {"re", 0.0}, {"im", 0.0}}},
                        {"ket1", {{"chart", "z"}, {"re", 0.0}, {"im", 0.0}}},
                        {"plus", {{"chart", "z"}, {"re", 1.0}, {"im", 0.0}}},
                        {"minus", {{"chart", "z"}, {"re", -1.0}, {"im", 0.0}}},
                        {"plus_i", {{"chart", "z"}, {"re", 0.0}, {"im", -1.0}}},
                        {"minus_i", {{"chart", "z"}, {"re", 0.0}, {"im", 1.0}}}};
        std::ofstream out(summary.points_json);
        if (!out) throw IoError("cannot write " + summary.points_json.string());
        out << j.dump(2) << '\n';
    }

    if (with_svg) {
        summary.svg = out_dir / "portrait.svg";
        svg_portrait(*summary.svg, p, summary.fixed_points, grid);
    }
    return summary;
}

namespace {

// closed forms used as oracles by the invariant suite

Mat2 eta_unbroken_closed(const ModelParams& p) {
    const double a = p.r * std::sin(p.theta);
    const double sp = std::sqrt(p.d + a), sm = std::sqrt(p.d - a);
    const double pref = 1.0 / (2.0 * std::pow(p.disc, 0.25));
    return pref * Mat2{sp + sm, -I * (sp - sm), I * (sp - sm), sp + sm};
}

Mat2 eta_broken_closed(const ModelParams& p) {
    const double s = p.r * std::sin(p.theta) / p.d;
    const double c2 = p.disc / (p.d * p.d);
    const double c4 = c2 * c2;
    const double root = std::sqrt(c4 + s * s);
    const double omega_p = std::sqrt(s * s + root) + std::sqrt(std::max(0.0, s * s - root));
    const double omega_m = std::sqrt(s * s + root) - std::sqrt(std::max(0.0, s * s - root));
    const double pref = 1.0 / (2.0 * std::pow(-c2, 0.25));
    const double diag = c2 / root * omega_m;
    const cplx off = I * (s / root) * omega_m;
    return pref * Mat2{omega_p + diag, -off, off, omega_p - diag};
}

Mat2 iso_h_unbroken_closed(const ModelParams& p) {
    const double b = p.r * std::cos(p.theta);
    const double omega = std::sqrt(p.disc);
    return {b, omega, omega, b};
}

Mat2 iso_h_broken_closed(const ModelParams& p) {
    const double b = p.r * std::cos(p.theta);
    const double a = p.r * std::sin(p.theta);
    const double q = std::sqrt(-p.disc);
    const double s = a / p.d;
    const double c2 = p.disc / (p.d * p.d);
    const double c4 = c2 * c2;
    const double den = c4 + s * s;
    const double A = (c4 + std::sqrt(-c2)) / den;
    const double B = (c2 + s * s * std::sqrt(-c2)) / den;
    return {b + I * a * A, -q * B, q * B, b - I * a * A};
}

struct VerifyContext {
    std::ostream& log;
    const Tolerances& tol;
    int failures = 0;

    void check(const ModelParams& p, const std::string& name, bool ok,
               double value = std::numeric_limits<double>::quiet_NaN()) {
        log << (ok ? "[ ok ] " : "[FAIL] ") << "r=" << p.r << " d=" << p.d
            << " theta=" << p.theta << " | " << name;
        if (!std::isnan(value)) log << " (" << value << ")";
        log << '\n';
        if (!ok) ++failures;
    }

    void skip(const ModelParams& p, const std::string& name, const std::string& why) {
        log << "[skip] r=" << p.r << " d=" << p.d << " theta=" << p.theta << " | " << name
            << " (" << why << ")\n";
    }
};

void verify_point(VerifyContext& ctx, const ModelParams& p) {
    const Tolerances& tol = ctx.tol;
    const Mat2 h = build_hamiltonian(p);
    const Mat2 par = parity();

    ctx.check(p, "pt symmetry of H", sup_abs(par * conj(h) * par - h) == 0.0);

    // propagator against direct integration, all regimes
    {
        OdeControl ctrl;
        ctrl.abs_tol = ctrl.rel_tol = 1e-12;
        auto rhs = [&h](double, const Mat2& u) { return -I * (h * u); };
        const auto times = linspace(0.0, 5.0, 11);
        const auto traj = integrate_at_times(rhs, identity(), times, ctrl);
        double worst = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i)
            worst = std::max(worst, sup_abs(propagator(p, times[i]) - traj[i]));
        ctx.check(p, "propagator matches integrated evolution", worst < 1e-8, worst);
    }

    // fixed-point law
    {
        const FixedPointReport fp = stationary_points(p);
        const FixedPointKind want = p.regime == Regime::Unbroken
                                        ? FixedPointKind::Center
                                        : p.regime == Regime::Broken
                                              ? FixedPointKind::SourceSink
                                              : FixedPointKind::PointDipole;
        ctx.check(p, "fixed-point kind matches regime", fp.kind == want);
    }

    if (p.regime == Regime::ExceptionalPoint) {
        ctx.skip(p, "operator suite", "degenerate spectrum at the exceptional point");
        return;
    }

    // eigensystem residuals and closed-form eigenvalues
    {
        double worst = 0.0;
        for (const Normalization n : {Normalization::HermitianAdjoint,
                                      Normalization::PTNorm, Normalization::CPTOrthonormal}) {
            const SpectralData sd = eigensystem(p, n, tol);
            worst = std::max(worst, sup_abs(h * sd.v_plus - sd.e_plus * sd.v_plus));
            worst = std::max(worst, sup_abs(h * sd.v_minus - sd.e_minus * sd.v_minus));
        }
        ctx.check(p, "eigenpair residuals", worst < tol.eig, worst);

        const auto [ep, em] = eigenvalues(p);
        const cplx half = 0.5 * tr(h);
        const cplx s = std::sqrt(half * half - det(h));
        const double diff = std::max(std::abs(ep - (half + s)), std::abs(em - (half - s)));
        ctx.check(p, "eigenvalues match characteristic roots", diff < 1e-12, diff);
    }

    // completeness of the biorthogonal eigenbasis
    {
        const SpectralData sd = eigensystem(p, Normalization::CPTOrthonormal, tol);
        const Mat2 g = regime_metric(p, tol);
        const Mat2 sum = outer_bilinear(sd.v_plus, transpose(g) * conj(sd.v_plus)) +
                         outer_bilinear(sd.v_minus, transpose(g) * conj(sd.v_minus));
        const double diff = sup_abs(sum - identity());
        ctx.check(p, "biorthogonal completeness", diff < 1e-10, diff);
    }

    const Mat2 c = p.regime == Regime::Unbroken ? c_unbroken(p, tol) : c_broken(p, tol);
    const Mat2 g = metric_from_c(c);
    ctx.check(p, "c involution", sup_abs(c * c - identity()) < tol.mat);

    if (p.regime == Regime::Unbroken) {
        ctx.check(p, "[H, C] = 0", sup_abs(commutator(h, c)) < tol.mat);
        ctx.check(p, "C commutes with PT", sup_abs(par * conj(c) * par - c) < tol.mat);
        ctx.check(p, "metric intertwines H", sup_abs(g * h - adjoint(h) * g) < tol.mat);

        const SpectralData sd = eigensystem(p, Normalization::CPTOrthonormal, tol);
        const auto ip = [&](const Vec2& u, const Vec2& v) {
            return inner_product(InnerProductKind::CPT_unbroken, u, v, p, tol);
        };
        const double diff = std::max(
            {std::abs(ip(sd.v_plus, sd.v_plus) - 1.0), std::abs(ip(sd.v_minus, sd.v_minus) - 1.0),
             std::abs(ip(sd.v_plus, sd.v_minus)), std::abs(ip(sd.v_minus, sd.v_plus))});
        ctx.check(p, "cpt orthonormality", diff < 1e-10, diff);

        const auto [eta, eta_inv] = dyson_map(p, tol);
        ctx.check(p, "eta^2 = g", sup_abs(eta * eta - g) < 1e-12);
        ctx.check(p, "eta closed form", sup_abs(eta - eta_unbroken_closed(p)) < 1e-10);
        const Mat2 iso = eta * h * eta_inv;
        ctx.check(p, "isospectral H Hermitian", sup_abs(iso - adjoint(iso)) < tol.mat);
        ctx.check(p, "isospectral H closed form",
                  sup_abs(iso - iso_h_unbroken_closed(p)) < 1e-10);
    } else {
        const Mat2 cu = c_u_continued(p, tol);
        ctx.check(p, "continued C involution", sup_abs(cu * cu - identity()) < tol.mat);
        ctx.check(p, "[H, continued C] = 0", sup_abs(commutator(h, cu)) < tol.mat);
        ctx.check(p, "continued C anti-PT", sup_abs(par * conj(cu) * par + cu) < tol.mat);

        const double b2 = 2.0 * p.r * std::cos(p.theta);
        ctx.check(p, "C H C = 2 r cos(theta) - H",
                  sup_abs(c * h * c - (b2 * identity() - h)) < tol.mat);

        const double inter = sup_abs(g * h - adjoint(h) * g);
        ctx.check(p, "metric intertwining fails as required", inter > 10.0 * tol.mat, inter);

        const SpectralData sd = eigensystem(p, Normalization::CPTOrthonormal, tol);
        const auto ip = [&](const Vec2& u, const Vec2& v) {
            return inner_product(InnerProductKind::CbPT_broken, u, v, p, tol);
        };
        const double diff = std::max(
            {std::abs(ip(sd.v_plus, sd.v_plus) - 1.0), std::abs(ip(sd.v_minus, sd.v_minus) - 1.0),
             std::abs(ip(sd.v_plus, sd.v_minus)), std::abs(ip(sd.v_minus, sd.v_plus))});
        ctx.check(p, "cbpt orthonormality", diff < 1e-10, diff);

        const auto [eta, eta_inv] = dyson_map(p, tol);
        ctx.check(p, "eta^2 = g", sup_abs(eta * eta - g) < 1e-12);
        ctx.check(p, "eta closed form", sup_abs(eta - eta_broken_closed(p)) < 1e-8);
        const Mat2 iso = eta * h * eta_inv;
        ctx.check(p, "isospectral H closed form",
                  sup_abs(iso - iso_h_broken_closed(p)) < 1e-8);

        // the three right-hand sides of the broken-regime evolution agree
        std::mt19937 rng(12345);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            Mat2 rho;
            for (cplx* e : {&rho.a11, &rho.a12, &rho.a21, &rho.a22})
                *e = cplx(uni(rng), uni(rng));
            const Mat2 conj_form = biorthogonal_rhs(rho, p, tol);
            const Mat2 source_form =
                -I * commutator(h, rho) + 2.0 * std::sqrt(-p.disc) * (rho * cu);
            const Mat2 lindblad_form = lindblad_rhs(rho, p, tol);
            worst = std::max({worst, sup_abs(conj_form - source_form),
                              sup_abs(conj_form - lindblad_form)});
        }
        ctx.check(p, "broken evolution forms agree", worst < 1e-12, worst);

        // trace rate against a finite difference
        {
            const DensityState rho0 = maximally_mixed(Formalism::Biorthogonal, p);
            const cplx rate = trace_rate(rho0, tol);
            const double h_fd = 1e-4;
            const cplx fd = (tr(evolve_density(rho0, h_fd, tol).rho) -
                             tr(evolve_density(rho0, -h_fd, tol).rho)) /
                            (2.0 * h_fd);
            ctx.check(p, "trace rate matches finite difference", std::abs(rate - fd) < 1e-6,
                      std::abs(rate - fd));
        }
    }

    // isospectral map preserves the spectrum
    {
        const Mat2 iso = isospectral_hamiltonian(p, tol);
        const auto [ep, em] = eigenvalues(p);
        const cplx half = 0.5 * tr(iso);
        const cplx s = std::sqrt(half * half - det(iso));
        const cplx l1 = half + s, l2 = half - s;
        const double diff = std::min(std::max(std::abs(l1 - ep), std::abs(l2 - em)),
                                     std::max(std::abs(l1 - em), std::abs(l2 - ep)));
        ctx.check(p, "spec(h) = spec(H)", diff < 1e-10, diff);
    }
}

} // namespace

int verify_invariants(std::ostream& log, const Tolerances& tol) {
    VerifyContext ctx{log, tol};
    std::vector<ModelParams> grid;
    for (const double d : {0.5, 0.95, 1.2})
        for (int k = 2; k <= 15; ++k)
            grid.push_back(make_params(1.0, d, 0.1 * k, tol.ep));
    // one deliberately degenerate point exercises the skip path
    grid.push_back(make_params(1.0, 1.0, PI / 2.0, tol.ep));

    for (const ModelParams& p : grid) verify_point(ctx, p);
    log << (ctx.failures == 0 ? "verification passed" : "verification FAILED") << " ("
        << ctx.failures << " failures)\n";
    return ctx.failures;
}

namespace {

std::vector<double> figure_theta_grid() {
    std::vector<double> thetas;
    for (int k = 0; k < 12; ++k)
        thetas.push_back(PI / 2.0 * static_cast<double>(k) / 11.0);
    thetas.push_back(std::asin(0.95));
    std::sort(thetas.begin(), thetas.end());
    return thetas;
}

} // namespace

SweepSpec figure_spec(int figure) {
    SweepSpec spec;
    spec.r = 1.0;
    spec.d = 0.95;
    spec.t_max = 20.0;
    spec.samples = 400;
    spec.theta_values = figure_theta_grid();
    switch (figure) {
        case 3:
            spec.initial_state = "ket0";
            spec.formalisms = {Formalism::HermitianAdjoint};
            break;
        case 4:
            spec.initial_state = "maximally_mixed";
            spec.formalisms = {Formalism::HermitianAdjoint};
            break;
        case 5:
            spec.initial_state = "ket0";
            spec.formalisms = {Formalism::Biorthogonal};
            spec.norm_power = 2;
            break;
        case 6:
            spec.initial_state = "biorthogonal_mixed";
            spec.formalisms = {Formalism::Biorthogonal};
            break;
        default:
            throw ConfigError("figure_spec: sweep presets exist for figures 3-6");
    }
    return spec;
}

std::vector<std::filesystem::path> run_figure(int figure, const std::filesystem::path& out_dir,
                                              const Tolerances& tol, unsigned threads) {
    if (figure == 1) {
        const PortraitSummary ps =
            emit_portrait(make_params(1.0, 0.95, 0.0, tol.ep), 24, out_dir, true, tol);
        std::vector<std::filesystem::path> files{ps.field_csv, ps.points_json};
        if (ps.svg) files.push_back(*ps.svg);
        return files;
    }
    const SweepSpec spec = figure_spec(figure);
    const std::string stem = "fig" + std::to_string(figure);
    SweepSummary s = run_sweep(spec, out_dir, stem, tol, threads);
    std::vector<std::filesystem::path> files = s.csv_files;
    files.push_back(s.metadata_file);
    if (figure == 5) {
        SweepSpec unsquared = spec;
        unsquared.norm_power = 1;
        SweepSummary s2 = run_sweep(unsquared, out_dir, "fig5_unsquared", tol, threads);
        files.insert(files.end(), s2.csv_files.begin(), s2.csv_files.end());
        files.push_back(s2.metadata_file);
    }
    return files;
}

} // namespace ptlab
