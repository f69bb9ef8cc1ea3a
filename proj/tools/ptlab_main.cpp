#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ptlab/operators.hpp"
#include "ptlab/report.hpp"

namespace {

nlohmann::json pair_json(ptlab::cplx c) { return {c.real(), c.imag()}; }
nlohmann::json vec_json(const ptlab::Vec2& v) { return {pair_json(v.a), pair_json(v.b)}; }

ptlab::Normalization norm_from_name(const std::string& name) {
    if (name == "hermitian") return ptlab::Normalization::HermitianAdjoint;
    if (name == "pt") return ptlab::Normalization::PTNorm;
    return ptlab::Normalization::CPTOrthonormal;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for a balanced gain/loss two-state system"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    unsigned threads = 0;
    ptlab::Tolerances tol;

    app.add_option("--config", config_path, "JSON sweep configuration file");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0 = all hardware threads)")
        ->capture_default_str();
    app.add_option("--tol-ep", tol.ep, "discriminant band treated as degenerate")
        ->capture_default_str();
    app.add_option("--tol-mat", tol.mat, "matrix identity tolerance")->capture_default_str();
    app.add_option("--tol-eig", tol.eig, "eigenpair residual tolerance")
        ->capture_default_str();
    app.add_option("--tol-ode-abs", tol.ode_abs, "integrator absolute tolerance")
        ->capture_default_str();
    app.add_option("--tol-ode-rel", tol.ode_rel, "integrator relative tolerance")
        ->capture_default_str();
    app.add_option("--tol-trace", tol.trace, "vanishing-trace threshold")
        ->capture_default_str();

    double r = 1.0, d = 0.95, theta = 0.0;
    std::string norm_name = "hermitian";
    auto* eigs = app.add_subcommand("eigs", "print the spectrum and eigenvectors as JSON");
    eigs->add_option("--r", r, "radial parameter");
    eigs->add_option("--d", d, "coupling");
    eigs->add_option("--theta", theta, "non-Hermiticity angle")->required();
    eigs->add_option("--norm", norm_name, "eigenvector normalization")
        ->check(CLI::IsMember({"hermitian", "pt", "cpt"}))
        ->capture_default_str();

    std::size_t grid = 24;
    bool with_svg = false;
    auto* portrait = app.add_subcommand("portrait", "sample the polarization flow field");
    portrait->add_option("--r", r, "radial parameter");
    portrait->add_option("--d", d, "coupling");
    portrait->add_option("--theta", theta, "non-Hermiticity angle");
    portrait->add_option("--grid", grid, "lattice points per axis")->capture_default_str();
    portrait->add_flag("--svg", with_svg, "also render an SVG of the field");

    std::string formalism_name = "hermitian_adjoint";
    std::string state_name = "ket0";
    double t_max = 20.0;
    std::size_t samples = 400;
    int norm_power = 1;
    auto* evolve = app.add_subcommand("evolve", "evolve one angle and write the CSV");
    evolve->add_option("--r", r, "radial parameter");
    evolve->add_option("--d", d, "coupling");
    evolve->add_option("--theta", theta, "non-Hermiticity angle")->required();
    evolve->add_option("--formalism", formalism_name, "density-matrix formalism")
        ->check(CLI::IsMember({"hermitian_adjoint", "biorthogonal", "isospectral"}))
        ->capture_default_str();
    evolve->add_option("--state", state_name, "initial state")
        ->check(CLI::IsMember({"ket0", "maximally_mixed", "biorthogonal_mixed"}))
        ->capture_default_str();
    evolve->add_option("--t-max", t_max, "end of the time window")->capture_default_str();
    evolve->add_option("--samples", samples, "sample count")->capture_default_str();
    evolve->add_option("--norm-power", norm_power,
                       "CPT-norm power dividing pure biorthogonal projectors")
        ->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "run the sweep described by --config");

    int figure = 0;
    auto* figures = app.add_subcommand("figures", "emit the data behind a published figure");
    figures->add_option("figure", figure, "figure number")
        ->required()
        ->check(CLI::IsMember({1, 3, 4, 5, 6}));

    auto* verify = app.add_subcommand("verify", "run the invariant suite");

    for (CLI::App* sub : {eigs, portrait, evolve, sweep, figures, verify})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (eigs->parsed()) {
            const ptlab::ModelParams p = ptlab::make_params(r, d, theta, tol.ep);
            nlohmann::json j;
            j["params"] = {{"r", p.r},
                           {"d", p.d},
                           {"theta", p.theta},
                           {"disc", p.disc},
                           {"regime", std::string(ptlab::regime_name(p.regime))}};
            if (const auto tep = ptlab::exceptional_theta(p.r, p.d)) j["theta_ep"] = *tep;
            const auto [ep, em] = ptlab::eigenvalues(p);
            j["eigenvalues"] = {{"plus", pair_json(ep)}, {"minus", pair_json(em)}};
            if (p.regime == ptlab::Regime::ExceptionalPoint) {
                j["note"] = "eigenvectors coalesce at the exceptional point";
            } else {
                const ptlab::SpectralData sd =
                    ptlab::eigensystem(p, norm_from_name(norm_name), tol);
                j["eigenvectors"] = {{"normalization", norm_name},
                                     {"plus", vec_json(sd.v_plus)},
                                     {"minus", vec_json(sd.v_minus)}};
            }
            std::cout << j.dump(2) << '\n';
        } else if (portrait->parsed()) {
            const ptlab::ModelParams p = ptlab::make_params(r, d, theta, tol.ep);
            const ptlab::PortraitSummary s =
                ptlab::emit_portrait(p, grid, out_dir, with_svg, tol);
            std::cout << "wrote " << s.field_csv.string() << '\n'
                      << "wrote " << s.points_json.string() << '\n';
            if (s.svg) std::cout << "wrote " << s.svg->string() << '\n';
        } else if (evolve->parsed()) {
            ptlab::SweepSpec spec;
            spec.r = r;
            spec.d = d;
            spec.theta_values = {theta};
            spec.t_max = t_max;
            spec.samples = samples;
            spec.initial_state = state_name;
            spec.formalisms = {ptlab::formalism_from_name(formalism_name)};
            spec.norm_power = norm_power;
            const ptlab::SweepSummary s = ptlab::run_sweep(spec, out_dir, "evolve", tol, threads);
            for (const auto& f : s.csv_files) std::cout << "wrote " << f.string() << '\n';
            std::cout << "wrote " << s.metadata_file.string() << '\n';
        } else if (sweep->parsed()) {
            if (config_path.empty())
                throw ptlab::ConfigError("sweep: --config <file.json> is required");
            const ptlab::SweepSpec spec = ptlab::sweep_from_json_file(config_path);
            const ptlab::SweepSummary s = ptlab::run_sweep(spec, out_dir, "sweep", tol, threads);
            for (const auto& f : s.csv_files) std::cout << "wrote " << f.string() << '\n';
            std::cout << "wrote " << s.metadata_file.string() << '\n';
        } else if (figures->parsed()) {
            const auto files = ptlab::run_figure(figure, out_dir, tol, threads);
            for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
        } else if (verify->parsed()) {
            const int failures = ptlab::verify_invariants(std::cout, tol);
            return failures == 0 ? 0 : 3;
        }
        return 0;
    } catch (const ptlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const ptlab::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 1;
    } catch (const ptlab::PtlabError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    }
}
