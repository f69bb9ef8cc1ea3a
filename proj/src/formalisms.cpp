#include "ptlab/formalisms.hpp"

#include <algorithm>
#include <cmath>

#include "ptlab/dynamics.hpp"
#include "ptlab/ode.hpp"

namespace ptlab {

namespace {

constexpr cplx I{0.0, 1.0};

Mat2 biorthogonal_left_product(const Vec2& phi, const Mat2& g) {
    // |phi> <phi| g
    return outer_bilinear(phi, transpose(g) * conj(phi));
}

// H^{CbPT} = g^{-1} H^dag g; algebraically equal to 2 r cos(theta) - H, which
// is asserted here because the whole broken-regime evolution rests on it.
Mat2 conjugated_hamiltonian(const Mat2& h, const ModelParams& p, const Tolerances& tol) {
    const Mat2 g = regime_metric(p, tol);
    const Mat2 hc = inverse(g) * adjoint(h) * g;
    const Mat2 expected = 2.0 * p.r * std::cos(p.theta) * identity() - h;
    if (sup_abs(hc - expected) > 1e-8 * (1.0 + sup_abs(h)))
        throw NumericalError("conjugated_hamiltonian: metric conjugation drifted away "
                             "from 2 r cos(theta) - H");
    return hc;
}

void require_biorthogonal_regime(const ModelParams& p, const Tolerances& tol) {
    if (std::abs(p.disc) <= tol.ep)
        throw DegenerateSpectrum("biorthogonal formalism is undefined at the "
                                 "exceptional point (the metric is singular there)");
}

std::vector<Mat2> biorthogonal_broken_trajectory(const Mat2& rho0, const ModelParams& p,
                                                 const std::vector<double>& times,
                                                 const Tolerances& tol) {
    const Mat2 h = build_hamiltonian(p);
    const Mat2 hc = conjugated_hamiltonian(h, p, tol);
    auto rhs = [&h, &hc](double, const Mat2& rho) { return -I * (h * rho - rho * hc); };
    OdeControl ctrl;
    ctrl.abs_tol = tol.ode_abs;
    ctrl.rel_tol = tol.ode_rel;
    return integrate_at_times(rhs, rho0, times, ctrl);
}

} // namespace

DensityState density_from_ensemble(const std::vector<std::pair<double, Vec2>>& weights,
                                   Formalism formalism, const ModelParams& p,
                                   const Tolerances& tol) {
    double sum = 0.0;
    for (const auto& [w, state] : weights) {
        if (w < 0.0) throw WeightSumViolation("density_from_ensemble: negative weight");
        sum += w;
        (void)state;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw WeightSumViolation("density_from_ensemble: weights must sum to 1");

    Mat2 rho{};
    switch (formalism) {
        case Formalism::HermitianAdjoint: {
            for (const auto& [w, state] : weights) {
                const Vec2 v = state / cplx(norm(state));
                rho = rho + w * outer_bilinear(v, conj(v));
            }
            break;
        }
        case Formalism::Biorthogonal:
        case Formalism::Isospectral: {
            const Mat2 g = regime_metric(p, tol);
            for (const auto& [w, state] : weights) {
                const cplx n2 = bilinear_dot(conj(state), g * state);
                const Vec2 v = state / std::sqrt(n2);
                rho = rho + w * biorthogonal_left_product(v, g);
            }
            if (formalism == Formalism::Isospectral) {
                const auto [eta, eta_inv] = dyson_map(p, tol);
                rho = eta * rho * eta_inv;
            }
            break;
        }
    }
    return {rho, formalism, p, 0.0};
}

DensityState biorthogonal_projector(const Vec2& psi, const ModelParams& p, int norm_power,
                                    const Tolerances& tol) {
    const Mat2 g = regime_metric(p, tol);
    const cplx n = bilinear_dot(conj(psi), g * psi);
    if (std::abs(n) <= tol.trace)
        throw VanishingTrace("biorthogonal_projector: state has vanishing CPT norm");
    cplx scale = 1.0;
    for (int k = 0; k < norm_power; ++k) scale *= n;
    return {biorthogonal_left_product(psi, g) / scale, Formalism::Biorthogonal, p, 0.0};
}

DensityState maximally_mixed(Formalism formalism, const ModelParams& p) {
    return {0.5 * identity(), formalism, p, 0.0};
}

Mat2 biorthogonal_rhs(const Mat2& rho, const ModelParams& p, const Tolerances& tol) {
    if (p.regime != Regime::Broken)
        throw RegimeMismatch("biorthogonal_rhs: source form applies in the broken regime");
    const Mat2 h = build_hamiltonian(p);
    return -I * (h * rho - rho * conjugated_hamiltonian(h, p, tol));
}

Mat2 lindblad_rhs(const Mat2& rho, const ModelParams& p, const Tolerances& tol) {
    if (p.regime != Regime::Broken)
        throw RegimeMismatch("lindblad_rhs: damping form applies in the broken regime");
    const double gamma = 2.0 * std::sqrt(-p.disc);
    // On the principal branch the damping operator is the negated continued C;
    // with it the dissipator reproduces the metric-conjugate dynamics exactly.
    const Mat2 c = -1.0 * c_u_continued(p, tol);
    const Mat2 h_eff = build_hamiltonian(p) + (I * (0.5 * gamma)) * c;
    return -I * commutator(h_eff, rho) - (0.5 * gamma) * anticommutator(c, rho);
}

std::vector<DensityState> density_trajectory(const DensityState& rho0,
                                             const std::vector<double>& times,
                                             const Tolerances& tol) {
    std::vector<DensityState> out;
    out.reserve(times.size());
    const ModelParams& p = rho0.params;

    auto closed_form = [&](auto&& rho_at) {
        for (const double t : times) out.push_back({rho_at(t - rho0.t), rho0.formalism, p, t});
    };

    switch (rho0.formalism) {
        case Formalism::HermitianAdjoint: {
            closed_form([&](double dt) {
                const Mat2 u = propagator(p, dt);
                return u * rho0.rho * adjoint(u);
            });
            return out;
        }
        case Formalism::Biorthogonal: {
            require_biorthogonal_regime(p, tol);
            if (p.regime == Regime::Unbroken) {
                closed_form([&](double dt) {
                    return propagator(p, dt) * rho0.rho * propagator(p, -dt);
                });
                return out;
            }
            const auto traj = biorthogonal_broken_trajectory(rho0.rho, p, times, tol);
            for (std::size_t i = 0; i < times.size(); ++i)
                out.push_back({traj[i], Formalism::Biorthogonal, p, times[i]});
            return out;
        }
        case Formalism::Isospectral: {
            require_biorthogonal_regime(p, tol);
            const auto [eta, eta_inv] = dyson_map(p, tol);
            DensityState pulled{eta_inv * rho0.rho * eta, Formalism::Biorthogonal, p, rho0.t};
            auto traj = density_trajectory(pulled, times, tol);
            for (auto& state : traj) {
                state.rho = eta * state.rho * eta_inv;
                state.formalism = Formalism::Isospectral;
            }
            return traj;
        }
    }
    throw FormalismMismatch("density_trajectory: unknown formalism");
}

DensityState evolve_density(const DensityState& rho0, double t, const Tolerances& tol) {
    return density_trajectory(rho0, {rho0.t, t}, tol).back();
}

cplx trace_rate(const DensityState& rho, const Tolerances& tol) {
    const ModelParams& p = rho.params;
    switch (rho.formalism) {
        case Formalism::HermitianAdjoint: {
            const Mat2 h_ah = hermitian_split(build_hamiltonian(p)).second;
            return 2.0 * tr(h_ah * rho.rho);
        }
        case Formalism::Biorthogonal: {
            require_biorthogonal_regime(p, tol);
            if (p.regime == Regime::Unbroken) return 0.0;
            return 2.0 * std::sqrt(-p.disc) * tr(c_u_continued(p, tol) * rho.rho);
        }
        case Formalism::Isospectral: {
            require_biorthogonal_regime(p, tol);
            if (p.regime == Regime::Unbroken) return 0.0;
            const auto [eta, eta_inv] = dyson_map(p, tol);
            const DensityState pulled{eta_inv * rho.rho * eta, Formalism::Biorthogonal, p,
                                      rho.t};
            return trace_rate(pulled, tol);
        }
    }
    throw FormalismMismatch("trace_rate: unknown formalism");
}

DensityState normalize(const DensityState& rho, const Tolerances& tol) {
    const cplx t = tr(rho.rho);
    if (std::abs(t) <= tol.trace)
        throw VanishingTrace("normalize: trace magnitude below tolerance");
    return {rho.rho / t, rho.formalism, rho.params, rho.t};
}

double purity(const DensityState& rho, const Tolerances& tol) {
    const Mat2 n = normalize(rho, tol).rho;
    return tr(n * n).real();
}

EntropyReport entropy(const DensityState& rho, const std::vector<double>& alphas,
                      const Tolerances& tol) {
    const Mat2 n = normalize(rho, tol).rho;
    const double eps_spec = 1e-8 * frobenius(n);

    const cplx half_tr = 0.5 * tr(n);
    // entry-difference discriminant; tr^2/4 - det cancels for near-degenerate rho
    const cplx half_gap = 0.5 * (n.a11 - n.a22);
    const cplx s = std::sqrt(half_gap * half_gap + n.a12 * n.a21);
    const cplx raw[2] = {half_tr + s, half_tr - s};

    double lambda[2];
    for (int k = 0; k < 2; ++k) {
        if (std::abs(raw[k].imag()) > eps_spec)
            throw NonRealSpectrum("entropy: eigenvalue has a significant imaginary part");
        double v = raw[k].real();
        if (v < -eps_spec || v > 1.0 + eps_spec)
            throw NonRealSpectrum("entropy: eigenvalue outside [0, 1]");
        lambda[k] = std::clamp(v, 0.0, 1.0);
    }

    EntropyReport report;
    report.trace = tr(rho.rho).real();
    report.purity = lambda[0] * lambda[0] + lambda[1] * lambda[1];
    double vn = 0.0;
    for (const double l : lambda)
        if (l > 0.0) vn -= l * std::log(l);
    report.von_neumann = vn;

    for (const double alpha : alphas) {
        if (!(alpha > 0.0)) throw ConfigError("entropy: Renyi order must be positive");
        if (std::abs(alpha - 1.0) < 1e-12) {
            report.renyi.emplace_back(alpha, vn);
            continue;
        }
        const double sum = std::pow(lambda[0], alpha) + std::pow(lambda[1], alpha);
        report.renyi.emplace_back(alpha, std::log(sum) / (1.0 - alpha));
    }
    return report;
}

DensityState map_to_isospectral(const DensityState& rho_b, const Tolerances& tol) {
    if (rho_b.formalism != Formalism::Biorthogonal)
        throw FormalismMismatch("map_to_isospectral: expects a biorthogonal state");
    const auto [eta, eta_inv] = dyson_map(rho_b.params, tol);
    return {eta * rho_b.rho * eta_inv, Formalism::Isospectral, rho_b.params, rho_b.t};
}

} // namespace ptlab
