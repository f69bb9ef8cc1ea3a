#include "ptlab/dynamics.hpp"

#include <cmath>

namespace ptlab {

namespace {

constexpr cplx I{0.0, 1.0};

cplx csinc(cplx x) {
    if (std::abs(x) < 1e-4) {
        const cplx x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

cplx flow_rhs(cplx v, Chart chart, double d, double a) {
    if (chart == Chart::Z) return I * (d * v * v - 2.0 * I * a * v - d);
    return I * (d * v * v + 2.0 * I * a * v - d);
}

} // namespace

Mat2 propagator(const ModelParams& p, double t) {
    const Mat2 h = build_hamiltonian(p);
    const double b = p.r * std::cos(p.theta);
    const cplx x = principal_sqrt_disc(p.disc) * t;
    const Mat2 shifted = h - b * identity();
    return std::exp(-I * b * t) * (std::cos(x) * identity() - I * t * csinc(x) * shifted);
}

Vec2 evolve_state(const Vec2& psi0, const ModelParams& p, double t) {
    return propagator(p, t) * psi0;
}

cplx phase_velocity(const Polarization& zp, const ModelParams& p) {
    return flow_rhs(zp.value, zp.chart, p.d, p.r * std::sin(p.theta));
}

FixedPointReport stationary_points(const ModelParams& p) {
    if (!(p.d > 0.0))
        throw DegenerateQuadratic(
            "stationary_points: d = 0 degenerates the flow quadratic; the fixed "
            "points sit at the z- and w-chart origins");
    const cplx ia = I * (p.r * std::sin(p.theta));
    const cplx omega = principal_sqrt_disc(p.disc);

    FixedPointReport report;
    const bool degenerate = p.regime == Regime::ExceptionalPoint;
    const std::vector<cplx> roots =
        degenerate ? std::vector<cplx>{ia / p.d}
                   : std::vector<cplx>{(ia + omega) / p.d, (ia - omega) / p.d};

    // the degenerate double root ia/d carries the residual -i disc / d, which
    // is nonzero anywhere inside the exceptional-point band
    const double residual_allowance =
        degenerate ? std::abs(p.disc) / p.d + 1e-12 : 1e-10;

    double re_min = 0.0, re_max = 0.0, im_scale = 0.0;
    for (const cplx zc : roots) {
        const Polarization loc{zc, Chart::Z};
        if (std::abs(phase_velocity(loc, p)) > residual_allowance)
            throw NumericalError("stationary_points: root fails the substitution check");
        const cplx fp = 2.0 * I * (p.d * zc - ia);
        report.locations.push_back(loc);
        report.linearization.emplace_back(fp, std::conj(fp));
        re_min = std::min(re_min, fp.real());
        re_max = std::max(re_max, fp.real());
        im_scale = std::max(im_scale, std::abs(fp));
    }

    if (degenerate)
        report.kind = FixedPointKind::PointDipole;
    else if (std::max(std::abs(re_min), std::abs(re_max)) <= 1e-10 * im_scale)
        report.kind = FixedPointKind::Center;
    else
        report.kind = FixedPointKind::SourceSink;
    return report;
}

BlochPoint bloch_point(const Vec2& psi) {
    const double n2 = std::norm(psi.a) + std::norm(psi.b);
    const cplx cross = std::conj(psi.a) * psi.b;
    return {2.0 * cross.real() / n2, 2.0 * cross.imag() / n2,
            (std::norm(psi.a) - std::norm(psi.b)) / n2};
}

BlochPoint bloch_of_polarization(const Polarization& zp) {
    if (zp.chart == Chart::Z) return bloch_point({zp.value, 1.0});
    return bloch_point({1.0, zp.value});
}

std::vector<FlowSample> integrate_flow(const Polarization& z0, const ModelParams& p,
                                       double t0, double t1, std::size_t samples,
                                       const FlowOptions& opts) {
    const double a = p.r * std::sin(p.theta);
    Chart chart = z0.chart;
    auto rhs = [&chart, d = p.d, a](double, cplx v) { return flow_rhs(v, chart, d, a); };

    OdeControl ctrl;
    ctrl.abs_tol = opts.abs_tol;
    ctrl.rel_tol = opts.rel_tol;
    detail::Dopri5<cplx, decltype(rhs)> stepper(rhs, z0.value, t0, ctrl);

    const double w_hi = 1.0 / opts.switch_lo;
    auto maybe_switch = [&] {
        const double mag = std::abs(stepper.y);
        if (chart == Chart::Z ? mag > opts.switch_hi : mag > w_hi) {
            chart = chart == Chart::Z ? Chart::W : Chart::Z;
            stepper.reset_state(1.0 / stepper.y);
        }
    };
    maybe_switch();

    std::vector<FlowSample> out;
    out.reserve(samples);
    const std::vector<double> times = linspace(t0, t1, samples);
    out.push_back({times.front(), Polarization{stepper.y, chart}});
    for (std::size_t i = 1; i < times.size(); ++i) {
        while (!stepper.step_until(times[i])) maybe_switch();
        maybe_switch();
        out.push_back({times[i], Polarization{stepper.y, chart}});
    }
    return out;
}

std::optional<double> detect_scalar_period(const std::function<double(double)>& f,
                                           double t_max, std::size_t grid) {
    if (grid < 8 || !(t_max > 0.0)) return std::nullopt;
    const double g0 = f(0.0);
    const double dt = t_max / static_cast<double>(grid);

    double spread = 0.0;
    std::vector<double> g(grid + 1);
    for (std::size_t k = 0; k <= grid; ++k) {
        g[k] = f(dt * static_cast<double>(k));
        spread = std::max(spread, std::abs(g[k] - g0));
    }
    if (spread <= 1e-12 * std::max(1.0, std::abs(g0))) return std::nullopt;

    auto bisect = [](const std::function<double(double)>& h, double lo, double hi) {
        double flo = h(lo);
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = h(mid);
            if ((flo <= 0.0) == (fm <= 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    // candidates must actually revisit the start; this rejects half-period
    // derivative artifacts from signals that never return
    auto validated = [&](double T) -> std::optional<double> {
        if (std::abs(f(T) - g0) > 1e-2 * spread) return std::nullopt;
        return T;
    };

    // generic start: first crossing of g0 in the initial direction
    const double slope0 = g[1] - g0;
    if (std::abs(slope0) > 1e-6 * spread) {
        const double dir = slope0 > 0.0 ? 1.0 : -1.0;
        bool departed = false;
        for (std::size_t k = 1; k < grid; ++k) {
            if (std::abs(g[k] - g0) > 0.1 * spread) departed = true;
            if (!departed) continue;
            const double lo = dir * (g[k] - g0), hi = dir * (g[k + 1] - g0);
            if (lo < 0.0 && hi >= 0.0)
                return validated(
                    bisect([&](double t) { return dir * (f(t) - g0); },
                           dt * static_cast<double>(k), dt * static_cast<double>(k + 1)));
        }
        // fall through: a signal that touches its start quadratically never
        // crosses it, however large the first grid difference looks
    }

    // extremum start: first zero of the derivative crossed in the revival
    // direction (approach, then departure matching the initial one)
    const double s2 = g[1] - g0 >= 0.0 ? 1.0 : -1.0;
    const double h_fd = dt * 1e-3;
    auto deriv = [&](double t) { return s2 * (f(t + h_fd) - f(t - h_fd)); };
    bool departed = false;
    double prev = deriv(dt);
    for (std::size_t k = 2; k < grid; ++k) {
        const double t_k = dt * static_cast<double>(k);
        const double cur = deriv(t_k);
        if (std::abs(g[k] - g0) > 0.1 * spread) departed = true;
        if (departed && prev < 0.0 && cur >= 0.0)
            return validated(bisect(deriv, t_k - dt, t_k));
        prev = cur;
    }
    return std::nullopt;
}

} // namespace ptlab
