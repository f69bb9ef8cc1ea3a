#pragma once

#include <cmath>
#include <optional>
#include <string_view>

namespace ptlab {

enum class Regime { Unbroken, ExceptionalPoint, Broken };

struct Tolerances {
    double ep = 1e-9;       // |disc| band treated as the exceptional point
    double mat = 1e-10;     // entrywise matrix comparisons
    double eig = 1e-10;     // eigenpair residuals
    double ode_abs = 1e-9;  // integrator absolute tolerance
    double ode_rel = 1e-9;  // integrator relative tolerance
    double trace = 1e-12;   // |Tr rho| below which normalization fails
};

inline Regime classify_regime(double disc, double eps_ep) {
    if (disc > eps_ep) return Regime::Unbroken;
    if (disc < -eps_ep) return Regime::Broken;
    return Regime::ExceptionalPoint;
}

// The triple (r, d, theta) with its discriminant d^2 - r^2 sin^2(theta) and
// the symmetry regime that the discriminant sign selects.
struct ModelParams {
    double r = 1.0;
    double d = 1.0;
    double theta = 0.0;
    double disc = 0.0;
    Regime regime = Regime::Unbroken;
};

inline ModelParams make_params(double r, double d, double theta, double eps_ep = Tolerances{}.ep) {
    const double a = r * std::sin(theta);
    const double disc = d * d - a * a;
    return {r, d, theta, disc, classify_regime(disc, eps_ep)};
}

// Angle in [0, pi/2] where the discriminant vanishes; none when d > r.
inline std::optional<double> exceptional_theta(double r, double d) {
    if (d > r) return std::nullopt;
    return std::asin(d / r);
}

inline std::string_view regime_name(Regime rg) {
    switch (rg) {
        case Regime::Unbroken: return "unbroken";
        case Regime::ExceptionalPoint: return "exceptional_point";
        case Regime::Broken: return "broken";
    }
    return "unknown";
}

} // namespace ptlab
