// Time evolution of pure states, the polarization flow on the Bloch sphere,
// and the classification of its stationary points.
#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "ptlab/mat2.hpp"
#include "ptlab/ode.hpp"
#include "ptlab/operators.hpp"
#include "ptlab/params.hpp"

namespace ptlab {

enum class Chart { Z, W };

// One stereographic coordinate of the state ray: z = psi1/psi2 or w = 1/z.
struct Polarization {
    cplx value{};
    Chart chart = Chart::Z;
};

enum class FixedPointKind { Center, PointDipole, SourceSink };

struct FixedPointReport {
    std::vector<Polarization> locations;
    FixedPointKind kind;
    // eigenvalue pair (f'(z_c), conj f'(z_c)) of the linearized real 2d flow
    std::vector<std::pair<cplx, cplx>> linearization;
};

struct BlochPoint {
    double x = 0.0, y = 0.0, z = 0.0;
};

struct FlowSample {
    double t;
    Polarization point;
};

struct FlowOptions {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    double switch_hi = 1.05; // leave the z chart above this |z|
    double switch_lo = 0.95; // re-enter it below this |z|
    double tol_flow = 1e-6;  // trajectory agreement / period detection tolerance
};

// U(t) = exp(-iHt) through the 2x2 Cayley-Hamilton closed form; finite at the
// exceptional point where sinc takes over.
Mat2 propagator(const ModelParams& p, double t);

Vec2 evolve_state(const Vec2& psi0, const ModelParams& p, double t);

cplx phase_velocity(const Polarization& zp, const ModelParams& p);

// Roots of the flow quadratic, each checked by substitution, classified from
// the linearization.
FixedPointReport stationary_points(const ModelParams& p);

BlochPoint bloch_point(const Vec2& psi);
BlochPoint bloch_of_polarization(const Polarization& zp);

// Adaptive integration of the polarization flow with chart switching.
std::vector<FlowSample> integrate_flow(const Polarization& z0, const ModelParams& p,
                                       double t0, double t1, std::size_t samples,
                                       const FlowOptions& opts = {});

// First-return period of a scalar signal: locates the first time the signal
// revisits its initial value moving in the initial direction (or, for an
// extremum start, the first full revival). Returns nothing for constant or
// non-returning signals.
std::optional<double> detect_scalar_period(const std::function<double(double)>& f,
                                           double t_max, std::size_t grid = 2048);

} // namespace ptlab
