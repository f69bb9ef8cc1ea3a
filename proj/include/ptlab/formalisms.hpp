// Density matrices and their observables in the three formalisms:
// Hermitian-adjoint, biorthogonal, and isospectrally mapped.
#pragma once

#include <utility>
#include <vector>

#include "ptlab/mat2.hpp"
#include "ptlab/operators.hpp"
#include "ptlab/params.hpp"

namespace ptlab {

enum class Formalism { HermitianAdjoint, Biorthogonal, Isospectral };

struct DensityState {
    Mat2 rho;
    Formalism formalism = Formalism::HermitianAdjoint;
    ModelParams params;
    double t = 0.0;
};

struct EntropyReport {
    double trace = 0.0;  // Re Tr rho before normalization
    double purity = 0.0;
    double von_neumann = 0.0;
    std::vector<std::pair<double, double>> renyi; // (alpha, s_alpha)
};

// Mixes states with the given weights. Hermitian-adjoint ensembles use
// unit-norm kets; biorthogonal ensembles pair each ket with its g-adjoint bra
// after normalizing in the CPT inner product; isospectral ensembles are the
// Dyson image of the biorthogonal ones.
DensityState density_from_ensemble(const std::vector<std::pair<double, Vec2>>& weights,
                                   Formalism formalism, const ModelParams& p,
                                   const Tolerances& tol = {});

// |psi><psi| g scaled by the CPT norm of psi to the given power. Power 1 is
// the canonical biorthogonal projector; the figure-5 preset uses power 2.
DensityState biorthogonal_projector(const Vec2& psi, const ModelParams& p, int norm_power,
                                    const Tolerances& tol = {});

DensityState maximally_mixed(Formalism formalism, const ModelParams& p);

// Right-hand side of the broken-regime biorthogonal equation of motion in the
// metric-conjugate form -i (H rho - rho g^{-1} H^dag g).
Mat2 biorthogonal_rhs(const Mat2& rho, const ModelParams& p, const Tolerances& tol = {});

// The same dynamics written as a jump-free Lindblad dissipator with damping
// rate Gamma = 2 sqrt(-disc).
Mat2 lindblad_rhs(const Mat2& rho, const ModelParams& p, const Tolerances& tol = {});

DensityState evolve_density(const DensityState& rho0, double t, const Tolerances& tol = {});

// Samples the evolution at the given times (monotone, starting at rho0.t).
std::vector<DensityState> density_trajectory(const DensityState& rho0,
                                             const std::vector<double>& times,
                                             const Tolerances& tol = {});

cplx trace_rate(const DensityState& rho, const Tolerances& tol = {});

DensityState normalize(const DensityState& rho, const Tolerances& tol = {});

double purity(const DensityState& rho, const Tolerances& tol = {});

EntropyReport entropy(const DensityState& rho, const std::vector<double>& alphas,
                      const Tolerances& tol = {});

DensityState map_to_isospectral(const DensityState& rho_b, const Tolerances& tol = {});

} // namespace ptlab
