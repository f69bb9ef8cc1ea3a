// Hamiltonian, spectrum, symmetry operators, metrics, inner products and
// Dyson maps of the balanced gain/loss two-state model.
#pragma once

#include <utility>

#include "ptlab/errors.hpp"
#include "ptlab/mat2.hpp"
#include "ptlab/params.hpp"

namespace ptlab {

enum class Normalization { HermitianAdjoint, PTNorm, CPTOrthonormal };

enum class InnerProductKind {
    Hermitian,     // <psi|phi>
    PT,            // <psi| P^T |phi>
    GMetric,       // <psi| g |phi>, g from the regime-appropriate C
    CPT_unbroken,  // metric from C_u (unbroken regime only)
    CuPT_broken,   // metric from the analytic continuation of C_u
    CbPT_broken    // metric from C_b (broken regime only)
};

struct SpectralData {
    cplx e_plus, e_minus;
    Vec2 v_plus, v_minus;
    Normalization normalization;
};

struct DysonPair {
    Mat2 eta, eta_inv;
};

struct SymmetryOperatorSet {
    Mat2 parity, c_op, metric, dyson, dyson_inv, iso_h;
    Regime regime;
};

// sqrt(disc) on the principal branch: +i sqrt(-disc) for disc < 0. This one
// choice fixes the meaning of E+, of the eigenvector formulas and of every
// operator built from them.
cplx principal_sqrt_disc(double disc);

Mat2 build_hamiltonian(const ModelParams& p);

// H = H_h + i H_ah with both parts Hermitian.
std::pair<Mat2, Mat2> hermitian_split(const Mat2& h);

std::pair<cplx, cplx> eigenvalues(const ModelParams& p);

// Eigenvectors (i r sin(theta) +- sqrt(disc), d)^T scaled by the requested
// normalization constant. Throws DegenerateSpectrum at the exceptional point.
SpectralData eigensystem(const ModelParams& p, Normalization norm, const Tolerances& tol = {});

Mat2 parity();

Mat2 c_unbroken(const ModelParams& p, const Tolerances& tol = {});

// Same closed form as c_unbroken, continued through the exceptional point on
// the principal branch; usable in both symmetry regimes.
Mat2 c_u_continued(const ModelParams& p, const Tolerances& tol = {});

// Involution built from the eigenstate sum P conj(phi_n) phi_n^T with
// PT-normalized states, evaluated in closed form (the literal sum cancels
// catastrophically for small d); broken regime only.
Mat2 c_broken(const ModelParams& p, const Tolerances& tol = {});

// g = (C P)^T
Mat2 metric_from_c(const Mat2& c_op);

Mat2 regime_metric(const ModelParams& p, const Tolerances& tol = {});

cplx inner_product(InnerProductKind kind, const Vec2& psi, const Vec2& phi,
                   const ModelParams& p, const Tolerances& tol = {});

// Principal matrix square root by spectral decomposition.
Mat2 principal_sqrt(const Mat2& m, const Tolerances& tol = {});

// eta = sqrt(g) with eta^2 = g, plus its inverse.
DysonPair dyson_map(const ModelParams& p, const Tolerances& tol = {});

// h = eta H eta^{-1}
Mat2 isospectral_hamiltonian(const ModelParams& p, const Tolerances& tol = {});

SymmetryOperatorSet make_symmetry_set(const ModelParams& p, const Tolerances& tol = {});

} // namespace ptlab
