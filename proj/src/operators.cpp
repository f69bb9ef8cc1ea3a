#include "ptlab/operators.hpp"

#include <cmath>
#include <string>

namespace ptlab {

namespace {

constexpr cplx I{0.0, 1.0};

void require_nondegenerate(const ModelParams& p, const Tolerances& tol, const char* what) {
    if (std::abs(p.disc) <= tol.ep)
        throw DegenerateSpectrum(std::string(what) +
                                 ": spectrum degenerate at the exceptional point (|disc| <= " +
                                 std::to_string(tol.ep) + ")");
}

} // namespace

cplx principal_sqrt_disc(double disc) {
    if (disc >= 0.0) return {std::sqrt(disc), 0.0};
    return {0.0, std::sqrt(-disc)};
}

Mat2 build_hamiltonian(const ModelParams& p) {
    const cplx phase = std::polar(p.r, p.theta);
    return {phase, p.d, p.d, std::conj(phase)};
}

std::pair<Mat2, Mat2> hermitian_split(const Mat2& h) {
    const Mat2 hd = adjoint(h);
    return {0.5 * (h + hd), (h - hd) / (2.0 * I)};
}

std::pair<cplx, cplx> eigenvalues(const ModelParams& p) {
    const cplx s = principal_sqrt_disc(p.disc);
    const double b = p.r * std::cos(p.theta);
    return {b + s, b - s};
}

namespace {

// raw eigenvectors (i a +- s, d) with a = r sin(theta)
std::pair<Vec2, Vec2> raw_eigenvectors(const ModelParams& p) {
    const cplx s = principal_sqrt_disc(p.disc);
    const cplx ia = I * p.r * std::sin(p.theta);
    return {Vec2{ia + s, p.d}, Vec2{ia - s, p.d}};
}

} // namespace

SpectralData eigensystem(const ModelParams& p, Normalization norm, const Tolerances& tol) {
    require_nondegenerate(p, tol, "eigensystem");
    auto [e_plus, e_minus] = eigenvalues(p);
    auto [v_plus, v_minus] = raw_eigenvectors(p);

    switch (norm) {
        case Normalization::HermitianAdjoint: {
            v_plus = v_plus / cplx(ptlab::norm(v_plus));
            v_minus = v_minus / cplx(ptlab::norm(v_minus));
            break;
        }
        case Normalization::PTNorm: {
            const cplx m = std::sqrt(2.0 * p.d * principal_sqrt_disc(p.disc));
            v_plus = v_plus / m;
            v_minus = v_minus / m;
            break;
        }
        case Normalization::CPTOrthonormal: {
            const Mat2 g = regime_metric(p, tol);
            auto cpt_norm = [&](const Vec2& v) {
                const Vec2 cv = ptlab::conj(v);
                return std::sqrt(bilinear_dot(cv, g * v));
            };
            v_plus = v_plus / cpt_norm(v_plus);
            v_minus = v_minus / cpt_norm(v_minus);
            break;
        }
    }
    return {e_plus, e_minus, v_plus, v_minus, norm};
}

Mat2 parity() { return {0.0, 1.0, 1.0, 0.0}; }

Mat2 c_u_continued(const ModelParams& p, const Tolerances& tol) {
    require_nondegenerate(p, tol, "c_u");
    const cplx s = principal_sqrt_disc(p.disc);
    const cplx ia = I * p.r * std::sin(p.theta);
    return Mat2{ia, p.d, p.d, -ia} / s;
}

Mat2 c_unbroken(const ModelParams& p, const Tolerances& tol) {
    require_nondegenerate(p, tol, "c_unbroken");
    if (p.regime != Regime::Unbroken)
        throw RegimeMismatch("c_unbroken: requires the unbroken regime; "
                             "use c_u_continued for the analytic continuation");
    return c_u_continued(p, tol);
}

Mat2 c_broken(const ModelParams& p, const Tolerances& tol) {
    require_nondegenerate(p, tol, "c_broken");
    if (p.regime != Regime::Broken)
        throw RegimeMismatch("c_broken: requires the broken regime");
    // The eigenstate sum P conj(phi_n) phi_n^T over the PT-normalized states,
    // evaluated in closed form: the two outer products cancel to entries that
    // are orders of magnitude smaller than either term once d << r sin(theta),
    // so summing them in floating point would destroy the metric.
    const double a = p.r * std::sin(p.theta);
    const double q = std::sqrt(-p.disc);
    const cplx ia{0.0, a};
    return Mat2{ia, p.d, (2.0 * a * a - p.d * p.d) / p.d, -ia} / q;
}

Mat2 metric_from_c(const Mat2& c_op) { return transpose(c_op * parity()); }

Mat2 regime_metric(const ModelParams& p, const Tolerances& tol) {
    switch (p.regime) {
        case Regime::Unbroken: return metric_from_c(c_unbroken(p, tol));
        case Regime::Broken: return metric_from_c(c_broken(p, tol));
        case Regime::ExceptionalPoint: break;
    }
    throw DegenerateSpectrum("regime_metric: no metric at the exceptional point");
}

cplx inner_product(InnerProductKind kind, const Vec2& psi, const Vec2& phi,
                   const ModelParams& p, const Tolerances& tol) {
    const Vec2 bra = ptlab::conj(psi);
    switch (kind) {
        case InnerProductKind::Hermitian:
            return bilinear_dot(bra, phi);
        case InnerProductKind::PT:
            return bilinear_dot(bra, transpose(parity()) * phi);
        case InnerProductKind::GMetric:
            return bilinear_dot(bra, regime_metric(p, tol) * phi);
        case InnerProductKind::CPT_unbroken:
            return bilinear_dot(bra, metric_from_c(c_unbroken(p, tol)) * phi);
        case InnerProductKind::CuPT_broken:
            return bilinear_dot(bra, metric_from_c(c_u_continued(p, tol)) * phi);
        case InnerProductKind::CbPT_broken:
            return bilinear_dot(bra, metric_from_c(c_broken(p, tol)) * phi);
    }
    throw ConfigError("inner_product: unknown kind");
}

Mat2 principal_sqrt(const Mat2& m, const Tolerances& tol) {
    const double scale = sup_abs(m);
    const Mat2 off{0.0, m.a12, m.a21, 0.0};
    // multiple of the identity
    if (sup_abs(off) <= 1e-15 * scale && std::abs(m.a11 - m.a22) <= 1e-15 * scale) {
        const cplx l = 0.5 * tr(m);
        if (l.real() < 0.0 && std::abs(l.imag()) <= 1e-15 * scale)
            throw NegativeRealAxisEigenvalue("principal_sqrt: eigenvalue on the branch cut");
        return std::sqrt(l) * identity();
    }
    // Hermitian positive definite: sqrt(M) = (M + sqrt(det) 1) / sqrt(tr + 2 sqrt(det))
    // by Cayley-Hamilton. Unlike the spectral route this never forms the small
    // eigenvalue explicitly, which matters for metrics with huge condition numbers.
    if (sup_abs(m - adjoint(m)) <= 1e-12 * scale && det(m).real() > 0.0 &&
        tr(m).real() > 0.0) {
        const double s = std::sqrt(det(m).real());
        return (m + s * identity()) / std::sqrt(tr(m).real() + 2.0 * s);
    }
    const auto eig = eigen2(m);
    for (const auto& ep : eig) {
        if (ep.value.real() < 0.0 && std::abs(ep.value.imag()) <= 1e-15 * scale)
            throw NegativeRealAxisEigenvalue("principal_sqrt: eigenvalue on the branch cut");
    }
    const Mat2 v{eig[0].vector.a, eig[1].vector.a, eig[0].vector.b, eig[1].vector.b};
    const cplx dv = det(v);
    if (std::abs(dv) <= 1e-14 * sup_abs(v) * sup_abs(v))
        throw MetricNotDiagonalizable("principal_sqrt: eigenvector matrix is singular");
    const Mat2 root =
        v * Mat2{std::sqrt(eig[0].value), 0.0, 0.0, std::sqrt(eig[1].value)} * inverse(v);
    if (sup_abs(root * root - m) > 1e3 * tol.mat * std::max(1.0, scale))
        throw MetricNotDiagonalizable("principal_sqrt: residual check failed");
    return root;
}

DysonPair dyson_map(const ModelParams& p, const Tolerances& tol) {
    const Mat2 g = regime_metric(p, tol);
    const Mat2 eta = principal_sqrt(g, tol);
    return {eta, inverse(eta)};
}

Mat2 isospectral_hamiltonian(const ModelParams& p, const Tolerances& tol) {
    const auto [eta, eta_inv] = dyson_map(p, tol);
    return eta * build_hamiltonian(p) * eta_inv;
}

SymmetryOperatorSet make_symmetry_set(const ModelParams& p, const Tolerances& tol) {
    const Mat2 c = p.regime == Regime::Unbroken ? c_unbroken(p, tol) : c_broken(p, tol);
    const Mat2 g = metric_from_c(c);
    const Mat2 eta = principal_sqrt(g, tol);
    const Mat2 eta_inv = inverse(eta);
    return {parity(), c, g, eta, eta_inv, eta * build_hamiltonian(p) * eta_inv, p.regime};
}

} // namespace ptlab
