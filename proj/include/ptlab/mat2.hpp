// Small complex linear algebra: 2-vectors and 2x2 matrices with closed-form
// eigendecomposition and principal matrix square root.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <utility>

namespace ptlab {

using cplx = std::complex<double>;

struct Vec2 {
    cplx a{}, b{};

    Vec2 operator+(const Vec2& o) const { return {a + o.a, b + o.b}; }
    Vec2 operator-(const Vec2& o) const { return {a - o.a, b - o.b}; }
    Vec2 operator*(cplx s) const { return {a * s, b * s}; }
    Vec2 operator/(cplx s) const { return {a / s, b / s}; }
};

inline Vec2 operator*(cplx s, const Vec2& v) { return v * s; }
inline Vec2 operator*(double s, const Vec2& v) { return v * cplx(s); }

inline Vec2 conj(const Vec2& v) { return {std::conj(v.a), std::conj(v.b)}; }

// <u|v> with conjugation on the bra side.
inline cplx hermitian_dot(const Vec2& u, const Vec2& v) {
    return std::conj(u.a) * v.a + std::conj(u.b) * v.b;
}

// u^T v, no conjugation.
inline cplx bilinear_dot(const Vec2& u, const Vec2& v) {
    return u.a * v.a + u.b * v.b;
}

inline double norm(const Vec2& v) { return std::sqrt(std::norm(v.a) + std::norm(v.b)); }
inline double sup_abs(const Vec2& v) { return std::max(std::abs(v.a), std::abs(v.b)); }

struct Mat2 {
    cplx a11{}, a12{}, a21{}, a22{};

    Mat2 operator+(const Mat2& o) const {
        return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
    }
    Mat2 operator-(const Mat2& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    Mat2 operator*(cplx s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
    Mat2 operator/(cplx s) const { return {a11 / s, a12 / s, a21 / s, a22 / s}; }
    Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    Vec2 operator*(const Vec2& v) const {
        return {a11 * v.a + a12 * v.b, a21 * v.a + a22 * v.b};
    }
};

inline Mat2 operator*(cplx s, const Mat2& m) { return m * s; }
inline Mat2 operator*(double s, const Mat2& m) { return m * cplx(s); }

inline Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

inline cplx tr(const Mat2& m) { return m.a11 + m.a22; }
inline cplx det(const Mat2& m) { return m.a11 * m.a22 - m.a12 * m.a21; }

inline Mat2 transpose(const Mat2& m) { return {m.a11, m.a21, m.a12, m.a22}; }
inline Mat2 conj(const Mat2& m) {
    return {std::conj(m.a11), std::conj(m.a12), std::conj(m.a21), std::conj(m.a22)};
}
inline Mat2 adjoint(const Mat2& m) { return transpose(conj(m)); }

inline Mat2 inverse(const Mat2& m) {
    const cplx dt = det(m);
    return Mat2{m.a22, -m.a12, -m.a21, m.a11} / dt;
}

inline Mat2 commutator(const Mat2& x, const Mat2& y) { return x * y - y * x; }
inline Mat2 anticommutator(const Mat2& x, const Mat2& y) { return x * y + y * x; }

// |u><v^T| without conjugation; pass a pre-conjugated bra when one is needed.
inline Mat2 outer_bilinear(const Vec2& u, const Vec2& v) {
    return {u.a * v.a, u.a * v.b, u.b * v.a, u.b * v.b};
}

inline double sup_abs(const Mat2& m) {
    return std::max(std::max(std::abs(m.a11), std::abs(m.a12)),
                    std::max(std::abs(m.a21), std::abs(m.a22)));
}

inline double frobenius(const Mat2& m) {
    return std::sqrt(std::norm(m.a11) + std::norm(m.a12) + std::norm(m.a21) +
                     std::norm(m.a22));
}

struct EigenPair {
    cplx value;
    Vec2 vector;
};

// Closed-form eigendecomposition; eigenvectors are unnormalized and valid only
// when the matrix is not (numerically) a multiple of the identity. The
// discriminant is formed from the entry differences, not tr^2/4 - det, which
// cancels catastrophically for nearly degenerate spectra.
inline std::array<EigenPair, 2> eigen2(const Mat2& m) {
    const cplx half_tr = 0.5 * tr(m);
    const cplx half_gap = 0.5 * (m.a11 - m.a22);
    const cplx s = std::sqrt(half_gap * half_gap + m.a12 * m.a21);
    const cplx l1 = half_tr + s;
    const cplx l2 = half_tr - s;
    const double scale = sup_abs(m);
    auto vec_for = [&](cplx l) -> Vec2 {
        if (std::abs(m.a12) > 1e-300 &&
            std::abs(m.a12) >= std::abs(m.a21)) return {m.a12, l - m.a11};
        if (std::abs(m.a21) > 1e-300) return {l - m.a22, m.a21};
        // diagonal matrix
        if (std::abs(m.a11 - l) <= 1e-14 * (scale + std::abs(l))) return {1.0, 0.0};
        return {0.0, 1.0};
    };
    return {EigenPair{l1, vec_for(l1)}, EigenPair{l2, vec_for(l2)}};
}

} // namespace ptlab
