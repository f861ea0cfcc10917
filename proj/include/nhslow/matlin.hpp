#pragma once

// Dense complex linear algebra for the small matrices (N <= 8) that carry
// Hamiltonians, eigenframes and propagators.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "nhslow/errors.hpp"

namespace nhslow {

using cplx = std::complex<double>;

inline constexpr std::size_t kMaxDim = 8;

namespace detail {

inline void check_dim(std::size_t n) {
    if (n < 1 || n > kMaxDim) {
        throw ArgumentError("matrix dimension must be in [1, " + std::to_string(kMaxDim) +
                            "], got " + std::to_string(n));
    }
}

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace detail

class ComplexVector {
public:
    ComplexVector() = default;
    explicit ComplexVector(std::size_t n) : data_(n) { detail::check_dim(n); }
    ComplexVector(std::initializer_list<cplx> values) : data_(values) {
        detail::check_dim(data_.size());
        if (!all_finite()) throw ArgumentError("vector entries must be finite");
    }
    explicit ComplexVector(std::span<const cplx> values) : data_(values.begin(), values.end()) {
        detail::check_dim(data_.size());
        if (!all_finite()) throw ArgumentError("vector entries must be finite");
    }

    static ComplexVector basis(std::size_t n, std::size_t k) {
        ComplexVector v(n);
        v[k] = 1.0;
        return v;
    }

    std::size_t dim() const noexcept { return data_.size(); }
    cplx& operator[](std::size_t i) { return data_[i]; }
    const cplx& operator[](std::size_t i) const { return data_[i]; }
    std::span<const cplx> data() const noexcept { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), detail::finite);
    }
    double norm() const {
        double s = 0.0;
        for (const auto& z : data_) s += std::norm(z);
        return std::sqrt(s);
    }

    ComplexVector& operator+=(const ComplexVector& o) {
        same_dim(o);
        for (std::size_t i = 0; i < dim(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    ComplexVector& operator-=(const ComplexVector& o) {
        same_dim(o);
        for (std::size_t i = 0; i < dim(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    ComplexVector& operator*=(cplx s) {
        for (auto& z : data_) z *= s;
        return *this;
    }
    friend ComplexVector operator+(ComplexVector a, const ComplexVector& b) { return a += b; }
    friend ComplexVector operator-(ComplexVector a, const ComplexVector& b) { return a -= b; }
    friend ComplexVector operator*(ComplexVector a, cplx s) { return a *= s; }
    friend ComplexVector operator*(cplx s, ComplexVector a) { return a *= s; }
    friend bool operator==(const ComplexVector&, const ComplexVector&) = default;

private:
    void same_dim(const ComplexVector& o) const {
        if (o.dim() != dim()) throw ArgumentError("vector dimension mismatch");
    }
    std::vector<cplx> data_;
};

// <a|b>, conjugate-linear in the first argument.
inline cplx dot(const ComplexVector& a, const ComplexVector& b) {
    if (a.dim() != b.dim()) throw ArgumentError("vector dimension mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

// Row-major square matrix. A default-constructed matrix is empty (dim 0) and
// only useful as a placeholder.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(std::size_t n) : n_(n), data_(n * n) { detail::check_dim(n); }
    ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
        n_ = rows.size();
        detail::check_dim(n_);
        data_.reserve(n_ * n_);
        for (const auto& r : rows) {
            if (r.size() != n_) throw ArgumentError("matrix must be square");
            data_.insert(data_.end(), r.begin(), r.end());
        }
        if (!all_finite()) throw ArgumentError("matrix entries must be finite");
    }

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    static ComplexMatrix diagonal(std::span<const cplx> d) {
        ComplexMatrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }
    static ComplexMatrix from_columns(std::span<const ComplexVector> cols) {
        ComplexMatrix m(cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) m.set_column(c, cols[c]);
        return m;
    }

    std::size_t dim() const noexcept { return n_; }
    bool empty() const noexcept { return n_ == 0; }
    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }
    std::span<const cplx> data() const noexcept { return data_; }

    ComplexVector column(std::size_t c) const {
        ComplexVector v(n_);
        for (std::size_t r = 0; r < n_; ++r) v[r] = (*this)(r, c);
        return v;
    }
    void set_column(std::size_t c, const ComplexVector& v) {
        if (v.dim() != n_) throw ArgumentError("column dimension mismatch");
        for (std::size_t r = 0; r < n_; ++r) (*this)(r, c) = v[r];
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), detail::finite);
    }
    double norm_fro() const {
        double s = 0.0;
        for (const auto& z : data_) s += std::norm(z);
        return std::sqrt(s);
    }
    // Maximum absolute column sum.
    double norm_one() const {
        double best = 0.0;
        for (std::size_t c = 0; c < n_; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < n_; ++r) s += std::abs((*this)(r, c));
            best = std::max(best, s);
        }
        return best;
    }
    cplx trace() const {
        cplx t = 0.0;
        for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
        return t;
    }
    ComplexMatrix adjoint() const {
        ComplexMatrix m(n_);
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t c = 0; c < n_; ++c) m(c, r) = std::conj((*this)(r, c));
        return m;
    }
    ComplexMatrix transpose() const {
        ComplexMatrix m(n_);
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t c = 0; c < n_; ++c) m(c, r) = (*this)(r, c);
        return m;
    }

    ComplexMatrix& operator+=(const ComplexMatrix& o) {
        same_dim(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    ComplexMatrix& operator-=(const ComplexMatrix& o) {
        same_dim(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    ComplexMatrix& operator*=(cplx s) {
        for (auto& z : data_) z *= s;
        return *this;
    }
    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
    friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
    friend ComplexMatrix operator-(ComplexMatrix a) { return a *= -1.0; }
    friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

private:
    void same_dim(const ComplexMatrix& o) const {
        if (o.n_ != n_) throw ArgumentError("matrix dimension mismatch");
    }
    std::size_t n_ = 0;
    std::vector<cplx> data_;
};

inline ComplexMatrix mat_mul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.dim() != b.dim()) {
        throw ArgumentError("mat_mul: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()) + ")");
    }
    const std::size_t n = a.dim();
    ComplexMatrix c(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const cplx aik = a(i, k);
            for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) { return mat_mul(a, b); }

inline ComplexVector operator*(const ComplexMatrix& a, const ComplexVector& v) {
    if (a.dim() != v.dim()) throw ArgumentError("matrix-vector dimension mismatch");
    ComplexVector out(v.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < a.dim(); ++j) s += a(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b - b * a; }

// ---------------------------------------------------------------------------
// LU with partial pivoting

namespace detail {

struct LuFactors {
    ComplexMatrix lu;
    std::vector<std::size_t> perm;
    bool singular = false;
};

inline LuFactors lu_factor(const ComplexMatrix& a, double pivot_floor = 0.0) {
    const std::size_t n = a.dim();
    LuFactors f{a, std::vector<std::size_t>(n), false};
    std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
    auto& m = f.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(m(k, k));
        for (std::size_t r = k + 1; r < n; ++r) {
            if (std::abs(m(r, k)) > best) {
                best = std::abs(m(r, k));
                p = r;
            }
        }
        if (p != k) {
            for (std::size_t c = 0; c < n; ++c) std::swap(m(k, c), m(p, c));
            std::swap(f.perm[k], f.perm[p]);
        }
        if (best <= pivot_floor) {
            // pivot_floor == 0: report exact singularity. Otherwise nudge the
            // pivot, which is what inverse iteration wants.
            if (pivot_floor == 0.0) {
                f.singular = true;
                return f;
            }
            m(k, k) = best > 0.0 ? m(k, k) / best * pivot_floor : cplx{pivot_floor};
        }
        for (std::size_t r = k + 1; r < n; ++r) {
            m(r, k) /= m(k, k);
            const cplx l = m(r, k);
            if (l == cplx{0.0}) continue;
            for (std::size_t c = k + 1; c < n; ++c) m(r, c) -= l * m(k, c);
        }
    }
    return f;
}

inline ComplexVector lu_solve(const LuFactors& f, const ComplexVector& b) {
    const std::size_t n = b.dim();
    const auto& m = f.lu;
    ComplexVector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= m(i, j) * x[j];
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= m(ii, j) * x[j];
        x[ii] /= m(ii, ii);
    }
    return x;
}

}  // namespace detail

struct InverseOptions {
    // Largest accepted 1-norm condition estimate.
    double condition_cap = 1e10;
};

inline ComplexMatrix mat_inv(const ComplexMatrix& a, InverseOptions opts = {}) {
    const std::size_t n = a.dim();
    if (n == 0) throw ArgumentError("mat_inv: empty matrix");
    const auto f = detail::lu_factor(a);
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (f.singular) throw SingularityError("mat_inv: matrix is singular", inf);
    ComplexMatrix inv(n);
    for (std::size_t c = 0; c < n; ++c) inv.set_column(c, detail::lu_solve(f, ComplexVector::basis(n, c)));
    const double estimate = a.norm_one() * inv.norm_one();
    if (!std::isfinite(estimate) || estimate > opts.condition_cap) {
        throw SingularityError("mat_inv: condition estimate " + std::to_string(estimate) +
                                   " exceeds cap",
                               estimate);
    }
    const auto eye = ComplexMatrix::identity(n);
    const double tol = 1e-10 * static_cast<double>(n);
    auto residual = [&](const ComplexMatrix& x) { return (a * x - eye).norm_fro(); };
    if (residual(inv) >= tol) {
        // One step of iterative refinement: X <- X + X (I - A X).
        inv += inv * (eye - a * inv);
        if (residual(inv) >= tol) {
            throw SingularityError("mat_inv: residual too large, condition estimate " +
                                       std::to_string(estimate),
                                   estimate);
        }
    }
    return inv;
}

// ---------------------------------------------------------------------------
// Eigendecomposition

struct EigenDecomposition {
    std::vector<cplx> values;
    ComplexMatrix right_vectors;  // columns, unit norm
    double residual = 0.0;        // ||A V - V diag(values)||_F
};

struct EigOptions {
    double residual_tol = 1e-9;       // relative to ||A||_F
    double max_condition = 1e8;       // near-EP rejection threshold on cond(V)
    std::size_t sweeps_per_dim = 100; // QR iteration cap is sweeps_per_dim * N
};

namespace detail {

// Unit norm; largest-magnitude component made real-positive.
inline void normalize_local_gauge(ComplexVector& v) {
    const double nv = v.norm();
    if (nv == 0.0) return;
    v *= 1.0 / nv;
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.dim(); ++i)
        if (std::abs(v[i]) > std::abs(v[best]) * (1.0 + 1e-12)) best = i;
    const cplx ph = std::conj(v[best]) / std::abs(v[best]);
    v *= ph;
    v[best] = std::abs(v[best]);
}

// 2-norm condition number of a matrix with unit-norm columns, exact for N = 2
// and a Frobenius-product bound otherwise.
inline double frame_condition(const ComplexMatrix& v) {
    if (v.dim() == 1) return 1.0;
    if (v.dim() == 2) {
        const double o = std::min(1.0, std::abs(dot(v.column(0), v.column(1))));
        if (o >= 1.0) return std::numeric_limits<double>::infinity();
        return std::sqrt((1.0 + o) / (1.0 - o));
    }
    try {
        const auto inv = mat_inv(v, {std::numeric_limits<double>::infinity()});
        return v.norm_fro() * inv.norm_fro() / static_cast<double>(v.dim());
    } catch (const SingularityError&) {
        return std::numeric_limits<double>::infinity();
    }
}

inline std::vector<cplx> eig2_values(const ComplexMatrix& a) {
    const cplx half_tr = 0.5 * (a(0, 0) + a(1, 1));
    const cplx half_diff = 0.5 * (a(0, 0) - a(1, 1));
    const cplx s = std::sqrt(half_diff * half_diff + a(0, 1) * a(1, 0));
    return {half_tr + s, half_tr - s};
}

inline ComplexVector eig2_vector(const ComplexMatrix& a, cplx lambda, std::size_t fallback) {
    ComplexVector v1{a(0, 1), lambda - a(0, 0)};
    ComplexVector v2{lambda - a(1, 1), a(1, 0)};
    ComplexVector& v = v1.norm() >= v2.norm() ? v1 : v2;
    if (v.norm() <= 1e-14 * std::max(1.0, a.norm_fro())) return ComplexVector::basis(2, fallback);
    return v;
}

// Householder reduction to upper Hessenberg form (similarity transform).
inline ComplexMatrix hessenberg(ComplexMatrix h) {
    const std::size_t n = h.dim();
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha_norm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha_norm += std::norm(h(i, k));
        alpha_norm = std::sqrt(alpha_norm);
        if (alpha_norm == 0.0) continue;
        std::vector<cplx> u(n, 0.0);
        const cplx x0 = h(k + 1, k);
        const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx{1.0};
        for (std::size_t i = k + 1; i < n; ++i) u[i] = h(i, k);
        u[k + 1] += phase * alpha_norm;
        double un = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) un += std::norm(u[i]);
        if (un == 0.0) continue;
        // H <- P H P with P = I - 2 u u^H / (u^H u)
        for (std::size_t c = 0; c < n; ++c) {
            cplx s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += std::conj(u[i]) * h(i, c);
            s *= 2.0 / un;
            for (std::size_t i = k + 1; i < n; ++i) h(i, c) -= u[i] * s;
        }
        for (std::size_t r = 0; r < n; ++r) {
            cplx s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += h(r, i) * u[i];
            s *= 2.0 / un;
            for (std::size_t i = k + 1; i < n; ++i) h(r, i) -= s * std::conj(u[i]);
        }
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
    return h;
}

// Eigenvalues of an upper Hessenberg matrix by single-shift QR with
// Wilkinson shifts and deflation.
inline std::vector<cplx> hessenberg_qr_values(ComplexMatrix h, std::size_t max_sweeps) {
    const std::size_t n = h.dim();
    std::vector<cplx> values(n);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    std::size_t hi = n - 1;
    std::size_t sweeps = 0;
    std::size_t since_deflation = 0;
    while (true) {
        if (hi == 0) {
            values[0] = h(0, 0);
            break;
        }
        // Locate the start of the active unreduced block.
        std::size_t lo = hi;
        while (lo > 0) {
            const double scale = std::abs(h(lo, lo)) + std::abs(h(lo - 1, lo - 1));
            if (std::abs(h(lo, lo - 1)) <= eps * (scale > 0.0 ? scale : 1.0)) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi) {
            values[hi] = h(hi, hi);
            --hi;
            since_deflation = 0;
            continue;
        }
        if (++sweeps > max_sweeps) {
            throw ConvergenceError("eig_general: QR iteration did not converge after " +
                                   std::to_string(max_sweeps) + " sweeps");
        }
        ++since_deflation;
        cplx mu;
        if (since_deflation % 11 == 10) {
            // Exceptional shift to break cycles.
            mu = h(hi, hi) + cplx{0.75 * std::abs(h(hi, hi - 1)), 0.0};
        } else {
            const cplx a = h(hi - 1, hi - 1), b = h(hi - 1, hi), c = h(hi, hi - 1), d = h(hi, hi);
            const cplx half = 0.5 * (a - d);
            const cplx root = std::sqrt(half * half + b * c);
            const cplx m1 = d - (b * c) / (half + root);
            const cplx m2 = d - (b * c) / (half - root);
            const bool ok1 = std::isfinite(std::abs(m1));
            const bool ok2 = std::isfinite(std::abs(m2));
            if (ok1 && ok2) mu = std::abs(m1 - d) <= std::abs(m2 - d) ? m1 : m2;
            else if (ok1) mu = m1;
            else if (ok2) mu = m2;
            else mu = d;
        }
        // QR step on the active block via Givens rotations.
        for (std::size_t i = lo; i <= hi; ++i) h(i, i) -= mu;
        std::vector<std::pair<cplx, cplx>> rot;  // (c, s) with c real stored as complex
        rot.reserve(hi - lo);
        for (std::size_t k = lo; k < hi; ++k) {
            const cplx x = h(k, k), y = h(k + 1, k);
            const double r = std::hypot(std::abs(x), std::abs(y));
            cplx c = 1.0, s = 0.0;
            if (r > 0.0) {
                c = x / r;
                s = y / r;
            }
            // G = [[conj(c), conj(s)], [-s, c]] applied to rows k, k+1
            for (std::size_t j = k; j < h.dim(); ++j) {
                const cplx t1 = h(k, j), t2 = h(k + 1, j);
                h(k, j) = std::conj(c) * t1 + std::conj(s) * t2;
                h(k + 1, j) = -s * t1 + c * t2;
            }
            h(k + 1, k) = 0.0;
            rot.emplace_back(c, s);
        }
        for (std::size_t k = lo; k < hi; ++k) {
            const auto [c, s] = rot[k - lo];
            // Multiply columns k, k+1 by G^H
            const std::size_t rmax = std::min(hi, k + 1);
            for (std::size_t i = 0; i <= rmax; ++i) {
                const cplx t1 = h(i, k), t2 = h(i, k + 1);
                h(i, k) = c * t1 + s * t2;
                h(i, k + 1) = -std::conj(s) * t1 + std::conj(c) * t2;
            }
        }
        for (std::size_t i = lo; i <= hi; ++i) h(i, i) += mu;
    }
    return values;
}

inline ComplexVector inverse_iteration(const ComplexMatrix& a, cplx lambda,
                                       std::span<const ComplexVector> cluster) {
    const std::size_t n = a.dim();
    const double scale = std::max(1.0, a.norm_fro());
    ComplexMatrix shifted = a;
    for (std::size_t i = 0; i < n; ++i) shifted(i, i) -= lambda;
    const auto f = lu_factor(shifted, 1e-14 * scale);
    ComplexVector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = cplx{1.0 + 0.1 * static_cast<double>(i), 0.05 * static_cast<double>(i)};
    auto project_out = [&](ComplexVector& v) {
        for (const auto& q : cluster) v -= q * dot(q, v);
    };
    project_out(x);
    for (int it = 0; it < 4; ++it) {
        x = lu_solve(f, x);
        project_out(x);
        const double nx = x.norm();
        if (!(nx > 0.0) || !std::isfinite(nx)) break;
        x *= 1.0 / nx;
    }
    return x;
}

}  // namespace detail

inline EigenDecomposition eig_general(const ComplexMatrix& a, EigOptions opts = {}) {
    const std::size_t n = a.dim();
    detail::check_dim(n);
    if (!a.all_finite()) throw ArgumentError("eig_general: non-finite input");
    EigenDecomposition out;
    ComplexMatrix v(n);
    if (n == 1) {
        out.values = {a(0, 0)};
        v(0, 0) = 1.0;
    } else if (n == 2) {
        out.values = detail::eig2_values(a);
        for (std::size_t k = 0; k < 2; ++k) {
            auto col = detail::eig2_vector(a, out.values[k], k);
            detail::normalize_local_gauge(col);
            v.set_column(k, col);
        }
        if (std::abs(out.values[0] - out.values[1]) <= 1e-14 * std::max(1.0, a.norm_fro())) {
            // Repeated eigenvalue: diagonalizable only if A is scalar.
            const cplx lam = out.values[0];
            if ((a - ComplexMatrix::identity(2) * lam).norm_fro() > 1e-12 * std::max(1.0, a.norm_fro())) {
                throw NearEpError("eig_general: defective 2x2 matrix (exceptional point)",
                                  std::numeric_limits<double>::infinity());
            }
            v = ComplexMatrix::identity(2);
        }
    } else {
        auto values = detail::hessenberg_qr_values(detail::hessenberg(a), opts.sweeps_per_dim * n);
        std::sort(values.begin(), values.end(), [](cplx x, cplx y) {
            if (x.real() != y.real()) return x.real() > y.real();
            return x.imag() > y.imag();
        });
        const double tie = 1e-10 * std::max(1.0, a.norm_fro());
        std::vector<ComplexVector> cols;
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<ComplexVector> cluster;
            for (std::size_t j = 0; j < k; ++j)
                if (std::abs(values[j] - values[k]) <= tie) cluster.push_back(cols[j]);
            auto col = detail::inverse_iteration(a, values[k], cluster);
            detail::normalize_local_gauge(col);
            cols.push_back(col);
        }
        out.values = std::move(values);
        v = ComplexMatrix::from_columns(cols);
    }
    const double cond = detail::frame_condition(v);
    if (!(cond <= opts.max_condition)) {
        throw NearEpError("eig_general: eigenvector matrix condition " + std::to_string(cond) +
                              " exceeds near-EP threshold",
                          cond);
    }
    const auto resid = a * v - v * ComplexMatrix::diagonal(out.values);
    out.residual = resid.norm_fro();
    if (out.residual > opts.residual_tol * a.norm_fro()) {
        throw NearEpError("eig_general: residual " + std::to_string(out.residual) +
                              " too large (defective or near-defective matrix)",
                          out.residual);
    }
    out.right_vectors = std::move(v);
    return out;
}

// ---------------------------------------------------------------------------
// Matrix exponential

struct ExpOptions {
    // Inputs with 1-norm above this are rejected; the caller must pre-scale.
    double max_norm = 600.0;
};

inline ComplexMatrix mat_exp(const ComplexMatrix& a, ExpOptions opts = {}) {
    const std::size_t n = a.dim();
    detail::check_dim(n);
    const double na = a.norm_one();
    if (!std::isfinite(na) || na > opts.max_norm) {
        throw MagnitudeError("mat_exp: ||a||_1 = " + std::to_string(na) +
                             " too large; reduce the time step");
    }
    ComplexMatrix out(n);
    if (n == 1) {
        out(0, 0) = std::exp(a(0, 0));
    } else if (n == 2) {
        // exp(m I + B) = e^m (cosh(mu) I + sinh(mu)/mu B), B traceless, B^2 = mu^2 I
        const cplx m = 0.5 * a.trace();
        const cplx b00 = a(0, 0) - m;
        const cplx mu2 = b00 * b00 + a(0, 1) * a(1, 0);
        const cplx mu = std::sqrt(mu2);
        const cplx ch = std::cosh(mu);
        const cplx sh = std::abs(mu) < 1e-4 ? 1.0 + mu2 / 6.0 + mu2 * mu2 / 120.0 : std::sinh(mu) / mu;
        const cplx em = std::exp(m);
        out(0, 0) = em * (ch + sh * b00);
        out(1, 1) = em * (ch - sh * b00);
        out(0, 1) = em * sh * a(0, 1);
        out(1, 0) = em * sh * a(1, 0);
    } else {
        int squarings = 0;
        if (na > 0.5) squarings = static_cast<int>(std::ceil(std::log2(na / 0.5)));
        const ComplexMatrix x = a * std::ldexp(1.0, -squarings);
        constexpr int q = 6;
        double c = 1.0;
        auto num = ComplexMatrix::identity(n);
        auto den = ComplexMatrix::identity(n);
        auto power = ComplexMatrix::identity(n);
        for (int k = 1; k <= q; ++k) {
            c *= static_cast<double>(q - k + 1) / static_cast<double>(k * (2 * q - k + 1));
            power = power * x;
            num += power * c;
            den += power * ((k % 2 == 0) ? c : -c);
        }
        out = mat_inv(den) * num;
        for (int s = 0; s < squarings; ++s) out = out * out;
    }
    if (!out.all_finite()) throw MagnitudeError("mat_exp: result overflowed; reduce the time step");
    return out;
}

}  // namespace nhslow
