#pragma once

// Analytical predictions on the frame grid.
//
// naive:    phi(t) = E(t,0) phi0 + W1(t) E(t,0) phi0 - E(t,0) W1(0) phi0,
//           E(t2,t1) = diag(exp(-i (Lambda_n(t2) - Lambda_n(t1)))).
// advanced: naive + four terms first order in epsilon, built from
//           S[A, v]_m(t) = sum_n int_0^t exp(i Lambda_m(t1) - i Lambda_n(t1)) A_mn(t1) v_n dt1
//           with A = dH~ = U^{-1} dH U or [W1, dH~] and v = phi0 or W1(0) phi0:
//             term2 = -i eps E(t,0) S[dH~, phi0]
//             term3 = W1(t) term2
//             term4 = +i eps E(t,0) S[dH~, W1(0) phi0]
//             term5 = +i eps E(t,0) S[[W1, dH~], phi0]
// All amplitudes are carried as ScaledComplex, since exp(Im Lambda) differences
// reach hundreds of e-folds.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "nhslow/errors.hpp"
#include "nhslow/evolve.hpp"
#include "nhslow/logdomain.hpp"
#include "nhslow/matlin.hpp"
#include "nhslow/models.hpp"
#include "nhslow/spectral.hpp"

namespace nhslow {

enum class SeriesMethod { naive, advanced };

inline const char* to_string(SeriesMethod m) { return m == SeriesMethod::naive ? "naive" : "advanced"; }

struct PredictionSeries {
    std::vector<double> times;
    std::vector<ComplexVector> coeffs;  // unit norm
    std::vector<std::vector<double>> populations;
    SeriesMethod method = SeriesMethod::naive;
    // log ||term_j(t)|| for terms 1..5 (advanced only, when requested); -inf for an exact zero.
    std::vector<std::array<double, 5>> term_breakdown;

    std::size_t size() const noexcept { return times.size(); }
};

struct SeriesOptions {
    // Add the lambda1 = -<n|X1|n> corrections to Lambda.
    bool include_lambda1 = false;
    // Restrict the t1 integrals of terms 2-5 to this interval.
    std::optional<std::pair<double, double>> t1_window;
    bool term_breakdown = false;
};

using ScaledVector = std::vector<ScaledComplex>;

namespace detail {

inline void require_complete(const SpectralFrame& f) {
    if (f.Lambda.size() != f.size() || f.W1.size() != f.size() || f.lambda1.size() != f.size())
        throw ArgumentError("prediction needs a complete frame (Lambda, X1, W1)");
}

// Lambda, optionally with the cumulative lambda1 correction.
inline std::vector<std::vector<cplx>> effective_lambda(const SpectralFrame& f, bool include_lambda1) {
    auto out = f.Lambda;
    if (!include_lambda1) return out;
    std::vector<cplx> acc(f.dim(), 0.0);
    for (std::size_t k = 1; k < f.size(); ++k) {
        const double h = f.times[k] - f.times[k - 1];
        for (std::size_t n = 0; n < f.dim(); ++n) {
            acc[n] += 0.5 * h * (f.lambda1[k - 1][n] + f.lambda1[k][n]);
            out[k][n] += acc[n];
        }
    }
    return out;
}

inline ScaledVector scaled_add(ScaledVector a, const ScaledVector& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline ScaledVector apply(const ComplexMatrix& m, const ScaledVector& v) {
    ScaledVector out(v.size());
    for (std::size_t r = 0; r < v.size(); ++r)
        for (std::size_t c = 0; c < v.size(); ++c)
            if (m(r, c) != cplx{}) out[r] += v[c] * m(r, c);
    return out;
}

inline double log_norm(const ScaledVector& v) {
    double shift = -std::numeric_limits<double>::infinity();
    for (const auto& x : v)
        if (!x.is_zero()) shift = std::max(shift, x.log_scale());
    if (!std::isfinite(shift)) return shift;
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x.scaled(shift));
    return shift + 0.5 * std::log(s);
}

inline ComplexVector normalize(const ScaledVector& v) {
    double shift = -std::numeric_limits<double>::infinity();
    for (const auto& x : v)
        if (!x.is_zero()) shift = std::max(shift, x.log_scale());
    if (!std::isfinite(shift)) throw PhysicsError("prediction: series vanished identically");
    ComplexVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].scaled(shift);
    return out * cplx(1.0 / out.norm());
}

// E(t,0) v, one ScaledVector per grid point.
inline std::vector<ScaledVector> propagate_diagonal(const std::vector<std::vector<cplx>>& lam, const ComplexVector& v) {
    const cplx mi{0.0, -1.0};
    std::vector<ScaledVector> out(lam.size(), ScaledVector(v.dim()));
    for (std::size_t k = 0; k < lam.size(); ++k)
        for (std::size_t n = 0; n < v.dim(); ++n)
            out[k][n] = ScaledComplex::from_exponent(mi * lam[k][n]) * v[n];
    return out;
}

// prefactor * E(t,0) S[A, v](t) at every grid point, by the cumulative trapezoid
// rule, with the integrand masked to t1_window when given.
template <class MatrixAt>
std::vector<ScaledVector> integral_term(const SpectralFrame& f, const std::vector<std::vector<cplx>>& lam,
                                        MatrixAt&& a_at, const ComplexVector& v, cplx prefactor,
                                        const std::optional<std::pair<double, double>>& window) {
    const std::size_t count = f.size(), n = f.dim();
    const cplx i_unit{0.0, 1.0};
    std::vector<ScaledVector> out(count, ScaledVector(n));
    ScaledVector running(n), prev_integrand(n);
    const double tol = 1e-12 * std::max(1.0, f.duration());
    for (std::size_t k = 0; k < count; ++k) {
        ScaledVector integrand(n);
        const double t1 = f.times[k];
        const bool inside = !window || (t1 >= window->first - tol && t1 <= window->second + tol);
        if (inside) {
            const ComplexMatrix a = a_at(k);
            for (std::size_t m = 0; m < n; ++m) {
                const auto left = ScaledComplex::from_exponent(i_unit * lam[k][m]);
                for (std::size_t j = 0; j < n; ++j) {
                    const cplx w = a(m, j) * v[j];
                    if (w == cplx{}) continue;
                    integrand[m] += left * ScaledComplex::from_exponent(-i_unit * lam[k][j]) * w;
                }
            }
        }
        if (k > 0) {
            const double half_h = 0.5 * (f.times[k] - f.times[k - 1]);
            for (std::size_t m = 0; m < n; ++m) {
                running[m] += prev_integrand[m] * cplx(half_h);
                running[m] += integrand[m] * cplx(half_h);
            }
        }
        for (std::size_t m = 0; m < n; ++m)
            out[k][m] = ScaledComplex::from_exponent(-i_unit * lam[k][m]) * running[m] * prefactor;
        prev_integrand = std::move(integrand);
    }
    return out;
}

inline PredictionSeries finish(const SpectralFrame& f, const std::vector<ScaledVector>& total, SeriesMethod method) {
    PredictionSeries s;
    s.method = method;
    s.times = f.times;
    s.coeffs.reserve(f.size());
    s.populations.reserve(f.size());
    for (const auto& v : total) {
        s.coeffs.push_back(normalize(v));
        s.populations.push_back(populations_of(s.coeffs.back()));
    }
    return s;
}

inline std::vector<ScaledVector> naive_terms(const SpectralFrame& f, const std::vector<std::vector<cplx>>& lam,
                                             const ComplexVector& phi0) {
    const auto e_phi0 = propagate_diagonal(lam, phi0);
    const auto e_w0_phi0 = propagate_diagonal(lam, f.W1.front() * phi0);
    std::vector<ScaledVector> out(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        auto v = scaled_add(e_phi0[k], apply(f.W1[k], e_phi0[k]));
        for (std::size_t n = 0; n < v.size(); ++n) v[n] += e_w0_phi0[k][n] * cplx(-1.0);
        out[k] = std::move(v);
    }
    return out;
}

}  // namespace detail

// Normalized phi0 = U^{-1}(t_0) psi0.
inline ComplexVector initial_coefficients(const SpectralFrame& f, const ComplexVector& psi0) {
    if (psi0.dim() != f.dim()) throw ArgumentError("initial_coefficients: dimension mismatch");
    return eigenbasis_coefficients(f.inverse_frames.front(), psi0);
}

// U^{-1}(t) dH(t) U(t) without the epsilon prefactor; t must be a grid point.
inline ComplexMatrix delta_h_tilde(const SpectralFrame& f, const PerturbationSpec& pert, double t) {
    const auto idx = f.index_of(t);
    if (!idx) throw ArgumentError("delta_h_tilde: t = " + std::to_string(t) + " is not on the frame grid");
    return f.inverse_frames[*idx] * sample_perturbation(pert, f.times[*idx]) * f.frames[*idx];
}

inline PredictionSeries naive_series(const SpectralFrame& f, const ComplexVector& phi0, const SeriesOptions& opts = {}) {
    detail::require_complete(f);
    if (phi0.dim() != f.dim()) throw ArgumentError("naive_series: phi0 dimension mismatch");
    if (!(phi0.norm() > 0.0)) throw ArgumentError("naive_series: phi0 must be nonzero");
    const auto lam = detail::effective_lambda(f, opts.include_lambda1);
    return detail::finish(f, detail::naive_terms(f, lam, phi0), SeriesMethod::naive);
}

inline PredictionSeries advanced_series(const SpectralFrame& f, const ComplexVector& phi0, const PerturbationSpec& pert,
                                        const SeriesOptions& opts = {}) {
    detail::require_complete(f);
    pert.validate();
    if (phi0.dim() != f.dim() || pert.coupling.dim() != f.dim())
        throw ArgumentError("advanced_series: dimension mismatch");
    if (!(phi0.norm() > 0.0)) throw ArgumentError("advanced_series: phi0 must be nonzero");
    const auto lam = detail::effective_lambda(f, opts.include_lambda1);
    const std::size_t count = f.size();

    auto total = detail::naive_terms(f, lam, phi0);
    std::vector<std::array<double, 5>> breakdown;
    if (opts.term_breakdown) {
        breakdown.resize(count);
        for (std::size_t k = 0; k < count; ++k) breakdown[k].fill(-std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; k < count; ++k) breakdown[k][0] = detail::log_norm(total[k]);
    }

    if (pert.epsilon != 0.0) {
        std::vector<ComplexMatrix> dht(count);
        for (std::size_t k = 0; k < count; ++k)
            dht[k] = f.inverse_frames[k] * sample_perturbation(pert, f.times[k]) * f.frames[k];
        const cplx ie{0.0, pert.epsilon};
        const auto plain = [&](std::size_t k) { return dht[k]; };
        const auto comm = [&](std::size_t k) { return commutator(f.W1[k], dht[k]); };

        auto t2 = detail::integral_term(f, lam, plain, phi0, -ie, opts.t1_window);
        auto t4 = detail::integral_term(f, lam, plain, f.W1.front() * phi0, ie, opts.t1_window);
        auto t5 = detail::integral_term(f, lam, comm, phi0, ie, opts.t1_window);
        for (std::size_t k = 0; k < count; ++k) {
            const auto t3 = detail::apply(f.W1[k], t2[k]);
            if (opts.term_breakdown) {
                breakdown[k][1] = detail::log_norm(t2[k]);
                breakdown[k][2] = detail::log_norm(t3);
                breakdown[k][3] = detail::log_norm(t4[k]);
                breakdown[k][4] = detail::log_norm(t5[k]);
            }
            total[k] = detail::scaled_add(detail::scaled_add(detail::scaled_add(detail::scaled_add(total[k], t2[k]), t3),
                                                             t4[k]),
                                          t5[k]);
        }
    }
    auto s = detail::finish(f, total, SeriesMethod::advanced);
    s.term_breakdown = std::move(breakdown);
    return s;
}

// t, re/im c_n, p_n per branch, method tag. The p_ columns match the history CSV.
inline void write_series_csv(std::ostream& os, const PredictionSeries& s) {
    const std::size_t n = s.coeffs.empty() ? 0 : s.coeffs.front().dim();
    const auto names = branch_names(n);
    os << "t";
    for (const auto& nm : names) os << ",re_c_" << nm << ",im_c_" << nm;
    for (const auto& nm : names) os << ",p_" << nm;
    const bool terms = s.term_breakdown.size() == s.size();
    if (terms)
        for (int j = 1; j <= 5; ++j) os << ",log_term" << j;
    os << ",method\n";
    const auto old = os.precision(17);
    for (std::size_t k = 0; k < s.size(); ++k) {
        os << s.times[k];
        for (std::size_t i = 0; i < n; ++i) os << ',' << s.coeffs[k][i].real() << ',' << s.coeffs[k][i].imag();
        for (double p : s.populations[k]) os << ',' << p;
        if (terms)
            for (double x : s.term_breakdown[k]) os << ',' << x;
        os << ',' << to_string(s.method) << '\n';
    }
    os.precision(old);
}

}  // namespace nhslow
