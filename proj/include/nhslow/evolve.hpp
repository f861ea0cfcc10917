#pragma once

// Midpoint-Trotter integration of i dpsi/dt = (H(t) + eps dH(t)) psi with
// per-step renormalization, and instantaneous-eigenbasis populations.

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "nhslow/errors.hpp"
#include "nhslow/matlin.hpp"
#include "nhslow/models.hpp"
#include "nhslow/spectral.hpp"

namespace nhslow {

struct StateHistory {
    std::vector<double> times;
    std::vector<ComplexVector> states;    // unit norm
    std::vector<double> log_norm;         // log of the unnormalized norm, 0 at the start
    std::vector<ComplexVector> coeffs;    // filled by extract_populations
    std::vector<std::vector<double>> populations;

    std::size_t size() const noexcept { return times.size(); }
};

struct PropagateOptions {
    // Integrate over this sub-interval of the path domain instead of all of it.
    std::optional<std::pair<double, double>> window;
    ExpOptions exp;
};

// psi0 is normalized first; log_norm counts growth from that unit state.
// Outputs are evenly spaced and must land on steps, i.e. (outputs - 1) | steps.
inline StateHistory propagate(const HamiltonianPath& path, const ComplexVector& psi0, std::size_t steps,
                              std::size_t outputs, const PropagateOptions& opts = {}) {
    if (outputs < 2 || steps < outputs - 1)
        throw ArgumentError("propagate: need steps >= outputs - 1 and outputs >= 2");
    if (steps % (outputs - 1) != 0)
        throw ArgumentError("propagate: outputs - 1 must divide steps");
    if (psi0.dim() != path.dim()) throw ArgumentError("propagate: initial state has the wrong dimension");
    const double n0 = psi0.norm();
    if (!(n0 > 0.0) || !std::isfinite(n0)) throw ArgumentError("propagate: initial state must be nonzero");
    const auto [a, b] = opts.window.value_or(path.domain());
    if (!(b > a) || !path.contains(a) || !path.contains(b))
        throw ArgumentError("propagate: window must be a non-empty sub-interval of the path domain");

    const double dt = (b - a) / static_cast<double>(steps);
    const std::size_t stride = steps / (outputs - 1);
    const cplx minus_i_dt{0.0, -dt};

    StateHistory hist;
    hist.times.reserve(outputs);
    hist.states.reserve(outputs);
    hist.log_norm.reserve(outputs);

    ComplexVector psi = psi0 * cplx(1.0 / n0);
    double log_norm = 0.0;
    hist.times.push_back(a);
    hist.states.push_back(psi);
    hist.log_norm.push_back(0.0);

    for (std::size_t j = 0; j < steps; ++j) {
        const double tm = a + (static_cast<double>(j) + 0.5) * dt;
        ComplexMatrix step;
        try {
            step = mat_exp(sample_total(path, tm) * minus_i_dt, opts.exp);
        } catch (const MagnitudeError& e) {
            throw MagnitudeError(std::string(e.what()) + " at t = " + std::to_string(tm) +
                                 "; increase the number of steps");
        }
        psi = step * psi;
        const double nrm = psi.norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm))
            throw MagnitudeError("propagate: state norm left the floating-point range at t = " + std::to_string(tm));
        psi *= cplx(1.0 / nrm);
        log_norm += std::log(nrm);
        if ((j + 1) % stride == 0) {
            hist.times.push_back(j + 1 == steps ? b : a + static_cast<double>(j + 1) * dt);
            hist.states.push_back(psi);
            hist.log_norm.push_back(log_norm);
        }
    }
    return hist;
}

// Brute-force oracle: the same scheme with refine times as many steps.
inline StateHistory reference_propagate(const HamiltonianPath& path, const ComplexVector& psi0, std::size_t steps,
                                        std::size_t refine, std::size_t outputs = 2,
                                        const PropagateOptions& opts = {}) {
    if (refine < 1) throw ArgumentError("reference_propagate: refine must be >= 1");
    return propagate(path, psi0, steps * refine, outputs, opts);
}

// Normalized coefficients c = U^{-1} psi in the frame u.
inline ComplexVector eigenbasis_coefficients(const ComplexMatrix& u_inv, const ComplexVector& psi) {
    auto c = u_inv * psi;
    const double n = c.norm();
    if (!(n > 0.0)) throw ArgumentError("eigenbasis_coefficients: zero state");
    return c * cplx(1.0 / n);
}

inline std::vector<double> populations_of(const ComplexVector& c) {
    std::vector<double> p(c.dim());
    double s = 0.0;
    for (std::size_t i = 0; i < c.dim(); ++i) s += (p[i] = std::norm(c[i]));
    for (auto& x : p) x /= s;
    return p;
}

// Fills coeffs and populations. Output times must sit on the frame grid unless
// a path is supplied, in which case off-grid times get a fresh eigendecomposition
// whose labels follow the nearest frame point.
inline StateHistory extract_populations(const SpectralFrame& frame, StateHistory history,
                                        const HamiltonianPath* interpolate_with = nullptr) {
    history.coeffs.clear();
    history.populations.clear();
    for (std::size_t k = 0; k < history.size(); ++k) {
        const double t = history.times[k];
        ComplexMatrix u_inv;
        if (const auto idx = frame.index_of(t)) {
            u_inv = frame.inverse_frames[*idx];
        } else {
            if (!interpolate_with)
                throw ArgumentError("extract_populations: t = " + std::to_string(t) + " is not on the frame grid");
            if (t < frame.start() || t > frame.end())
                throw ArgumentError("extract_populations: t = " + std::to_string(t) + " outside the frame");
            const auto it = std::lower_bound(frame.times.begin(), frame.times.end(), t);
            std::size_t near = static_cast<std::size_t>(it - frame.times.begin());
            if (near > 0 && (near == frame.size() || t - frame.times[near - 1] < frame.times[near] - t)) --near;
            const auto d = eig_general(sample_h(*interpolate_with, t));
            const auto m = detail::match_branches(frame.frames[near], d.right_vectors, 0.0, near);
            ComplexMatrix v(frame.dim());
            for (std::size_t i = 0; i < frame.dim(); ++i) v.set_column(i, d.right_vectors.column(m.order[i]));
            u_inv = mat_inv(v, {1e12});
        }
        auto c = eigenbasis_coefficients(u_inv, history.states[k]);
        history.populations.push_back(populations_of(c));
        history.coeffs.push_back(std::move(c));
    }
    return history;
}

// t, re/im of each state component, log_norm, then p_n per branch when present.
inline void write_history_csv(std::ostream& os, const StateHistory& h) {
    const std::size_t n = h.states.empty() ? 0 : h.states.front().dim();
    const auto names = branch_names(n);
    os << "t";
    for (std::size_t i = 0; i < n; ++i) os << ",re_psi" << i << ",im_psi" << i;
    os << ",log_norm";
    const bool pops = h.populations.size() == h.size();
    if (pops)
        for (const auto& nm : names) os << ",p_" << nm;
    os << '\n';
    const auto old = os.precision(17);
    for (std::size_t k = 0; k < h.size(); ++k) {
        os << h.times[k];
        for (std::size_t i = 0; i < n; ++i) os << ',' << h.states[k][i].real() << ',' << h.states[k][i].imag();
        os << ',' << h.log_norm[k];
        if (pops)
            for (double p : h.populations[k]) os << ',' << p;
        os << '\n';
    }
    os.precision(old);
}

}  // namespace nhslow
