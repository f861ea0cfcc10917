#pragma once

// Instantaneous eigenframe along a trajectory: branch-tracked eigenvalues,
// continuity-gauged right eigenvectors U(t), cumulative integrals
// Lambda_n(t) = int lambda_n, the non-adiabatic generator X1 = i U^{-1} dU/dt
// and the first-order correction W1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nhslow/errors.hpp"
#include "nhslow/matlin.hpp"
#include "nhslow/models.hpp"

namespace nhslow {

struct SpectralFrame {
    std::vector<double> times;
    std::vector<std::vector<cplx>> lambdas;  // [k][n]
    std::vector<ComplexMatrix> frames;
    std::vector<ComplexMatrix> inverse_frames;
    std::vector<std::vector<cplx>> Lambda;   // [k][n], Lambda[0] == 0
    std::vector<ComplexMatrix> X1;
    std::vector<ComplexMatrix> W1;
    std::vector<std::vector<cplx>> lambda1;  // -<n|X1|n>
    double max_reconstruction_residual = 0.0;  // max_k ||H - U D U^-1||_F / ||H||_F

    std::size_t size() const noexcept { return times.size(); }
    std::size_t dim() const noexcept { return frames.empty() ? 0 : frames.front().dim(); }
    double start() const { return times.front(); }
    double end() const { return times.back(); }
    double duration() const { return times.back() - times.front(); }

    // Index of the grid point at t, if t lies on the grid (to 1e-9 of the span).
    std::optional<std::size_t> index_of(double t) const {
        if (times.empty()) return std::nullopt;
        const double tol = 1e-9 * std::max(1.0, duration());
        const auto it = std::lower_bound(times.begin(), times.end(), t - tol);
        if (it == times.end() || std::abs(*it - t) > tol) return std::nullopt;
        return static_cast<std::size_t>(it - times.begin());
    }
};

struct FrameOptions {
    EigOptions eig;
    // Two candidate overlaps closer than this make the branch match ambiguous.
    double ambiguity_tol = 1e-3;
    // Restrict the grid to a sub-interval of the path domain.
    std::optional<std::pair<double, double>> window;
    // Match labels and gauge of the first grid point against this frame
    // instead of the local eig ordering (used when continuing a frame).
    std::optional<ComplexMatrix> reference;
    // 0 = std::thread::hardware_concurrency().
    unsigned threads = 0;
};

namespace detail {

struct BranchMatch {
    std::vector<std::size_t> order;  // order[n] = column of the new decomposition for label n
};

// Greedy assignment on sorted overlaps |<prev_n|new_m>|.
inline BranchMatch match_branches(const ComplexMatrix& prev, const ComplexMatrix& next, double tol,
                                  std::size_t grid_point) {
    const std::size_t n = prev.dim();
    struct Cand {
        double overlap;
        std::size_t from, to;
    };
    std::vector<std::vector<double>> ov(n, std::vector<double>(n));
    std::vector<Cand> cands;
    for (std::size_t a = 0; a < n; ++a) {
        const auto pa = prev.column(a);
        for (std::size_t b = 0; b < n; ++b) {
            ov[a][b] = std::abs(dot(pa, next.column(b)));
            cands.push_back({ov[a][b], a, b});
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.overlap > y.overlap; });
    std::vector<bool> used_from(n, false), used_to(n, false);
    BranchMatch m{std::vector<std::size_t>(n)};
    std::size_t assigned = 0;
    for (const auto& c : cands) {
        if (used_from[c.from] || used_to[c.to]) continue;
        for (std::size_t b = 0; b < n; ++b) {
            if (b == c.to || used_to[b]) continue;
            if (c.overlap - ov[c.from][b] < tol) {
                throw BranchAmbiguityError("build_frame: ambiguous branch match at grid point " +
                                               std::to_string(grid_point),
                                           grid_point);
            }
        }
        for (std::size_t a = 0; a < n; ++a) {
            if (a == c.from || used_from[a]) continue;
            if (c.overlap - ov[a][c.to] < tol) {
                throw BranchAmbiguityError("build_frame: ambiguous branch match at grid point " +
                                               std::to_string(grid_point),
                                           grid_point);
            }
        }
        used_from[c.from] = used_to[c.to] = true;
        m.order[c.from] = c.to;
        if (++assigned == n) break;
    }
    return m;
}

// Rotate each column's phase so that Re <prev_n|v_n> is maximal.
inline void continuity_gauge(const ComplexMatrix& prev, ComplexMatrix& v) {
    for (std::size_t c = 0; c < v.dim(); ++c) {
        auto col = v.column(c);
        const cplx o = dot(prev.column(c), col);
        if (std::abs(o) > 0.0) col *= std::conj(o) / std::abs(o);
        v.set_column(c, col);
    }
}

inline std::vector<double> uniform_grid(double a, double b, std::size_t intervals) {
    std::vector<double> ts(intervals + 1);
    const double h = (b - a) / static_cast<double>(intervals);
    for (std::size_t k = 0; k <= intervals; ++k) ts[k] = a + h * static_cast<double>(k);
    ts.back() = b;
    return ts;
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    unsigned nt = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    nt = static_cast<unsigned>(std::min<std::size_t>(nt, count));
    if (nt <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(nt);
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + nt - 1) / nt;
    for (unsigned w = 0; w < nt; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

// Eigendecomposes H(t_k) on a uniform grid of M intervals, then tracks branch
// labels by eigenvector overlap and fixes a continuous gauge.
inline SpectralFrame build_frame(const HamiltonianPath& path, std::size_t grid_points, FrameOptions opts = {}) {
    if (grid_points < 100) throw ArgumentError("build_frame: need at least 100 grid intervals");
    auto [a, b] = opts.window.value_or(path.domain());
    if (!(b > a) || !path.contains(a) || !path.contains(b))
        throw ArgumentError("build_frame: window must be a non-empty sub-interval of the path domain");

    SpectralFrame f;
    f.times = detail::uniform_grid(a, b, grid_points);
    const std::size_t count = f.times.size();
    std::vector<EigenDecomposition> decomps(count);
    std::vector<double> hnorms(count);
    detail::parallel_for(count, opts.threads, [&](std::size_t k) {
        const auto h = sample_h(path, f.times[k]);
        hnorms[k] = h.norm_fro();
        decomps[k] = eig_general(h, opts.eig);
    });

    const std::size_t n = path.dim();
    f.lambdas.resize(count);
    f.frames.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        auto& d = decomps[k];
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        const ComplexMatrix* prev = k > 0 ? &f.frames[k - 1] : (opts.reference ? &*opts.reference : nullptr);
        if (prev) order = detail::match_branches(*prev, d.right_vectors, opts.ambiguity_tol, k).order;
        ComplexMatrix v(n);
        std::vector<cplx> vals(n);
        for (std::size_t i = 0; i < n; ++i) {
            v.set_column(i, d.right_vectors.column(order[i]));
            vals[i] = d.values[order[i]];
        }
        if (prev) detail::continuity_gauge(*prev, v);
        f.frames[k] = std::move(v);
        f.lambdas[k] = std::move(vals);
    }

    f.inverse_frames.resize(count);
    detail::parallel_for(count, opts.threads, [&](std::size_t k) {
        f.inverse_frames[k] = mat_inv(f.frames[k], {1e12});
    });
    for (std::size_t k = 0; k < count; ++k) {
        const auto recon = f.frames[k] * ComplexMatrix::diagonal(f.lambdas[k]) * f.inverse_frames[k];
        const double r = (recon - sample_h(path, f.times[k])).norm_fro() / std::max(hnorms[k], 1e-300);
        f.max_reconstruction_residual = std::max(f.max_reconstruction_residual, hnorms[k] > 0.0 ? r : 0.0);
    }
    return f;
}

// Trapezoid rule per branch; Lambda_n(t_0) = 0.
inline SpectralFrame cumulative_lambda(SpectralFrame f) {
    const std::size_t count = f.size();
    const std::size_t n = f.lambdas.front().size();
    f.Lambda.assign(count, std::vector<cplx>(n, 0.0));
    for (std::size_t k = 1; k < count; ++k) {
        const double h = f.times[k] - f.times[k - 1];
        for (std::size_t i = 0; i < n; ++i)
            f.Lambda[k][i] = f.Lambda[k - 1][i] + 0.5 * h * (f.lambdas[k - 1][i] + f.lambdas[k][i]);
    }
    return f;
}

// X1 = i U^{-1} dU/dt, i.e. (i/T) U^{-1} dU/ds. Second-order differences:
// central inside, one-sided three-point stencils at the ends.
inline SpectralFrame compute_x1(SpectralFrame f) {
    const std::size_t count = f.size();
    if (count < 3) throw ArgumentError("compute_x1: need at least three grid points");
    const cplx i_unit{0.0, 1.0};
    f.X1.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        ComplexMatrix du;
        if (k == 0) {
            const double h = f.times[1] - f.times[0];
            du = (f.frames[0] * -3.0 + f.frames[1] * 4.0 - f.frames[2]) * (1.0 / (2.0 * h));
        } else if (k + 1 == count) {
            const double h = f.times[k] - f.times[k - 1];
            du = (f.frames[k] * 3.0 - f.frames[k - 1] * 4.0 + f.frames[k - 2]) * (1.0 / (2.0 * h));
        } else {
            du = (f.frames[k + 1] - f.frames[k - 1]) * (1.0 / (f.times[k + 1] - f.times[k - 1]));
        }
        f.X1[k] = f.inverse_frames[k] * du * i_unit;
    }
    return f;
}

// W1_mn = <m|X1|n> / (lambda_m - lambda_n) off the diagonal; lambda1_n = -<n|X1|n>.
inline SpectralFrame compute_w1(SpectralFrame f, double gap_floor = 1e-6) {
    if (f.X1.size() != f.size()) throw ArgumentError("compute_w1: X1 not computed");
    const std::size_t count = f.size();
    const std::size_t n = f.dim();
    f.W1.assign(count, ComplexMatrix(n));
    f.lambda1.assign(count, std::vector<cplx>(n));
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t r = 0; r < n; ++r) {
            f.lambda1[k][r] = -f.X1[k](r, r);
            for (std::size_t c = 0; c < n; ++c) {
                if (r == c) continue;
                const cplx gap = f.lambdas[k][r] - f.lambdas[k][c];
                if (std::abs(gap) < gap_floor) {
                    throw NearEpError("compute_w1: spectral gap " + std::to_string(std::abs(gap)) +
                                          " below threshold at t = " + std::to_string(f.times[k]),
                                      std::abs(gap));
                }
                f.W1[k](r, c) = f.X1[k](r, c) / gap;
            }
        }
    }
    return f;
}

// build_frame + cumulative_lambda + compute_x1 + compute_w1.
inline SpectralFrame complete_frame(const HamiltonianPath& path, std::size_t grid_points, FrameOptions opts = {}) {
    return compute_w1(compute_x1(cumulative_lambda(build_frame(path, grid_points, std::move(opts)))));
}

inline double min_gap(const std::vector<cplx>& lambdas) {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < lambdas.size(); ++a)
        for (std::size_t b = a + 1; b < lambdas.size(); ++b) g = std::min(g, std::abs(lambdas[a] - lambdas[b]));
    return g;
}

// Slowness ratio, max over the grid. For the circular two-level trajectory it is
// |omega| / min gap; for other paths ||X1||_F / min gap stands in for the
// angular rate. Values above ~0.1 mean the evolution is not slow.
inline double slowness_diagnostic(const HamiltonianPath& path, const SpectralFrame& f) {
    double worst = 0.0;
    const auto* traj = path.trajectory();
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double gap = min_gap(f.lambdas[k]);
        double rate = 0.0;
        if (traj) rate = std::abs(traj->omega);
        else if (k < f.X1.size()) rate = f.X1[k].norm_fro();
        worst = std::max(worst, gap > 0.0 ? rate / gap : std::numeric_limits<double>::infinity());
    }
    return worst;
}

// Column names for branch n: "plus"/"minus" for two levels, otherwise "b<n>".
inline std::vector<std::string> branch_names(std::size_t n) {
    if (n == 2) return {"plus", "minus"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("b" + std::to_string(i));
    return out;
}

// One row per grid point: t, then re/im of lambda_n, then re/im of Lambda_n.
inline void write_frame_csv(std::ostream& os, const SpectralFrame& f) {
    const auto names = branch_names(f.dim());
    os << "t";
    for (const auto& nm : names) os << ",re_lambda_" << nm << ",im_lambda_" << nm;
    for (const auto& nm : names) os << ",re_Lambda_" << nm << ",im_Lambda_" << nm;
    os << '\n';
    const auto old = os.precision(17);
    for (std::size_t k = 0; k < f.size(); ++k) {
        os << f.times[k];
        for (const auto& l : f.lambdas[k]) os << ',' << l.real() << ',' << l.imag();
        for (std::size_t i = 0; i < names.size(); ++i) {
            const cplx L = k < f.Lambda.size() ? f.Lambda[k][i] : cplx{};
            os << ',' << L.real() << ',' << L.imag();
        }
        os << '\n';
    }
    os.precision(old);
}

}  // namespace nhslow
