#pragma once

// Hamiltonian families: the 2x2 circular-trajectory model, the Landau-Zener
// sweep, and user-sampled tables, plus the fast cosine perturbation.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "nhslow/errors.hpp"
#include "nhslow/matlin.hpp"

namespace nhslow {

// delta(t) = delta0 - R sin(omega t + phi), g(t) = g0 - R cos(omega t + phi), t in [0, T].
struct TrajectorySpec {
    double delta0 = 0.0;
    double g0 = 0.0;
    double radius = 0.0;
    double total_time = 1.0;
    double omega = 0.0;
    double phi = 0.0;

    void validate() const {
        if (!(total_time > 0.0) || !std::isfinite(total_time))
            throw ArgumentError("trajectory: total_time must be positive");
        if (!(radius >= 0.0) || !std::isfinite(radius))
            throw ArgumentError("trajectory: radius must be non-negative");
        if (!std::isfinite(delta0) || !std::isfinite(g0) || !std::isfinite(omega) || !std::isfinite(phi))
            throw ArgumentError("trajectory: parameters must be finite");
    }
    double delta(double t) const { return delta0 - radius * std::sin(omega * t + phi); }
    double g(double t) const { return g0 - radius * std::cos(omega * t + phi); }

    friend bool operator==(const TrajectorySpec&, const TrajectorySpec&) = default;
};

// The off-diagonal ones matrix used as the default perturbation coupling.
inline ComplexMatrix default_coupling() { return ComplexMatrix{{0.0, 1.0}, {1.0, 0.0}}; }

// epsilon * cos(Omega t) * coupling is added to H(t).
struct PerturbationSpec {
    double epsilon = 0.0;
    double Omega = 0.0;
    ComplexMatrix coupling = default_coupling();

    void validate() const {
        if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
            throw ArgumentError("perturbation: epsilon must be finite and >= 0");
        if (!std::isfinite(Omega)) throw ArgumentError("perturbation: Omega must be finite");
        if (coupling.empty() || !coupling.all_finite())
            throw ArgumentError("perturbation: coupling must be a finite square matrix");
    }

    friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

struct Circle2x2 {
    TrajectorySpec spec;
};

// H(t) = [[slope t / 2, coupling], [coupling, -slope t / 2]] on [-window/2, window/2].
struct LandauZener {
    double slope = 1.0;
    double coupling = 1.0;
    double window = 1.0;
};

// Entrywise linear interpolation between tabulated matrices.
struct SampledTable {
    std::vector<double> times;
    std::vector<ComplexMatrix> matrices;
};

class HamiltonianPath {
public:
    using Kind = std::variant<Circle2x2, LandauZener, SampledTable>;

    static HamiltonianPath circle2x2(const TrajectorySpec& spec,
                                     std::optional<PerturbationSpec> pert = std::nullopt) {
        spec.validate();
        return HamiltonianPath(Circle2x2{spec}, 2, std::move(pert));
    }

    static HamiltonianPath landau_zener(double slope, double coupling, double window,
                                        std::optional<PerturbationSpec> pert = std::nullopt) {
        if (!(slope > 0.0) || !(coupling > 0.0) || !(window > 0.0))
            throw ArgumentError("landau_zener: slope, coupling and window must be positive");
        return HamiltonianPath(LandauZener{slope, coupling, window}, 2, std::move(pert));
    }

    static HamiltonianPath sampled_table(std::vector<double> times, std::vector<ComplexMatrix> matrices,
                                         std::optional<PerturbationSpec> pert = std::nullopt) {
        if (times.size() < 2 || times.size() != matrices.size())
            throw ArgumentError("sampled_table: need >= 2 samples with one matrix per time");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1])) throw ArgumentError("sampled_table: times must be strictly increasing");
        const std::size_t n = matrices.front().dim();
        for (const auto& m : matrices)
            if (m.dim() != n || !m.all_finite())
                throw ArgumentError("sampled_table: matrices must share a dimension and be finite");
        return HamiltonianPath(SampledTable{std::move(times), std::move(matrices)}, n, std::move(pert));
    }

    const Kind& kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::optional<PerturbationSpec>& perturbation() const noexcept { return pert_; }

    HamiltonianPath with_perturbation(std::optional<PerturbationSpec> pert) const {
        return HamiltonianPath(kind_, dim_, std::move(pert));
    }

    const TrajectorySpec* trajectory() const {
        if (const auto* c = std::get_if<Circle2x2>(&kind_)) return &c->spec;
        return nullptr;
    }

    // Closed time interval on which the path is defined.
    std::pair<double, double> domain() const {
        return std::visit(
            [](const auto& k) -> std::pair<double, double> {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Circle2x2>) return {0.0, k.spec.total_time};
                else if constexpr (std::is_same_v<K, LandauZener>) return {-0.5 * k.window, 0.5 * k.window};
                else return {k.times.front(), k.times.back()};
            },
            kind_);
    }
    double duration() const {
        const auto [a, b] = domain();
        return b - a;
    }

    // Tolerant domain test: endpoints may be hit with rounding error.
    bool contains(double t) const {
        const auto [a, b] = domain();
        const double slack = 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
        return t >= a - slack && t <= b + slack;
    }

private:
    HamiltonianPath(Kind k, std::size_t n, std::optional<PerturbationSpec> p)
        : kind_(std::move(k)), dim_(n), pert_(std::move(p)) {
        if (pert_) {
            pert_->validate();
            if (pert_->coupling.dim() != dim_)
                throw ArgumentError("perturbation coupling dimension does not match the Hamiltonian");
        }
    }

    Kind kind_;
    std::size_t dim_;
    std::optional<PerturbationSpec> pert_;
};

// [[z, -1], [-1, -z]] with z = delta + i g.
inline ComplexMatrix two_level_hamiltonian(double delta, double g) {
    const cplx z{delta, g};
    return ComplexMatrix{{z, -1.0}, {-1.0, -z}};
}

// Unperturbed H(t).
inline ComplexMatrix sample_h(const HamiltonianPath& path, double t) {
    if (!path.contains(t)) {
        const auto [a, b] = path.domain();
        throw ArgumentError("sample_h: t = " + std::to_string(t) + " outside [" + std::to_string(a) + ", " +
                            std::to_string(b) + "]");
    }
    return std::visit(
        [t](const auto& k) -> ComplexMatrix {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Circle2x2>) {
                return two_level_hamiltonian(k.spec.delta(t), k.spec.g(t));
            } else if constexpr (std::is_same_v<K, LandauZener>) {
                const double d = 0.5 * k.slope * t;
                return ComplexMatrix{{d, k.coupling}, {k.coupling, -d}};
            } else {
                const auto& ts = k.times;
                if (t <= ts.front()) return k.matrices.front();
                if (t >= ts.back()) return k.matrices.back();
                const auto it = std::upper_bound(ts.begin(), ts.end(), t);
                const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
                const std::size_t lo = hi - 1;
                const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
                return k.matrices[lo] * (1.0 - w) + k.matrices[hi] * w;
            }
        },
        path.kind());
}

// cos(Omega t) * coupling, without the epsilon prefactor.
inline ComplexMatrix sample_perturbation(const PerturbationSpec& spec, double t) {
    return spec.coupling * std::cos(spec.Omega * t);
}

// H(t) + epsilon dH(t).
inline ComplexMatrix sample_total(const HamiltonianPath& path, double t) {
    auto h = sample_h(path, t);
    if (const auto& p = path.perturbation(); p && p->epsilon != 0.0) h += sample_perturbation(*p, t) * p->epsilon;
    return h;
}

// (lambda_+, lambda_-) = (+sqrt(1 + (delta + i g)^2), -...) on the principal branch.
inline std::pair<cplx, cplx> closed_form_eigvals(double delta, double g) {
    const cplx z{delta, g};
    const cplx plus = std::sqrt(1.0 + z * z);
    return {plus, -plus};
}

}  // namespace nhslow
