#pragma once

// Conversion classification: which branch wins, which branch the naive and
// endpoint criteria pick, when populations switch, and whether the outcome
// depends on loop direction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nhslow/errors.hpp"
#include "nhslow/models.hpp"
#include "nhslow/spectral.hpp"

namespace nhslow::bench {

enum class Method { simulation, naive, advanced };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::simulation: return "simulation";
        case Method::naive: return "naive";
        case Method::advanced: return "advanced";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    for (Method m : {Method::simulation, Method::naive, Method::advanced})
        if (s == to_string(m)) return m;
    throw ArgumentError("unknown method '" + s + "'");
}

inline std::size_t branch_index(const std::vector<std::string>& names, const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ArgumentError("unknown branch '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
}

struct MostGrowing {
    std::size_t label = 0;  // argmax, lowest index among tied branches
    bool tie = false;
    std::string note;
};

// argmax_n Im Lambda_n(T); top two within tie_tol count as a tie.
inline MostGrowing classify_most_growing(const SpectralFrame& f, double tie_tol = 1e-9) {
    if (f.Lambda.size() != f.size() || f.size() == 0) throw ArgumentError("classify_most_growing: Lambda not computed");
    const auto& last = f.Lambda.back();
    MostGrowing out;
    for (std::size_t n = 1; n < last.size(); ++n)
        if (last[n].imag() > last[out.label].imag()) out.label = n;
    for (std::size_t n = 0; n < last.size(); ++n) {
        if (n == out.label) continue;
        if (last[out.label].imag() - last[n].imag() <= tie_tol) {
            out.tie = true;
            std::ostringstream os;
            os << "Im Lambda(T) tied within " << tie_tol << " between branches " << std::min(n, out.label) << " and "
               << std::max(n, out.label);
            out.note = os.str();
            break;
        }
    }
    return out;
}

struct EndpointFastest {
    std::size_t label = 0;
    double y = 0.1;  // window fraction actually used
};

struct EndpointOptions {
    double floor = 0.02;
    // Grid points whose two largest Im lambda differ by less than this carry no
    // ordering information and are skipped.
    double point_tie_tol = 1e-12;
};

// Branch with the largest window average of Im lambda over [T(1-y), T]. The
// window is halved (not below the floor) until the pointwise argmax is constant.
inline EndpointFastest classify_endpoint_fastest(const SpectralFrame& f, double y = 0.1, EndpointOptions opts = {}) {
    if (!(y > 0.0 && y <= 1.0)) throw ArgumentError("classify_endpoint_fastest: y must lie in (0, 1]");
    if (f.size() < 2) throw ArgumentError("classify_endpoint_fastest: empty frame");
    const std::size_t n = f.dim();
    for (;;) {
        const double t_lo = f.end() - y * f.duration();
        std::optional<std::size_t> pointwise;
        bool constant = true, informative = false;
        std::vector<double> sum(n, 0.0);
        std::size_t count = 0;
        for (std::size_t k = f.size(); k-- > 0;) {
            if (f.times[k] < t_lo - 1e-12 * f.duration()) break;
            ++count;
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) {
                order[i] = i;
                sum[i] += f.lambdas[k][i].imag();
            }
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return f.lambdas[k][a].imag() > f.lambdas[k][b].imag();
            });
            if (n > 1 && f.lambdas[k][order[0]].imag() - f.lambdas[k][order[1]].imag() < opts.point_tie_tol) continue;
            informative = true;
            if (pointwise && *pointwise != order[0]) constant = false;
            pointwise = order[0];
        }
        if (!informative)
            throw IndeterminateEndpointError("classify_endpoint_fastest: Im lambda tied throughout the end window (y = " +
                                             std::to_string(y) + ")");
        if (constant && count >= 2) {
            EndpointFastest out{0, y};
            for (std::size_t i = 1; i < n; ++i)
                if (sum[i] > sum[out.label]) out.label = i;
            return out;
        }
        if (y <= opts.floor)
            throw IndeterminateEndpointError("classify_endpoint_fastest: fastest-growing branch still changes within the "
                                             "last " + std::to_string(y) + " of the path");
        y = std::max(0.5 * y, opts.floor);
    }
}

// Upward crossings of threshold by linear interpolation between samples.
inline std::vector<double> detect_switch_times(const std::vector<double>& times, const std::vector<double>& values,
                                               double threshold = 0.5) {
    if (times.size() != values.size()) throw ArgumentError("detect_switch_times: length mismatch");
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double a = values[k], b = values[k + 1];
        if (a < threshold && b >= threshold) {
            const double t = times[k] + (threshold - a) / (b - a) * (times[k + 1] - times[k]);
            if (out.empty() || t > out.back()) out.push_back(t);
        }
    }
    return out;
}

inline std::vector<double> detect_switch_times(const std::vector<double>& times,
                                               const std::vector<std::vector<double>>& populations, std::size_t branch,
                                               double threshold = 0.5) {
    std::vector<double> v(populations.size());
    for (std::size_t k = 0; k < populations.size(); ++k) v[k] = populations[k].at(branch);
    return detect_switch_times(times, v, threshold);
}

inline std::size_t winner_of(const std::vector<double>& final_populations) {
    return static_cast<std::size_t>(std::max_element(final_populations.begin(), final_populations.end()) -
                                    final_populations.begin());
}

struct MethodOutcome {
    std::size_t winner = 0;
    std::vector<double> switch_times;  // upward crossings of the winner's population
    std::vector<double> final_populations;

    std::optional<double> last_switch() const {
        if (switch_times.empty()) return std::nullopt;
        return switch_times.back();
    }
    friend bool operator==(const MethodOutcome&, const MethodOutcome&) = default;
};

inline MethodOutcome outcome_from(const std::vector<double>& times, const std::vector<std::vector<double>>& populations,
                                  double threshold = 0.5) {
    if (populations.empty()) throw ArgumentError("outcome_from: no populations");
    MethodOutcome o;
    o.final_populations = populations.back();
    o.winner = winner_of(o.final_populations);
    o.switch_times = detect_switch_times(times, populations, o.winner, threshold);
    return o;
}

struct ConversionReport {
    std::string preset;
    std::string variant;
    std::string initial_state;
    std::vector<std::string> branches{"plus", "minus"};
    std::optional<TrajectorySpec> trajectory;
    std::optional<PerturbationSpec> perturbation;  // drive applied in the simulation
    std::optional<PerturbationSpec> noise_model;   // drive assumed by the advanced predictor
    MostGrowing most_growing;
    std::optional<EndpointFastest> endpoint_fastest;
    std::map<Method, MethodOutcome> methods;
    double slowness_diagnostic = 0.0;
    std::string notes;

    std::size_t winner(Method m) const {
        const auto it = methods.find(m);
        if (it == methods.end()) throw ArgumentError(std::string("report has no ") + to_string(m) + " outcome");
        return it->second.winner;
    }
};

inline bool operator==(const MostGrowing& a, const MostGrowing& b) {
    return a.label == b.label && a.tie == b.tie && a.note == b.note;
}
inline bool operator==(const EndpointFastest& a, const EndpointFastest& b) { return a.label == b.label && a.y == b.y; }
inline bool operator==(const ConversionReport& a, const ConversionReport& b) {
    return a.preset == b.preset && a.variant == b.variant && a.initial_state == b.initial_state &&
           a.branches == b.branches && a.trajectory == b.trajectory && a.perturbation == b.perturbation &&
           a.noise_model == b.noise_model && a.most_growing == b.most_growing &&
           a.endpoint_fastest == b.endpoint_fastest && a.methods == b.methods &&
           a.slowness_diagnostic == b.slowness_diagnostic && a.notes == b.notes;
}

struct ChiralityVerdict {
    ConversionReport cw;
    ConversionReport ccw;
    std::map<Method, bool> chiral;

    friend bool operator==(const ChiralityVerdict&, const ChiralityVerdict&) = default;
};

// Same loop traversed in opposite directions: every trajectory parameter equal
// except omega, which flips sign.
inline bool opposite_directions(const TrajectorySpec& cw, const TrajectorySpec& ccw) {
    return cw.delta0 == ccw.delta0 && cw.g0 == ccw.g0 && cw.radius == ccw.radius && cw.total_time == ccw.total_time &&
           cw.phi == ccw.phi && cw.omega != 0.0 && cw.omega == -ccw.omega;
}

// chiral[m] is true exactly when the two winners differ.
inline ChiralityVerdict chirality(const ConversionReport& cw, const ConversionReport& ccw) {
    if (!cw.trajectory || !ccw.trajectory || !opposite_directions(*cw.trajectory, *ccw.trajectory))
        throw ArgumentError("chirality: reports must come from one loop traversed in opposite directions");
    if (cw.branches != ccw.branches) throw ArgumentError("chirality: branch sets differ");
    ChiralityVerdict v{cw, ccw, {}};
    for (const auto& [m, o] : cw.methods) {
        const auto it = ccw.methods.find(m);
        if (it != ccw.methods.end()) v.chiral[m] = o.winner != it->second.winner;
    }
    return v;
}

}  // namespace nhslow::bench
