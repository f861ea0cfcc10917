#pragma once

// JSON run configuration. Sections: trajectory, perturbation, integrator,
// frame, classifier, outputs. Unknown keys anywhere are rejected.
//
// {
//   "trajectory":   {"kind": "circle2x2", "delta0": 0, "g0": 1, "radius": 0.3,
//                    "total_time": 500, "omega": -0.00628, "phi": 1.2566},
//   "perturbation": {"epsilon": 1e-4, "Omega": 1.2566, "coupling": [[0, 1], [1, 0]],
//                    "in_simulation": true},
//   "integrator":   {"steps": 50000, "outputs": 5001, "initial_state": "minus"},
//   "frame":        {"grid": 5000, "ambiguity_tol": 1e-3, "gap_floor": 1e-6,
//                    "include_lambda1": false, "threads": 0},
//   "classifier":   {"y": 0.1, "y_floor": 0.02, "threshold": 0.5},
//   "outputs":      {"dir": "out", "name": "run", "term_breakdown": true}
// }
//
// Other trajectory kinds: {"kind": "landau_zener", "slope", "coupling", "window"}
// and {"kind": "sampled_table", "times": [...], "matrices": [...]}. Complex
// entries are numbers or [re, im]; initial_state may also be a vector.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <variant>

#include "json.hpp"
#include "nhslow/bench/report_json.hpp"
#include "nhslow/bench/run.hpp"

namespace nhslow::bench {

struct RunConfig {
    std::optional<HamiltonianPath> path;  // built with the simulation drive when in_simulation
    std::optional<PerturbationSpec> perturbation;
    bool perturbation_in_simulation = true;
    std::variant<std::string, ComplexVector> initial_state = std::string("minus");
    RunSettings settings;
    std::string out_dir = "out";
    std::string name = "run";

    Scenario scenario() const {
        if (!path) throw ArgumentError("config: missing trajectory section");
        return Scenario{"", name, *path, perturbation};
    }
};

namespace detail {

inline void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ArgumentError("config: '" + where + "' must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ArgumentError("config: unknown key '" + (where.empty() ? k : where + "." + k) + "'");
}

template <class T>
T get_or(const json& j, const char* key, const std::string& where, T fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->template get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ArgumentError("config: '" + where + "." + key + "' has the wrong type");
    }
}

template <class T>
T require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ArgumentError("config: missing '" + where + "." + key + "'");
    return get_or<T>(j, key, where, T{});
}

inline std::size_t get_count(const json& j, const char* key, const std::string& where, std::size_t fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_unsigned()) throw ArgumentError("config: '" + where + "." + key + "' must be a non-negative integer");
    return it->get<std::size_t>();
}

inline HamiltonianPath parse_path(const json& t, const std::optional<PerturbationSpec>& sim_drive) {
    const std::string kind = get_or<std::string>(t, "kind", "trajectory", "circle2x2");
    if (kind == "circle2x2") {
        reject_unknown(t, "trajectory", {"kind", "delta0", "g0", "radius", "total_time", "omega", "phi"});
        TrajectorySpec s{get_or(t, "delta0", "trajectory", 0.0), get_or(t, "g0", "trajectory", 0.0),
                         require<double>(t, "radius", "trajectory"), require<double>(t, "total_time", "trajectory"),
                         require<double>(t, "omega", "trajectory"),  get_or(t, "phi", "trajectory", 0.0)};
        return HamiltonianPath::circle2x2(s, sim_drive);
    }
    if (kind == "landau_zener") {
        reject_unknown(t, "trajectory", {"kind", "slope", "coupling", "window"});
        return HamiltonianPath::landau_zener(require<double>(t, "slope", "trajectory"),
                                             require<double>(t, "coupling", "trajectory"),
                                             require<double>(t, "window", "trajectory"), sim_drive);
    }
    if (kind == "sampled_table") {
        reject_unknown(t, "trajectory", {"kind", "times", "matrices"});
        const auto times = require<std::vector<double>>(t, "times", "trajectory");
        std::vector<ComplexMatrix> mats;
        if (!t.contains("matrices") || !t["matrices"].is_array()) throw ArgumentError("config: missing 'trajectory.matrices'");
        for (const auto& m : t["matrices"]) mats.push_back(matrix_from_json(m));
        return HamiltonianPath::sampled_table(times, std::move(mats), sim_drive);
    }
    throw ArgumentError("config: unknown trajectory kind '" + kind + "'");
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
    detail::reject_unknown(j, "", {"trajectory", "perturbation", "integrator", "frame", "classifier", "outputs"});
    RunConfig c;
    auto& s = c.settings;

    if (j.contains("perturbation")) {
        const auto& p = j["perturbation"];
        detail::reject_unknown(p, "perturbation", {"epsilon", "Omega", "coupling", "in_simulation"});
        PerturbationSpec spec{detail::require<double>(p, "epsilon", "perturbation"),
                              detail::require<double>(p, "Omega", "perturbation"),
                              p.contains("coupling") ? matrix_from_json(p["coupling"]) : default_coupling()};
        spec.validate();
        c.perturbation = spec;
        c.perturbation_in_simulation = detail::get_or(p, "in_simulation", "perturbation", true);
    }

    if (j.contains("integrator")) {
        const auto& i = j["integrator"];
        detail::reject_unknown(i, "integrator", {"steps", "outputs", "initial_state"});
        s.steps = detail::get_count(i, "steps", "integrator", s.steps);
        s.outputs = detail::get_count(i, "outputs", "integrator", s.outputs);
        if (i.contains("initial_state")) {
            const auto& v = i["initial_state"];
            if (v.is_string()) {
                c.initial_state = v.get<std::string>();
            } else if (v.is_array() && !v.empty()) {
                ComplexVector psi(v.size());
                for (std::size_t k = 0; k < v.size(); ++k) psi[k] = detail::complex_from_json(v[k]);
                c.initial_state = psi;
            } else {
                throw ArgumentError("config: 'integrator.initial_state' must be a branch name or a vector");
            }
        }
    }

    if (j.contains("frame")) {
        const auto& f = j["frame"];
        detail::reject_unknown(f, "frame", {"grid", "ambiguity_tol", "gap_floor", "include_lambda1", "threads"});
        s.grid = detail::get_count(f, "grid", "frame", s.grid);
        s.ambiguity_tol = detail::get_or(f, "ambiguity_tol", "frame", s.ambiguity_tol);
        s.gap_floor = detail::get_or(f, "gap_floor", "frame", s.gap_floor);
        s.include_lambda1 = detail::get_or(f, "include_lambda1", "frame", s.include_lambda1);
        s.threads = static_cast<unsigned>(detail::get_count(f, "threads", "frame", s.threads));
    }

    if (j.contains("classifier")) {
        const auto& k = j["classifier"];
        detail::reject_unknown(k, "classifier", {"y", "y_floor", "threshold"});
        s.y = detail::get_or(k, "y", "classifier", s.y);
        s.y_floor = detail::get_or(k, "y_floor", "classifier", s.y_floor);
        s.threshold = detail::get_or(k, "threshold", "classifier", s.threshold);
    }

    if (j.contains("outputs")) {
        const auto& o = j["outputs"];
        detail::reject_unknown(o, "outputs", {"dir", "name", "term_breakdown"});
        c.out_dir = detail::get_or<std::string>(o, "dir", "outputs", c.out_dir);
        c.name = detail::get_or<std::string>(o, "name", "outputs", c.name);
        s.term_breakdown = detail::get_or(o, "term_breakdown", "outputs", s.term_breakdown);
    }

    if (!j.contains("trajectory")) throw ArgumentError("config: missing trajectory section");
    const std::optional<PerturbationSpec> sim_drive =
        c.perturbation_in_simulation ? c.perturbation : std::optional<PerturbationSpec>{};
    c.path = detail::parse_path(j["trajectory"], sim_drive);
    if (c.perturbation && c.perturbation->coupling.dim() != c.path->dim())
        throw ArgumentError("config: perturbation coupling dimension does not match the trajectory");
    s.validate();
    return c;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ArgumentError(origin + ": invalid JSON: " + e.what());
    }
}

inline json read_json_file(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw ArgumentError("cannot read " + file.string());
    const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_json_text(text, file.string());
}

inline RunConfig load_config(const std::filesystem::path& file) { return parse_config(read_json_file(file)); }

// Initial state as a vector in the path's basis.
inline ComplexVector resolve_initial_state(const RunConfig& c, const SpectralFrame& f) {
    if (const auto* name = std::get_if<std::string>(&c.initial_state)) return branch_state(f, *name);
    const auto& v = std::get<ComplexVector>(c.initial_state);
    if (v.dim() != f.dim()) throw ArgumentError("config: initial_state has the wrong dimension");
    return v;
}

inline std::string initial_state_name(const RunConfig& c) {
    if (const auto* name = std::get_if<std::string>(&c.initial_state)) return *name;
    return "custom";
}

}  // namespace nhslow::bench
