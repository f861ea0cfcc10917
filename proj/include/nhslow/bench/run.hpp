#pragma once

// One classification run: frame, simulation, both predictors and the report,
// for a given path and initial state.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <utility>

#include "nhslow/bench/classify.hpp"
#include "nhslow/errors.hpp"
#include "nhslow/evolve.hpp"
#include "nhslow/models.hpp"
#include "nhslow/predict.hpp"
#include "nhslow/spectral.hpp"

namespace nhslow::bench {

struct RunSettings {
    std::size_t steps = 50000;
    std::size_t grid = 5000;
    std::size_t outputs = 0;  // 0: every common point of the step and frame grids
    double y = 0.1;
    double y_floor = 0.02;
    double threshold = 0.5;
    double ambiguity_tol = 1e-3;
    double gap_floor = 1e-6;
    bool include_lambda1 = false;
    bool term_breakdown = true;
    // Propagate an indeterminate endpoint classification instead of noting it.
    bool strict_endpoint = false;
    unsigned threads = 0;
    std::optional<std::uint64_t> seed;  // reserved

    std::size_t resolved_outputs() const {
        if (outputs) return outputs;
        return std::gcd(steps, grid) + 1;
    }
    void validate() const {
        if (steps < 1) throw ArgumentError("settings: steps must be positive");
        if (grid < 100) throw ArgumentError("settings: grid must be at least 100");
        if (outputs == 1 || (outputs > 1 && steps % (outputs - 1) != 0))
            throw ArgumentError("settings: outputs - 1 must divide steps");
        if (!(y > 0.0 && y <= 1.0)) throw ArgumentError("settings: y must lie in (0, 1]");
        if (!(y_floor > 0.0 && y_floor <= y)) throw ArgumentError("settings: y_floor must lie in (0, y]");
        if (!(threshold > 0.0 && threshold < 1.0)) throw ArgumentError("settings: threshold must lie in (0, 1)");
        if (!(gap_floor > 0.0) || !(ambiguity_tol >= 0.0)) throw ArgumentError("settings: tolerances must be positive");
    }
};

struct Scenario {
    std::string preset;
    std::string variant;
    HamiltonianPath path;  // carries the drive applied in the simulation, if any
    // Drive assumed by the advanced predictor when the simulation has none.
    std::optional<PerturbationSpec> noise_model;

    std::optional<PerturbationSpec> advanced_drive() const {
        if (path.perturbation()) return path.perturbation();
        return noise_model;
    }
};

struct RunArtifacts {
    ConversionReport report;
    StateHistory history;
    PredictionSeries naive;
    PredictionSeries advanced;
};

inline SpectralFrame make_frame(const HamiltonianPath& path, const RunSettings& s) {
    FrameOptions fo;
    fo.ambiguity_tol = s.ambiguity_tol;
    fo.threads = s.threads;
    return compute_w1(compute_x1(cumulative_lambda(build_frame(path, s.grid, fo))), s.gap_floor);
}

// Frame-level fields of the report (shared by every initial state).
inline ConversionReport frame_report(const Scenario& sc, const SpectralFrame& f, const RunSettings& s) {
    ConversionReport r;
    r.preset = sc.preset;
    r.variant = sc.variant;
    r.branches = branch_names(f.dim());
    if (const auto* t = sc.path.trajectory()) r.trajectory = *t;
    r.perturbation = sc.path.perturbation();
    r.noise_model = sc.advanced_drive();
    r.most_growing = classify_most_growing(f);
    if (r.most_growing.tie) r.notes += r.most_growing.note + "; ";
    try {
        r.endpoint_fastest = classify_endpoint_fastest(f, s.y, {s.y_floor});
    } catch (const IndeterminateEndpointError& e) {
        if (s.strict_endpoint) throw;
        r.notes += std::string(e.what()) + "; ";
    }
    r.slowness_diagnostic = slowness_diagnostic(sc.path, f);
    if (r.slowness_diagnostic > 0.1) r.notes += "slowness ratio exceeds 0.1; ";
    return r;
}

// Which of the three methods a run computes.
struct MethodSet {
    bool simulation = true;
    bool naive = true;
    bool advanced = true;

    bool has(Method m) const {
        return m == Method::simulation ? simulation : m == Method::naive ? naive : advanced;
    }
    static MethodSet only(Method m) { return {m == Method::simulation, m == Method::naive, m == Method::advanced}; }
};

inline RunArtifacts run_scenario(const Scenario& sc, const SpectralFrame& f, const ComplexVector& psi0,
                                 const std::string& initial_state, const RunSettings& s, MethodSet which = {}) {
    s.validate();
    RunArtifacts out;
    out.report = frame_report(sc, f, s);
    out.report.initial_state = initial_state;
    auto& m = out.report.methods;

    if (which.simulation) {
        out.history = extract_populations(f, propagate(sc.path, psi0, s.steps, s.resolved_outputs()), &sc.path);
        m[Method::simulation] = outcome_from(out.history.times, out.history.populations, s.threshold);
    }

    SeriesOptions so;
    so.include_lambda1 = s.include_lambda1;
    so.term_breakdown = s.term_breakdown;
    const auto phi0 = initial_coefficients(f, psi0);
    if (which.naive) {
        out.naive = naive_series(f, phi0, so);
        m[Method::naive] = outcome_from(out.naive.times, out.naive.populations, s.threshold);
    }
    if (which.advanced) {
        const auto drive = sc.advanced_drive();
        if (drive) {
            out.advanced = advanced_series(f, phi0, *drive, so);
        } else {
            out.advanced = advanced_series(f, phi0, PerturbationSpec{0.0, 0.0, ComplexMatrix::identity(f.dim())}, so);
            out.report.notes += "no drive or noise model: advanced series equals naive; ";
        }
        m[Method::advanced] = outcome_from(out.advanced.times, out.advanced.populations, s.threshold);
    }
    if (out.report.notes.size() >= 2) out.report.notes.resize(out.report.notes.size() - 2);
    return out;
}

// Initial state named after a branch: the frame's first column for that label.
inline ComplexVector branch_state(const SpectralFrame& f, const std::string& name) {
    return f.frames.front().column(branch_index(branch_names(f.dim()), name));
}

inline std::ofstream open_output(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw ArgumentError("cannot open " + p.string() + " for writing");
    return os;
}

// <dir>/<stem>_history.csv, _naive.csv, _advanced.csv for the methods that ran
inline void write_run_csvs(const std::filesystem::path& dir, const std::string& stem, const RunArtifacts& a) {
    std::filesystem::create_directories(dir);
    const auto& m = a.report.methods;
    if (m.count(Method::simulation)) {
        auto os = open_output(dir / (stem + "_history.csv"));
        write_history_csv(os, a.history);
    }
    if (m.count(Method::naive)) {
        auto os = open_output(dir / (stem + "_naive.csv"));
        write_series_csv(os, a.naive);
    }
    if (m.count(Method::advanced)) {
        auto os = open_output(dir / (stem + "_advanced.csv"));
        write_series_csv(os, a.advanced);
    }
}

inline void write_frame_file(const std::filesystem::path& dir, const std::string& stem, const SpectralFrame& f) {
    std::filesystem::create_directories(dir);
    auto os = open_output(dir / (stem + "_frame.csv"));
    write_frame_csv(os, f);
}

}  // namespace nhslow::bench
