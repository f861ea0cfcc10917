#pragma once

// The eight figure experiments on the two-level model, T = 500.

#include <future>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nhslow/bench/run.hpp"

namespace nhslow::bench {

struct PresetVariant {
    std::string name;
    TrajectorySpec trajectory;
};

struct Preset {
    std::string name;
    std::string description;
    std::vector<PresetVariant> variants;
    // Drive added to the Hamiltonian in the simulation.
    std::optional<PerturbationSpec> drive;
    // Drive assumed by the advanced predictor for noiseless presets.
    std::optional<PerturbationSpec> noise_model;

    bool directional() const { return variants.size() == 2 && variants[0].name == "cw" && variants[1].name == "ccw"; }
};

inline PerturbationSpec standard_drive() {
    return PerturbationSpec{1e-4, 2.0 * std::numbers::pi / 5.0, default_coupling()};
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"};
    return names;
}

inline Preset preset(const std::string& name) {
    constexpr double pi = std::numbers::pi;
    constexpr double T = 500.0;
    const auto loop = [&](double d0, double g0, double phi) {
        return std::vector<PresetVariant>{{"cw", {d0, g0, 0.3, T, -2 * pi / T, phi}},
                                          {"ccw", {d0, g0, 0.3, T, 2 * pi / T, phi}}};
    };
    const TrajectorySpec open1{0.0, 1.0, 0.3, T, -pi / T, 0.4 * pi};
    const TrajectorySpec open2{0.0, 1.0, 0.3, T, pi / T, -0.6 * pi};
    const auto drive = standard_drive();

    if (name == "fig1") return {name, "open path, most growing state wins", {{"open", open1}}, std::nullopt, drive};
    if (name == "fig2") return {name, "open path, most growing state loses", {{"open", open2}}, std::nullopt, drive};
    if (name == "fig3") return {name, "loop around one EP, non-chiral", loop(0.0, 1.0, -0.75 * pi), std::nullopt, drive};
    if (name == "fig4") return {name, "loop without EP, chiral", loop(0.0, 0.5, 0.0), std::nullopt, drive};
    if (name == "fig5")
        return {name, "open paths of fig1 (a) and fig2 (e) with the drive", {{"a", open1}, {"e", open2}}, drive, drive};
    if (name == "fig6") return {name, "driven loop without EP, non-chiral", loop(0.5, 0.5, 0.0), drive, drive};
    if (name == "fig7") return {name, "driven loop without EP, chiral", loop(0.0, 0.5, 0.0), drive, drive};
    if (name == "fig8") return {name, "driven loop around one EP, non-chiral", loop(0.0, 1.0, -0.75 * pi), drive, drive};
    throw ArgumentError("unknown preset '" + name + "' (expected fig1..fig8)");
}

inline Scenario scenario(const Preset& p, const PresetVariant& v) {
    return Scenario{p.name, v.name, HamiltonianPath::circle2x2(v.trajectory, p.drive), p.noise_model};
}

struct PresetResult {
    Preset preset;
    RunSettings settings;
    std::map<std::string, SpectralFrame> frames;  // by variant
    std::vector<RunArtifacts> runs;                // variant-major, then plus, minus
    std::vector<ChiralityVerdict> chirality;      // one per initial state, directional presets only

    const RunArtifacts& run(const std::string& variant, const std::string& initial_state) const {
        for (const auto& r : runs)
            if (r.report.variant == variant && r.report.initial_state == initial_state) return r;
        throw ArgumentError("no run " + variant + "/" + initial_state + " in " + preset.name);
    }
};

inline const std::vector<std::string>& initial_states() {
    static const std::vector<std::string> s{"plus", "minus"};
    return s;
}

// Frames are built per variant, then every (variant, initial state) run is
// executed concurrently; results are joined in a fixed order.
inline PresetResult run_preset(const Preset& p, const RunSettings& s) {
    s.validate();
    PresetResult out{p, s, {}, {}, {}};
    std::vector<Scenario> scenarios;
    for (const auto& v : p.variants) scenarios.push_back(scenario(p, v));

    std::vector<std::future<SpectralFrame>> frame_jobs;
    for (const auto& sc : scenarios)
        frame_jobs.push_back(std::async(std::launch::async, [&sc, &s] { return make_frame(sc.path, s); }));
    std::vector<SpectralFrame> frames;
    for (auto& j : frame_jobs) frames.push_back(j.get());

    std::vector<std::future<RunArtifacts>> jobs;
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        for (const auto& init : initial_states())
            jobs.push_back(std::async(std::launch::async, [&, i, init] {
                return run_scenario(scenarios[i], frames[i], branch_state(frames[i], init), init, s);
            }));
    for (auto& j : jobs) out.runs.push_back(j.get());
    for (std::size_t i = 0; i < scenarios.size(); ++i) out.frames.emplace(p.variants[i].name, std::move(frames[i]));

    if (p.directional())
        for (const auto& init : initial_states())
            out.chirality.push_back(chirality(out.run("cw", init).report, out.run("ccw", init).report));
    return out;
}

inline PresetResult run_preset(const std::string& name, const RunSettings& s = {}) { return run_preset(preset(name), s); }

}  // namespace nhslow::bench
