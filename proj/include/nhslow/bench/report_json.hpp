#pragma once

// report.json: UTF-8, keys in a fixed order. Non-finite reals are written as
// null and read back as +inf.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "nhslow/bench/classify.hpp"
#include "nhslow/bench/presets.hpp"
#include "nhslow/bench/run.hpp"

namespace nhslow::bench {

using json = nlohmann::ordered_json;

inline constexpr const char* kReportFormat = "nhslow-report";
inline constexpr int kReportVersion = 1;

namespace detail {

inline json real_to_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline double real_from_json(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }
inline cplx complex_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ArgumentError("expected a real number or [re, im], got " + j.dump());
}

}  // namespace detail

inline json to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.dim(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.dim(); ++c) row.push_back(detail::complex_to_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ComplexMatrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ArgumentError("expected a square matrix as an array of rows");
    const std::size_t n = j.size();
    nhslow::detail::check_dim(n);
    ComplexMatrix m(n);
    for (std::size_t r = 0; r < n; ++r) {
        if (!j[r].is_array() || j[r].size() != n) throw ArgumentError("matrix rows must all have length " + std::to_string(n));
        for (std::size_t c = 0; c < n; ++c) m(r, c) = detail::complex_from_json(j[r][c]);
    }
    if (!m.all_finite()) throw ArgumentError("matrix entries must be finite");
    return m;
}

inline json to_json(const TrajectorySpec& t) {
    return json{{"delta0", t.delta0}, {"g0", t.g0},       {"radius", t.radius},
                {"total_time", t.total_time}, {"omega", t.omega}, {"phi", t.phi}};
}

inline TrajectorySpec trajectory_from_json(const json& j) {
    return {j.at("delta0").get<double>(),     j.at("g0").get<double>(),    j.at("radius").get<double>(),
            j.at("total_time").get<double>(), j.at("omega").get<double>(), j.at("phi").get<double>()};
}

inline json to_json(const PerturbationSpec& p) {
    return json{{"epsilon", p.epsilon}, {"Omega", p.Omega}, {"coupling", to_json(p.coupling)}};
}

inline PerturbationSpec perturbation_from_json(const json& j) {
    PerturbationSpec p{j.at("epsilon").get<double>(), j.at("Omega").get<double>(), matrix_from_json(j.at("coupling"))};
    p.validate();
    return p;
}

template <class T, class F>
json optional_to_json(const std::optional<T>& v, F&& f) {
    return v ? f(*v) : json(nullptr);
}

inline json to_json(const MethodOutcome& o, const std::vector<std::string>& branches) {
    json sw = json::array();
    for (double t : o.switch_times) sw.push_back(t);
    return json{{"winner", branches.at(o.winner)},
                {"switch_times", sw},
                {"last_switch", o.last_switch() ? json(*o.last_switch()) : json(nullptr)},
                {"final_populations", o.final_populations}};
}

inline MethodOutcome outcome_from_json(const json& j, const std::vector<std::string>& branches) {
    MethodOutcome o;
    o.winner = branch_index(branches, j.at("winner").get<std::string>());
    o.switch_times = j.at("switch_times").get<std::vector<double>>();
    o.final_populations = j.at("final_populations").get<std::vector<double>>();
    return o;
}

inline json to_json(const ConversionReport& r) {
    json winners = json::object(), methods = json::object();
    for (const auto& [m, o] : r.methods) {
        winners[to_string(m)] = r.branches.at(o.winner);
        methods[to_string(m)] = to_json(o, r.branches);
    }
    json endpoint = nullptr;
    if (r.endpoint_fastest)
        endpoint = json{{"label", r.branches.at(r.endpoint_fastest->label)}, {"y", r.endpoint_fastest->y}};
    return json{
        {"preset", r.preset},
        {"variant", r.variant},
        {"initial_state", r.initial_state},
        {"branches", r.branches},
        {"trajectory", optional_to_json(r.trajectory, [](const auto& t) { return to_json(t); })},
        {"perturbation", optional_to_json(r.perturbation, [](const auto& p) { return to_json(p); })},
        {"noise_model", optional_to_json(r.noise_model, [](const auto& p) { return to_json(p); })},
        {"slowness_diagnostic", detail::real_to_json(r.slowness_diagnostic)},
        {"most_growing",
         json{{"label", r.branches.at(r.most_growing.label)}, {"tie", r.most_growing.tie}, {"note", r.most_growing.note}}},
        {"endpoint_fastest", endpoint},
        {"winners", winners},
        {"methods", methods},
        {"notes", r.notes},
    };
}

inline ConversionReport report_from_json(const json& j) {
    ConversionReport r;
    r.preset = j.at("preset").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.initial_state = j.at("initial_state").get<std::string>();
    r.branches = j.at("branches").get<std::vector<std::string>>();
    if (!j.at("trajectory").is_null()) r.trajectory = trajectory_from_json(j.at("trajectory"));
    if (!j.at("perturbation").is_null()) r.perturbation = perturbation_from_json(j.at("perturbation"));
    if (!j.at("noise_model").is_null()) r.noise_model = perturbation_from_json(j.at("noise_model"));
    r.slowness_diagnostic = detail::real_from_json(j.at("slowness_diagnostic"));
    const auto& mg = j.at("most_growing");
    r.most_growing = {branch_index(r.branches, mg.at("label").get<std::string>()), mg.at("tie").get<bool>(),
                      mg.at("note").get<std::string>()};
    if (const auto& ep = j.at("endpoint_fastest"); !ep.is_null())
        r.endpoint_fastest = EndpointFastest{branch_index(r.branches, ep.at("label").get<std::string>()),
                                             ep.at("y").get<double>()};
    for (const auto& [k, v] : j.at("methods").items()) r.methods[method_from_string(k)] = outcome_from_json(v, r.branches);
    r.notes = j.at("notes").get<std::string>();
    return r;
}

inline json to_json(const ChiralityVerdict& v) {
    json chiral = json::object();
    for (const auto& [m, c] : v.chiral) chiral[to_string(m)] = c;
    return json{{"initial_state", v.cw.initial_state}, {"chiral", chiral}, {"cw", to_json(v.cw)}, {"ccw", to_json(v.ccw)}};
}

inline ChiralityVerdict verdict_from_json(const json& j) {
    ChiralityVerdict v{report_from_json(j.at("cw")), report_from_json(j.at("ccw")), {}};
    for (const auto& [k, c] : j.at("chiral").items()) v.chiral[method_from_string(k)] = c.get<bool>();
    return v;
}

inline json to_json(const RunSettings& s) {
    return json{{"steps", s.steps},
                {"grid", s.grid},
                {"outputs", s.resolved_outputs()},
                {"y", s.y},
                {"y_floor", s.y_floor},
                {"threshold", s.threshold},
                {"ambiguity_tol", s.ambiguity_tol},
                {"gap_floor", s.gap_floor},
                {"include_lambda1", s.include_lambda1},
                {"seed", s.seed ? json(*s.seed) : json(nullptr)}};
}

// Top-level document for any command.
inline json report_document(const std::string& command, const std::string& name, const RunSettings& s,
                            const std::vector<ConversionReport>& runs, const std::vector<ChiralityVerdict>& verdicts = {}) {
    json jr = json::array(), jv = json::array();
    for (const auto& r : runs) jr.push_back(to_json(r));
    for (const auto& v : verdicts) jv.push_back(to_json(v));
    return json{{"format", kReportFormat}, {"version", kReportVersion}, {"command", command}, {"name", name},
                {"settings", to_json(s)},  {"runs", jr},                 {"chirality", jv}};
}

inline json report_document(const PresetResult& p) {
    std::vector<ConversionReport> runs;
    for (const auto& r : p.runs) runs.push_back(r.report);
    auto doc = report_document("preset", p.preset.name, p.settings, runs, p.chirality);
    doc["description"] = p.preset.description;
    return doc;
}

inline void write_json(const std::filesystem::path& file, const json& doc) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    auto os = open_output(file);
    os << doc.dump(2) << '\n';
}

// frame CSV per variant, three series CSVs per run, report.json.
inline void write_preset_artifacts(const std::filesystem::path& dir, const PresetResult& p) {
    for (const auto& [variant, f] : p.frames) write_frame_file(dir, variant, f);
    for (const auto& r : p.runs) write_run_csvs(dir, r.report.variant + "_" + r.report.initial_state, r);
    write_json(dir / "report.json", report_document(p));
}

}  // namespace nhslow::bench
