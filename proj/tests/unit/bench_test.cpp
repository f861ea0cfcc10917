#include <gtest/gtest.h>

#include <map>
#include <numbers>

#include "nhslow/bench/config.hpp"
#include "nhslow/bench/presets.hpp"
#include "nhslow/bench/report_json.hpp"

using namespace nhslow;
using namespace nhslow::bench;

namespace {

constexpr double T = 500.0;
constexpr std::size_t kPlus = 0, kMinus = 1;

const PresetResult& cached(const std::string& name) {
    static std::map<std::string, PresetResult> cache;
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, run_preset(name)).first;
    return it->second;
}

SpectralFrame frame_of(const std::string& p, const std::string& v) { return cached(p).frames.at(v); }

ConversionReport fake_report(const TrajectorySpec& t, std::size_t sim, std::size_t naive) {
    ConversionReport r;
    r.trajectory = t;
    r.methods[Method::simulation].winner = sim;
    r.methods[Method::naive].winner = naive;
    return r;
}

}  // namespace

TEST(Classify, MostGrowing) {
    EXPECT_EQ(classify_most_growing(frame_of("fig1", "open")).label, kPlus);
    EXPECT_FALSE(classify_most_growing(frame_of("fig1", "open")).tie);
    EXPECT_EQ(classify_most_growing(frame_of("fig2", "open")).label, kPlus);
    const auto tie = classify_most_growing(frame_of("fig4", "cw"));
    EXPECT_TRUE(tie.tie);
    EXPECT_NE(tie.note.find("1e-09"), std::string::npos) << tie.note;
}

TEST(Classify, EndpointFastest) {
    EXPECT_EQ(classify_endpoint_fastest(frame_of("fig2", "open"), 0.1).label, kMinus);
    EXPECT_EQ(classify_endpoint_fastest(frame_of("fig3", "cw")).label, kMinus);
    EXPECT_EQ(classify_endpoint_fastest(frame_of("fig3", "ccw")).label, kMinus);
    EXPECT_THROW(classify_endpoint_fastest(frame_of("fig2", "open"), 0.0), ArgumentError);
    EXPECT_THROW(classify_endpoint_fastest(frame_of("fig2", "open"), 1.5), ArgumentError);
}

TEST(Classify, EndpointIndeterminateOnHermitianPath) {
    ComplexMatrix h(2);
    h(0, 0) = 1.0;
    h(1, 1) = -1.0;
    h(0, 1) = h(1, 0) = 0.2;
    const auto path = HamiltonianPath::sampled_table({0.0, 10.0}, {h, h});
    const auto f = build_frame(path, 200);
    EXPECT_THROW(classify_endpoint_fastest(f), IndeterminateEndpointError);
}

TEST(Classify, SwitchTimes) {
    std::vector<double> t, p;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(T * k / 100.0);
        p.push_back(k / 100.0);
    }
    const auto sw = detect_switch_times(t, p);
    ASSERT_EQ(sw.size(), 1u);
    EXPECT_NEAR(sw[0], 0.5 * T, 1e-9);

    std::vector<double> low(t.size(), 0.3);
    EXPECT_TRUE(detect_switch_times(t, low).empty());
    EXPECT_THROW(detect_switch_times(t, std::vector<double>{0.1}), ArgumentError);
}

TEST(Classify, OutcomeWinnerIsFinalArgmax) {
    const std::vector<double> t{0, 1, 2};
    const std::vector<std::vector<double>> p{{1.0, 0.0}, {0.6, 0.4}, {0.2, 0.8}};
    const auto o = outcome_from(t, p);
    EXPECT_EQ(o.winner, kMinus);
    ASSERT_TRUE(o.last_switch());
    EXPECT_NEAR(*o.last_switch(), 1.25, 1e-12);
}

TEST(Chirality, PureFunctionOfWinners) {
    const TrajectorySpec cw{0, 1, 0.3, T, -2 * std::numbers::pi / T, 0.0};
    TrajectorySpec ccw = cw;
    ccw.omega = -cw.omega;

    const auto same = chirality(fake_report(cw, kMinus, kPlus), fake_report(ccw, kMinus, kPlus));
    EXPECT_FALSE(same.chiral.at(Method::simulation));
    EXPECT_FALSE(same.chiral.at(Method::naive));

    const auto a = chirality(fake_report(cw, kMinus, kPlus), fake_report(ccw, kPlus, kPlus));
    const auto b = chirality(fake_report(ccw, kPlus, kPlus), fake_report(cw, kMinus, kPlus));
    EXPECT_TRUE(a.chiral.at(Method::simulation));
    EXPECT_EQ(a.chiral, b.chiral);

    TrajectorySpec moved = ccw;
    moved.g0 = 0.5;
    EXPECT_THROW(chirality(fake_report(cw, 0, 0), fake_report(moved, 0, 0)), ArgumentError);
    EXPECT_THROW(chirality(fake_report(cw, 0, 0), fake_report(cw, 0, 0)), ArgumentError);
    EXPECT_THROW(chirality(fake_report(cw, 0, 0), ConversionReport{}), ArgumentError);
}

TEST(Presets, NamesAndErrors) {
    EXPECT_EQ(preset_names().size(), 8u);
    for (const auto& n : preset_names()) EXPECT_FALSE(preset(n).variants.empty()) << n;
    EXPECT_THROW(preset("fig9"), ArgumentError);
    EXPECT_TRUE(preset("fig3").directional());
    EXPECT_FALSE(preset("fig5").directional());
    EXPECT_FALSE(preset("fig1").drive);
    EXPECT_TRUE(preset("fig8").drive);
}

TEST(Presets, LoopAroundEpIsNotChiralButNaiveIs) {
    for (const auto& v : cached("fig3").chirality) {
        EXPECT_EQ(v.cw.winner(Method::simulation), kMinus);
        EXPECT_EQ(v.ccw.winner(Method::simulation), kMinus);
        EXPECT_FALSE(v.chiral.at(Method::simulation));
        EXPECT_TRUE(v.chiral.at(Method::naive));
    }
}

TEST(Presets, LoopWithoutEpIsChiral) {
    for (const auto& v : cached("fig4").chirality) {
        EXPECT_EQ(v.cw.winner(Method::simulation), kMinus);
        EXPECT_EQ(v.ccw.winner(Method::simulation), kPlus);
        EXPECT_TRUE(v.chiral.at(Method::simulation));
    }
    for (const auto& v : cached("fig7").chirality) EXPECT_TRUE(v.chiral.at(Method::simulation));
}

TEST(Presets, DrivenLoops) {
    for (const auto& v : cached("fig6").chirality) {
        EXPECT_FALSE(v.chiral.at(Method::simulation));
        EXPECT_EQ(v.cw.winner(Method::simulation), kPlus);
    }
    for (const auto& v : cached("fig8").chirality) {
        EXPECT_FALSE(v.chiral.at(Method::simulation));
        EXPECT_EQ(v.cw.winner(Method::simulation), kMinus);
        const auto a = v.cw.methods.at(Method::simulation).last_switch();
        const auto b = v.ccw.methods.at(Method::simulation).last_switch();
        ASSERT_TRUE(a && b);
        EXPECT_GT(std::abs(*a - *b), 0.05 * T);
    }
}

TEST(Presets, AdvancedAgreesWithEndpoint) {
    for (const auto& n : preset_names())
        for (const auto& r : cached(n).runs) {
            const auto& rep = r.report;
            if (!rep.endpoint_fastest) continue;
            EXPECT_EQ(rep.winner(Method::advanced), rep.endpoint_fastest->label) << n << " " << rep.variant;
            EXPECT_EQ(rep.winner(Method::advanced), rep.winner(Method::simulation)) << n << " " << rep.variant;
        }
}

TEST(ReportJson, RoundTrip) {
    const auto& p = cached("fig3");
    for (const auto& r : p.runs) {
        const auto back = report_from_json(json::parse(to_json(r.report).dump()));
        EXPECT_EQ(back, r.report);
    }
    for (const auto& v : p.chirality) EXPECT_EQ(verdict_from_json(json::parse(to_json(v).dump())), v);
}

TEST(ReportJson, KeyOrder) {
    const auto doc = report_document(cached("fig1"));
    std::vector<std::string> keys;
    for (const auto& [k, v] : doc.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"format", "version", "command", "name", "settings", "runs", "chirality",
                                              "description"}));
    std::vector<std::string> rk;
    for (const auto& [k, v] : doc["runs"][0].items()) rk.push_back(k);
    EXPECT_EQ(rk.front(), "preset");
    EXPECT_EQ(rk.back(), "notes");
    EXPECT_EQ(doc["runs"][0]["winners"]["simulation"], "plus");
}

TEST(ReportJson, NonFiniteAsNull) {
    ConversionReport r;
    r.slowness_diagnostic = std::numeric_limits<double>::infinity();
    const auto j = to_json(r);
    EXPECT_TRUE(j["slowness_diagnostic"].is_null());
    EXPECT_TRUE(std::isinf(report_from_json(j).slowness_diagnostic));
}

TEST(Config, ParsesFullDocument) {
    const auto c = parse_config(json::parse(R"({
        "trajectory": {"delta0": 0, "g0": 1, "radius": 0.3, "total_time": 500, "omega": -0.006283185307179587, "phi": 1.2566},
        "perturbation": {"epsilon": 1e-4, "Omega": 1.2566, "coupling": [[0, 1], [1, 0]], "in_simulation": false},
        "integrator": {"steps": 20000, "outputs": 2001, "initial_state": "plus"},
        "frame": {"grid": 2000, "include_lambda1": true},
        "classifier": {"y": 0.2, "threshold": 0.6},
        "outputs": {"dir": "x", "name": "demo", "term_breakdown": false}
    })"));
    ASSERT_TRUE(c.path);
    EXPECT_FALSE(c.path->perturbation());
    ASSERT_TRUE(c.perturbation);
    EXPECT_DOUBLE_EQ(c.perturbation->epsilon, 1e-4);
    EXPECT_EQ(c.settings.steps, 20000u);
    EXPECT_EQ(c.settings.resolved_outputs(), 2001u);
    EXPECT_EQ(c.settings.grid, 2000u);
    EXPECT_TRUE(c.settings.include_lambda1);
    EXPECT_DOUBLE_EQ(c.settings.y, 0.2);
    EXPECT_DOUBLE_EQ(c.settings.threshold, 0.6);
    EXPECT_EQ(c.out_dir, "x");
    EXPECT_EQ(c.name, "demo");
    EXPECT_FALSE(c.settings.term_breakdown);
    EXPECT_EQ(initial_state_name(c), "plus");
    EXPECT_EQ(c.scenario().noise_model, c.perturbation);
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
    const std::string traj = R"("trajectory": {"radius": 0.3, "total_time": 500, "omega": 0.01})";
    EXPECT_NO_THROW(parse_config(json::parse("{" + traj + "}")));
    try {
        parse_config(json::parse("{" + traj + R"(, "frame": {"gird": 10}})"));
        FAIL();
    } catch (const ArgumentError& e) {
        EXPECT_NE(std::string(e.what()).find("frame.gird"), std::string::npos);
    }
    EXPECT_THROW(parse_config(json::parse("{" + traj + R"(, "extra": 1})")), ArgumentError);
    EXPECT_THROW(parse_config(json::parse("{" + traj + R"(, "frame": {"grid": "many"}})")), ArgumentError);
    EXPECT_THROW(parse_config(json::parse("{" + traj + R"(, "frame": {"grid": -5}})")), ArgumentError);
    EXPECT_THROW(parse_config(json::parse("{" + traj + R"(, "classifier": {"y": "x"}})")), ArgumentError);
    EXPECT_THROW(parse_config(json::parse("{" + traj + R"(, "integrator": {"steps": 100, "outputs": 7}})")),
                 ArgumentError);
    EXPECT_THROW(parse_config(json::parse(R"({"trajectory": {"radius": 0.3}})")), ArgumentError);
    EXPECT_THROW(parse_config(json::parse(R"({"trajectory": {"kind": "spiral"}})")), ArgumentError);
    EXPECT_THROW(parse_config(json::parse("{}")), ArgumentError);
    EXPECT_THROW(parse_json_text("{", "test"), ArgumentError);
}

TEST(Config, OtherTrajectoryKinds) {
    const auto lz = parse_config(json::parse(
        R"({"trajectory": {"kind": "landau_zener", "slope": 1, "coupling": 0.5, "window": 40}})"));
    EXPECT_TRUE(std::holds_alternative<LandauZener>(lz.path->kind()));

    const auto table = parse_config(json::parse(R"({"trajectory": {"kind": "sampled_table", "times": [0, 1],
        "matrices": [[[1, [0, 0.1]], [[0, -0.1], -1]], [[2, 0], [0, -2]]]},
        "integrator": {"initial_state": [1, [0, 1]]}})"));
    EXPECT_TRUE(std::holds_alternative<SampledTable>(table.path->kind()));
    EXPECT_EQ(table.path->dim(), 2u);
    EXPECT_EQ(initial_state_name(table), "custom");
    const auto f = build_frame(*table.path, 100);
    const auto psi = resolve_initial_state(table, f);
    EXPECT_EQ(psi[1], cplx(0, 1));

    EXPECT_THROW(parse_config(json::parse(R"({"trajectory": {"kind": "sampled_table", "times": [0, 1],
        "matrices": [[[1, 0], [0, -1]], [[1, 0, 0], [0, 1, 0]]]}})")),
                 ArgumentError);
}

TEST(Presets, NaiveMatchesMostGrowingOnFig1WithFineSteps) {
    RunSettings s;
    s.steps = 200000;
    const auto r = run_preset("fig1", s);
    const auto mg = classify_most_growing(r.frames.at("open"));
    for (const auto& run : r.runs) {
        EXPECT_EQ(run.report.winner(Method::naive), mg.label) << run.report.initial_state;
        EXPECT_EQ(run.report.winner(Method::simulation), mg.label) << run.report.initial_state;
    }
}

TEST(Presets, ReportInvariants) {
    for (const auto& n : preset_names())
        for (const auto& run : cached(n).runs)
            for (const auto& [m, o] : run.report.methods) {
                EXPECT_LT(o.winner, run.report.branches.size());
                for (std::size_t k = 1; k < o.switch_times.size(); ++k) EXPECT_LT(o.switch_times[k - 1], o.switch_times[k]);
            }
}

TEST(Run, MethodSelection) {
    const auto p = preset("fig1");
    const auto sc = scenario(p, p.variants[0]);
    RunSettings s;
    s.steps = 5000;
    s.grid = 1000;
    const auto f = make_frame(sc.path, s);
    const auto a = run_scenario(sc, f, branch_state(f, "minus"), "minus", s, MethodSet::only(Method::naive));
    EXPECT_EQ(a.report.methods.size(), 1u);
    EXPECT_TRUE(a.report.methods.count(Method::naive));
    EXPECT_TRUE(a.history.times.empty());
}

TEST(Run, SettingsValidation) {
    RunSettings s;
    EXPECT_EQ(s.resolved_outputs(), 5001u);
    s.outputs = 7;
    EXPECT_THROW(s.validate(), ArgumentError);
    s = {};
    s.grid = 50;
    EXPECT_THROW(s.validate(), ArgumentError);
    s = {};
    s.y_floor = 0.5;
    EXPECT_THROW(s.validate(), ArgumentError);
}
