// nhslow: run simulations, predictions and conversion classification from the
// command line. Exit status 0 on success, 1 on usage errors, 2 on physics errors.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nhslow/bench/config.hpp"
#include "nhslow/bench/presets.hpp"
#include "nhslow/bench/report_json.hpp"

namespace fs = std::filesystem;
using namespace nhslow;
using namespace nhslow::bench;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::size_t steps = 0;
    std::size_t grid = 0;
    double y = 0.0;
    std::uint64_t seed = 0;
    bool include_lambda1 = false;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* y_opt = nullptr;
    std::vector<std::string> sets;  // sweep only
};

void add_common(CLI::App* sub, Common& c, bool needs_config) {
    auto* cfg = sub->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
    if (needs_config) cfg->required();
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--steps", c.steps, "integrator steps")->check(CLI::PositiveNumber);
    sub->add_option("--grid", c.grid, "spectral frame grid points")->check(CLI::Range(std::size_t{100}, std::size_t{10000000}));
    c.y_opt = sub->add_option("--y", c.y, "endpoint window fraction");
    c.seed_opt = sub->add_option("--seed", c.seed, "reserved; recorded in the report");
    sub->add_flag("--include-lambda1", c.include_lambda1, "add the first-order eigenvalue correction");
}

void apply_flags(const Common& c, RunSettings& s) {
    if (c.steps) s.steps = c.steps;
    if (c.grid) s.grid = c.grid;
    if (c.y_opt->count()) {
        s.y = c.y;
        s.y_floor = std::min(s.y_floor, s.y);
    }
    if (c.seed_opt->count()) s.seed = c.seed;
    if (c.include_lambda1) s.include_lambda1 = true;
    s.validate();
}

RunConfig load(const Common& c) {
    auto rc = load_config(c.config);
    apply_flags(c, rc.settings);
    if (!c.out.empty()) rc.out_dir = c.out;
    return rc;
}

// One config-driven run; writes CSVs and report.json into rc.out_dir.
RunArtifacts run_config(const std::string& command, const RunConfig& rc, MethodSet which) {
    const auto sc = rc.scenario();
    const auto f = make_frame(sc.path, rc.settings);
    auto a = run_scenario(sc, f, resolve_initial_state(rc, f), initial_state_name(rc), rc.settings, which);
    const fs::path dir = rc.out_dir;
    write_frame_file(dir, rc.name, f);
    write_run_csvs(dir, rc.name, a);
    write_json(dir / "report.json", report_document(command, rc.name, rc.settings, {a.report}));
    return a;
}

void print_summary(const ConversionReport& r) {
    std::cout << (r.preset.empty() ? r.variant : r.preset + "/" + r.variant) << " from " << r.initial_state << ":";
    for (const auto& [m, o] : r.methods) {
        std::cout << ' ' << to_string(m) << '=' << r.branches.at(o.winner);
        if (o.last_switch()) std::cout << "@" << *o.last_switch();
    }
    if (r.endpoint_fastest) std::cout << " endpoint=" << r.branches.at(r.endpoint_fastest->label);
    std::cout << '\n';
}

// --set section.key=v1,v2,... ; each value is parsed as JSON, else taken as a string.
struct SweepAxis {
    std::string section, key, label;
    std::vector<json> values;
};

SweepAxis parse_axis(const std::string& spec) {
    const auto eq = spec.find('=');
    const auto dot = spec.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq)
        throw ArgumentError("--set expects section.key=v1,v2,... (got '" + spec + "')");
    SweepAxis a{spec.substr(0, dot), spec.substr(dot + 1, eq - dot - 1), spec.substr(0, eq), {}};
    std::stringstream ss(spec.substr(eq + 1));
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) throw ArgumentError("--set " + a.label + ": empty value");
        try {
            a.values.push_back(json::parse(item));
        } catch (const nlohmann::json::parse_error&) {
            a.values.push_back(item);
        }
    }
    if (a.values.empty()) throw ArgumentError("--set " + a.label + ": no values");
    return a;
}

std::string csv_value(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

int run_sweep(const Common& c) {
    if (c.sets.empty()) throw ArgumentError("sweep needs at least one --set");
    const json base = read_json_file(c.config);
    std::vector<SweepAxis> axes;
    for (const auto& s : c.sets) axes.push_back(parse_axis(s));

    std::size_t total = 1;
    for (const auto& a : axes) total *= a.values.size();

    // Parse every point up front so a bad value fails before any work starts.
    std::vector<RunConfig> configs;
    std::vector<std::vector<std::size_t>> picks;
    const fs::path root = c.out.empty() ? fs::path(base.value("outputs", json::object()).value("dir", "out")) : fs::path(c.out);
    for (std::size_t i = 0; i < total; ++i) {
        std::vector<std::size_t> pick(axes.size());
        json doc = base;
        for (std::size_t r = i, k = axes.size(); k-- > 0;) {
            pick[k] = r % axes[k].values.size();
            r /= axes[k].values.size();
            doc[axes[k].section][axes[k].key] = axes[k].values[pick[k]];
        }
        auto rc = parse_config(doc);
        apply_flags(c, rc.settings);
        std::ostringstream name;
        name << "point_" << std::setw(4) << std::setfill('0') << i;
        rc.out_dir = (root / name.str()).string();
        configs.push_back(std::move(rc));
        picks.push_back(std::move(pick));
    }

    std::vector<std::optional<ConversionReport>> reports(total);
    std::vector<std::string> errors(total);
    std::mutex log;
    nhslow::detail::parallel_for(total, configs.front().settings.threads, [&](std::size_t i) {
        try {
            auto rc = configs[i];
            rc.settings.threads = 1;
            reports[i] = run_config("sweep", rc, {}).report;
        } catch (const PhysicsError& e) {
            errors[i] = e.what();
            std::lock_guard lock(log);
            std::cerr << "point " << i << ": " << e.what() << '\n';
        }
    });

    fs::create_directories(root);
    auto os = open_output(root / "sweep.csv");
    os << "point";
    for (const auto& a : axes) os << ',' << a.label;
    os << ",status,most_growing,endpoint_fastest";
    for (Method m : {Method::simulation, Method::naive, Method::advanced})
        os << ",winner_" << to_string(m) << ",last_switch_" << to_string(m);
    os << ",error\n";
    os.precision(10);
    std::vector<ConversionReport> ok;
    for (std::size_t i = 0; i < total; ++i) {
        os << i;
        for (std::size_t k = 0; k < axes.size(); ++k) os << ',' << csv_value(axes[k].values[picks[i][k]]);
        if (!reports[i]) {
            std::string msg = errors[i];
            for (auto& ch : msg)
                if (ch == ',' || ch == '\n') ch = ';';
            os << ",error,,,,,,,,," << msg << '\n';
            continue;
        }
        const auto& r = *reports[i];
        os << ",ok," << r.branches.at(r.most_growing.label) << ','
           << (r.endpoint_fastest ? r.branches.at(r.endpoint_fastest->label) : "");
        for (Method m : {Method::simulation, Method::naive, Method::advanced}) {
            const auto& o = r.methods.at(m);
            os << ',' << r.branches.at(o.winner) << ',';
            if (o.last_switch()) os << *o.last_switch();
        }
        os << ",\n";
        ok.push_back(r);
        print_summary(r);
    }
    RunSettings s = configs.front().settings;
    write_json(root / "report.json", report_document("sweep", root.filename().string(), s, ok));
    return ok.size() == total ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Slow-evolution state conversion in non-Hermitian two-level systems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "nhslow 1.0");

    Common c;
    std::string preset_name;
    auto* simulate = app.add_subcommand("simulate", "propagate the initial state and write its populations");
    auto* naive = app.add_subcommand("predict-naive", "zeroth and first order series without the drive");
    auto* advanced = app.add_subcommand("predict-advanced", "series including the drive's slowly growing terms");
    auto* classify = app.add_subcommand("classify", "run all three methods and classify the conversion");
    auto* preset_cmd = app.add_subcommand("preset", "run one figure preset (fig1..fig8)");
    auto* sweep = app.add_subcommand("sweep", "cartesian sweep over config parameters");
    for (auto* sub : {simulate, naive, advanced, classify, sweep}) add_common(sub, c, true);
    add_common(preset_cmd, c, false);
    preset_cmd->add_option("name", preset_name, "preset name")->required();
    sweep->add_option("--set", c.sets, "section.key=v1,v2,... (repeatable)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (preset_cmd->parsed()) {
            const auto p = preset(preset_name);
            RunSettings s;
            apply_flags(c, s);
            const auto result = run_preset(p, s);
            const fs::path dir = c.out.empty() ? fs::path("out") / p.name : fs::path(c.out);
            write_preset_artifacts(dir, result);
            for (const auto& r : result.runs) print_summary(r.report);
            for (const auto& v : result.chirality) {
                std::cout << "chirality from " << v.cw.initial_state << ":";
                for (const auto& [m, ch] : v.chiral) std::cout << ' ' << to_string(m) << '=' << (ch ? "chiral" : "non-chiral");
                std::cout << '\n';
            }
            std::cout << "wrote " << (dir / "report.json").string() << '\n';
            return 0;
        }
        if (sweep->parsed()) return run_sweep(c);

        auto rc = load(c);
        std::string command;
        MethodSet which;
        if (simulate->parsed()) {
            command = "simulate";
            which = MethodSet::only(Method::simulation);
        } else if (naive->parsed()) {
            command = "predict-naive";
            which = MethodSet::only(Method::naive);
        } else if (advanced->parsed()) {
            command = "predict-advanced";
            which = MethodSet::only(Method::advanced);
        } else {
            command = "classify";
            rc.settings.strict_endpoint = true;
        }
        const auto a = run_config(command, rc, which);
        print_summary(a.report);
        std::cout << "wrote " << (fs::path(rc.out_dir) / "report.json").string() << '\n';
        return 0;
    } catch (const PhysicsError& e) {
        std::cerr << "nhslow: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "nhslow: " << e.what() << '\n';
        return 1;
    }
}
