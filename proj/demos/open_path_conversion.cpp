// Open path on which the state with the larger accumulated gain still loses:
// population of each branch over time from the simulation and both predictors.

#include <cstdio>

#include "nhslow/bench/presets.hpp"

int main() {
    using namespace nhslow;
    using namespace nhslow::bench;
    const auto result = run_preset("fig2");
    const auto& f = result.frames.at("open");
    const auto& run = result.run("open", "minus");
    const auto& r = run.report;

    std::printf("most growing (Im Lambda at T): %s\n", r.branches[r.most_growing.label].c_str());
    if (r.endpoint_fastest) std::printf("fastest growing near T:        %s\n", r.branches[r.endpoint_fastest->label].c_str());
    for (const auto& [m, o] : r.methods) std::printf("%-11s winner: %s\n", to_string(m), r.branches[o.winner].c_str());

    std::printf("\n%8s %14s %14s %14s\n", "t/T", "p+ simulation", "p+ naive", "p+ advanced");
    const std::size_t stride = (f.size() - 1) / 10;
    for (std::size_t k = 0; k < f.size(); k += stride) {
        const double t = f.times[k];
        std::size_t j = 0;
        while (j + 1 < run.history.size() && run.history.times[j] < t) ++j;
        std::printf("%8.2f %14.6f %14.6f %14.6f\n", (t - f.start()) / f.duration(), run.history.populations[j][0],
                    run.naive.populations[k][0], run.advanced.populations[k][0]);
    }
}
