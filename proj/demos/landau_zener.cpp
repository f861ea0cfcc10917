// Transition probability through a Hermitian avoided crossing, compared with
// exp(-2 pi g^2 / v).

#include <cmath>
#include <cstdio>
#include <numbers>

#include "nhslow/evolve.hpp"
#include "nhslow/spectral.hpp"

int main() {
    using namespace nhslow;
    const double slope = 0.5;
    std::printf("%8s %12s %12s %10s\n", "coupling", "simulated", "formula", "rel.err");
    for (double g : {0.15, 0.2, 0.25, 0.3}) {
        const auto path = HamiltonianPath::landau_zener(slope, g, 160.0);
        const auto frame = build_frame(path, 16000);
        // start in the lower level; count what ends up in the upper one
        const auto h = extract_populations(frame, propagate(path, frame.frames.front().column(1), 64000, 2));
        const double p = h.populations.back()[0];
        const double exact = std::exp(-2.0 * std::numbers::pi * g * g / slope);
        std::printf("%8.3f %12.6f %12.6f %10.2e\n", g, p, exact, std::abs(p - exact) / exact);
    }
}
