#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "nhslow/evolve.hpp"
#include "test_util.hpp"

using namespace nhslow;

namespace {

constexpr double pi = std::numbers::pi;

double dist(const ComplexVector& a, const ComplexVector& b) { return (a - b).norm(); }

HamiltonianPath linear_random_path(std::uint64_t seed, double total) {
    std::mt19937_64 rng(seed);
    return HamiltonianPath::sampled_table({0.0, total}, {nhslow::testing::random_matrix(rng, 2, 0.5),
                                                         nhslow::testing::random_matrix(rng, 2, 0.5)});
}

HamiltonianPath fig1() { return HamiltonianPath::circle2x2({0, 1, 0.3, 500.0, -pi / 500.0, 0.4 * pi}); }

}  // namespace

TEST(Propagate, ZeroHamiltonianIsIdentity) {
    const auto path = HamiltonianPath::sampled_table({0.0, 1.0}, {ComplexMatrix(2), ComplexMatrix(2)});
    const ComplexVector psi0{cplx(0.6), cplx(0, 0.8)};
    const auto h = propagate(path, psi0, 100, 11);
    ASSERT_EQ(h.size(), 11u);
    EXPECT_LT(dist(h.states.back(), psi0), 1e-15);
    EXPECT_EQ(h.log_norm.back(), 0.0);
    EXPECT_DOUBLE_EQ(h.times.back(), 1.0);
    EXPECT_NEAR(h.times[3], 0.3, 1e-15);
}

TEST(Propagate, DiagonalGrowthPopulations) {
    const auto hm = ComplexMatrix::diagonal(std::vector<cplx>{{0, 1}, {0, -1}});
    const auto path = HamiltonianPath::sampled_table({0.0, 1.0}, {hm, hm});
    const double s = 1.0 / std::sqrt(2.0);
    const auto frame = build_frame(path, 100);
    const auto h = extract_populations(frame, propagate(path, ComplexVector{s, s}, 1000, 101));
    const double e2 = std::exp(2.0), em2 = std::exp(-2.0);
    EXPECT_NEAR(h.populations.back()[0], e2 / (e2 + em2), 1e-12);
    EXPECT_NEAR(h.populations.back()[0], 0.98201, 5e-6);
    // log of |(e^1, e^-1)/sqrt2|
    EXPECT_NEAR(h.log_norm.back(), 0.5 * std::log(0.5 * (e2 + em2)), 1e-12);
}

TEST(Propagate, LandauZenerProbability) {
    const auto path = HamiltonianPath::landau_zener(0.5, 0.25, 160.0);
    const auto frame = build_frame(path, 16000);
    // Label 1 is the lower adiabatic level throughout the avoided crossing.
    ASSERT_LT(frame.lambdas.front()[1].real(), 0.0);
    const auto h = extract_populations(frame, propagate(path, frame.frames.front().column(1), 64000, 16001));
    const double expect = std::exp(-2.0 * pi * 0.0625 / 0.5);
    EXPECT_NEAR(expect, 0.45594, 1e-5);
    EXPECT_NEAR(h.populations.back()[0], expect, 0.05 * expect);
}

TEST(Propagate, SecondOrderConvergence) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto path = linear_random_path(seed, 2.0);
        const ComplexVector psi0{cplx(1.0), cplx(0.3, -0.2)};
        const std::size_t n = 64;
        const auto a = propagate(path, psi0, n, 2);
        const auto b = reference_propagate(path, psi0, n, 2);
        const auto c = reference_propagate(path, psi0, n, 4);
        const double ratio = dist(a.states.back(), b.states.back()) / dist(b.states.back(), c.states.back());
        EXPECT_GT(ratio, 3.0) << "seed " << seed;
        EXPECT_LT(ratio, 5.0) << "seed " << seed;

        const auto ref = reference_propagate(path, psi0, n, 8);
        const double halving = dist(a.states.back(), ref.states.back()) / dist(b.states.back(), ref.states.back());
        EXPECT_NEAR(halving, 4.0, 1.0) << "seed " << seed;
    }
}

TEST(Propagate, RefineOneIsBitIdentical) {
    const auto path = linear_random_path(9, 1.0);
    const ComplexVector psi0{cplx(1.0), cplx(1.0)};
    const auto a = propagate(path, psi0, 500, 11);
    const auto b = reference_propagate(path, psi0, 500, 1, 11);
    for (std::size_t k = 0; k < a.size(); ++k) {
        for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a.states[k][i], b.states[k][i]);
        EXPECT_EQ(a.log_norm[k], b.log_norm[k]);
    }
}

TEST(Propagate, HermitianPathConservesNorm) {
    const auto path = HamiltonianPath::landau_zener(0.5, 0.25, 160.0);
    const ComplexVector psi0{cplx(1.0), cplx(0.0)};
    for (std::size_t refine : {1u, 2u, 4u}) {
        const std::size_t steps = 16000 * refine;
        const auto h = propagate(path, psi0, steps, 2);
        EXPECT_LT(std::abs(h.log_norm.back()), 1e-10);
        EXPECT_LT(std::abs(h.log_norm.back()), 1e-9 * static_cast<double>(steps));
    }
}

TEST(Propagate, ComposesOverSubintervals) {
    const auto path = fig1().with_perturbation(PerturbationSpec{1e-4, 2 * pi / 5, default_coupling()});
    const ComplexVector psi0{cplx(0.3, 0.1), cplx(1.0)};
    const auto full = propagate(path, psi0, 4000, 2);
    PropagateOptions first, second;
    first.window = std::pair{0.0, 250.0};
    second.window = std::pair{250.0, 500.0};
    const auto a = propagate(path, psi0, 2000, 2, first);
    const auto b = propagate(path, a.states.back(), 2000, 2, second);
    EXPECT_LT(dist(full.states.back(), b.states.back()), 1e-9);
    EXPECT_NEAR(full.log_norm.back(), a.log_norm.back() + b.log_norm.back(), 1e-9);
    EXPECT_GT(std::abs(full.log_norm.back()), 1.0);
}

TEST(Propagate, PopulationsIgnoreGlobalScale) {
    const ComplexVector psi0{cplx(0.3, 0.1), cplx(1.0)};
    for (const auto& path : {HamiltonianPath::landau_zener(0.5, 0.25, 160.0), linear_random_path(4, 3.0)}) {
        const auto frame = build_frame(path, 500);
        const auto a = extract_populations(frame, propagate(path, psi0, 5000, 501));
        const auto b = extract_populations(frame, propagate(path, psi0 * cplx(-2e3, 7e2), 5000, 501));
        for (std::size_t k = 0; k < a.size(); ++k)
            for (std::size_t n = 0; n < 2; ++n) EXPECT_NEAR(a.populations[k][n], b.populations[k][n], 1e-12);
    }
}

TEST(Propagate, Invariants) {
    const auto path = fig1();
    const auto frame = build_frame(path, 1000);
    const auto h = extract_populations(frame, propagate(path, frame.frames.front().column(1), 10000, 1001));
    for (std::size_t k = 0; k < h.size(); ++k) {
        EXPECT_NEAR(h.states[k].norm(), 1.0, 1e-12);
        EXPECT_NEAR(h.populations[k][0] + h.populations[k][1], 1.0, 1e-12);
        EXPECT_TRUE(std::isfinite(h.log_norm[k]));
    }
    // Started in psi_minus.
    EXPECT_NEAR(h.populations.front()[1], 1.0, 1e-12);
    EXPECT_NEAR(h.populations.front()[0], 0.0, 1e-12);
}

TEST(Propagate, Errors) {
    const auto path = fig1();
    EXPECT_THROW(propagate(path, ComplexVector(2), 100, 11), ArgumentError);
    EXPECT_THROW(propagate(path, ComplexVector{cplx(1.0), cplx(0.0)}, 100, 7), ArgumentError);
    EXPECT_THROW(propagate(path, ComplexVector{cplx(1.0), cplx(0.0)}, 100, 1), ArgumentError);
    EXPECT_THROW(propagate(path, ComplexVector{cplx(1.0)}, 100, 11), ArgumentError);
    const auto big = ComplexMatrix::diagonal(std::vector<cplx>{{0, 1e4}, {0, -1e4}});
    EXPECT_THROW(propagate(HamiltonianPath::sampled_table({0.0, 1.0}, {big, big}), ComplexVector{cplx(1.0), cplx(1.0)}, 10, 2),
                 MagnitudeError);
}

TEST(ExtractPopulations, BasisAlignment) {
    const auto path = fig1();
    const auto frame = build_frame(path, 200);
    StateHistory h;
    h.times = {frame.times[0], frame.times[50]};
    h.states = {frame.frames[0].column(0), frame.frames[50].column(1)};
    h.log_norm = {0.0, 0.0};
    const auto out = extract_populations(frame, h);
    EXPECT_NEAR(out.populations[0][0], 1.0, 1e-12);
    EXPECT_NEAR(out.populations[1][1], 1.0, 1e-12);
    EXPECT_NEAR(out.populations[1][0], 0.0, 1e-12);
}

TEST(ExtractPopulations, EqualSuperpositionInOrthonormalFrame) {
    const auto hm = ComplexMatrix{{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 3.0}};
    const auto frame = build_frame(HamiltonianPath::sampled_table({0.0, 1.0}, {hm, hm}), 100);
    const double s = 1.0 / std::sqrt(3.0);
    StateHistory h{{0.5}, {ComplexVector{s, s, s}}, {0.0}, {}, {}};
    const auto out = extract_populations(frame, h);
    for (double p : out.populations[0]) EXPECT_NEAR(p, 1.0 / 3.0, 1e-14);
}

TEST(ExtractPopulations, OffGridNeedsInterpolation) {
    const auto path = fig1();
    const auto frame = build_frame(path, 100);
    const auto hist = propagate(path, frame.frames[0].column(1), 700, 8);
    EXPECT_THROW(extract_populations(frame, hist), ArgumentError);
    const auto out = extract_populations(frame, hist, &path);
    const auto dense = extract_populations(build_frame(path, 7000), hist);
    for (std::size_t k = 0; k < out.size(); ++k)
        for (std::size_t n = 0; n < 2; ++n) EXPECT_NEAR(out.populations[k][n], dense.populations[k][n], 1e-10);
}

TEST(HistoryCsv, Layout) {
    const auto path = fig1();
    const auto frame = build_frame(path, 100);
    const auto h = extract_populations(frame, propagate(path, frame.frames[0].column(1), 1000, 101));
    std::ostringstream os;
    write_history_csv(os, h);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "t,re_psi0,im_psi0,re_psi1,im_psi1,log_norm,p_plus,p_minus");
}
