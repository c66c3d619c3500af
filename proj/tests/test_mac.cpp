#include <gtest/gtest.h>

#include <random>

#include "vpmac/mac.hpp"
#include "vpmac/presets.hpp"

using namespace vpmac;

namespace {

const MultiOptionDesign& two_rate() {
    static const MultiOptionDesign d = presets::two_rate_design();
    return d;
}

UserState user(double p, DirectionVector d, StepSchedule s = StepSchedule::constant(0.05)) {
    return {TransmitProfile{p, std::move(d)}, s, 0, 0};
}

}  // namespace

TEST(SingleTarget, BoundaryMapsToPmax) {
    const auto d = presets::collision_design();
    EXPECT_DOUBLE_EQ(single_target(d, qv_star_single(d, d.p_max)), d.p_max);
    EXPECT_DOUBLE_EQ(single_target(d, 1.0), d.p_max);
}

TEST(SingleTarget, CollisionRoundTrip) {
    const auto d = presets::collision_design();
    EXPECT_NEAR(single_target(d, std::pow(1.0 - 1.0 / 9.01, 8)), 1.0 / 9.01, 1e-8);
}

TEST(SingleTarget, OverContendedClampsToZero) {
    const auto d = presets::fading_design();
    const double floor_q = qv_star_single(d, 0.0);
    EXPECT_EQ(single_target(d, floor_q * 0.5), 0.0);
    EXPECT_EQ(single_target(d, 0.0), 0.0);
}

TEST(MultiTarget, TableNodesRoundTrip) {
    const auto& m = two_rate();
    for (int k = m.k_lower; k <= m.k_upper; ++k) {
        const auto t = multi_target(m, qv_star_multi(m, k));
        const auto want = m.p_table[static_cast<std::size_t>((k - m.k_lower) * m.steps_per_unit)];
        const auto got = t.profile.as_vector();
        EXPECT_NEAR(t.k_hat, k, 1e-7);
        for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(got[i], want[i], 1e-7) << k;
    }
}

TEST(MultiTarget, IdleMeasureGivesHeadClamp) {
    const auto& m = two_rate();
    const auto t = multi_target(m, 1.0);
    EXPECT_EQ(t.k_hat, m.head.j_eps);
    const auto v = t.profile.as_vector();
    EXPECT_DOUBLE_EQ(v[0], m.head.p_at(m.head.j_eps));
    EXPECT_EQ(v[1], 0.0);
}

TEST(MultiTarget, TailClosedForm) {
    const auto& m = two_rate();
    const auto v = multi_target(m, qv_star_multi(m, 14)).profile.as_vector();
    EXPECT_NEAR(v[0], 0.0, 1e-15);
    EXPECT_NEAR(v[1], m.tail.x_star / (14 + m.tail.b), 1e-9);
}

TEST(TargetMaps, MonotoneInMeasurement) {
    const auto s = presets::fading_design();
    const auto& m = two_rate();
    double prev_p = -1.0, prev_k = INFINITY;
    for (int i = 0; i <= 2000; ++i) {
        const double q = i / 2000.0;
        const double p = single_target(s, q);
        EXPECT_GE(p, prev_p) << q;
        prev_p = p;
        const double k = multi_target(m, q).k_hat;
        EXPECT_LE(k, prev_k) << q;
        prev_k = k;
    }
}

TEST(TargetMaps, IdenticalMeasurementIdenticalTargets) {
    const auto& m = two_rate();
    for (double q : {0.1, 0.5, 0.73, 0.99}) {
        const Design d = m;
        EXPECT_EQ(target_profile(d, q).as_vector(), target_profile(d, q).as_vector());
    }
}

TEST(ApplyUpdate, ScalarArithmetic) {
    const auto next = apply_update(user(0.5, DirectionVector{1.0}), TransmitProfile{0.1, DirectionVector{1.0}}, 0);
    EXPECT_NEAR(next.profile.p, 0.48, 1e-15);
    EXPECT_EQ(next.updates, 1);
}

TEST(ApplyUpdate, FixedPoint) {
    const auto u = user(0.37, DirectionVector{0.25, 0.75});
    const auto next = apply_update(u, u.profile, 3);
    EXPECT_NEAR(next.profile.p, 0.37, 1e-15);
    EXPECT_NEAR(next.profile.d[0], 0.25, 1e-15);
}

TEST(ApplyUpdate, VectorBlend) {
    const auto u = user(0.2, DirectionVector{1.0, 0.0}, StepSchedule::constant(0.5));
    const auto next = apply_update(u, TransmitProfile{0.4, DirectionVector{0.0, 1.0}}, 0);
    EXPECT_NEAR(next.profile.p, 0.3, 1e-15);
    EXPECT_NEAR(next.profile.d[0], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(next.profile.d[1], 2.0 / 3.0, 1e-15);
}

TEST(ApplyUpdate, ZeroProfileKeepsDirection) {
    const auto u = user(0.0, DirectionVector{0.3, 0.7}, StepSchedule::constant(1.0));
    const auto next = apply_update(u, TransmitProfile{0.0, DirectionVector{1.0, 0.0}}, 0);
    EXPECT_EQ(next.profile.p, 0.0);
    EXPECT_EQ(next.profile.d, (DirectionVector{0.3, 0.7}));
}

TEST(ApplyUpdate, PreservesValidity) {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 2000; ++t) {
        const double a = u(gen), b = u(gen);
        auto s = user(u(gen), DirectionVector{a, 1.0 - a}, StepSchedule::constant(std::max(1e-6, u(gen))));
        const auto next = apply_update(s, TransmitProfile{u(gen), DirectionVector{b, 1.0 - b}}, t);
        const auto v = next.profile.as_vector();
        EXPECT_LE(next.profile.p, 1.0 + 1e-15);
        for (double x : v) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 1.0);
        }
    }
}

TEST(ApplyUpdate, DecreasingScheduleUsesSlotIndex) {
    const auto s = StepSchedule::decreasing(1.0, 1.0);
    EXPECT_DOUBLE_EQ(s.at(0), 1.0);
    EXPECT_DOUBLE_EQ(s.at(3), 0.25);
    const auto next = apply_update(user(0.8, DirectionVector{1.0}, s), TransmitProfile{0.0, DirectionVector{1.0}}, 3);
    EXPECT_NEAR(next.profile.p, 0.6, 1e-15);
}

TEST(ValidateSchedule, HarmonicProbabilityOne) {
    const auto s = StepSchedule::decreasing(1.0, 1.0, 1.0, {BiasBound::Kind::power, 1.0, 1.0});
    EXPECT_TRUE(validate_schedule(s, ConvergenceMode::probability_one).passed);
}

TEST(ValidateSchedule, ConstantWeak) {
    const auto s = StepSchedule::constant(0.05, {BiasBound::Kind::constant, std::sqrt(0.05), 0.0});
    EXPECT_TRUE(validate_schedule(s, ConvergenceMode::weak).passed);
    const auto too_big = StepSchedule::constant(0.05, {BiasBound::Kind::constant, 0.5, 0.0});
    EXPECT_FALSE(validate_schedule(too_big, ConvergenceMode::weak).passed);
}

TEST(ValidateSchedule, ConstantFailsProbabilityOne) {
    const auto r = validate_schedule(StepSchedule::constant(0.05), ConvergenceMode::probability_one);
    EXPECT_FALSE(r.passed);
    EXPECT_FALSE(r.reasons.empty());
}

TEST(ValidateSchedule, SquareSummableBoundary) {
    // a/(t+t0)^kappa: sum alpha diverges iff kappa <= 1, sum alpha^2 converges iff kappa > 1/2.
    EXPECT_TRUE(validate_schedule(StepSchedule::decreasing(1.0, 1.0, 0.75, {BiasBound::Kind::power, 1.0, 1.0}),
                                  ConvergenceMode::probability_one)
                    .passed);
    const BiasBound beta{BiasBound::Kind::power, 1.0, 1.0};
    EXPECT_FALSE(validate_schedule(StepSchedule::decreasing(1.0, 1.0, 0.5, beta), ConvergenceMode::probability_one).passed);
    EXPECT_FALSE(validate_schedule(StepSchedule::decreasing(1.0, 1.0, 1.5, beta), ConvergenceMode::probability_one).passed);
    EXPECT_FALSE(validate_schedule(StepSchedule::decreasing(1.0, 1.0, 1.0), ConvergenceMode::probability_one).passed);
}
