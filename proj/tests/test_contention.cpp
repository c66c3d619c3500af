#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vpmac/contention.hpp"
#include "vpmac/presets.hpp"

using namespace vpmac;

namespace {

ChannelParams collision_params() { return derive_params(build_channel(builtin::collision()), DirectionVector{1.0}); }
ChannelParams fading_params() { return derive_params(build_channel(builtin::fading_example()), DirectionVector{1.0}); }

/// Single design around a prescribed x*, following the b rule with the
/// gamma fixed point.
SingleOptionDesign design_with_xstar(const ChannelParams& params, double x) {
    SingleOptionDesign d;
    d.params = params;
    d.utility = {UtilityKind::sum_throughput_single, 0.0};
    d.eps_v = 0.01;
    d.j_eps = *j_epsilon(params, 0.01);
    d.x_star = x;
    double b = std::max(1.0, x - d.j_eps) + 0.01;
    for (int it = 0; it < 100; ++it) {
        const double pm = std::min(1.0, x / (d.j_eps + b));
        const double next = std::max(1.0, x - gamma_epsilon(params, 0.01, x, b, pm)) + 0.01;
        if (std::abs(next - b) < 1e-12) break;
        b = next;
    }
    d.b = b;
    d.p_max = std::min(1.0, x / (d.j_eps + b));
    d.gamma_eps = gamma_epsilon(params, 0.01, x, b, d.p_max);
    return d;
}

}  // namespace

TEST(QvCommon, CollisionClosedForm) { EXPECT_NEAR(qv_common(collision_params(), 0.2, 3), 0.512, 1e-15); }

TEST(QvCommon, ZeroProbabilityGivesCv0) {
    EXPECT_DOUBLE_EQ(qv_common(fading_params(), 0.0, 9), fading_params().cv(0));
    EXPECT_DOUBLE_EQ(qv_common(collision_params(), 0.0, 4), 1.0);
}

TEST(QvCommon, FadingMatchesSubsetEnumeration) {
    const auto ch = build_channel(builtin::fading_example());
    const double want = oracle::qv(ch, std::vector<double>(8, 0.3), DirectionVector{1.0});
    EXPECT_NEAR(qv_common(fading_params(), 0.3, 8), want, 1e-13);
}

TEST(QvCommon, TwoRateMatchesEnumeration) {
    const auto ch = build_channel(builtin::two_rate_example());
    const DirectionVector d{0.3, 0.7};
    const auto params = derive_params(ch, d, 8);
    EXPECT_NEAR(qv_common(params, 0.6, 7), oracle::qv(ch, std::vector<double>(7, 0.6), d), 1e-13);
}

TEST(QvHetero, EqualProbabilitiesMatchCommon) {
    const auto p = fading_params();
    for (int k = 1; k <= 20; ++k)
        for (double x : {0.05, 0.3, 0.77}) EXPECT_NEAR(qv_hetero(p, std::vector<double>(static_cast<std::size_t>(k), x)), qv_common(p, x, k), 1e-14);
}

TEST(QvHetero, DeterministicPair) { EXPECT_EQ(qv_hetero(collision_params(), std::vector<double>{1.0, 1.0}), 0.0); }

TEST(QvHetero, MatchesEnumeration) {
    const auto ch = build_channel(builtin::fading_example());
    const std::vector<double> probs{0.1, 0.5, 0.9};
    EXPECT_NEAR(qv_hetero(fading_params(), probs), oracle::qv(ch, probs, DirectionVector{1.0}), 1e-14);
}

TEST(CountSuccessTable, MatchesEnumerationForMixedProfiles) {
    const auto ch = build_channel(builtin::two_rate_example());
    const CountSuccessTable table(ch, 5);
    const std::vector<std::vector<double>> profs{{0.2, 0.3}, {0.0, 0.9}, {0.6, 0.1}, {0.5, 0.5}, {0.1, 0.0}};
    // Oracle: enumerate each user's own choice distribution.
    double want = 0.0;
    std::vector<int> counts(2, 0);
    std::function<void(std::size_t, double)> rec = [&](std::size_t u, double w) {
        if (u == profs.size()) {
            want += w * ch.mean_virtual_success(counts);
            return;
        }
        rec(u + 1, w * (1.0 - profs[u][0] - profs[u][1]));
        for (std::size_t o = 0; o < 2; ++o) {
            ++counts[o];
            rec(u + 1, w * profs[u][o]);
            --counts[o];
        }
    };
    rec(0, 1.0);
    EXPECT_NEAR(table.qv(profs), want, 1e-13);
}

TEST(QvNoninteger, Blends) {
    const auto p = fading_params();
    EXPECT_DOUBLE_EQ(qv_noninteger(p, 0.3, 5.0), qv_common(p, 0.3, 5));
    EXPECT_NEAR(qv_noninteger(p, 0.3, 5.5), 0.5 * (qv_common(p, 0.3, 5) + qv_common(p, 0.3, 6)), 1e-15);
    EXPECT_NEAR(qv_noninteger(collision_params(), 0.1, 2.25), 0.75 * 0.81 + 0.25 * 0.729, 1e-15);
}

TEST(QvPartialP, CollisionClosedForm) {
    const auto p = collision_params();
    for (int k = 1; k <= 10; ++k) EXPECT_NEAR(qv_partial_p(p, 0.3, k), -k * std::pow(0.7, k - 1), 1e-13);
}

TEST(QvPartialP, ConstantTableGivesZero) {
    const auto p = ChannelParams::from_tables({1, 1, 1}, {0.6, 0.6, 0.6});
    EXPECT_EQ(qv_partial_p(p, 0.4, 7), 0.0);
}

TEST(QvPartialP, FadingFiniteDifference) {
    const auto p = fading_params();
    const double h = 1e-6;
    EXPECT_NEAR(qv_partial_p(p, 0.4, 10), (qv_common(p, 0.4 + h, 10) - qv_common(p, 0.4 - h, 10)) / (2 * h), 1e-6);
}

TEST(QvPartialP, RandomFiniteDifferences) {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double h = 1e-6;
    for (int t = 0; t < 50; ++t) {
        const auto spec = oracle::random_table_channel(gen);
        const auto p = derive_params(build_channel(spec), DirectionVector{1.0}, 40);
        const int k = 1 + static_cast<int>(u(gen) * 30);
        const double x = 0.01 + 0.98 * u(gen);
        EXPECT_NEAR(qv_partial_p(p, x, k), (qv_common(p, x + h, k) - qv_common(p, x - h, k)) / (2 * h), 1e-6);
    }
}

// Nonincreasing in p for any channel; strictly decreasing once K > J_eps.
TEST(QvCommonProperty, MonotoneInP) {
    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> kd(1, 30);
    for (int t = 0; t < 100; ++t) {
        const auto spec = oracle::random_table_channel(gen);
        const auto p = derive_params(build_channel(spec), DirectionVector{1.0}, 64);
        const int k = kd(gen);
        const auto j = j_epsilon(p, 0.01);
        ASSERT_TRUE(j.has_value());
        double prev = qv_common(p, 0.01, k);
        for (int i = 2; i <= 99; ++i) {
            const double q = qv_common(p, i / 100.0, k);
            EXPECT_LE(q, prev + 1e-15) << "channel " << t << " K=" << k << " p=" << i / 100.0;
            if (k > *j) {
                EXPECT_LT(q - prev, -1e-12) << "channel " << t << " K=" << k << " p=" << i / 100.0;
            }
            prev = q;
        }
    }
}

// q_v* of a design built by the b rule is nondecreasing in p_hat, strictly
// increasing between the K_cap floor and p_max.
TEST(QvStarSingleProperty, MonotoneInPhat) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> xd(0.5, 12.0);
    for (int t = 0; t < 100; ++t) {
        const auto spec = oracle::random_table_channel(gen);
        const auto params = derive_params(build_channel(spec), DirectionVector{1.0}, 64);
        const auto d = design_with_xstar(params, xd(gen));
        ASSERT_TRUE(d.satisfies_monotone_hypothesis());
        double prev = qv_star_single(d, 0.0);
        for (double ph = 1e-3; ph < d.p_max; ph += 1e-3) {
            const double q = qv_star_single(d, ph);
            EXPECT_GE(q, prev - 1e-15) << "channel " << t << " p_hat=" << ph;
            // Strict away from the endpoints, where the cell blend is informative.
            if (ph > d.x_star / (60 + d.b) && ph < d.p_max - 2e-3 && prev > 1e-9) {
                EXPECT_GT(q, prev) << "channel " << t << " p_hat=" << ph;
            }
            prev = q;
        }
    }
}

TEST(QvStarSingle, IntegerNodesEqualQv) {
    const auto d = presets::fading_design();
    for (int k = d.j_eps; k <= 30; ++k) {
        const double ph = d.x_star / (k + d.b);
        if (ph > d.p_max) continue;
        EXPECT_NEAR(qv_star_single(d, ph), qv_common(d.params, ph, k), 1e-13) << k;
    }
}

TEST(QvStarSingle, CollisionK8ClosedForm) {
    const auto d = presets::collision_design();
    EXPECT_NEAR(qv_star_single(d, d.x_star / (8 + d.b)), std::pow(1.0 - d.x_star / (8 + d.b), 8), 1e-13);
    // x* is found numerically (1 to about 1e-8), hence the looser tolerance.
    EXPECT_NEAR(qv_star_single(d, 1.0 / 9.01), std::pow(1.0 - 1.0 / 9.01, 8), 1e-8);
}

TEST(QvStarSingle, InsideCellBetweenNeighbours) {
    const auto d = presets::fading_design();
    const int k = 7;
    const double ph = d.x_star / (k + 1 + d.b) + 1e-4;
    const double q = qv_star_single(d, ph);
    EXPECT_GT(q, qv_common(d.params, ph, k + 1));
    EXPECT_LT(q, qv_common(d.params, ph, k));
}

TEST(InvertQvStarSingle, RoundTrip) {
    for (const auto& d : {presets::collision_design(), presets::fading_design()}) {
        for (double ph = d.p_floor() * 1.01; ph < d.p_max; ph += d.p_max / 577.0)
            EXPECT_NEAR(invert_qv_star_single(d, qv_star_single(d, ph)), ph, 1e-7) << ph;
    }
}

TEST(InvertQvStarSingle, Clamps) {
    const auto d = presets::collision_design();
    EXPECT_DOUBLE_EQ(invert_qv_star_single(d, 1.0), d.p_max);
    EXPECT_DOUBLE_EQ(invert_qv_star_single(d, qv_star_single(d, d.p_max)), d.p_max);
    EXPECT_EQ(invert_qv_star_single(d, 0.0), 0.0);
}

TEST(InvertQvStarSingle, CollisionK8) {
    EXPECT_NEAR(invert_qv_star_single(presets::collision_design(), std::pow(1.0 - 1.0 / 9.01, 8)), 1.0 / 9.01, 1e-8);
}

class TwoRate : public ::testing::Test {
protected:
    static void SetUpTestSuite() { design_ = new MultiOptionDesign(presets::two_rate_design()); }
    static void TearDownTestSuite() { delete design_; }
    static MultiOptionDesign* design_;
};
MultiOptionDesign* TwoRate::design_ = nullptr;

TEST_F(TwoRate, IntegerKhatEqualsQvAtProfile) {
    const auto& d = *design_;
    for (int k = 2; k <= 30; ++k) {
        const auto prof = d.profile_at(k);
        const double want = qv_common(derive_params(*d.channel, prof.d, k + 1), prof.p, k);
        EXPECT_NEAR(qv_star_multi(d, k), want, 1e-12) << k;
    }
}

TEST_F(TwoRate, HeadValueAtKLower) {
    const auto& d = *design_;
    const auto params = derive_params(*d.channel, DirectionVector{1.0, 0.0}, 10);
    const double p = d.head.x_star / (4 + d.head.b);
    EXPECT_NEAR(qv_star_multi(d, 4.0), qv_common(params, p, 4), 1e-13);
    EXPECT_NEAR(qv_star_multi(d, 4.0), qv_star_single_at(d.head, 4.0), 1e-13);
}

TEST_F(TwoRate, SeamsContinuous) {
    const auto& d = *design_;
    EXPECT_NEAR(qv_star_multi(d, 4.0 - 1e-9), qv_star_multi(d, 4.0 + 1e-9), 1e-6);
    EXPECT_NEAR(qv_star_multi(d, 10.0 - 1e-9), qv_star_multi(d, 10.0 + 1e-9), 1e-6);
    EXPECT_NEAR(qv_star_single_at(d.head, 4.0), d.qv_star_table.front(), 1e-13);
    EXPECT_NEAR(qv_star_single_at(d.tail, 10.0), d.qv_star_table.back(), 1e-13);
}

TEST_F(TwoRate, InvertRoundTrip) {
    const auto& d = *design_;
    EXPECT_NEAR(invert_qv_star_multi(d, qv_star_multi(d, 7.3)), 7.3, 1e-7);
    for (double k = 2.0; k <= 40.0; k += 0.137) EXPECT_NEAR(invert_qv_star_multi(d, qv_star_multi(d, k)), k, 1e-7) << k;
}

TEST_F(TwoRate, InvertClamps) {
    const auto& d = *design_;
    EXPECT_DOUBLE_EQ(invert_qv_star_multi(d, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(invert_qv_star_multi(d, 0.0), d.k_cap);
}

TEST_F(TwoRate, StrictlyDecreasingOnFineGrid) {
    const auto& d = *design_;
    double prev = qv_star_multi(d, 2.0);
    for (int n = 201; n <= 1600; ++n) {
        const double q = qv_star_multi(d, n / 100.0);
        EXPECT_LT(q, prev) << n / 100.0;
        prev = q;
    }
}
