#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vpmac/channel.hpp"
#include "vpmac/design.hpp"
#include "vpmac/sim.hpp"

using namespace vpmac;

TEST(DeriveParams, CollisionTables) {
    const auto ch = build_channel(builtin::collision());
    const auto p = derive_params(ch, DirectionVector{1.0}, 10);
    EXPECT_EQ(p.c_v[0], 1.0);
    EXPECT_EQ(p.cr(0, 0), 1.0);
    for (int j = 1; j <= 10; ++j) {
        EXPECT_EQ(p.cv(j), 0.0) << j;
        EXPECT_EQ(p.cr(0, j), 0.0) << j;
    }
}

TEST(DeriveParams, FadingRealTable) {
    const auto p = derive_params(build_channel(builtin::fading_example()), DirectionVector{1.0}, 10);
    for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(p.cr(0, j), 1.0);
    for (int j = 4; j < 6; ++j) EXPECT_NEAR(p.cr(0, j), 0.7, 1e-15);
    for (int j = 6; j <= 10; ++j) EXPECT_EQ(p.cr(0, j), 0.0);
}

TEST(DeriveParams, TwoRateLowOnlyVirtualTable) {
    const auto p = derive_params(build_channel(builtin::two_rate_example()), DirectionVector{0.0, 1.0}, 20);
    for (int j = 0; j <= 8; ++j) EXPECT_EQ(p.cv(j), 1.0) << j;
    for (int j = 9; j <= 20; ++j) EXPECT_EQ(p.cv(j), 0.0) << j;
}

TEST(DeriveParams, RejectsWrongDirectionLength) {
    EXPECT_THROW(derive_params(build_channel(builtin::collision()), DirectionVector{0.5, 0.5}), std::invalid_argument);
}

TEST(Predicates, TwoRateCapacity) {
    const auto ch = build_channel(builtin::two_rate_example());
    const std::vector<int> two_high{2, 0}, three_high{3, 0}, mixed{1, 4};
    EXPECT_EQ(ch.real_success(0, two_high, 0), 1.0);
    EXPECT_EQ(ch.real_success(0, three_high, 0), 0.0);
    EXPECT_EQ(ch.real_success(0, mixed, 0), 1.0);
    EXPECT_EQ(ch.real_success(1, std::vector<int>{2, 4}, 0), 0.0);
}

TEST(Predicates, FadingAveragedOverStates) {
    const auto ch = build_channel(builtin::fading_example());
    EXPECT_NEAR(ch.mean_real_success(0, std::vector<int>{4}), 0.7, 1e-15);
    EXPECT_NEAR(ch.mean_real_success(0, std::vector<int>{3}), 1.0, 1e-15);
    EXPECT_NEAR(ch.mean_real_success(0, std::vector<int>{6}), 0.0, 1e-15);
}

TEST(JEpsilon, Examples) {
    EXPECT_EQ(j_epsilon(derive_params(build_channel(builtin::collision()), DirectionVector{1.0}), 0.01), 0);
    EXPECT_EQ(j_epsilon(derive_params(build_channel(builtin::fading_example()), DirectionVector{1.0}), 0.01), 3);
    const auto flat = ChannelParams::from_tables({1, 1, 1, 1}, {1, 1, 1, 1});
    EXPECT_FALSE(j_epsilon(flat, 0.01).has_value());
}

TEST(JEpsilon, InvariantToConstantTail) {
    std::mt19937_64 gen(5);
    for (int t = 0; t < 20; ++t) {
        const auto spec = oracle::random_table_channel(gen, 8);
        ASSERT_TRUE(j_epsilon(ChannelParams::from_tables(spec.table_c_v, spec.table_c_v), 0.01).has_value());
        auto cv = spec.table_c_v;
        const auto a = ChannelParams::from_tables(cv, cv);
        for (int i = 0; i < 7; ++i) cv.push_back(cv.back());
        const auto b = ChannelParams::from_tables(cv, cv);
        EXPECT_EQ(j_epsilon(a, 0.01), j_epsilon(b, 0.01));
    }
}

TEST(GammaEpsilon, Examples) {
    const auto col = derive_params(build_channel(builtin::collision()), DirectionVector{1.0});
    EXPECT_NEAR(gamma_epsilon(col, 0.01, 1.0, 1.01, 1.0 / 1.01), 0.0, 1e-12);
    const auto fad = derive_params(build_channel(builtin::fading_example()), DirectionVector{1.0});
    EXPECT_NEAR(gamma_epsilon(fad, 0.01, 3.29, 1.01, 3.29 / (3 + 1.01)), 3.0, 1e-12);
}

TEST(GammaEpsilon, SingleDropGivesJ) {
    for (int j = 0; j < 6; ++j) {
        std::vector<double> cv(20, 0.0);
        for (int i = 0; i <= j; ++i) cv[static_cast<std::size_t>(i)] = 1.0;
        const auto p = ChannelParams::from_tables(cv, cv);
        for (double x : {0.5, 2.0, 5.0}) {
            const double b = std::max(1.0, x - j) + 0.01;
            EXPECT_NEAR(gamma_epsilon(p, 0.01, x, b, std::min(1.0, x / (j + b))), j, 1e-12) << j << " " << x;
        }
    }
}

TEST(GammaEpsilon, EqualsJWhenFlatBeforeJ) {
    // Forced equality case: C_v constant below J, arbitrary nonincreasing after.
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        const int j = 1 + t % 5;
        std::vector<double> cv(static_cast<std::size_t>(j) + 1, 1.0);
        double v = 0.5 * u(gen);
        cv.push_back(v);
        for (int i = 0; i < 10; ++i) cv.push_back(v *= u(gen));
        const auto p = ChannelParams::from_tables(cv, cv);
        ASSERT_EQ(j_epsilon(p, 0.01), j);
        const double x = 0.5 + 5.0 * u(gen);
        const double b = std::max(1.0, x - j) + 0.01;
        EXPECT_LE(gamma_epsilon(p, 0.01, x, b, std::min(1.0, x / (j + b))), j + 1e-12);
        EXPECT_GE(gamma_epsilon(p, 0.01, x, b, std::min(1.0, x / (j + b))), j - 1e-12);
    }
}

TEST(Builtins, VirtualTablesNonincreasingOnSimplexGrid) {
    for (const auto& [name, spec] : builtin::catalog()) {
        const auto ch = build_channel(spec);
        const std::size_t m = ch.option_count();
        const int steps = m == 1 ? 0 : 20;
        for (int i = 0; i <= steps; ++i) {
            const DirectionVector d = m == 1 ? DirectionVector{1.0} : DirectionVector{i / 20.0, 1.0 - i / 20.0};
            const auto p = derive_params(ch, d, 40);
            EXPECT_TRUE(is_nonincreasing(p.c_v)) << name << " d1=" << d[0];
        }
    }
}

TEST(DeriveParams, MatchesMonteCarlo) {
    // Sample the option split and channel state, average the predicates.
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<ChannelSpec> specs{builtin::fading_example(), builtin::two_rate_example(), builtin::threshold(4),
                                         builtin::two_rate_example(), builtin::fading({2, 5, 9}, {0.2, 0.5, 0.3})};
    for (const auto& spec : specs) {
        const auto ch = build_channel(spec);
        const std::size_t m = ch.option_count();
        const double a = u(gen);
        const DirectionVector d = m == 1 ? DirectionVector{1.0} : DirectionVector{a, 1.0 - a};
        const int j = 2 + static_cast<int>(u(gen) * 8);
        const auto params = derive_params(ch, d, j);
        Rng rng(static_cast<std::uint64_t>(j) * 7 + 1);
        std::vector<double> sw;
        for (const auto& s : ch.states()) sw.push_back(s.probability);
        const int n = 100000;
        double v = 0.0, r = 0.0;
        for (int t = 0; t < n; ++t) {
            std::vector<int> counts(m, 0);
            for (int i = 0; i < j; ++i) ++counts[rng.pick(d.entries())];
            const auto state = rng.pick(sw);
            v += ch.virtual_success(counts, state);
            // Tagged real packet on option 0 among j others.
            r += ch.real_success(0, counts, state);
        }
        v /= n;
        r /= n;
        // Standard errors under the exact value.
        const double se_v = std::sqrt(params.cv(j) * (1 - params.cv(j)) / n);
        const double se_r = std::sqrt(params.cr(0, j) * (1 - params.cr(0, j)) / n);
        EXPECT_NEAR(params.cv(j), v, 3 * se_v + 1e-12) << to_string(spec.kind) << " j=" << j;
        EXPECT_NEAR(params.cr(0, j), r, 3 * se_r + 1e-12) << to_string(spec.kind) << " j=" << j;
    }
}

TEST(TableChannel, RejectsIncreasingVirtualTable) {
    ChannelSpec s;
    s.kind = ChannelKind::table;
    s.table_c_v = {1.0, 0.5, 0.6};
    s.table_c_r = {1.0, 0.5, 0.5};
    EXPECT_THROW(build_channel(s), std::invalid_argument);
}

TEST(TableChannel, DeriveParamsReturnsTable) {
    ChannelSpec s;
    s.kind = ChannelKind::table;
    s.table_c_v = {1.0, 0.8, 0.3, 0.0};
    s.table_c_r = {1.0, 0.9, 0.2, 0.0};
    const auto p = derive_params(build_channel(s), DirectionVector{1.0}, 6);
    EXPECT_DOUBLE_EQ(p.cv(1), 0.8);
    EXPECT_DOUBLE_EQ(p.cr(0, 2), 0.2);
    EXPECT_DOUBLE_EQ(p.cv(6), 0.0);
}

TEST(OptionSpec, Validation) {
    EXPECT_THROW((OptionSpec{0.0, 1.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((OptionSpec{1.0, 0.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((OptionSpec{1.0, 1.0, 0.0}.validate()));
}
