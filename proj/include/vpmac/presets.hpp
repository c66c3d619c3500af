#pragma once

// Ready-made designs, scenarios and figure data sets.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpmac/channel.hpp"
#include "vpmac/design.hpp"
#include "vpmac/sim.hpp"

namespace vpmac::presets {

inline constexpr double kEpsV = 0.01;
inline constexpr double kBMargin = 0.01;

inline UtilitySpec collision_utility() { return {UtilityKind::sum_throughput_single, 0.0}; }
inline UtilitySpec fading_utility() { return {UtilityKind::energy_weighted, 0.3}; }
inline UtilitySpec two_rate_utility() { return {UtilityKind::sum_throughput_multi, 0.0}; }

inline SingleOptionDesign collision_design() {
    return build_single_design(build_channel(builtin::collision()), collision_utility(), kEpsV, kBMargin);
}

inline SingleOptionDesign fading_design() {
    return build_single_design(build_channel(builtin::fading_example()), fading_utility(), kEpsV, kBMargin);
}

/// Two-rate design: high rate only up to K_lower = 4, low rate only from
/// K_upper = 10, inner pinpoints 5 and 6 on the optimal directions.
inline MultiDesignSpec two_rate_spec() {
    MultiDesignSpec s;
    s.utility = two_rate_utility();
    s.eps_v = kEpsV;
    s.b_margin = kBMargin;
    s.head_direction = {1.0, 0.0};
    s.tail_direction = {0.0, 1.0};
    s.k_lower = 4;
    s.k_upper = 10;
    s.inner_pinpoints = {5, 6};
    return s;
}

inline MultiOptionDesign two_rate_design() {
    return build_multi_design(std::make_shared<const LinkChannel>(build_channel(builtin::two_rate_example())), two_rate_spec());
}

/// Named design presets with the channel each one is built for.
struct NamedDesign {
    ChannelSpec channel;
    Design design;
};

inline const std::vector<std::string>& design_names() {
    static const std::vector<std::string> names{"collision", "fading", "two_rate"};
    return names;
}

inline NamedDesign design_preset(const std::string& name) {
    if (name == "collision") return {builtin::collision(), collision_design()};
    if (name == "fading") return {builtin::fading_example(), fading_design()};
    if (name == "two_rate") return {builtin::two_rate_example(), two_rate_design()};
    throw std::invalid_argument("unknown design preset '" + name + "'");
}

/// Eight users from the zero profile, EMA feedback with weight 1/300,
/// constant step 0.05, 3000 slots.
inline Scenario fading_scenario(std::uint64_t seed) {
    Scenario sc;
    sc.channel = builtin::fading_example();
    sc.design = fading_design();
    sc.stages = {{3000, 8}};
    sc.step = StepSchedule::constant(0.05);
    sc.seed = seed;
    return sc;
}

/// 8 users, 6 more join at slot 3001, 8 leave at slot 6001.
inline Scenario three_stage_scenario(std::uint64_t seed, const MultiOptionDesign& design) {
    Scenario sc;
    sc.channel = builtin::two_rate_example();
    sc.design = design;
    sc.stages = {{3000, 8}, {3000, 6}, {3000, -8}};
    sc.step = StepSchedule::constant(0.05);
    sc.seed = seed;
    return sc;
}

inline Scenario three_stage_scenario(std::uint64_t seed) { return three_stage_scenario(seed, two_rate_design()); }

// ---------------------------------------------------------------------------
// Figure data.

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::map<std::string, std::string> metadata;
};

inline void write_table_csv(std::ostream& os, const Table& t) {
    for (const auto& [k, v] : t.metadata) os << "# " << k << "=" << v << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i]);
        os << "\n";
    }
}

inline const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names{"fig1_optimal_probs",        "fig2_collision_throughput",
                                                "fig3_fading_utility",       "fig4_convergence_k8",
                                                "fig5_qvstar_curve",         "fig6_threestage_throughput",
                                                "fig7_threestage_targets"};
    return names;
}

inline bool is_trace_figure(const std::string& name) {
    return name == "fig4_convergence_k8" || name == "fig6_threestage_throughput" || name == "fig7_threestage_targets";
}

/// Optimal symmetric profile of the two-rate channel for K = 1..20.
inline Table fig1_optimal_probs() {
    const auto channel = build_channel(builtin::two_rate_example());
    Table t{{"K", "p_high", "p_low", "p", "d_high", "throughput"}, {}, {{"grid", "0.005"}}};
    for (int k = 1; k <= 20; ++k) {
        const auto opt = optimal_profile(two_rate_utility(), channel, k);
        const auto v = opt.as_vector();
        t.rows.push_back({double(k), v[0], v[1], opt.p, opt.d[0], utility_eval(two_rate_utility(), channel, k, opt)});
    }
    return t;
}

/// Collision channel: throughput at p = 1/K, at the designed equilibrium,
/// and at the idle-probability baseline, K = 2..20.
inline Table fig2_collision_throughput() {
    const auto d = collision_design();
    Table t{{"K", "optimal_throughput", "proposed_throughput", "hajek_throughput"}, {}, {{"b", format_number(d.b)}}};
    for (int k = 2; k <= 20; ++k) {
        t.rows.push_back({double(k), utility_eval(d.utility, d.params, k, 1.0 / k), utility_eval(d.utility, d.params, k, d.p_at(k)),
                          utility_eval(d.utility, d.params, k, hajek_baseline(k))});
    }
    return t;
}

/// Fading channel with energy cost: utility at the equilibrium, the known-K
/// optimum, and with the idle probability held at exp(-x*), K = 1..20.
inline Table fig3_fading_utility() {
    const auto d = fading_design();
    const auto channel = build_channel(builtin::fading_example());
    Table t{{"K", "optimal_utility", "proposed_utility", "idle_baseline_utility"}, {}, {{"x_star", format_number(d.x_star)}}};
    for (int k = 1; k <= 20; ++k) {
        const auto opt = optimal_profile(d.utility, channel, k);
        const double idle_p = 1.0 - std::exp(-d.x_star / k);
        t.rows.push_back({double(k), utility_eval(d.utility, d.params, k, opt.p), utility_eval(d.utility, d.params, k, d.p_at(k)),
                          utility_eval(d.utility, d.params, k, idle_p)});
    }
    return t;
}

/// q_v*(K_hat) and p(K_hat) of the two-rate design on [2, 16], step 0.01.
inline Table fig5_qvstar_curve() {
    const auto d = two_rate_design();
    Table t{{"K_hat", "qv_star", "p_high", "p_low"}, {}, {{"k_lower", std::to_string(d.k_lower)}, {"k_upper", std::to_string(d.k_upper)}}};
    for (int n = 200; n <= 1600; ++n) {
        const double k = n / 100.0;
        const auto v = d.profile_vector_at(std::max(k, double(d.head.j_eps)));
        t.rows.push_back({k, qv_star_multi(d, std::max(k, double(d.head.j_eps))), v[0], v[1]});
    }
    return t;
}

inline Table figure_table(const std::string& name) {
    if (name == "fig1_optimal_probs") return fig1_optimal_probs();
    if (name == "fig2_collision_throughput") return fig2_collision_throughput();
    if (name == "fig3_fading_utility") return fig3_fading_utility();
    if (name == "fig5_qvstar_curve") return fig5_qvstar_curve();
    throw std::invalid_argument("'" + name + "' is not a table figure");
}

inline Scenario figure_scenario(const std::string& name, std::uint64_t seed) {
    if (name == "fig4_convergence_k8") return fading_scenario(seed);
    if (name == "fig6_threestage_throughput" || name == "fig7_threestage_targets") return three_stage_scenario(seed);
    throw std::invalid_argument("'" + name + "' is not a simulation figure");
}

}  // namespace vpmac::presets
