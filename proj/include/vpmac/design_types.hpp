#pragma once

// Design-time constants and tables consumed by the contention, mac and sim
// modules. Construction and verification live in design.hpp.

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vpmac/channel.hpp"
#include "vpmac/profile.hpp"

namespace vpmac {

inline constexpr int kDefaultKCap = 1000;

enum class UtilityKind { sum_throughput_single, sum_throughput_multi, energy_weighted };

inline std::string to_string(UtilityKind k) {
    switch (k) {
        case UtilityKind::sum_throughput_single: return "sum_throughput_single";
        case UtilityKind::sum_throughput_multi: return "sum_throughput_multi";
        case UtilityKind::energy_weighted: return "energy_weighted";
    }
    return "?";
}

inline UtilityKind utility_kind_from_string(const std::string& s) {
    for (auto k : {UtilityKind::sum_throughput_single, UtilityKind::sum_throughput_multi, UtilityKind::energy_weighted})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown utility kind '" + s + "'");
}

struct UtilitySpec {
    UtilityKind kind = UtilityKind::sum_throughput_single;
    double energy_weight = 0.0;  ///< E, charged per transmission times the option's energy cost

    /// Reward credited for a successful packet of `option`.
    double reward(const OptionSpec& option) const {
        return kind == UtilityKind::sum_throughput_single ? 1.0 : option.rate;
    }
    double cost(const OptionSpec& option) const {
        return kind == UtilityKind::energy_weighted ? energy_weight * option.energy_cost : 0.0;
    }
};

/// Single-option design: the equilibrium p* = min{p_max, x*/(K+b)} and the
/// theoretical contention measure built around it.
struct SingleOptionDesign {
    double x_star = 1.0;
    double b = 1.0;
    double eps_v = 0.01;
    int j_eps = 0;
    double gamma_eps = 0.0;
    double p_max = 1.0;
    int k_cap = kDefaultKCap;
    UtilitySpec utility;
    ChannelParams params;  ///< tables for the design's fixed direction

    /// p_N = min{p_max, x*/(N+b)}, also used for non-integer N.
    double p_at(double k_hat) const { return std::min(p_max, x_star / (k_hat + b)); }
    /// Smallest probability target, reached at K_hat = k_cap.
    double p_floor() const { return x_star / (k_cap + b); }
    const DirectionVector& direction() const { return params.direction; }

    bool satisfies_monotone_hypothesis() const { return b > std::max(1.0, x_star - gamma_eps); }
};

struct Pinpoint {
    int k_hat = 0;
    TransmitProfile profile;
};

/// Multi-option design: head and tail single-option regimes joined by a
/// tabulated p(K_hat) completed between pinpoints.
struct MultiOptionDesign {
    SingleOptionDesign head;
    SingleOptionDesign tail;
    int k_lower = 0;
    int k_upper = 0;
    std::vector<Pinpoint> pinpoints;
    std::vector<double> pinpoint_qv_star;       ///< q_v* at each pinpoint
    int steps_per_unit = 100;                    ///< 1 / delta_K
    std::vector<std::vector<double>> p_table;    ///< p(K_hat) * d(K_hat) at K_lower + n / steps_per_unit
    std::vector<double> qv_star_table;           ///< q_v* at the same nodes
    int k_cap = kDefaultKCap;
    double eps_v = 0.01;
    double eps_q = 1e-3;
    double p_lower = 0.001;
    double p_upper = 0.999;
    std::shared_ptr<const LinkChannel> channel;

    double delta_k() const { return 1.0 / steps_per_unit; }
    double node_k(std::size_t n) const { return k_lower + static_cast<double>(n) / steps_per_unit; }
    std::size_t option_count() const { return head.direction().size(); }

    /// Target probability vector p(K_hat) * d(K_hat).
    std::vector<double> profile_vector_at(double k_hat) const {
        if (k_hat <= k_lower) return scaled(head.direction(), head.p_at(std::max(k_hat, double(head.j_eps))));
        if (k_hat >= k_upper) return scaled(tail.direction(), tail.p_at(std::min(k_hat, double(k_cap))));
        const double pos = (k_hat - k_lower) * steps_per_unit;
        const auto last = p_table.size() - 1;
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::floor(pos)), last);
        if (n == last) return p_table[last];
        const double frac = pos - static_cast<double>(n);
        std::vector<double> v(p_table[n].size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - frac) * p_table[n][i] + frac * p_table[n + 1][i];
        return v;
    }

    TransmitProfile profile_at(double k_hat) const {
        return TransmitProfile::from_vector(profile_vector_at(k_hat), head.direction());
    }

private:
    static std::vector<double> scaled(const DirectionVector& d, double p) {
        std::vector<double> v(d.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = p * d[i];
        return v;
    }
};

using Design = std::variant<SingleOptionDesign, MultiOptionDesign>;

}  // namespace vpmac
