#pragma once

// Link-layer multiple access channels described by success predicates, and
// the real/virtual channel parameter tables derived from them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vpmac/numeric.hpp"
#include "vpmac/profile.hpp"

namespace vpmac {

inline constexpr int kDefaultMaxParallel = 64;
inline constexpr double kMonotoneTolerance = 1e-12;

struct OptionSpec {
    double rate = 1.0;              ///< bits per slot when the packet gets through
    double slot_equivalents = 1.0;  ///< capacity units one packet of this option consumes
    double energy_cost = 1.0;       ///< energy per transmission

    void validate() const {
        if (!(rate > 0.0)) throw std::invalid_argument("option rate must be positive");
        if (!(slot_equivalents > 0.0)) throw std::invalid_argument("option slot_equivalents must be positive");
        if (!(energy_cost >= 0.0)) throw std::invalid_argument("option energy_cost must be nonnegative");
    }
};

struct ChannelState {
    std::string id;
    double probability = 1.0;
};

/// Success probability of a real packet of option `tagged` sent alongside
/// `others[m]` parallel packets of each option m, in channel state `state`.
using RealPredicate = std::function<double(std::size_t tagged, std::span<const int> others, std::size_t state)>;
/// Success probability of the virtual packet given `counts[m]` real packets
/// of each option m, in channel state `state`.
using VirtualPredicate = std::function<double(std::span<const int> counts, std::size_t state)>;

class LinkChannel {
public:
    LinkChannel(std::vector<OptionSpec> options, std::vector<ChannelState> states, RealPredicate real,
                VirtualPredicate virt, int max_parallel = kDefaultMaxParallel)
        : options_(std::move(options)),
          states_(std::move(states)),
          real_(std::move(real)),
          virtual_(std::move(virt)),
          max_parallel_(max_parallel) {
        if (options_.empty()) throw std::invalid_argument("channel needs at least one option");
        for (const auto& o : options_) o.validate();
        if (states_.empty()) throw std::invalid_argument("channel needs at least one state");
        double total = 0.0;
        for (const auto& s : states_) {
            if (!(s.probability >= 0.0 && s.probability <= 1.0))
                throw std::invalid_argument("state probability outside [0,1]");
            total += s.probability;
        }
        if (std::abs(total - 1.0) > kSimplexTolerance)
            throw std::invalid_argument("channel state probabilities must sum to 1");
        if (max_parallel_ < 1) throw std::invalid_argument("max_parallel must be at least 1");
        if (!real_ || !virtual_) throw std::invalid_argument("channel predicates must be set");
    }

    std::size_t option_count() const { return options_.size(); }
    const std::vector<OptionSpec>& options() const { return options_; }
    const std::vector<ChannelState>& states() const { return states_; }
    int max_parallel() const { return max_parallel_; }

    double real_success(std::size_t tagged, std::span<const int> others, std::size_t state) const {
        return clamp_unit(real_(tagged, others, state));
    }
    double virtual_success(std::span<const int> counts, std::size_t state) const {
        return clamp_unit(virtual_(counts, state));
    }

    /// Virtual success probability averaged over channel states.
    double mean_virtual_success(std::span<const int> counts) const {
        double s = 0.0;
        for (std::size_t st = 0; st < states_.size(); ++st)
            if (states_[st].probability > 0.0) s += states_[st].probability * virtual_success(counts, st);
        return s;
    }
    double mean_real_success(std::size_t tagged, std::span<const int> others) const {
        double s = 0.0;
        for (std::size_t st = 0; st < states_.size(); ++st)
            if (states_[st].probability > 0.0) s += states_[st].probability * real_success(tagged, others, st);
        return s;
    }

private:
    static double clamp_unit(double v) {
        if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) throw std::domain_error("channel predicate returned a non-probability");
        return std::clamp(v, 0.0, 1.0);
    }

    std::vector<OptionSpec> options_;
    std::vector<ChannelState> states_;
    RealPredicate real_;
    VirtualPredicate virtual_;
    int max_parallel_;
};

inline bool is_nonincreasing(std::span<const double> values, double tol = kMonotoneTolerance) {
    for (std::size_t j = 0; j + 1 < values.size(); ++j)
        if (values[j + 1] > values[j] + tol) return false;
    return true;
}

/// Real/virtual channel parameter tables C_rij(d), C_vj(d) for j = 0..N_max,
/// valid when every user transmits with direction `direction`.
struct ChannelParams {
    std::vector<std::vector<double>> c_r;  ///< c_r[i][j]
    std::vector<double> c_v;               ///< c_v[j]
    DirectionVector direction;
    std::vector<OptionSpec> options;

    int n_max() const { return static_cast<int>(c_v.size()) - 1; }

    /// C_vj, held constant past the end of the table.
    double cv(int j) const { return c_v[static_cast<std::size_t>(std::min(j, n_max()))]; }
    double cr(std::size_t option, int j) const {
        const auto& row = c_r[option];
        return row[static_cast<std::size_t>(std::min<int>(j, static_cast<int>(row.size()) - 1))];
    }

    /// Single-option tables entered directly. The virtual table must be
    /// nonincreasing.
    static ChannelParams from_tables(std::vector<double> c_r, std::vector<double> c_v, OptionSpec option = {}) {
        if (c_r.empty() || c_v.empty()) throw std::invalid_argument("channel tables must not be empty");
        for (double v : c_r)
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("C_r entry outside [0,1]");
        for (double v : c_v)
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("C_v entry outside [0,1]");
        if (!is_nonincreasing(c_v)) throw std::invalid_argument("C_v table must be nonincreasing in j");
        ChannelParams p;
        p.c_r = {std::move(c_r)};
        p.c_v = std::move(c_v);
        p.direction = DirectionVector{1.0};
        p.options = {option};
        return p;
    }
};

namespace detail {

/// Calls `visit(counts, weight)` for every split of `total` packets over the
/// options, weighted by its multinomial probability under `d`.
template <class Visit>
void for_each_split(int total, const DirectionVector& d, Visit&& visit) {
    const std::size_t m = d.size();
    std::vector<int> counts(m, 0);
    std::vector<double> logd(m);
    for (std::size_t i = 0; i < m; ++i) logd[i] = d[i] > 0.0 ? std::log(d[i]) : -INFINITY;
    const double lg_total = std::lgamma(total + 1.0);
    auto rec = [&](auto&& self, std::size_t idx, int remaining, double logw) -> void {
        if (idx + 1 == m) {
            counts[idx] = remaining;
            if (remaining > 0 && d[idx] <= 0.0) return;
            const double lw = logw + remaining * (remaining > 0 ? logd[idx] : 0.0) - std::lgamma(remaining + 1.0);
            visit(std::span<const int>(counts), std::exp(lg_total + lw));
            return;
        }
        for (int n = 0; n <= remaining; ++n) {
            if (n > 0 && d[idx] <= 0.0) break;
            counts[idx] = n;
            self(self, idx + 1, remaining - n, logw + (n > 0 ? n * logd[idx] : 0.0) - std::lgamma(n + 1.0));
        }
        counts[idx] = 0;
    };
    rec(rec, 0, total, 0.0);
}

}  // namespace detail

/// Exact parameter tables for common direction `d` by full enumeration of
/// the multinomial option splits of j parallel packets, averaged over states.
inline ChannelParams derive_params(const LinkChannel& channel, const DirectionVector& d, int n_max = -1) {
    if (d.size() != channel.option_count())
        throw std::invalid_argument("direction vector length does not match the channel option count");
    if (n_max < 0) n_max = channel.max_parallel();
    const std::size_t m = channel.option_count();
    ChannelParams out;
    out.direction = d;
    out.options = channel.options();
    out.c_v.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    out.c_r.assign(m, std::vector<double>(static_cast<std::size_t>(n_max) + 1, 0.0));
    for (int j = 0; j <= n_max; ++j) {
        double cv = 0.0;
        std::vector<double> cr(m, 0.0);
        detail::for_each_split(j, d, [&](std::span<const int> counts, double w) {
            cv += w * channel.mean_virtual_success(counts);
            for (std::size_t i = 0; i < m; ++i) cr[i] += w * channel.mean_real_success(i, counts);
        });
        out.c_v[static_cast<std::size_t>(j)] = std::clamp(cv, 0.0, 1.0);
        for (std::size_t i = 0; i < m; ++i) out.c_r[i][static_cast<std::size_t>(j)] = std::clamp(cr[i], 0.0, 1.0);
    }
    return out;
}

/// Smallest j with C_vj > C_v(j+1) + eps_v, or nullopt when the virtual
/// packet never registers a drop of that size (a degenerate design).
inline std::optional<int> j_epsilon(const ChannelParams& params, double eps_v) {
    if (!(eps_v > 0.0)) throw std::invalid_argument("eps_v must be positive");
    for (int j = 0; j < params.n_max(); ++j)
        if (params.cv(j) > params.cv(j + 1) + eps_v) return j;
    return std::nullopt;
}

/// Weighted-average drop index gamma_eps: the minimum over admissible N of
///   sum_j j C(N,j) r^j (C_vj - C_v(j+1)) / sum_j C(N,j) r^j (C_vj - C_v(j+1)),
/// r = p_{N+1} / (1 - p_{N+1}), p_{N+1} = min{p_max, x*/(N+1+b)}, with N
/// ranging over N >= J_eps, N >= x* - b, N < N_max.
inline double gamma_epsilon(const ChannelParams& params, double eps_v, double x_star, double b, double p_max) {
    if (!(x_star > 0.0)) throw std::invalid_argument("gamma_epsilon: x* must be positive");
    if (!(b >= 1.0)) throw std::invalid_argument("gamma_epsilon: b must be at least 1");
    const auto j_eps = j_epsilon(params, eps_v);
    if (!j_eps) throw std::invalid_argument("gamma_epsilon: J_eps does not exist for this virtual packet");
    const int n_lo = std::max(*j_eps, static_cast<int>(std::ceil(x_star - b)));
    if (params.n_max() - 1 < n_lo) throw std::invalid_argument("gamma_epsilon: N_max too small for the admissible range");
    double best = INFINITY;
    for (int n = std::max(n_lo, 0); n < params.n_max(); ++n) {
        const double p_next = std::min(p_max, x_star / (n + 1 + b));
        double num = 0.0;
        double den = 0.0;
        if (p_next >= 1.0) {
            // r -> infinity: the ratio collapses onto the largest index with a drop.
            for (int j = n; j >= 0; --j)
                if (params.cv(j) - params.cv(j + 1) > 0.0) {
                    num = j;
                    den = 1.0;
                    break;
                }
        } else {
            // Scale by (1-p)^N so the weights are binomial probabilities.
            const auto pmf = numeric::binomial_pmf(n, p_next);
            for (int j = 0; j <= n; ++j) {
                const double w = pmf[static_cast<std::size_t>(j)] * (params.cv(j) - params.cv(j + 1));
                num += j * w;
                den += w;
            }
        }
        if (den > 0.0) best = std::min(best, num / den);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Built-in channel families.

enum class ChannelKind { collision, threshold, fading, multi_rate, table };

inline std::string to_string(ChannelKind k) {
    switch (k) {
        case ChannelKind::collision: return "collision";
        case ChannelKind::threshold: return "threshold";
        case ChannelKind::fading: return "fading";
        case ChannelKind::multi_rate: return "multi_rate";
        case ChannelKind::table: return "table";
    }
    return "?";
}

inline ChannelKind channel_kind_from_string(const std::string& s) {
    for (auto k : {ChannelKind::collision, ChannelKind::threshold, ChannelKind::fading, ChannelKind::multi_rate,
                   ChannelKind::table})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown channel kind '" + s + "'");
}

/// Declarative channel description. Every family except `table` is a
/// capacity channel: in state s a set of packets goes through iff their
/// summed slot equivalents fit within `state_capacities[s]`.
struct ChannelSpec {
    ChannelKind kind = ChannelKind::collision;
    std::vector<double> state_capacities{1.0};
    std::vector<double> state_probabilities{1.0};
    std::vector<OptionSpec> options{OptionSpec{}};
    double virtual_slot_equivalents = 1.0;
    std::vector<double> table_c_r;
    std::vector<double> table_c_v;
    int max_parallel = kDefaultMaxParallel;
};

inline LinkChannel build_channel(const ChannelSpec& spec) {
    if (spec.kind == ChannelKind::table) {
        if (spec.table_c_r.empty() || spec.table_c_v.empty())
            throw std::invalid_argument("table channel needs c_r and c_v");
        if (!is_nonincreasing(spec.table_c_v)) throw std::invalid_argument("C_v table must be nonincreasing in j");
        for (double v : spec.table_c_r)
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("C_r entry outside [0,1]");
        for (double v : spec.table_c_v)
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("C_v entry outside [0,1]");
        auto cr = spec.table_c_r;
        auto cv = spec.table_c_v;
        auto at = [](const std::vector<double>& t, int j) { return t[static_cast<std::size_t>(std::min<int>(j, static_cast<int>(t.size()) - 1))]; };
        return LinkChannel(
            {spec.options.empty() ? OptionSpec{} : spec.options.front()}, {{"s0", 1.0}},
            [cr, at](std::size_t, std::span<const int> others, std::size_t) { return at(cr, others[0]); },
            [cv, at](std::span<const int> counts, std::size_t) { return at(cv, counts[0]); }, spec.max_parallel);
    }
    if (spec.state_capacities.size() != spec.state_probabilities.size() || spec.state_capacities.empty())
        throw std::invalid_argument("state capacities and probabilities must be nonempty and of equal length");
    if (!(spec.virtual_slot_equivalents > 0.0)) throw std::invalid_argument("virtual slot equivalents must be positive");
    for (double c : spec.state_capacities)
        if (!(c > 0.0)) throw std::invalid_argument("state capacity must be positive");
    std::vector<ChannelState> states;
    for (std::size_t s = 0; s < spec.state_capacities.size(); ++s)
        states.push_back({"cap" + std::to_string(s), spec.state_probabilities[s]});
    std::vector<double> weights;
    for (const auto& o : spec.options) weights.push_back(o.slot_equivalents);
    const auto caps = spec.state_capacities;
    auto load = [weights](std::span<const int> counts) {
        double s = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) s += counts[i] * weights[i];
        return s;
    };
    const double wv = spec.virtual_slot_equivalents;
    return LinkChannel(
        spec.options, std::move(states),
        [caps, weights, load](std::size_t tagged, std::span<const int> others, std::size_t state) {
            return weights[tagged] + load(others) <= caps[state] + 1e-9 ? 1.0 : 0.0;
        },
        [caps, wv, load](std::span<const int> counts, std::size_t state) {
            return wv + load(counts) <= caps[state] + 1e-9 ? 1.0 : 0.0;
        },
        spec.max_parallel);
}

namespace builtin {

/// Classic collision channel: a packet gets through only when alone. The
/// virtual packet is coded like a real one, so it succeeds iff the slot is idle.
inline ChannelSpec collision() {
    ChannelSpec s;
    s.kind = ChannelKind::collision;
    return s;
}

/// Multi-packet reception with a fixed capacity of `capacity` parallel packets.
inline ChannelSpec threshold(int capacity) {
    ChannelSpec s;
    s.kind = ChannelKind::threshold;
    s.state_capacities = {static_cast<double>(capacity)};
    return s;
}

/// Capacity mixture: with probability probs[s] the channel supports caps[s]
/// parallel packets.
inline ChannelSpec fading(std::vector<double> caps, std::vector<double> probs) {
    ChannelSpec s;
    s.kind = ChannelKind::fading;
    s.state_capacities = std::move(caps);
    s.state_probabilities = std::move(probs);
    return s;
}

/// Two-state fading channel supporting 4 packets w.p. 0.3 and 6 w.p. 0.7.
inline ChannelSpec fading_example() { return fading({4.0, 6.0}, {0.3, 0.7}); }

/// High/low-rate channel: 12 low-rate packets fill a slot and one high-rate
/// packet counts as four low-rate ones. The virtual packet is a high-rate packet.
inline ChannelSpec two_rate_example() {
    ChannelSpec s;
    s.kind = ChannelKind::multi_rate;
    s.state_capacities = {12.0};
    s.state_probabilities = {1.0};
    s.options = {OptionSpec{4.0, 4.0, 1.0}, OptionSpec{1.0, 1.0, 1.0}};
    s.virtual_slot_equivalents = 4.0;
    return s;
}

/// Named catalog of the built-in channels.
inline std::map<std::string, ChannelSpec> catalog() {
    return {{"collision", collision()},
            {"threshold4", threshold(4)},
            {"fading_example", fading_example()},
            {"two_rate_example", two_rate_example()}};
}

}  // namespace builtin

}  // namespace vpmac
