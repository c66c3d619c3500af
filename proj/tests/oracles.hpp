#pragma once

// Independent reference computations for the unit tests. Everything here
// works straight from the channel predicates by enumerating every user's
// choice, without the parameter tables or binomial sums of the library.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "vpmac/vpmac.hpp"

namespace oracle {

/// Visits every joint choice of `k` users (-1 idle, else option index)
/// with its probability when user u transmits w.p. probs[u] on direction d.
inline void for_each_pattern(const std::vector<double>& probs, const vpmac::DirectionVector& d,
                             const std::function<void(const std::vector<int>&, double)>& visit) {
    const std::size_t k = probs.size();
    const std::size_t m = d.size();
    std::vector<int> choice(k, -1);
    std::function<void(std::size_t, double)> rec = [&](std::size_t u, double w) {
        if (w == 0.0) return;
        if (u == k) {
            visit(choice, w);
            return;
        }
        choice[u] = -1;
        rec(u + 1, w * (1.0 - probs[u]));
        for (std::size_t o = 0; o < m; ++o) {
            choice[u] = static_cast<int>(o);
            rec(u + 1, w * probs[u] * d[o]);
        }
        choice[u] = -1;
    };
    rec(0, 1.0);
}

inline std::vector<int> counts_of(const std::vector<int>& choice, std::size_t m) {
    std::vector<int> c(m, 0);
    for (int x : choice)
        if (x >= 0) ++c[static_cast<std::size_t>(x)];
    return c;
}

/// Virtual success probability by full enumeration.
inline double qv(const vpmac::LinkChannel& ch, const std::vector<double>& probs, const vpmac::DirectionVector& d) {
    double s = 0.0;
    for_each_pattern(probs, d, [&](const std::vector<int>& choice, double w) {
        s += w * ch.mean_virtual_success(counts_of(choice, ch.option_count()));
    });
    return s;
}

/// Expected utility by full enumeration: rewards of successful packets
/// minus energy of every transmission.
inline double utility(const vpmac::UtilitySpec& u, const vpmac::LinkChannel& ch, int k, const vpmac::TransmitProfile& prof) {
    const std::size_t m = ch.option_count();
    double s = 0.0;
    for_each_pattern(std::vector<double>(static_cast<std::size_t>(k), prof.p), prof.d, [&](const std::vector<int>& choice, double w) {
        const auto counts = counts_of(choice, m);
        double v = 0.0;
        for (int x : choice) {
            if (x < 0) continue;
            const auto o = static_cast<std::size_t>(x);
            auto others = counts;
            --others[o];
            v += u.reward(ch.options()[o]) * ch.mean_real_success(o, others) - u.cost(ch.options()[o]);
        }
        s += w * v;
    });
    return s;
}

/// Golden-section maximiser on [lo, hi] after a coarse scan.
inline double argmax(const std::function<double(double)>& f, double lo, double hi) {
    const int n = 20000;
    double best = lo;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + (hi - lo) * i / n;
        if (f(x) > f(best)) best = x;
    }
    double a = std::max(lo, best - (hi - lo) / n), b = std::min(hi, best + (hi - lo) / n);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        (f(c) > f(d) ? b : a) = (f(c) > f(d) ? d : c);
    }
    return 0.5 * (a + b);
}

/// Random table channel with a nonincreasing C_v: n steps that each keep
/// the value (w.p. 0.3) or shrink it by up to 2/n relative, then 0.
/// C_r is set equal to C_v.
inline vpmac::ChannelSpec random_table_channel(std::mt19937_64& gen, int n = 40) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> cv{1.0};
    for (int j = 1; j <= n; ++j) cv.push_back(cv.back() * (u(gen) < 0.3 ? 1.0 : 1.0 - u(gen) * 2.0 / n));
    cv.push_back(0.0);
    vpmac::ChannelSpec s;
    s.kind = vpmac::ChannelKind::table;
    s.table_c_v = cv;
    s.table_c_r = cv;
    return s;
}

}  // namespace oracle
