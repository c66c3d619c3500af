#pragma once

// Design-time computations: utilities and their optima, single-option
// designs, pinpoint verification and interpolation for multi-option designs,
// and the equilibria the MAC algorithms are built to reach.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpmac/channel.hpp"
#include "vpmac/contention.hpp"
#include "vpmac/design_types.hpp"
#include "vpmac/numeric.hpp"
#include "vpmac/profile.hpp"

namespace vpmac {

struct DesignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Utilities.

/// Symmetric utility with all K users on profile p * params.direction:
///   K sum_i d_i r_i sum_j C(K-1,j) p^(j+1) (1-p)^(K-1-j) C_rij - K p sum_i d_i E e_i.
inline double utility_eval(const UtilitySpec& utility, const ChannelParams& params, int k, double p) {
    if (k < 1) throw std::invalid_argument("utility_eval: need at least one user");
    if (utility.kind == UtilityKind::sum_throughput_single && params.direction.size() != 1)
        throw std::invalid_argument("sum_throughput_single requires a single-option channel");
    const auto pmf = numeric::binomial_pmf(k - 1, std::clamp(p, 0.0, 1.0));
    double reward = 0.0;
    double cost = 0.0;
    for (std::size_t i = 0; i < params.direction.size(); ++i) {
        const double di = params.direction[i];
        if (di == 0.0) continue;
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += pmf[static_cast<std::size_t>(j)] * params.cr(i, j);
        reward += di * utility.reward(params.options[i]) * s;
        cost += di * utility.cost(params.options[i]);
    }
    return k * p * (reward - cost);
}

inline double utility_eval(const UtilitySpec& utility, const LinkChannel& channel, int k, const TransmitProfile& profile) {
    return utility_eval(utility, derive_params(channel, profile.d, std::max(k, 1)), k, profile.p);
}

/// Per-packet reward table sum_i d_i r_i C_rij, i.e. the real channel
/// parameter set of the equivalent single-option system.
inline std::vector<double> equivalent_real_table(const UtilitySpec& utility, const ChannelParams& params) {
    std::vector<double> eq(params.c_v.size(), 0.0);
    for (std::size_t i = 0; i < params.direction.size(); ++i)
        for (std::size_t j = 0; j < eq.size(); ++j)
            eq[j] += params.direction[i] * utility.reward(params.options[i]) * params.cr(i, static_cast<int>(j));
    return eq;
}

/// Load-normalised limit of the utility as K grows with K p = x held fixed:
///   g(x) = sum_j e^-x x^(j+1)/j! Cbar_j - x Ebar.
inline double asymptotic_utility(const UtilitySpec& utility, const ChannelParams& params, double x) {
    const auto eq = equivalent_real_table(utility, params);
    double cost = 0.0;
    for (std::size_t i = 0; i < params.direction.size(); ++i) cost += params.direction[i] * utility.cost(params.options[i]);
    double s = 0.0;
    double mass = 0.0;
    double logterm = -x;  // log(e^-x x^j / j!)
    for (std::size_t j = 0; j < eq.size(); ++j) {
        if (j > 0) logterm += std::log(x) - std::log(static_cast<double>(j));
        const double w = std::exp(logterm);
        s += w * eq[j];
        mass += w;
    }
    s += std::max(0.0, 1.0 - mass) * eq.back();
    return x * s - x * cost;
}

/// Asymptotically optimal channel load x*. The search range is
/// (0, 2 (J_r + 1)] where J_r is the last index with a positive reward.
inline double asymptotic_xstar(const UtilitySpec& utility, const ChannelParams& params) {
    const auto eq = equivalent_real_table(utility, params);
    int last = -1;
    for (std::size_t j = 0; j < eq.size(); ++j)
        if (eq[j] > 0.0) last = static_cast<int>(j);
    if (last < 0) throw DesignError("asymptotic_xstar: utility is never positive");
    const double x_hi = 2.0 * (last + 1);
    const auto best = numeric::maximize_scalar([&](double x) { return asymptotic_utility(utility, params, x); },
                                               1e-6, x_hi, 4000, 1e-8);
    if (best.arg > x_hi - 1e-3)
        throw DesignError("asymptotic_xstar: limit utility increases up to the end of the search range");
    return best.arg;
}

/// Optimal common profile for a known K by grid search over p (and over d
/// for two options). Ties go to the smaller p, then the lexicographically
/// smaller d.
inline TransmitProfile optimal_profile(const UtilitySpec& utility, const LinkChannel& channel, int k,
                                       double grid_step = 0.005) {
    if (k < 1) throw std::invalid_argument("optimal_profile: need at least one user");
    if (!(grid_step > 0.0 && grid_step <= 0.005)) throw std::invalid_argument("optimal_profile: grid step must be in (0, 0.005]");
    const std::size_t m = channel.option_count();
    if (m > 2) throw std::invalid_argument("optimal_profile: direction search supports at most two options");
    const int steps = static_cast<int>(std::lround(1.0 / grid_step));
    const double tie = 1e-12;
    double best = -INFINITY;
    TransmitProfile best_profile{0.0, DirectionVector::unit(m, 0)};
    const int d_steps = m == 1 ? 0 : steps;
    for (int di = 0; di <= d_steps; ++di) {
        // di ascending walks d = [di/steps, 1 - di/steps] in lexicographic order.
        DirectionVector d = m == 1 ? DirectionVector{1.0}
                                   : DirectionVector{double(di) / steps, 1.0 - double(di) / steps};
        const auto params = derive_params(channel, d, k);
        for (int pi = 0; pi <= steps; ++pi) {
            const double p = double(pi) / steps;
            const double u = utility_eval(utility, params, k, p);
            if (u > best + tie || (u >= best - tie && p < best_profile.p)) {
                best = std::max(best, u);
                best_profile = {p, d};
            }
        }
    }
    return best_profile;
}

// ---------------------------------------------------------------------------
// Single option.

/// Builds the single-option design for the fixed direction of `params`:
/// b = max{1, x* - gamma} + b_margin (iterated, since gamma depends on b
/// through p_max) and p_max = min{1, x*/(J + b)}.
inline SingleOptionDesign build_single_design(const ChannelParams& params, const UtilitySpec& utility, double eps_v,
                                              double b_margin, int k_cap = kDefaultKCap) {
    if (!(b_margin > 0.0)) throw std::invalid_argument("build_single_design: b_margin must be positive");
    const auto j = j_epsilon(params, eps_v);
    if (!j) throw DesignError("virtual packet has no C_v drop larger than eps_v (J_eps does not exist)");
    SingleOptionDesign d;
    d.params = params;
    d.utility = utility;
    d.eps_v = eps_v;
    d.j_eps = *j;
    d.k_cap = k_cap;
    d.x_star = asymptotic_xstar(utility, params);
    double b = std::max(1.0, d.x_star - *j) + b_margin;
    for (int it = 0; it < 100; ++it) {
        const double p_max = std::min(1.0, d.x_star / (*j + b));
        const double gamma = gamma_epsilon(params, eps_v, d.x_star, b, p_max);
        const double next = std::max(1.0, d.x_star - gamma) + b_margin;
        d.gamma_eps = gamma;
        if (std::abs(next - b) < 1e-12) break;
        b = next;
    }
    d.b = b;
    d.p_max = std::min(1.0, d.x_star / (d.j_eps + d.b));
    d.gamma_eps = gamma_epsilon(params, eps_v, d.x_star, d.b, d.p_max);
    if (!d.satisfies_monotone_hypothesis())
        throw DesignError("single-option design: could not satisfy b > max{1, x* - gamma}");
    return d;
}

inline SingleOptionDesign build_single_design(const LinkChannel& channel, const UtilitySpec& utility, double eps_v,
                                              double b_margin, const DirectionVector& direction = DirectionVector{1.0},
                                              int k_cap = kDefaultKCap) {
    return build_single_design(derive_params(channel, direction), utility, eps_v, b_margin, k_cap);
}

// ---------------------------------------------------------------------------
// Collision-channel baseline of the idle-probability controller.

/// Root of e (1-p)^K - 1 - 0.5 sqrt(p) = 0 on (0, 1).
inline double hajek_baseline(int k) {
    if (k < 1) throw std::invalid_argument("hajek_baseline: need at least one user");
    return numeric::bisect(
        [k](double p) { return std::exp(1.0) * std::pow(1.0 - p, k) - 1.0 - 0.5 * std::sqrt(p); }, 0.0, 1.0, 1e-14);
}

// ---------------------------------------------------------------------------
// Pinpoints and the Interpolation Approach.

struct ConditionItem {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct ConditionReport {
    std::vector<ConditionItem> items;

    bool passed() const {
        return std::all_of(items.begin(), items.end(), [](const ConditionItem& i) { return i.passed; });
    }
    const ConditionItem* first_failure() const {
        for (const auto& i : items)
            if (!i.passed) return &i;
        return nullptr;
    }
    std::string to_string() const {
        std::ostringstream os;
        for (const auto& i : items) os << (i.passed ? "PASS " : "FAIL ") << i.name << (i.detail.empty() ? "" : ": ") << i.detail << "\n";
        return os.str();
    }
};

/// Lambda grid shared by the pinpoint checks.
inline constexpr int kLambdaSteps = 100;

inline DirectionVector blend_direction(const DirectionVector& a, const DirectionVector& b, double lambda) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - lambda) * a[i] + lambda * b[i];
    double s = 0.0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
    return DirectionVector(std::move(v));
}

/// q_v* at an integer pinpoint: plain q_v of its profile.
inline double pinpoint_qv_star(const LinkChannel& channel, const Pinpoint& pin) {
    return qv_common(derive_params(channel, pin.profile.d, pin.k_hat + 1), pin.profile.p, pin.k_hat);
}

/// Checks the four pinpoint requirements: q_v* drops by at least eps_q
/// between neighbours, K_hat exceeds J_eps(d) along every blended segment,
/// pinpoint probabilities lie in [p_lower, p_upper], and along every segment
/// the blended target is bracketed by q_v at p_upper and p_lower.
inline ConditionReport verify_pinpoints(const std::vector<Pinpoint>& pins, const LinkChannel& channel, double eps_v,
                                        double eps_q, double p_lower, double p_upper) {
    ConditionReport rep;
    ConditionItem drop{"pinpoints.1 q_v* drop >= eps_q", true, ""};
    ConditionItem jeps{"pinpoints.2 K_hat > J_eps(d)", true, ""};
    ConditionItem bounds{"pinpoints.3 p within bounds", true, ""};
    ConditionItem bracket{"pinpoints.4 bracketing", true, ""};
    auto fail = [](ConditionItem& item, const std::string& why) {
        if (item.passed) item.detail = why;
        item.passed = false;
    };
    if (pins.size() < 2) {
        fail(drop, "need at least two pinpoints");
        rep.items = {drop, jeps, bounds, bracket};
        return rep;
    }
    for (std::size_t i = 1; i < pins.size(); ++i)
        if (pins[i].k_hat <= pins[i - 1].k_hat) throw std::invalid_argument("verify_pinpoints: pinpoints must be strictly increasing");
    if (!(eps_q > 0.0)) fail(drop, "eps_q must be positive");
    if (!(0.0 < p_lower && p_lower < p_upper && p_upper < 1.0)) fail(bounds, "need 0 < p_lower < p_upper < 1");

    std::vector<double> qs;
    for (const auto& pin : pins) qs.push_back(pinpoint_qv_star(channel, pin));
    for (std::size_t i = 1; i < pins.size(); ++i) {
        if (qs[i - 1] - qs[i] < eps_q) {
            std::ostringstream os;
            os << "drop " << qs[i - 1] - qs[i] << " between K_hat=" << pins[i - 1].k_hat << " and " << pins[i].k_hat;
            fail(drop, os.str());
        }
    }
    for (const auto& pin : pins) {
        if (pin.profile.p < p_lower || pin.profile.p > p_upper) {
            std::ostringstream os;
            os << "p=" << pin.profile.p << " at K_hat=" << pin.k_hat;
            fail(bounds, os.str());
        }
    }
    for (std::size_t i = 1; i < pins.size(); ++i) {
        const auto& a = pins[i - 1];
        const auto& b = pins[i];
        for (int l = 0; l < kLambdaSteps; ++l) {
            const double lambda = double(l) / kLambdaSteps;
            const double k_hat = (1.0 - lambda) * a.k_hat + lambda * b.k_hat;
            const auto d = blend_direction(a.profile.d, b.profile.d, lambda);
            const auto params = derive_params(channel, d, static_cast<int>(std::ceil(k_hat)) + 2);
            const auto j = j_epsilon(params, eps_v);
            if (jeps.passed && (!j || !(k_hat > *j))) {
                std::ostringstream os;
                os << "segment " << i << " lambda=" << lambda << " K_hat=" << k_hat << " J_eps=" << (j ? std::to_string(*j) : "none");
                fail(jeps, os.str());
            }
            const double target = (1.0 - lambda) * qs[i - 1] + lambda * qs[i];
            const double q_hi_p = qv_noninteger(params, p_upper, k_hat);
            const double q_lo_p = qv_noninteger(params, p_lower, k_hat);
            if (bracket.passed && !(q_hi_p <= target && target <= q_lo_p)) {
                std::ostringstream os;
                os << "segment " << i << " lambda=" << lambda << " target " << target << " outside [" << q_hi_p << ", " << q_lo_p << "]";
                fail(bracket, os.str());
            }
        }
    }
    rep.items = {drop, jeps, bounds, bracket};
    return rep;
}

/// Fills the p(K_hat) and q_v*(K_hat) tables of `design` between its
/// pinpoints: at each grid node the direction and target q_v* are blended
/// linearly from the neighbouring pinpoints and p solves
/// q_v(p d, K_hat) = q_v* (non-integer blend in K_hat).
inline void interpolate_pinpoints(MultiOptionDesign& design) {
    const auto& channel = *design.channel;
    const auto rep = verify_pinpoints(design.pinpoints, channel, design.eps_v, design.eps_q, design.p_lower, design.p_upper);
    if (!rep.passed()) {
        const auto* f = rep.first_failure();
        throw DesignError("pinpoints rejected: " + f->name + " (" + f->detail + ")");
    }
    design.pinpoint_qv_star.clear();
    for (const auto& pin : design.pinpoints) design.pinpoint_qv_star.push_back(pinpoint_qv_star(channel, pin));
    const auto& pins = design.pinpoints;
    const int spu = design.steps_per_unit;
    const std::size_t nodes = static_cast<std::size_t>((design.k_upper - design.k_lower) * spu) + 1;
    design.p_table.assign(nodes, {});
    design.qv_star_table.assign(nodes, 0.0);
    std::size_t seg = 1;
    for (std::size_t n = 0; n < nodes; ++n) {
        const double k_hat = design.node_k(n);
        while (seg + 1 < pins.size() && k_hat >= pins[seg].k_hat) ++seg;
        const auto& a = pins[seg - 1];
        const auto& b = pins[seg];
        // Pinpoint nodes keep their designed profile exactly.
        const Pinpoint* exact = nullptr;
        if (static_cast<long>(n) == static_cast<long>(a.k_hat - design.k_lower) * spu) exact = &a;
        if (static_cast<long>(n) == static_cast<long>(b.k_hat - design.k_lower) * spu) exact = &b;
        if (exact) {
            design.p_table[n] = exact->profile.as_vector();
            design.qv_star_table[n] = pinpoint_qv_star(channel, *exact);
            continue;
        }
        const double lambda = (k_hat - a.k_hat) / double(b.k_hat - a.k_hat);
        const auto d = blend_direction(a.profile.d, b.profile.d, lambda);
        const double target = (1.0 - lambda) * design.pinpoint_qv_star[seg - 1] + lambda * design.pinpoint_qv_star[seg];
        const auto params = derive_params(channel, d, static_cast<int>(std::ceil(k_hat)) + 2);
        const double p = numeric::bisect([&](double x) { return qv_noninteger(params, x, k_hat) - target; },
                                         design.p_lower, design.p_upper, kInversionTolerance);
        design.p_table[n] = TransmitProfile(p, d).as_vector();
        design.qv_star_table[n] = qv_noninteger(params, p, k_hat);
    }
}

struct MonotonicityReport {
    ConditionReport report;
    double lipschitz_estimate = 0.0;  ///< K_g, max difference quotient of p(K_hat)
    double eps_q_estimate = 0.0;      ///< min slope of -q_v*(K_hat)
};

/// Grid checks on a built design over [K_lower, K_upper]: p(K_hat) Lipschitz
/// with K_g at most `lipschitz_limit`, q_v* strictly decreasing, K_hat >
/// J_eps(d(K_hat)) and p(K_hat) within [p_lower, p_upper].
inline MonotonicityReport verify_monotonicity_gradient(const MultiOptionDesign& design, double lipschitz_limit = 10.0) {
    MonotonicityReport out;
    ConditionItem lip{"monotonicity.1 p(K_hat) Lipschitz", true, ""};
    ConditionItem dec{"monotonicity.2 q_v* strictly decreasing", true, ""};
    ConditionItem jeps{"monotonicity.3 K_hat > J_eps(d(K_hat))", true, ""};
    ConditionItem bounds{"monotonicity.4 p within bounds", true, ""};
    const auto& p = design.p_table;
    const auto& q = design.qv_star_table;
    const double h = design.delta_k();
    if (p.size() <= 1) {
        out.report.items = {lip, dec, jeps, bounds};
        return out;
    }
    out.eps_q_estimate = INFINITY;
    for (std::size_t n = 0; n + 1 < p.size(); ++n) {
        const double quot = euclidean_distance(p[n], p[n + 1]) / h;
        out.lipschitz_estimate = std::max(out.lipschitz_estimate, quot);
        if (lip.passed && !(quot <= lipschitz_limit)) {
            lip.passed = false;
            lip.detail = "difference quotient " + std::to_string(quot) + " at K_hat=" + std::to_string(design.node_k(n));
        }
        const double slope = (q[n] - q[n + 1]) / h;
        out.eps_q_estimate = std::min(out.eps_q_estimate, slope);
        if (dec.passed && !(slope > 0.0)) {
            dec.passed = false;
            dec.detail = "q_v* not decreasing at K_hat=" + std::to_string(design.node_k(n));
        }
    }
    for (std::size_t n = 0; n < p.size(); ++n) {
        const double k_hat = design.node_k(n);
        const auto prof = TransmitProfile::from_vector(p[n], design.head.direction());
        if (bounds.passed && (prof.p < design.p_lower || prof.p > design.p_upper)) {
            bounds.passed = false;
            bounds.detail = "p=" + std::to_string(prof.p) + " at K_hat=" + std::to_string(k_hat);
        }
        const auto params = derive_params(*design.channel, prof.d, static_cast<int>(std::ceil(k_hat)) + 2);
        const auto j = j_epsilon(params, design.eps_v);
        if (jeps.passed && (!j || !(k_hat > *j))) {
            jeps.passed = false;
            jeps.detail = "K_hat=" + std::to_string(k_hat) + " J_eps=" + (j ? std::to_string(*j) : "none");
        }
    }
    lip.detail = lip.passed ? "K_g=" + std::to_string(out.lipschitz_estimate) : lip.detail;
    dec.detail = dec.passed ? "eps_q=" + std::to_string(out.eps_q_estimate) : dec.detail;
    out.report.items = {lip, dec, jeps, bounds};
    return out;
}

/// Inputs for a multi-option design.
struct MultiDesignSpec {
    UtilitySpec utility{UtilityKind::sum_throughput_multi, 0.0};
    double eps_v = 0.01;
    double b_margin = 0.01;
    DirectionVector head_direction;
    DirectionVector tail_direction;
    int k_lower = 0;
    int k_upper = 0;
    std::vector<int> inner_pinpoints;                     ///< integers strictly inside (K_lower, K_upper)
    std::vector<DirectionVector> inner_directions;        ///< empty: take the optimal direction at that K
    double direction_grid = 0.005;
    double eps_q = 1e-3;
    double p_lower = 0.001;
    double p_upper = 0.999;
    int steps_per_unit = 100;
    int k_cap = kDefaultKCap;
};

/// Head/tail requirements: K_lower >= J_eps(d_head), K_upper > J_eps(d_tail).
inline ConditionReport verify_head_tail(const MultiOptionDesign& design) {
    ConditionReport rep;
    ConditionItem head{"head_tail.1 K_lower >= J_eps(d(K_lower))", design.k_lower >= design.head.j_eps,
                       "K_lower=" + std::to_string(design.k_lower) + " J_eps=" + std::to_string(design.head.j_eps)};
    ConditionItem tail{"head_tail.2 K_upper > J_eps(d(K_upper))", design.k_upper > design.tail.j_eps,
                       "K_upper=" + std::to_string(design.k_upper) + " J_eps=" + std::to_string(design.tail.j_eps)};
    ConditionItem order{"head_tail.0 0 < K_lower <= K_upper", 0 < design.k_lower && design.k_lower <= design.k_upper, ""};
    if (design.k_lower == design.k_upper && !(design.head.direction() == design.tail.direction())) {
        order.passed = false;
        order.detail = "K_lower = K_upper requires a shared head/tail direction";
    }
    rep.items = {order, head, tail};
    return rep;
}

/// Builds head and tail designs, the pinpoints (end pinpoints from the
/// head/tail closed forms, inner ones with q_v* on the straight line between
/// the end values), and completes the tables.
inline MultiOptionDesign build_multi_design(std::shared_ptr<const LinkChannel> channel, const MultiDesignSpec& spec) {
    if (!channel) throw std::invalid_argument("build_multi_design: no channel");
    if (!(spec.eps_q > 0.0)) throw DesignError("eps_q must be positive");
    if (spec.steps_per_unit < 1) throw std::invalid_argument("steps_per_unit must be positive");
    MultiOptionDesign d;
    d.channel = channel;
    d.eps_v = spec.eps_v;
    d.eps_q = spec.eps_q;
    d.p_lower = spec.p_lower;
    d.p_upper = spec.p_upper;
    d.k_lower = spec.k_lower;
    d.k_upper = spec.k_upper;
    d.k_cap = spec.k_cap;
    d.steps_per_unit = spec.steps_per_unit;
    d.head = build_single_design(*channel, spec.utility, spec.eps_v, spec.b_margin, spec.head_direction, spec.k_cap);
    d.tail = build_single_design(*channel, spec.utility, spec.eps_v, spec.b_margin, spec.tail_direction, spec.k_cap);
    const auto ht = verify_head_tail(d);
    if (!ht.passed()) throw DesignError("head/tail condition failed: " + ht.first_failure()->name + " " + ht.first_failure()->detail);

    if (d.k_lower == d.k_upper) {
        d.pinpoints = {{d.k_lower, TransmitProfile(d.head.p_at(d.k_lower), d.head.direction())}};
        d.pinpoint_qv_star = {pinpoint_qv_star(*channel, d.pinpoints.front())};
        d.p_table = {d.pinpoints.front().profile.as_vector()};
        d.qv_star_table = d.pinpoint_qv_star;
        return d;
    }
    Pinpoint first{d.k_lower, TransmitProfile(d.head.p_at(d.k_lower), d.head.direction())};
    Pinpoint last{d.k_upper, TransmitProfile(d.tail.p_at(d.k_upper), d.tail.direction())};
    const double q_first = pinpoint_qv_star(*channel, first);
    const double q_last = pinpoint_qv_star(*channel, last);
    d.pinpoints.push_back(first);
    for (std::size_t i = 0; i < spec.inner_pinpoints.size(); ++i) {
        const int k = spec.inner_pinpoints[i];
        if (!(k > d.pinpoints.back().k_hat && k < d.k_upper))
            throw DesignError("inner pinpoints must be increasing integers inside (K_lower, K_upper)");
        const DirectionVector dir = i < spec.inner_directions.size()
                                        ? spec.inner_directions[i]
                                        : optimal_profile(spec.utility, *channel, k, spec.direction_grid).d;
        const double target = double(d.k_upper - k) / (d.k_upper - d.k_lower) * q_first +
                              double(k - d.k_lower) / (d.k_upper - d.k_lower) * q_last;
        const auto params = derive_params(*channel, dir, k + 1);
        const double q_at_lo = qv_common(params, spec.p_lower, k);
        const double q_at_hi = qv_common(params, spec.p_upper, k);
        if (!(q_at_hi <= target && target <= q_at_lo)) {
            std::ostringstream os;
            os << "pinpoint K_hat=" << k << ": no p in [p_lower, p_upper] reaches q_v*=" << target;
            throw DesignError(os.str());
        }
        const double p = numeric::bisect([&](double x) { return qv_common(params, x, k) - target; }, spec.p_lower,
                                         spec.p_upper, kInversionTolerance);
        d.pinpoints.push_back({k, TransmitProfile(p, dir)});
    }
    d.pinpoints.push_back(last);
    interpolate_pinpoints(d);
    return d;
}

// ---------------------------------------------------------------------------
// Equilibria.

inline TransmitProfile equilibrium_profile(const SingleOptionDesign& design, int k) {
    return {design.p_at(k), design.direction()};
}

inline TransmitProfile equilibrium_profile(const MultiOptionDesign& design, int k) {
    return design.profile_at(std::max(k, design.head.j_eps));
}

inline TransmitProfile equilibrium_profile(const Design& design, int k) {
    return std::visit([k](const auto& d) { return equilibrium_profile(d, k); }, design);
}

/// q_v* evaluated at the equilibrium operating point for K users.
inline double equilibrium_qv_star(const Design& design, int k) {
    if (const auto* s = std::get_if<SingleOptionDesign>(&design)) return qv_star_single(*s, s->p_at(k));
    const auto& m = std::get<MultiOptionDesign>(design);
    return qv_star_multi(m, std::max(k, m.head.j_eps));
}

}  // namespace vpmac
