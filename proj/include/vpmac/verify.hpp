#pragma once

// One-stop verification of a built design: its construction conditions plus
// the equilibrium fixed-point property for a range of user counts.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "vpmac/contention.hpp"
#include "vpmac/design.hpp"
#include "vpmac/mac.hpp"

namespace vpmac {

inline constexpr double kFixedPointTolerance = 1e-10;

struct FixedPointResult {
    int k = 0;
    double qv = 0.0;        ///< q_v at the equilibrium profile
    double qv_star = 0.0;   ///< q_v* at the equilibrium operating point
    double map_error = 0.0; ///< |target(q_v(P*)) - p*| (Euclidean)
};

/// Exact q_v with all K users on `profile`.
inline double qv_at(const LinkChannel& channel, const TransmitProfile& profile, int k) {
    return qv_common(derive_params(channel, profile.d, k + 1), profile.p, k);
}

inline FixedPointResult check_fixed_point(const Design& design, const LinkChannel& channel, int k) {
    FixedPointResult r;
    r.k = k;
    const auto eq = equilibrium_profile(design, k);
    r.qv = qv_at(channel, eq, k);
    r.qv_star = equilibrium_qv_star(design, k);
    r.map_error = euclidean_distance(target_profile(design, r.qv).as_vector(), eq.as_vector());
    return r;
}

inline int design_j_eps(const Design& d) {
    if (const auto* s = std::get_if<SingleOptionDesign>(&d)) return s->j_eps;
    return std::get<MultiOptionDesign>(d).head.j_eps;
}

/// Construction conditions of the design and the fixed point at every
/// K in [max(J_eps, 1), k_max].
inline ConditionReport verify_design(const Design& design, const LinkChannel& channel, int k_max = 30,
                                     double lipschitz_limit = 10.0) {
    ConditionReport rep;
    if (const auto* s = std::get_if<SingleOptionDesign>(&design)) {
        std::ostringstream os;
        os << "b=" << s->b << " x*=" << s->x_star << " gamma=" << s->gamma_eps;
        rep.items.push_back({"single.1 b > max{1, x* - gamma_eps}", s->satisfies_monotone_hypothesis(), os.str()});
        const double want = std::min(1.0, s->x_star / (s->j_eps + s->b));
        rep.items.push_back({"single.2 p_max = min{1, x*/(J_eps + b)}", std::abs(want - s->p_max) <= 1e-12,
                             "p_max=" + std::to_string(s->p_max)});
    } else {
        const auto& m = std::get<MultiOptionDesign>(design);
        for (auto& i : verify_head_tail(m).items) rep.items.push_back(i);
        if (m.pinpoints.size() >= 2)
            for (auto& i : verify_pinpoints(m.pinpoints, channel, m.eps_v, m.eps_q, m.p_lower, m.p_upper).items)
                rep.items.push_back(i);
        for (auto& i : verify_monotonicity_gradient(m, lipschitz_limit).report.items) rep.items.push_back(i);
    }
    ConditionItem fp{"fixed_point |q_v(P*) - q_v*(P*)| and |P_hat(P*) - P*| <= 1e-10", true, ""};
    double worst = 0.0;
    for (int k = std::max(design_j_eps(design), 1); k <= k_max; ++k) {
        const auto r = check_fixed_point(design, channel, k);
        const double err = std::max(std::abs(r.qv - r.qv_star), r.map_error);
        worst = std::max(worst, err);
        if (fp.passed && !(err <= kFixedPointTolerance)) {
            fp.passed = false;
            fp.detail = "K=" + std::to_string(k) + " error " + std::to_string(err);
        }
    }
    if (fp.passed) {
        std::ostringstream os;
        os << "worst " << worst;
        fp.detail = os.str();
    }
    rep.items.push_back(fp);
    return rep;
}

}  // namespace vpmac
