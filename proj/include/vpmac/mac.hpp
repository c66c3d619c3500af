#pragma once

// Per-user adaptation: target derivation from the fed-back contention
// measure, the convex update toward the target, and step-size schedules.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vpmac/contention.hpp"
#include "vpmac/design_types.hpp"
#include "vpmac/profile.hpp"

namespace vpmac {

/// Declared decay of the estimator-induced target bias.
struct BiasBound {
    enum class Kind { none, constant, power };
    Kind kind = Kind::none;
    double c = 0.0;         ///< constant value, or coefficient of c/(t+t0)^e
    double exponent = 0.0;  ///< e for the power family
};

struct StepSchedule {
    enum class Kind { constant, decreasing };
    Kind kind = Kind::constant;
    double alpha = 0.05;   ///< constant kind
    double a = 1.0;        ///< decreasing kind: a / (t + t0)^kappa
    double t0 = 1.0;
    double kappa = 1.0;
    BiasBound beta;

    static StepSchedule constant(double alpha, BiasBound beta = {}) {
        StepSchedule s;
        s.alpha = alpha;
        s.beta = beta;
        return s;
    }
    static StepSchedule decreasing(double a, double t0, double kappa = 1.0, BiasBound beta = {}) {
        StepSchedule s;
        s.kind = Kind::decreasing;
        s.a = a;
        s.t0 = t0;
        s.kappa = kappa;
        s.beta = beta;
        return s;
    }

    /// Step used for a user's t-th update (t counts from 0).
    double at(long t) const {
        if (kind == Kind::constant) return alpha;
        return a / std::pow(static_cast<double>(t) + t0, kappa);
    }
};

struct ScheduleReport {
    bool passed = false;
    std::string regime;  ///< which convergence regime the schedule falls under
    std::vector<std::string> reasons;
};

enum class ConvergenceMode { probability_one, weak };

/// Structural check of a schedule against the convergence regime of `mode`.
/// Probability-one: a/(t+t0)^kappa with 1/2 < kappa <= 1 (sum alpha diverges,
/// sum alpha^2 converges), alpha(0) <= 1, and beta of the power family with
/// kappa + e > 1 (sum alpha beta converges). Weak: constant alpha in (0,1)
/// with beta eventually at most sqrt(alpha).
inline ScheduleReport validate_schedule(const StepSchedule& s, ConvergenceMode mode) {
    ScheduleReport r;
    auto fail = [&r](std::string why) { r.reasons.push_back(std::move(why)); };
    if (mode == ConvergenceMode::probability_one) {
        r.regime = "probability-one convergence (decreasing step size)";
        if (s.kind != StepSchedule::Kind::decreasing) {
            fail("constant step: sum of alpha^2 diverges");
        } else {
            if (!(s.a > 0.0 && s.t0 > 0.0)) fail("need a > 0 and t0 > 0");
            if (!(s.kappa <= 1.0)) fail("kappa > 1: sum of alpha converges");
            if (!(s.kappa > 0.5)) fail("kappa <= 1/2: sum of alpha^2 diverges");
            if (s.a > 0.0 && s.t0 > 0.0 && s.at(0) > 1.0) fail("alpha(0) exceeds 1");
            switch (s.beta.kind) {
                case BiasBound::Kind::none: fail("no bias bound declared"); break;
                case BiasBound::Kind::constant:
                    if (s.beta.c != 0.0) fail("constant nonzero bias: sum of alpha*beta diverges");
                    break;
                case BiasBound::Kind::power:
                    if (!(s.kappa + s.beta.exponent > 1.0)) fail("kappa + e <= 1: sum of alpha*beta diverges");
                    break;
            }
        }
    } else {
        r.regime = "weak convergence (constant step size)";
        if (s.kind != StepSchedule::Kind::constant) {
            fail("weak mode expects a constant step size");
        } else {
            if (!(s.alpha > 0.0 && s.alpha < 1.0)) fail("constant alpha must lie in (0,1)");
            switch (s.beta.kind) {
                case BiasBound::Kind::none: fail("no bias bound declared"); break;
                case BiasBound::Kind::constant:
                    if (!(s.beta.c <= std::sqrt(s.alpha))) fail("beta exceeds sqrt(alpha)");
                    break;
                case BiasBound::Kind::power:
                    if (!(s.beta.exponent > 0.0) && !(s.beta.c <= std::sqrt(s.alpha)))
                        fail("non-decaying beta exceeds sqrt(alpha)");
                    break;
            }
        }
    }
    r.passed = r.reasons.empty();
    return r;
}

struct UserState {
    TransmitProfile profile;
    StepSchedule step;
    int user_id = 0;
    long updates = 0;  ///< number of updates applied so far
};

/// Probability target of a single-option user.
inline double single_target(const SingleOptionDesign& design, double qv_meas) {
    return invert_qv_star_single(design, qv_meas);
}

struct MultiTarget {
    double k_hat = 0.0;
    TransmitProfile profile;
};

/// User-number estimate and target profile of a multi-option user.
inline MultiTarget multi_target(const MultiOptionDesign& design, double qv_meas) {
    const double k_hat = invert_qv_star_multi(design, qv_meas);
    return {k_hat, design.profile_at(k_hat)};
}

/// Target profile for either design kind. `k_hat` receives the user-number
/// estimate (for single-option designs, the K_hat with p(K_hat) = target).
inline TransmitProfile target_profile(const Design& design, double qv_meas, double* k_hat = nullptr) {
    if (const auto* s = std::get_if<SingleOptionDesign>(&design)) {
        const double p = single_target(*s, qv_meas);
        if (k_hat) {
            if (p <= 0.0) *k_hat = s->k_cap;
            else if (p >= s->p_max) *k_hat = s->j_eps;
            else *k_hat = s->x_star / p - s->b;
        }
        return {p, s->direction()};
    }
    const auto t = multi_target(std::get<MultiOptionDesign>(design), qv_meas);
    if (k_hat) *k_hat = t.k_hat;
    return t.profile;
}

/// One step toward `target` with the user's step size alpha(t): the
/// M-vector p*d is blended and split back into (p, d).
inline UserState apply_update(const UserState& state, const TransmitProfile& target, long t) {
    const double alpha = state.step.at(t);
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("apply_update: step size outside (0,1]");
    auto cur = state.profile.as_vector();
    const auto tgt = target.as_vector();
    if (cur.size() != tgt.size()) throw std::invalid_argument("apply_update: option count mismatch");
    for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = (1.0 - alpha) * cur[i] + alpha * tgt[i];
    UserState next = state;
    next.profile = TransmitProfile::from_vector(cur, state.profile.d);
    next.updates = state.updates + 1;
    return next;
}

inline UserState apply_update(const UserState& state, const TransmitProfile& target) {
    return apply_update(state, target, state.updates);
}

}  // namespace vpmac
