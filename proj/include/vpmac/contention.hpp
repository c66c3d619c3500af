#pragma once

// Channel contention measure q_v, the theoretical contention measure q_v*
// and their inverses.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "vpmac/channel.hpp"
#include "vpmac/design_types.hpp"
#include "vpmac/numeric.hpp"
#include "vpmac/profile.hpp"

namespace vpmac {

inline constexpr double kDenominatorGuard = 1e-12;
inline constexpr double kInversionTolerance = 1e-14;

/// q_v(p, K) = sum_j C(K,j) p^j (1-p)^(K-j) C_vj for K users sharing p.
inline double qv_common(const ChannelParams& params, double p, int k) {
    if (k < 0) throw std::invalid_argument("qv_common: negative user count");
    const double s = numeric::binomial_expectation(k, std::clamp(p, 0.0, 1.0), [&](int j) { return params.cv(j); });
    return std::clamp(s, 0.0, 1.0);
}

/// q_v for users with individual transmission probabilities but a shared
/// direction (Poisson-binomial number of transmitters).
inline double qv_hetero(const ChannelParams& params, std::span<const double> probs) {
    const auto pmf = numeric::poisson_binomial_pmf(probs);
    double s = 0.0;
    for (std::size_t j = 0; j < pmf.size(); ++j) s += pmf[j] * params.cv(static_cast<int>(j));
    return std::clamp(s, 0.0, 1.0);
}

/// q_v extended to non-integer K_hat by blending floor(K_hat) and floor(K_hat)+1.
inline double qv_noninteger(const ChannelParams& params, double p, double k_hat) {
    if (!(k_hat >= 0.0)) throw std::invalid_argument("qv_noninteger: negative K_hat");
    const double fl = std::floor(k_hat);
    const int n = static_cast<int>(fl);
    const double frac = k_hat - fl;
    if (frac == 0.0) return qv_common(params, p, n);
    return (1.0 - frac) * qv_common(params, p, n) + frac * qv_common(params, p, n + 1);
}

inline double qv_noninteger(const ChannelParams& params, const TransmitProfile& profile, double k_hat) {
    if (profile.d.size() != params.direction.size())
        throw std::invalid_argument("qv_noninteger: profile and channel tables disagree on option count");
    return qv_noninteger(params, profile.p, k_hat);
}

/// dq_v/dp = sum_{j<K} K C(K-1,j) p^j (1-p)^(K-1-j) (C_v(j+1) - C_vj).
inline double qv_partial_p(const ChannelParams& params, double p, int k) {
    if (k <= 0) return 0.0;
    return k * numeric::binomial_expectation(k - 1, std::clamp(p, 0.0, 1.0),
                                             [&](int j) { return params.cv(j + 1) - params.cv(j); });
}

// ---------------------------------------------------------------------------
// Exact q_v for arbitrary per-user profiles, straight from the predicates.

/// State-averaged virtual success for every option-count vector with total
/// at most `max_users`.
class CountSuccessTable {
public:
    CountSuccessTable(const LinkChannel& channel, int max_users)
        : options_(channel.option_count()), max_users_(max_users) {
        if (max_users < 0) throw std::invalid_argument("CountSuccessTable: negative user count");
        std::size_t size = 1;
        strides_.resize(options_);
        for (std::size_t m = 0; m < options_; ++m) {
            strides_[m] = size;
            size *= static_cast<std::size_t>(max_users) + 1;
        }
        success_.assign(size, 0.0);
        std::vector<int> counts(options_, 0);
        for (std::size_t idx = 0; idx < size; ++idx) {
            std::size_t rem = idx;
            int total = 0;
            for (std::size_t m = 0; m < options_; ++m) {
                counts[m] = static_cast<int>(rem % (static_cast<std::size_t>(max_users) + 1));
                rem /= static_cast<std::size_t>(max_users) + 1;
                total += counts[m];
            }
            if (total <= max_users) success_[idx] = channel.mean_virtual_success(counts);
        }
    }

    std::size_t option_count() const { return options_; }
    int max_users() const { return max_users_; }

    /// Expected virtual success when user k transmits option m with
    /// probability profiles[k][m] (independently across users).
    double qv(std::span<const std::vector<double>> profiles) const {
        if (static_cast<int>(profiles.size()) > max_users_)
            throw std::invalid_argument("CountSuccessTable: more users than the table was built for");
        std::vector<double> mass(success_.size(), 0.0);
        std::vector<double> next(success_.size(), 0.0);
        mass[0] = 1.0;
        std::size_t reach = 1;  // indices below `reach` may carry mass
        for (const auto& pv : profiles) {
            if (pv.size() != options_) throw std::invalid_argument("CountSuccessTable: profile length mismatch");
            double idle = 1.0;
            for (double x : pv) idle -= x;
            idle = std::max(0.0, idle);
            std::size_t new_reach = reach;
            for (std::size_t m = 0; m < options_; ++m) new_reach = std::max(new_reach, reach + strides_[m]);
            new_reach = std::min(new_reach, mass.size());
            std::fill(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(new_reach), 0.0);
            for (std::size_t idx = 0; idx < reach; ++idx) {
                const double w = mass[idx];
                if (w == 0.0) continue;
                next[idx] += w * idle;
                for (std::size_t m = 0; m < options_; ++m)
                    if (pv[m] > 0.0) next[idx + strides_[m]] += w * pv[m];
            }
            std::swap(mass, next);
            reach = new_reach;
        }
        double s = 0.0;
        for (std::size_t idx = 0; idx < reach; ++idx) s += mass[idx] * success_[idx];
        return std::clamp(s, 0.0, 1.0);
    }

private:
    std::size_t options_;
    int max_users_;
    std::vector<std::size_t> strides_;
    std::vector<double> success_;
};

// ---------------------------------------------------------------------------
// Theoretical contention measure, single option.

namespace detail {

/// Index N with p_{N+1} < p_hat <= p_N, so that p_hat lies in the
/// interpolation cell [p_{N+1}, p_N].
inline int single_cell(const SingleOptionDesign& d, double p_hat) {
    int n = std::max(0, static_cast<int>(std::floor(d.x_star / p_hat - d.b)));
    while (n > 0 && d.p_at(n) < p_hat) --n;
    while (d.p_at(n + 1) >= p_hat) ++n;
    return n;
}

}  // namespace detail

/// q_v*(p_hat): within the cell p_{N+1} < p_hat <= p_N, a blend of q_N(p_hat)
/// and q_{N+1}(p_hat) weighted by the position of p_hat in the cell. Below
/// the K_cap floor the value is held at its floor value.
inline double qv_star_single(const SingleOptionDesign& design, double p_hat) {
    if (!(p_hat >= 0.0) || p_hat > design.p_max * (1.0 + 1e-12))
        throw std::domain_error("qv_star_single: p_hat outside [0, p_max]");
    p_hat = std::clamp(p_hat, design.p_floor(), design.p_max);
    const int n = detail::single_cell(design, p_hat);
    const double pn = design.p_at(n);
    const double pn1 = design.p_at(n + 1);
    const double den = pn - pn1;
    if (den < kDenominatorGuard) throw std::logic_error("qv_star_single: degenerate interpolation cell (malformed design)");
    const double w = (p_hat - pn1) / den;
    const double qn = qv_common(design.params, p_hat, n);
    const double qn1 = qv_common(design.params, p_hat, n + 1);
    return w * qn + (1.0 - w) * qn1;
}

/// q_v* of a single-option design as a function of K_hat (p_hat = p(K_hat)).
inline double qv_star_single_at(const SingleOptionDesign& design, double k_hat) {
    return qv_star_single(design, design.p_at(std::min(k_hat, static_cast<double>(design.k_cap))));
}

/// Solves q_v*(p_hat) = qv_meas. Returns p_max when the channel looks less
/// contended than q_v*(p_max) and 0 when more contended than the floor value
/// (boundary values go to the clamps).
///
/// The cell boundaries q_v*(p_N) = q_N(p_N) decrease in N, so the cell is
/// found by an exponential then binary search over N; inside the cell q_v* is
/// a smooth increasing polynomial in p_hat and safeguarded Newton finishes.
inline double invert_qv_star_single(const SingleOptionDesign& design, double qv_meas) {
    if (!design.satisfies_monotone_hypothesis())
        throw std::logic_error("invert_qv_star_single: design violates b > max{1, x* - gamma}");
    if (!(qv_meas >= 0.0 && qv_meas <= 1.0)) throw std::domain_error("invert_qv_star_single: qv outside [0,1]");
    const int n0 = detail::single_cell(design, design.p_max);
    const int n_cap = design.k_cap;
    auto boundary = [&](int n) { return qv_common(design.params, design.p_at(n), n); };
    if (qv_meas >= boundary(n0)) return design.p_max;

    // Largest n in [n0, n_cap) with boundary(n) >= qv_meas; boundary(n_cap)
    // is the floor value, at or above which the clamp to 0 applies.
    int lo = n0;
    int hi = n0;
    for (int step = 1;; step *= 2) {
        hi = std::min(n_cap, n0 + step);
        if (boundary(hi) < qv_meas) break;
        if (hi == n_cap) return 0.0;
        lo = hi;
    }
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        (boundary(mid) >= qv_meas ? lo : hi) = mid;
    }
    const int n = lo;
    const double pn = design.p_at(n);
    const double pn1 = design.p_at(n + 1);
    const double den = pn - pn1;
    if (den < kDenominatorGuard) throw std::logic_error("invert_qv_star_single: degenerate interpolation cell (malformed design)");
    auto f = [&](double p) {
        const double w = (p - pn1) / den;
        return w * qv_common(design.params, p, n) + (1.0 - w) * qv_common(design.params, p, n + 1) - qv_meas;
    };
    auto df = [&](double p) {
        const double w = (p - pn1) / den;
        const double qn = qv_common(design.params, p, n);
        const double qn1 = qv_common(design.params, p, n + 1);
        return (qn - qn1) / den + w * qv_partial_p(design.params, p, n) + (1.0 - w) * qv_partial_p(design.params, p, n + 1);
    };
    double a = pn1;
    double b = pn;
    double x = 0.5 * (a + b);
    for (int it = 0; it < 200 && b - a > kInversionTolerance; ++it) {
        const double fx = f(x);
        if (fx == 0.0) return x;
        (fx < 0.0 ? a : b) = x;
        const double d = df(x);
        double next = d > 0.0 ? x - fx / d : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - x) < 0.25 * kInversionTolerance) return next;
        x = next;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Theoretical contention measure, multiple options.

/// q_v*(K_hat). Head and tail regimes use the single-option construction of
/// their fixed direction. Between K_lower and K_upper the value is the
/// linear blend of neighbouring pinpoint values, which is what the
/// non-integer blend evaluates to on the interpolated p(K_hat).
inline double qv_star_multi(const MultiOptionDesign& design, double k_hat) {
    if (k_hat < design.head.j_eps - 1e-12) throw std::domain_error("qv_star_multi: K_hat below J_eps of the head");
    if (k_hat <= design.k_lower) return qv_star_single_at(design.head, std::max(k_hat, double(design.head.j_eps)));
    if (k_hat >= design.k_upper) return qv_star_single_at(design.tail, k_hat);
    const auto& pins = design.pinpoints;
    std::size_t i = 1;
    while (i + 1 < pins.size() && k_hat >= pins[i].k_hat) ++i;
    const double k0 = pins[i - 1].k_hat;
    const double k1 = pins[i].k_hat;
    const double lambda = (k_hat - k0) / (k1 - k0);
    return (1.0 - lambda) * design.pinpoint_qv_star[i - 1] + lambda * design.pinpoint_qv_star[i];
}

/// Solves q_v*(K_hat) = qv_meas on [J_eps(d(K_lower)), K_cap], clamping at
/// both ends; K_cap stands in for an unbounded user-number estimate. Head and
/// tail go through the single-option inverse; between pinpoints q_v* is
/// piecewise linear and is inverted segment by segment.
inline double invert_qv_star_multi(const MultiOptionDesign& design, double qv_meas) {
    if (!(qv_meas >= 0.0 && qv_meas <= 1.0)) throw std::domain_error("invert_qv_star_multi: qv outside [0,1]");
    const double k_min = design.head.j_eps;
    const double k_max = design.k_cap;
    auto k_of_p = [](const SingleOptionDesign& d, double p) { return p >= d.p_max ? double(d.j_eps) : d.x_star / p - d.b; };
    if (qv_meas >= qv_star_multi(design, design.k_lower)) {
        const double p = invert_qv_star_single(design.head, qv_meas);
        return std::clamp(k_of_p(design.head, p), k_min, double(design.k_lower));
    }
    if (qv_meas <= qv_star_multi(design, design.k_upper)) {
        const double p = invert_qv_star_single(design.tail, qv_meas);
        if (p <= 0.0) return k_max;
        return std::clamp(k_of_p(design.tail, p), double(design.k_upper), k_max);
    }
    const auto& pins = design.pinpoints;
    const auto& q = design.pinpoint_qv_star;
    std::size_t i = 1;
    while (i + 1 < pins.size() && qv_meas < q[i]) ++i;
    const double lambda = (q[i - 1] - qv_meas) / (q[i - 1] - q[i]);
    return pins[i - 1].k_hat + lambda * (pins[i].k_hat - pins[i - 1].k_hat);
}

}  // namespace vpmac
