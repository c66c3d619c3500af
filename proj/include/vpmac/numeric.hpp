#pragma once

// Small numerical kernels shared by the contention, design and sim modules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace vpmac::numeric {

/// Binomial probability mass function of Bin(n, p) for k = 0..n.
///
/// The mode term is evaluated in log space and the rest by the ratio
/// recurrence in both directions, so n in the thousands (the K_cap sentinel)
/// neither underflows at the mode nor pays for n log-gamma calls. The
/// endpoints p = 0 and p = 1 are exact.
inline std::vector<double> binomial_pmf(int n, double p) {
    if (n < 0) throw std::invalid_argument("binomial_pmf: negative n");
    std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
    if (p <= 0.0) {
        pmf.front() = 1.0;
        return pmf;
    }
    if (p >= 1.0) {
        pmf.back() = 1.0;
        return pmf;
    }
    const double q = 1.0 - p;
    const int mode = std::min(n, static_cast<int>(std::floor((n + 1) * p)));
    const double lc = std::lgamma(n + 1.0) - std::lgamma(mode + 1.0) - std::lgamma(n - mode + 1.0);
    pmf[static_cast<std::size_t>(mode)] = std::exp(lc + mode * std::log(p) + (n - mode) * std::log1p(-p));
    const double up = p / q;
    for (int k = mode; k < n; ++k)
        pmf[static_cast<std::size_t>(k) + 1] = pmf[static_cast<std::size_t>(k)] * (n - k) / (k + 1.0) * up;
    const double down = q / p;
    for (int k = mode; k > 0; --k)
        pmf[static_cast<std::size_t>(k) - 1] = pmf[static_cast<std::size_t>(k)] * k / (n - k + 1.0) * down;
    return pmf;
}

/// sum_k Bin(k; n, p) f(k), accumulated outward from the mode by the same
/// ratio recurrence as binomial_pmf, without materialising the pmf.
template <class F>
double binomial_expectation(int n, double p, F&& f) {
    if (n < 0) throw std::invalid_argument("binomial_expectation: negative n");
    if (p <= 0.0) return f(0);
    if (p >= 1.0) return f(n);
    const double q = 1.0 - p;
    const int mode = std::min(n, static_cast<int>(std::floor((n + 1) * p)));
    const double lc = std::lgamma(n + 1.0) - std::lgamma(mode + 1.0) - std::lgamma(n - mode + 1.0);
    const double at_mode = std::exp(lc + mode * std::log(p) + (n - mode) * std::log1p(-p));
    double s = at_mode * f(mode);
    const double up = p / q;
    double w = at_mode;
    for (int k = mode; k < n; ++k) {
        w *= (n - k) / (k + 1.0) * up;
        s += w * f(k + 1);
    }
    const double down = q / p;
    w = at_mode;
    for (int k = mode; k > 0; --k) {
        w *= k / (n - k + 1.0) * down;
        s += w * f(k - 1);
    }
    return s;
}

/// Distribution of the number of successes among independent Bernoulli
/// trials with the given probabilities (exact convolution).
inline std::vector<double> poisson_binomial_pmf(std::span<const double> probs) {
    std::vector<double> pmf(probs.size() + 1, 0.0);
    pmf[0] = 1.0;
    std::size_t n = 0;
    for (double q : probs) {
        ++n;
        for (std::size_t k = n; k > 0; --k) pmf[k] = pmf[k] * (1.0 - q) + pmf[k - 1] * q;
        pmf[0] *= (1.0 - q);
    }
    return pmf;
}

/// log C(n, k)
inline double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Bisection for a root of a monotone function on [lo, hi].
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them be zero).
/// Iterates until the bracket is narrower than `tol` or stops shrinking,
/// and returns the bracket midpoint.
template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-12, int max_iter = 400) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::invalid_argument("bisect: interval does not bracket a root");
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct Maximum {
    double arg;
    double value;
};

/// Maximise `f` on [lo, hi]: a uniform grid scan locates the best cell
/// (first one wins on ties), then golden-section refines its neighbourhood.
template <class F>
Maximum maximize_scalar(F&& f, double lo, double hi, int grid_points = 2000, double tol = 1e-7) {
    const double h = (hi - lo) / grid_points;
    int best_i = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid_points; ++i) {
        const double v = f(lo + i * h);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    double a = lo + std::max(0, best_i - 1) * h;
    double b = lo + std::min(grid_points, best_i + 1) * h;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    const double fx = f(x);
    if (fx >= best) return {x, fx};
    return {lo + best_i * h, best};
}

}  // namespace vpmac::numeric
