#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpmac {

inline constexpr double kSimplexTolerance = 1e-9;

/// Conditional distribution over the M transmission options of a user that
/// decides to transmit.
class DirectionVector {
public:
    DirectionVector() : entries_{1.0} {}
    explicit DirectionVector(std::vector<double> entries) : entries_(std::move(entries)) { validate(); }
    DirectionVector(std::initializer_list<double> entries) : entries_(entries) { validate(); }

    /// Unit vector on option `index` of `options` options.
    static DirectionVector unit(std::size_t options, std::size_t index) {
        std::vector<double> e(options, 0.0);
        e.at(index) = 1.0;
        return DirectionVector(std::move(e));
    }

    std::size_t size() const { return entries_.size(); }
    double operator[](std::size_t i) const { return entries_[i]; }
    std::span<const double> entries() const { return entries_; }

    friend bool operator==(const DirectionVector&, const DirectionVector&) = default;

private:
    void validate() {
        if (entries_.empty()) throw std::invalid_argument("direction vector must not be empty");
        double sum = 0.0;
        for (double& v : entries_) {
            if (!(v >= -kSimplexTolerance && v <= 1.0 + kSimplexTolerance))
                throw std::invalid_argument("direction vector entry outside [0,1]: " + std::to_string(v));
            if (v < 0.0) v = 0.0;
            sum += v;
        }
        if (std::abs(sum - 1.0) > kSimplexTolerance)
            throw std::invalid_argument("direction vector entries must sum to 1 (got " + std::to_string(sum) + ")");
    }

    std::vector<double> entries_;
};

/// A user's per-slot decision distribution: transmit with probability `p`,
/// choosing option m with probability `d[m]` given a transmission.
struct TransmitProfile {
    double p = 0.0;
    DirectionVector d;

    TransmitProfile() = default;
    TransmitProfile(double prob, DirectionVector dir) : p(prob), d(std::move(dir)) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("transmission probability outside [0,1]");
    }

    /// The M-length probability vector p * d.
    std::vector<double> as_vector() const {
        std::vector<double> v(d.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = p * d[i];
        return v;
    }

    /// Splits an M-length probability vector into (p, d). A zero vector keeps
    /// `fallback` as its direction, since direction is unobservable at p = 0.
    static TransmitProfile from_vector(std::span<const double> v, const DirectionVector& fallback) {
        double sum = 0.0;
        for (double x : v) sum += x;
        if (sum <= 0.0) return {0.0, fallback};
        std::vector<double> d(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) d[i] = std::max(0.0, v[i]) / sum;
        double norm = 0.0;
        for (double x : d) norm += x;
        for (double& x : d) x /= norm;
        return {std::min(1.0, sum), DirectionVector(std::move(d))};
    }
};

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace vpmac
