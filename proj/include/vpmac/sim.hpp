#pragma once

// Slotted Monte Carlo simulation of the closed loop, its associated mean ODE,
// and estimator bias measurement.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vpmac/channel.hpp"
#include "vpmac/contention.hpp"
#include "vpmac/design.hpp"
#include "vpmac/design_types.hpp"
#include "vpmac/mac.hpp"
#include "vpmac/profile.hpp"

namespace vpmac {

inline constexpr const char* kRngName = "mt19937_64";

/// 64-bit Mersenne Twister with uniforms built from the top 53 bits, so the
/// stream is identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }

    /// Index drawn from a discrete distribution given by `weights` (sum 1).
    std::size_t pick(std::span<const double> weights) {
        if (weights.size() == 1) return 0;
        const double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Receiver-side estimate of q_v.

enum class EstimatorKind { window, ema, exact };

inline std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::window: return "window";
        case EstimatorKind::ema: return "ema";
        case EstimatorKind::exact: return "exact";
    }
    return "?";
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
    for (auto k : {EstimatorKind::window, EstimatorKind::ema, EstimatorKind::exact})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown estimator '" + s + "'");
}

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::ema;
    int window = 100;              ///< Q
    double lambda = 1.0 / 300.0;  ///< EMA weight
    double initial = 1.0;          ///< EMA starting value

    void validate() const {
        if (kind == EstimatorKind::window && window < 1) throw std::invalid_argument("estimator window must be >= 1");
        if (kind == EstimatorKind::ema && !(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("EMA lambda must lie in (0,1]");
        if (!(initial >= 0.0 && initial <= 1.0)) throw std::invalid_argument("estimator initial value outside [0,1]");
    }
};

/// Window mode emits the success fraction every Q slots, EMA mode emits
/// every slot. Exact mode is fed the true q_v by the caller.
class ReceiverEstimator {
public:
    explicit ReceiverEstimator(EstimatorSpec spec) : spec_(spec), estimate_(spec.initial) { spec_.validate(); }

    /// Feeds one slot's indicator; returns true when feedback is emitted.
    bool observe(int iv) {
        switch (spec_.kind) {
            case EstimatorKind::ema:
                estimate_ = (1.0 - spec_.lambda) * estimate_ + spec_.lambda * iv;
                return true;
            case EstimatorKind::window:
                hits_ += iv;
                if (++count_ < spec_.window) return false;
                estimate_ = static_cast<double>(hits_) / spec_.window;
                hits_ = 0;
                count_ = 0;
                return true;
            case EstimatorKind::exact: return true;
        }
        return false;
    }

    void set_exact(double qv) { estimate_ = std::clamp(qv, 0.0, 1.0); }
    double estimate() const { return estimate_; }
    const EstimatorSpec& spec() const { return spec_; }

private:
    EstimatorSpec spec_;
    double estimate_;
    long hits_ = 0;
    int count_ = 0;
};

// ---------------------------------------------------------------------------
// Scenario and trace.

struct Stage {
    long duration = 1;  ///< slots
    int delta = 0;      ///< users joining (> 0) or leaving (< 0) at the stage start
};

struct Scenario {
    ChannelSpec channel;
    Design design;
    std::vector<Stage> stages;
    EstimatorSpec estimator;
    StepSchedule step;
    std::uint64_t seed = 1;
    std::optional<bool> freeze_during_window;     ///< default: true for window, false otherwise
    double utility_lambda = 1.0 / 300.0;         ///< EMA weight of the utility measurement
    std::optional<TransmitProfile> initial_profile;  ///< joining users; default zero profile, head direction
    bool adapt = true;

    bool freeze() const { return freeze_during_window.value_or(estimator.kind == EstimatorKind::window); }
};

inline const UtilitySpec& design_utility(const Design& d) {
    if (const auto* s = std::get_if<SingleOptionDesign>(&d)) return s->utility;
    return std::get<MultiOptionDesign>(d).head.utility;
}

inline std::size_t design_option_count(const Design& d) {
    if (const auto* s = std::get_if<SingleOptionDesign>(&d)) return s->direction().size();
    return std::get<MultiOptionDesign>(d).option_count();
}

inline const DirectionVector& design_initial_direction(const Design& d) {
    if (const auto* s = std::get_if<SingleOptionDesign>(&d)) return s->direction();
    return std::get<MultiOptionDesign>(d).head.direction();
}

/// Throws std::invalid_argument describing the first problem found.
inline void validate_scenario(const Scenario& sc, const LinkChannel& channel) {
    if (sc.stages.empty()) throw std::invalid_argument("scenario has no stages");
    long users = 0;
    for (std::size_t i = 0; i < sc.stages.size(); ++i) {
        if (sc.stages[i].duration <= 0) throw std::invalid_argument("stage " + std::to_string(i + 1) + ": duration must be positive");
        users += sc.stages[i].delta;
        if (users < 1) throw std::invalid_argument("stage " + std::to_string(i + 1) + ": user count must stay >= 1");
    }
    sc.estimator.validate();
    if (design_option_count(sc.design) != channel.option_count())
        throw std::invalid_argument("design and channel disagree on the number of options");
    if (const auto* s = std::get_if<SingleOptionDesign>(&sc.design)) {
        if (!s->satisfies_monotone_hypothesis()) throw std::invalid_argument("design violates b > max{1, x* - gamma}");
    } else {
        const auto& m = std::get<MultiOptionDesign>(sc.design);
        if (m.p_table.empty()) throw std::invalid_argument("multi-option design has no interpolation table");
    }
    if (sc.initial_profile && sc.initial_profile->d.size() != channel.option_count())
        throw std::invalid_argument("initial profile has the wrong number of options");
    const double a0 = sc.step.at(0);
    if (!(a0 > 0.0 && a0 <= 1.0)) throw std::invalid_argument("step size outside (0,1]");
}

struct TraceRecord {
    long slot = 0;   ///< 1-based
    int stage = 0;   ///< 1-based
    int users = 0;
    int iv = 0;
    double qv_hat = 0.0;
    bool feedback = false;
    double utility = 0.0;
    double utility_ema = 0.0;
    std::vector<int> tx;             ///< transmissions per option
    std::vector<double> target;      ///< most recent target p*d
    std::vector<double> mean_profile;  ///< mean of the users' p*d after the update
    double k_hat = std::numeric_limits<double>::quiet_NaN();
};

struct Trace {
    std::uint64_t seed = 0;
    std::size_t options = 1;
    std::vector<long> stage_starts;  ///< first slot of each stage
    std::vector<TraceRecord> records;
};

/// Runs the closed loop slot by slot. Deterministic given the scenario.
inline Trace run(const Scenario& sc) {
    const LinkChannel channel = build_channel(sc.channel);
    validate_scenario(sc, channel);
    const std::size_t m = channel.option_count();
    const auto& utility = design_utility(sc.design);
    std::vector<double> reward(m), cost(m);
    for (std::size_t i = 0; i < m; ++i) {
        reward[i] = utility.reward(channel.options()[i]);
        cost[i] = utility.cost(channel.options()[i]);
    }
    std::vector<double> state_weights;
    for (const auto& s : channel.states()) state_weights.push_back(s.probability);

    std::optional<CountSuccessTable> exact_table;
    if (sc.estimator.kind == EstimatorKind::exact) {
        long users = 0, peak = 0;
        for (const auto& st : sc.stages) peak = std::max(peak, users += st.delta);
        exact_table.emplace(channel, static_cast<int>(peak));
    }

    const TransmitProfile joining = sc.initial_profile.value_or(TransmitProfile{0.0, design_initial_direction(sc.design)});
    Rng rng(sc.seed);
    ReceiverEstimator est(sc.estimator);
    Trace trace;
    trace.seed = sc.seed;
    trace.options = m;
    std::vector<UserState> users;
    int next_id = 0;
    bool have_feedback = false;
    double utility_ema = 0.0;
    std::vector<double> target(m, 0.0);
    TransmitProfile target_prof = joining;
    double k_hat = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> counts(m), choice, others(m);
    long slot = 0;

    for (std::size_t si = 0; si < sc.stages.size(); ++si) {
        const auto& stage = sc.stages[si];
        for (int i = 0; i < stage.delta; ++i) users.push_back({joining, sc.step, next_id++, 0});
        for (int i = 0; i < -stage.delta; ++i) users.pop_back();
        trace.stage_starts.push_back(slot + 1);
        for (long s = 0; s < stage.duration; ++s) {
            ++slot;
            TraceRecord rec;
            rec.slot = slot;
            rec.stage = static_cast<int>(si) + 1;
            rec.users = static_cast<int>(users.size());

            const std::size_t state = rng.pick(state_weights);
            std::fill(counts.begin(), counts.end(), 0);
            choice.assign(users.size(), -1);
            for (std::size_t u = 0; u < users.size(); ++u) {
                const auto& prof = users[u].profile;
                if (!rng.bernoulli(prof.p)) continue;
                const auto opt = rng.pick(prof.d.entries());
                choice[u] = static_cast<int>(opt);
                ++counts[opt];
            }
            double util = 0.0;
            for (std::size_t u = 0; u < users.size(); ++u) {
                if (choice[u] < 0) continue;
                const auto opt = static_cast<std::size_t>(choice[u]);
                others = counts;
                --others[opt];
                if (rng.bernoulli(channel.real_success(opt, others, state))) util += reward[opt];
                util -= cost[opt];
            }
            rec.iv = rng.bernoulli(channel.virtual_success(counts, state)) ? 1 : 0;
            rec.tx = counts;
            rec.utility = util;
            utility_ema = (1.0 - sc.utility_lambda) * utility_ema + sc.utility_lambda * util;
            rec.utility_ema = utility_ema;

            if (exact_table) {
                std::vector<std::vector<double>> profs;
                for (const auto& u : users) profs.push_back(u.profile.as_vector());
                est.set_exact(exact_table->qv(profs));
            }
            rec.feedback = est.observe(rec.iv);
            rec.qv_hat = est.estimate();
            if (rec.feedback) {
                have_feedback = true;
                target_prof = target_profile(sc.design, rec.qv_hat, &k_hat);
                target = target_prof.as_vector();
            }
            if (sc.adapt && have_feedback && (rec.feedback || !sc.freeze()))
                for (auto& u : users) u = apply_update(u, target_prof);

            rec.target = target;
            rec.k_hat = k_hat;
            rec.mean_profile.assign(m, 0.0);
            for (const auto& u : users)
                for (std::size_t i = 0; i < m; ++i) rec.mean_profile[i] += u.profile.p * u.profile.d[i];
            for (double& v : rec.mean_profile) v /= static_cast<double>(users.size());
            trace.records.push_back(std::move(rec));
        }
    }
    return trace;
}

// ---------------------------------------------------------------------------
// CSV output.

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string trace_csv_header(std::size_t options) {
    std::string h = "slot,stage,users,iv,qv_hat,feedback,utility,utility_ema";
    for (const char* group : {"tx", "target", "mean_p"})
        for (std::size_t i = 1; i <= options; ++i) h += std::string(",") + group + "_" + std::to_string(i);
    return h + ",k_hat";
}

/// Writes `# key=value` metadata lines, the header, then every
/// `decimate`-th record (slots 1, 1+decimate, ...).
inline void write_trace_csv(std::ostream& os, const Trace& trace, long decimate = 1,
                            const std::map<std::string, std::string>& metadata = {}) {
    if (decimate < 1) throw std::invalid_argument("decimate must be >= 1");
    os << "# rng=" << kRngName << "\n# seed=" << trace.seed << "\n";
    std::string starts;
    for (long s : trace.stage_starts) starts += (starts.empty() ? "" : ";") + std::to_string(s);
    os << "# stage_starts=" << starts << "\n";
    for (const auto& [k, v] : metadata) os << "# " << k << "=" << v << "\n";
    os << trace_csv_header(trace.options) << "\n";
    for (const auto& r : trace.records) {
        if ((r.slot - 1) % decimate != 0) continue;
        os << r.slot << ',' << r.stage << ',' << r.users << ',' << r.iv << ',' << format_number(r.qv_hat) << ','
           << (r.feedback ? 1 : 0) << ',' << format_number(r.utility) << ',' << format_number(r.utility_ema);
        for (int v : r.tx) os << ',' << v;
        for (double v : r.target) os << ',' << format_number(v);
        for (double v : r.mean_profile) os << ',' << format_number(v);
        os << ',' << format_number(r.k_hat) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Mean dynamics.

using SystemState = std::vector<std::vector<double>>;  ///< K rows of p_k * d_k

/// Noise-free target map: every user receives the target for the exact q_v.
inline std::vector<double> mean_field_target(const Design& design, const CountSuccessTable& table, const SystemState& state) {
    return target_profile(design, table.qv(state)).as_vector();
}

inline double distance(const SystemState& state, std::span<const double> profile) {
    double s = 0.0;
    for (const auto& row : state)
        for (std::size_t i = 0; i < row.size(); ++i) s += (row[i] - profile[i]) * (row[i] - profile[i]);
    return std::sqrt(s);
}

struct OdeOptions {
    long sample_every = 100;  ///< record every n-th step (the final state is always recorded)
    double stop_tol = 0.0;    ///< stop once |P - P_hat(P)| falls below this (0 disables)
};

struct Trajectory {
    std::vector<double> times;
    std::vector<SystemState> states;
    SystemState final_state;
    long steps = 0;
};

inline void check_state(const SystemState& p0, int k, std::size_t m) {
    if (k < 1 || static_cast<int>(p0.size()) != k) throw std::invalid_argument("initial state must have K rows");
    for (const auto& row : p0) {
        if (row.size() != m) throw std::invalid_argument("initial state row has the wrong number of options");
        double s = 0.0;
        for (double x : row) {
            if (!(x >= 0.0)) throw std::invalid_argument("initial state entry negative");
            s += x;
        }
        if (s > 1.0 + kSimplexTolerance) throw std::invalid_argument("initial state row sums above 1");
    }
}

/// Explicit Euler integration of dP/dt = -(P - P_hat(P)).
inline Trajectory ode_trajectory(const Design& design, const LinkChannel& channel, int k, SystemState p0, double dt,
                                 double t_end, OdeOptions opt = {}) {
    if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("ode_trajectory: dt must lie in (0, 0.1]");
    check_state(p0, k, channel.option_count());
    const CountSuccessTable table(channel, k);
    Trajectory tr;
    SystemState p = std::move(p0);
    const long n_steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
    tr.times.push_back(0.0);
    tr.states.push_back(p);
    long n = 0;
    for (; n < n_steps; ++n) {
        const auto target = mean_field_target(design, table, p);
        if (opt.stop_tol > 0.0 && distance(p, target) < opt.stop_tol) break;
        for (auto& row : p)
            for (std::size_t i = 0; i < row.size(); ++i) row[i] += dt * (target[i] - row[i]);
        if ((n + 1) % std::max(1L, opt.sample_every) == 0) {
            tr.times.push_back((n + 1) * dt);
            tr.states.push_back(p);
        }
    }
    tr.steps = n;
    if (tr.times.back() != n * dt) {
        tr.times.push_back(n * dt);
        tr.states.push_back(p);
    }
    tr.final_state = std::move(p);
    return tr;
}

/// Discrete iteration P <- (1 - alpha) P + alpha P_hat(P) with exact q_v
/// feedback. Returns the distance to `reference` after each iteration
/// (entry 0 is the starting distance); `final_state` receives the result.
inline std::vector<double> noise_free_iteration(const Design& design, const LinkChannel& channel, int k, SystemState p0,
                                                double alpha, long iterations, std::span<const double> reference,
                                                SystemState* final_state = nullptr) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("noise_free_iteration: alpha must lie in (0,1)");
    check_state(p0, k, channel.option_count());
    const CountSuccessTable table(channel, k);
    SystemState p = std::move(p0);
    std::vector<double> dist{distance(p, reference)};
    for (long n = 0; n < iterations; ++n) {
        const auto target = mean_field_target(design, table, p);
        for (auto& row : p)
            for (std::size_t i = 0; i < row.size(); ++i) row[i] = (1.0 - alpha) * row[i] + alpha * target[i];
        dist.push_back(distance(p, reference));
    }
    if (final_state) *final_state = std::move(p);
    return dist;
}

inline SystemState replicate(const TransmitProfile& profile, int k) {
    return SystemState(static_cast<std::size_t>(k), profile.as_vector());
}

// ---------------------------------------------------------------------------
// Estimator-induced target bias.

struct BiasEstimate {
    int window = 0;  ///< Q; 0 for exact feedback
    long trials = 0;
    std::vector<double> mean_bias;  ///< E[target(q_hat)] - target(q_v), per component
    std::vector<double> std_error;

    double magnitude() const {
        double s = 0.0;
        for (double v : mean_bias) s += v * v;
        return std::sqrt(s);
    }
    /// Standard error used for magnitude comparisons (root sum of squares).
    double magnitude_se() const {
        double s = 0.0;
        for (double v : std_error) s += v * v;
        return std::sqrt(s);
    }
};

/// Monte Carlo estimate of the target bias for K users frozen at `profile`.
/// Each trial observes Q slots; exact mode feeds the true q_v instead.
inline BiasEstimate measure_bias(const Design& design, const LinkChannel& channel, int k, const TransmitProfile& profile,
                                 const EstimatorSpec& estimator, long trials, std::uint64_t seed) {
    if (estimator.kind == EstimatorKind::ema) throw std::invalid_argument("measure_bias: use window or exact feedback");
    if (trials < 2) throw std::invalid_argument("measure_bias: need at least two trials");
    estimator.validate();
    const std::size_t m = channel.option_count();
    const auto params = derive_params(channel, profile.d, k + 1);
    const double q_exact = qv_common(params, profile.p, k);
    const auto truth = target_profile(design, q_exact).as_vector();
    BiasEstimate out;
    out.window = estimator.kind == EstimatorKind::window ? estimator.window : 0;
    out.trials = trials;
    std::vector<double> sum(m, 0.0), sum_sq(m, 0.0);
    std::vector<double> state_weights;
    for (const auto& s : channel.states()) state_weights.push_back(s.probability);
    Rng rng(seed);
    std::vector<int> counts(m);
    for (long t = 0; t < trials; ++t) {
        double q_hat = q_exact;
        if (estimator.kind == EstimatorKind::window) {
            long hits = 0;
            for (int slot = 0; slot < estimator.window; ++slot) {
                const std::size_t state = rng.pick(state_weights);
                std::fill(counts.begin(), counts.end(), 0);
                for (int u = 0; u < k; ++u)
                    if (rng.bernoulli(profile.p)) ++counts[rng.pick(profile.d.entries())];
                hits += rng.bernoulli(channel.virtual_success(counts, state)) ? 1 : 0;
            }
            q_hat = static_cast<double>(hits) / estimator.window;
        }
        const auto tgt = target_profile(design, q_hat).as_vector();
        for (std::size_t i = 0; i < m; ++i) {
            const double b = tgt[i] - truth[i];
            sum[i] += b;
            sum_sq[i] += b * b;
        }
    }
    const double n = static_cast<double>(trials);
    for (std::size_t i = 0; i < m; ++i) {
        const double mean = sum[i] / n;
        const double var = std::max(0.0, (sum_sq[i] - n * mean * mean) / (n - 1.0));
        out.mean_bias.push_back(mean);
        out.std_error.push_back(std::sqrt(var / n));
    }
    return out;
}

/// Bias at each window length in `windows`, all from the same seed stream.
inline std::vector<BiasEstimate> measure_bias_sweep(const Design& design, const LinkChannel& channel, int k,
                                                    const TransmitProfile& profile, const std::vector<int>& windows,
                                                    long trials, std::uint64_t seed) {
    std::vector<BiasEstimate> out;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        EstimatorSpec e;
        e.kind = EstimatorKind::window;
        e.window = windows[i];
        out.push_back(measure_bias(design, channel, k, profile, e, trials, seed + i));
    }
    return out;
}

}  // namespace vpmac
