#pragma once

// Declarative scenario files.
//
//   # comment
//   [section]
//   key = value            values may be lists: 1, 0.5, 2
//
// Sections: channel, utility, design, scenario. Unknown sections and keys are
// rejected with their position so typos do not silently fall back to
// defaults.

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpmac/channel.hpp"
#include "vpmac/design.hpp"
#include "vpmac/design_types.hpp"
#include "vpmac/mac.hpp"
#include "vpmac/sim.hpp"

namespace vpmac {

/// Positioned config error. `validation` marks well-formed values that are
/// out of range or inconsistent, as opposed to syntax and type errors.
struct ConfigError : std::runtime_error {
    int line = 0;
    int column = 0;
    bool validation = false;
    ConfigError(const std::string& source, int l, int c, const std::string& what, bool invalid = false)
        : std::runtime_error(source + ":" + std::to_string(l) + ":" + std::to_string(c) + ": " + what),
          line(l),
          column(c),
          validation(invalid) {}
};

struct ConfigValue {
    std::string text;
    int line = 0;
    int column = 0;      ///< of the value
    int key_column = 0;
};

class Config {
public:
    static Config parse(const std::string& text, const std::string& source = "<config>") {
        Config cfg;
        cfg.source_ = source;
        std::istringstream in(text);
        std::string raw;
        std::string section;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string line = raw;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const int col = static_cast<int>(first) + 1;
            const std::string body = trim(line);
            if (body.front() == '[') {
                if (body.back() != ']') throw ConfigError(source, line_no, col, "unterminated section header");
                section = trim(body.substr(1, body.size() - 2));
                if (section.empty()) throw ConfigError(source, line_no, col, "empty section name");
                if (!kSections.count(section)) throw ConfigError(source, line_no, col + 1, "unknown section [" + section + "]");
                cfg.sections_[section];
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError(source, line_no, col, "expected 'key = value'");
            if (section.empty()) throw ConfigError(source, line_no, col, "key outside of any section");
            const std::string key = trim(line.substr(0, eq));
            if (key.empty()) throw ConfigError(source, line_no, col, "missing key before '='");
            const auto vfirst = line.find_first_not_of(" \t", eq + 1);
            const int vcol = vfirst == std::string::npos ? static_cast<int>(eq) + 2 : static_cast<int>(vfirst) + 1;
            const std::string value = trim(line.substr(eq + 1));
            if (value.empty()) throw ConfigError(source, line_no, vcol, "missing value for '" + key + "'");
            auto& sec = cfg.sections_[section];
            if (sec.count(key)) throw ConfigError(source, line_no, col, "duplicate key '" + key + "'");
            sec[key] = {value, line_no, vcol, col};
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::ios_base::failure("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str(), path);
    }

    const std::string& source() const { return source_; }
    bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
    bool has(const std::string& s, const std::string& k) const {
        const auto it = sections_.find(s);
        return it != sections_.end() && it->second.count(k);
    }
    const ConfigValue* find(const std::string& s, const std::string& k) const {
        const auto it = sections_.find(s);
        if (it == sections_.end()) return nullptr;
        const auto kv = it->second.find(k);
        return kv == it->second.end() ? nullptr : &kv->second;
    }

    /// Rejects keys of `section` outside `allowed`.
    void check_keys(const std::string& section, const std::set<std::string>& allowed) const {
        const auto it = sections_.find(section);
        if (it == sections_.end()) return;
        for (const auto& [k, v] : it->second)
            if (!allowed.count(k)) throw ConfigError(source_, v.line, v.key_column, "unknown key '" + k + "' in [" + section + "]");
    }

    std::string get_string(const std::string& s, const std::string& k, const std::string& fallback) const {
        const auto* v = find(s, k);
        return v ? v->text : fallback;
    }
    double get_double(const std::string& s, const std::string& k, double fallback) const {
        const auto* v = find(s, k);
        return v ? to_double(*v, v->text) : fallback;
    }
    long get_long(const std::string& s, const std::string& k, long fallback) const {
        const auto* v = find(s, k);
        return v ? to_long(*v, v->text) : fallback;
    }
    bool get_bool(const std::string& s, const std::string& k, bool fallback) const {
        const auto* v = find(s, k);
        if (!v) return fallback;
        if (v->text == "true" || v->text == "1" || v->text == "yes") return true;
        if (v->text == "false" || v->text == "0" || v->text == "no") return false;
        throw error(*v, "expected a boolean, got '" + v->text + "'");
    }
    std::vector<double> get_doubles(const std::string& s, const std::string& k, std::vector<double> fallback) const {
        const auto* v = find(s, k);
        if (!v) return fallback;
        std::vector<double> out;
        for (const auto& item : split_list(v->text)) out.push_back(to_double(*v, item));
        return out;
    }
    std::vector<std::string> get_list(const std::string& s, const std::string& k) const {
        const auto* v = find(s, k);
        return v ? split_list(v->text) : std::vector<std::string>{};
    }

    ConfigError error(const ConfigValue& v, const std::string& what) const { return {source_, v.line, v.column, what}; }
    ConfigError error(const std::string& s, const std::string& k, const std::string& what) const {
        if (const auto* v = find(s, k)) return error(*v, what);
        return {source_, 0, 0, "[" + s + "] " + k + ": " + what};
    }
    ConfigError invalid(const ConfigValue& v, const std::string& what) const { return {source_, v.line, v.column, what, true}; }
    ConfigError invalid(const std::string& s, const std::string& k, const std::string& what) const {
        if (const auto* v = find(s, k)) return invalid(*v, what);
        return {source_, 0, 0, "[" + s + "] " + k + ": " + what, true};
    }

    double to_double(const ConfigValue& v, const std::string& item) const {
        const std::string t = trim(item);
        char* end = nullptr;
        const double d = std::strtod(t.c_str(), &end);
        if (t.empty() || end != t.c_str() + t.size()) throw error(v, "expected a number, got '" + t + "'");
        return d;
    }
    long to_long(const ConfigValue& v, const std::string& item) const {
        const std::string t = trim(item);
        char* end = nullptr;
        const long d = std::strtol(t.c_str(), &end, 10);
        if (t.empty() || end != t.c_str() + t.size()) throw error(v, "expected an integer, got '" + t + "'");
        return d;
    }

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }
    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(s);
        while (std::getline(in, item, ',')) out.push_back(trim(item));
        return out;
    }

private:
    inline static const std::set<std::string> kSections{"channel", "utility", "design", "scenario"};
    std::string source_;
    std::map<std::string, std::map<std::string, ConfigValue>> sections_;
};

// ---------------------------------------------------------------------------
// Section readers.

inline ChannelSpec channel_from_config(const Config& cfg) {
    cfg.check_keys("channel", {"preset", "kind", "capacities", "probabilities", "virtual_slot_equivalents", "rates",
                               "slot_equivalents", "energy_costs", "c_r", "c_v", "max_parallel", "capacity"});
    ChannelSpec spec;
    if (const auto* p = cfg.find("channel", "preset")) {
        const auto cat = builtin::catalog();
        const auto it = cat.find(p->text);
        if (it == cat.end()) throw cfg.invalid(*p, "unknown channel preset '" + p->text + "'");
        spec = it->second;
    }
    if (const auto* k = cfg.find("channel", "kind")) {
        try {
            spec.kind = channel_kind_from_string(k->text);
        } catch (const std::invalid_argument& e) {
            throw cfg.invalid(*k, e.what());
        }
    }
    if (cfg.has("channel", "capacity")) {
        spec.state_capacities = {cfg.get_double("channel", "capacity", 1.0)};
        spec.state_probabilities = {1.0};
    }
    spec.state_capacities = cfg.get_doubles("channel", "capacities", spec.state_capacities);
    spec.state_probabilities = cfg.get_doubles("channel", "probabilities", spec.state_probabilities);
    spec.virtual_slot_equivalents = cfg.get_double("channel", "virtual_slot_equivalents", spec.virtual_slot_equivalents);
    spec.max_parallel = static_cast<int>(cfg.get_long("channel", "max_parallel", spec.max_parallel));
    spec.table_c_r = cfg.get_doubles("channel", "c_r", spec.table_c_r);
    spec.table_c_v = cfg.get_doubles("channel", "c_v", spec.table_c_v);

    std::vector<double> rates, slots, energy;
    for (const auto& o : spec.options) {
        rates.push_back(o.rate);
        slots.push_back(o.slot_equivalents);
        energy.push_back(o.energy_cost);
    }
    rates = cfg.get_doubles("channel", "rates", rates);
    const std::size_t m = rates.size();
    slots = cfg.get_doubles("channel", "slot_equivalents", slots.size() == m ? slots : std::vector<double>(m, 1.0));
    energy = cfg.get_doubles("channel", "energy_costs", energy.size() == m ? energy : std::vector<double>(m, 1.0));
    if (slots.size() != m || energy.size() != m)
        throw cfg.invalid("channel", "rates", "rates, slot_equivalents and energy_costs must have equal lengths");
    spec.options.clear();
    for (std::size_t i = 0; i < m; ++i) {
        OptionSpec o{rates[i], slots[i], energy[i]};
        try {
            o.validate();
        } catch (const std::invalid_argument& e) {
            throw cfg.invalid("channel", "rates", e.what());
        }
        spec.options.push_back(o);
    }
    try {
        (void)build_channel(spec);
    } catch (const std::invalid_argument& e) {
        throw cfg.invalid("channel", "kind", e.what());
    }
    return spec;
}

inline UtilitySpec utility_from_config(const Config& cfg, std::size_t options) {
    cfg.check_keys("utility", {"kind", "energy_weight"});
    UtilitySpec u;
    u.kind = options == 1 ? UtilityKind::sum_throughput_single : UtilityKind::sum_throughput_multi;
    if (const auto* k = cfg.find("utility", "kind")) {
        try {
            u.kind = utility_kind_from_string(k->text);
        } catch (const std::invalid_argument& e) {
            throw cfg.invalid(*k, e.what());
        }
    }
    u.energy_weight = cfg.get_double("utility", "energy_weight", 0.0);
    if (!(u.energy_weight >= 0.0)) throw cfg.invalid("utility", "energy_weight", "energy weight must be nonnegative");
    if (u.kind == UtilityKind::sum_throughput_single && options != 1)
        throw cfg.invalid("utility", "kind", "sum_throughput_single requires a single-option channel");
    return u;
}

/// Everything needed to (re)build a design.
struct DesignConfig {
    ChannelSpec channel;
    UtilitySpec utility;
    bool multi = false;
    double eps_v = 0.01;
    double b_margin = 0.01;
    int k_cap = kDefaultKCap;
    DirectionVector direction;  ///< single-option designs
    MultiDesignSpec multi_spec;
    double lipschitz_limit = 10.0;
};

inline DirectionVector direction_from(const Config& cfg, const std::string& key, std::size_t m, const DirectionVector& fallback) {
    const auto* v = cfg.find("design", key);
    if (!v) return fallback;
    const auto vals = cfg.get_doubles("design", key, {});
    if (vals.size() != m) throw cfg.invalid(*v, "direction needs " + std::to_string(m) + " entries");
    try {
        return DirectionVector(vals);
    } catch (const std::invalid_argument& e) {
        throw cfg.invalid(*v, e.what());
    }
}

inline DesignConfig design_config_from(const Config& cfg) {
    cfg.check_keys("design", {"type", "eps_v", "b_margin", "k_cap", "direction", "head_direction", "tail_direction",
                              "k_lower", "k_upper", "pinpoints", "pinpoint_directions", "eps_q", "p_lower", "p_upper",
                              "steps_per_unit", "direction_grid", "lipschitz_limit"});
    DesignConfig dc;
    dc.channel = channel_from_config(cfg);
    const std::size_t m = dc.channel.options.size();
    dc.utility = utility_from_config(cfg, m);
    const std::string type = cfg.get_string("design", "type", m == 1 ? "single" : "multi");
    if (type != "single" && type != "multi") throw cfg.invalid("design", "type", "design type must be 'single' or 'multi'");
    dc.multi = type == "multi";
    dc.eps_v = cfg.get_double("design", "eps_v", 0.01);
    if (!(dc.eps_v > 0.0)) throw cfg.invalid("design", "eps_v", "eps_v must be positive");
    dc.b_margin = cfg.get_double("design", "b_margin", 0.01);
    if (!(dc.b_margin > 0.0)) throw cfg.invalid("design", "b_margin", "b_margin must be positive");
    dc.k_cap = static_cast<int>(cfg.get_long("design", "k_cap", kDefaultKCap));
    if (dc.k_cap < 2) throw cfg.invalid("design", "k_cap", "k_cap must be at least 2");
    dc.lipschitz_limit = cfg.get_double("design", "lipschitz_limit", 10.0);
    dc.direction = direction_from(cfg, "direction", m, DirectionVector::unit(m, 0));
    if (!dc.multi) return dc;

    auto& ms = dc.multi_spec;
    ms.utility = dc.utility;
    ms.eps_v = dc.eps_v;
    ms.b_margin = dc.b_margin;
    ms.k_cap = dc.k_cap;
    ms.head_direction = direction_from(cfg, "head_direction", m, DirectionVector::unit(m, 0));
    ms.tail_direction = direction_from(cfg, "tail_direction", m, DirectionVector::unit(m, m - 1));
    if (!cfg.has("design", "k_lower") || !cfg.has("design", "k_upper"))
        throw cfg.invalid("design", "k_lower", "multi-option designs need k_lower and k_upper");
    ms.k_lower = static_cast<int>(cfg.get_long("design", "k_lower", 0));
    ms.k_upper = static_cast<int>(cfg.get_long("design", "k_upper", 0));
    if (!(0 < ms.k_lower && ms.k_lower <= ms.k_upper)) throw cfg.invalid("design", "k_upper", "need 0 < k_lower <= k_upper");
    if (const auto* v = cfg.find("design", "pinpoints"))
        for (const auto& item : Config::split_list(v->text)) ms.inner_pinpoints.push_back(static_cast<int>(cfg.to_long(*v, item)));
    if (const auto* v = cfg.find("design", "pinpoint_directions")) {
        // Semicolon-separated directions, one per inner pinpoint, e.g. "0.25,0.75; 0.2,0.8".
        std::istringstream in(v->text);
        std::string group;
        while (std::getline(in, group, ';')) {
            std::vector<double> vals;
            for (const auto& item : Config::split_list(group)) vals.push_back(cfg.to_double(*v, item));
            try {
                ms.inner_directions.emplace_back(vals);
            } catch (const std::invalid_argument& e) {
                throw cfg.invalid(*v, e.what());
            }
        }
        if (ms.inner_directions.size() != ms.inner_pinpoints.size())
            throw cfg.invalid(*v, "need one direction per inner pinpoint");
    }
    ms.eps_q = cfg.get_double("design", "eps_q", 1e-3);
    if (!(ms.eps_q > 0.0)) throw cfg.invalid("design", "eps_q", "eps_q must be positive (pinpoint q_v* values must strictly drop)");
    ms.p_lower = cfg.get_double("design", "p_lower", 0.001);
    ms.p_upper = cfg.get_double("design", "p_upper", 0.999);
    if (!(0.0 < ms.p_lower && ms.p_lower < ms.p_upper && ms.p_upper < 1.0))
        throw cfg.invalid("design", "p_lower", "need 0 < p_lower < p_upper < 1");
    ms.steps_per_unit = static_cast<int>(cfg.get_long("design", "steps_per_unit", 100));
    if (ms.steps_per_unit < 1) throw cfg.invalid("design", "steps_per_unit", "steps_per_unit must be positive");
    ms.direction_grid = cfg.get_double("design", "direction_grid", 0.005);
    return dc;
}

struct BuiltDesign {
    Design design;
    std::shared_ptr<const LinkChannel> channel;
};

inline BuiltDesign build_design(const DesignConfig& dc) {
    auto channel = std::make_shared<const LinkChannel>(build_channel(dc.channel));
    if (dc.multi) return {build_multi_design(channel, dc.multi_spec), channel};
    return {build_single_design(*channel, dc.utility, dc.eps_v, dc.b_margin, dc.direction, dc.k_cap), channel};
}

/// Parses "duration:delta" items, e.g. "3000:+8, 3000:+6, 3000:-8".
inline std::vector<Stage> parse_stages(const Config& cfg, const ConfigValue& v) {
    std::vector<Stage> out;
    for (const auto& item : Config::split_list(v.text)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw cfg.invalid(v, "stage '" + item + "' must be duration:delta");
        Stage s;
        s.duration = cfg.to_long(v, item.substr(0, colon));
        std::string delta = Config::trim(item.substr(colon + 1));
        if (!delta.empty() && delta.front() == '+') delta.erase(0, 1);
        s.delta = static_cast<int>(cfg.to_long(v, delta));
        if (s.duration <= 0) throw cfg.invalid(v, "stage duration must be positive");
        out.push_back(s);
    }
    return out;
}

/// Scenario section on top of an already built design.
inline Scenario scenario_from_config(const Config& cfg, const DesignConfig& dc, const Design& design) {
    cfg.check_keys("scenario", {"stages", "users", "slots", "estimator", "window", "lambda", "initial_qv", "step",
                                "alpha", "step_a", "step_t0", "step_kappa", "seed", "freeze_during_window",
                                "utility_lambda", "initial_p", "adapt"});
    Scenario sc;
    sc.channel = dc.channel;
    sc.design = design;
    if (const auto* v = cfg.find("scenario", "stages")) {
        sc.stages = parse_stages(cfg, *v);
    } else {
        const long users = cfg.get_long("scenario", "users", 8);
        const long slots = cfg.get_long("scenario", "slots", 3000);
        if (users < 1) throw cfg.invalid("scenario", "users", "need at least one user");
        if (slots < 1) throw cfg.invalid("scenario", "slots", "need at least one slot");
        sc.stages = {{slots, static_cast<int>(users)}};
    }
    if (const auto* v = cfg.find("scenario", "estimator")) {
        try {
            sc.estimator.kind = estimator_kind_from_string(v->text);
        } catch (const std::invalid_argument& e) {
            throw cfg.invalid(*v, e.what());
        }
    }
    sc.estimator.window = static_cast<int>(cfg.get_long("scenario", "window", sc.estimator.window));
    sc.estimator.lambda = cfg.get_double("scenario", "lambda", sc.estimator.lambda);
    sc.estimator.initial = cfg.get_double("scenario", "initial_qv", sc.estimator.initial);
    const std::string step = cfg.get_string("scenario", "step", "constant");
    if (step == "constant") {
        sc.step = StepSchedule::constant(cfg.get_double("scenario", "alpha", 0.05));
    } else if (step == "decreasing") {
        sc.step = StepSchedule::decreasing(cfg.get_double("scenario", "step_a", 1.0), cfg.get_double("scenario", "step_t0", 1.0),
                                           cfg.get_double("scenario", "step_kappa", 1.0));
    } else {
        throw cfg.invalid("scenario", "step", "step must be 'constant' or 'decreasing'");
    }
    sc.seed = static_cast<std::uint64_t>(cfg.get_long("scenario", "seed", 1));
    if (cfg.has("scenario", "freeze_during_window")) sc.freeze_during_window = cfg.get_bool("scenario", "freeze_during_window", false);
    sc.utility_lambda = cfg.get_double("scenario", "utility_lambda", sc.utility_lambda);
    if (const auto* v = cfg.find("scenario", "initial_p")) {
        const double p = cfg.to_double(*v, v->text);
        if (!(p >= 0.0 && p <= 1.0)) throw cfg.invalid(*v, "initial_p must lie in [0,1]");
        sc.initial_profile = TransmitProfile{p, design_initial_direction(design)};
    }
    sc.adapt = cfg.get_bool("scenario", "adapt", true);
    try {
        validate_scenario(sc, build_channel(sc.channel));
    } catch (const std::invalid_argument& e) {
        throw cfg.invalid("scenario", "stages", e.what());
    }
    return sc;
}

}  // namespace vpmac
