#pragma once

// Versioned JSON form of designs. Output is deterministic (ordered keys,
// shortest round-trip doubles), so re-running a design reproduces the file
// byte for byte.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpmac/channel.hpp"
#include "vpmac/design_types.hpp"

namespace vpmac {

using Json = nlohmann::ordered_json;

inline constexpr const char* kDesignFormat = "vpmac-design";
inline constexpr int kDesignVersion = 1;

inline Json to_json(const ChannelSpec& c) {
    Json options = Json::array();
    for (const auto& o : c.options)
        options.push_back({{"rate", o.rate}, {"slot_equivalents", o.slot_equivalents}, {"energy_cost", o.energy_cost}});
    Json j{{"kind", to_string(c.kind)},
           {"state_capacities", c.state_capacities},
           {"state_probabilities", c.state_probabilities},
           {"options", options},
           {"virtual_slot_equivalents", c.virtual_slot_equivalents},
           {"max_parallel", c.max_parallel}};
    if (c.kind == ChannelKind::table) {
        j["c_r"] = c.table_c_r;
        j["c_v"] = c.table_c_v;
    }
    return j;
}

inline ChannelSpec channel_spec_from_json(const Json& j) {
    ChannelSpec c;
    c.kind = channel_kind_from_string(j.at("kind").get<std::string>());
    c.state_capacities = j.at("state_capacities").get<std::vector<double>>();
    c.state_probabilities = j.at("state_probabilities").get<std::vector<double>>();
    c.options.clear();
    for (const auto& o : j.at("options"))
        c.options.push_back({o.at("rate").get<double>(), o.at("slot_equivalents").get<double>(), o.at("energy_cost").get<double>()});
    c.virtual_slot_equivalents = j.at("virtual_slot_equivalents").get<double>();
    c.max_parallel = j.at("max_parallel").get<int>();
    if (j.contains("c_r")) c.table_c_r = j.at("c_r").get<std::vector<double>>();
    if (j.contains("c_v")) c.table_c_v = j.at("c_v").get<std::vector<double>>();
    return c;
}

inline Json to_json(const UtilitySpec& u) { return {{"kind", to_string(u.kind)}, {"energy_weight", u.energy_weight}}; }

inline UtilitySpec utility_from_json(const Json& j) {
    return {utility_kind_from_string(j.at("kind").get<std::string>()), j.at("energy_weight").get<double>()};
}

inline Json to_json(const SingleOptionDesign& d) {
    return {{"x_star", d.x_star},
            {"b", d.b},
            {"eps_v", d.eps_v},
            {"j_eps", d.j_eps},
            {"gamma_eps", d.gamma_eps},
            {"p_max", d.p_max},
            {"k_cap", d.k_cap},
            {"utility", to_json(d.utility)},
            {"direction", std::vector<double>(d.direction().entries().begin(), d.direction().entries().end())},
            {"c_v", d.params.c_v},
            {"c_r", d.params.c_r}};
}

inline SingleOptionDesign single_from_json(const Json& j, const std::vector<OptionSpec>& options) {
    SingleOptionDesign d;
    d.x_star = j.at("x_star").get<double>();
    d.b = j.at("b").get<double>();
    d.eps_v = j.at("eps_v").get<double>();
    d.j_eps = j.at("j_eps").get<int>();
    d.gamma_eps = j.at("gamma_eps").get<double>();
    d.p_max = j.at("p_max").get<double>();
    d.k_cap = j.at("k_cap").get<int>();
    d.utility = utility_from_json(j.at("utility"));
    d.params.direction = DirectionVector(j.at("direction").get<std::vector<double>>());
    d.params.c_v = j.at("c_v").get<std::vector<double>>();
    d.params.c_r = j.at("c_r").get<std::vector<std::vector<double>>>();
    d.params.options = options;
    return d;
}

/// Full design document: format tag, version, channel, and the design body.
inline Json design_to_json(const Design& design, const ChannelSpec& channel) {
    Json j{{"format", kDesignFormat}, {"version", kDesignVersion}, {"channel", to_json(channel)}};
    if (const auto* s = std::get_if<SingleOptionDesign>(&design)) {
        j["type"] = "single";
        j["single"] = to_json(*s);
        return j;
    }
    const auto& m = std::get<MultiOptionDesign>(design);
    Json pins = Json::array();
    for (std::size_t i = 0; i < m.pinpoints.size(); ++i) {
        const auto& p = m.pinpoints[i];
        pins.push_back({{"k_hat", p.k_hat},
                        {"p", p.profile.p},
                        {"d", std::vector<double>(p.profile.d.entries().begin(), p.profile.d.entries().end())},
                        {"qv_star", m.pinpoint_qv_star.at(i)}});
    }
    j["type"] = "multi";
    j["multi"] = {{"head", to_json(m.head)},
                  {"tail", to_json(m.tail)},
                  {"k_lower", m.k_lower},
                  {"k_upper", m.k_upper},
                  {"k_cap", m.k_cap},
                  {"eps_v", m.eps_v},
                  {"eps_q", m.eps_q},
                  {"p_lower", m.p_lower},
                  {"p_upper", m.p_upper},
                  {"steps_per_unit", m.steps_per_unit},
                  {"pinpoints", pins},
                  {"p_table", m.p_table},
                  {"qv_star_table", m.qv_star_table}};
    return j;
}

inline std::string design_to_string(const Design& design, const ChannelSpec& channel) {
    return design_to_json(design, channel).dump(2) + "\n";
}

struct LoadedDesign {
    Design design;
    ChannelSpec channel;
};

inline LoadedDesign design_from_json(const Json& j) {
    if (j.value("format", "") != kDesignFormat) throw std::invalid_argument("not a design document");
    if (j.value("version", 0) != kDesignVersion)
        throw std::invalid_argument("unsupported design version " + std::to_string(j.value("version", 0)));
    LoadedDesign out;
    out.channel = channel_spec_from_json(j.at("channel"));
    const auto& opts = out.channel.options;
    const std::string type = j.at("type").get<std::string>();
    if (type == "single") {
        out.design = single_from_json(j.at("single"), opts);
        return out;
    }
    if (type != "multi") throw std::invalid_argument("unknown design type '" + type + "'");
    const auto& b = j.at("multi");
    MultiOptionDesign m;
    m.head = single_from_json(b.at("head"), opts);
    m.tail = single_from_json(b.at("tail"), opts);
    m.k_lower = b.at("k_lower").get<int>();
    m.k_upper = b.at("k_upper").get<int>();
    m.k_cap = b.at("k_cap").get<int>();
    m.eps_v = b.at("eps_v").get<double>();
    m.eps_q = b.at("eps_q").get<double>();
    m.p_lower = b.at("p_lower").get<double>();
    m.p_upper = b.at("p_upper").get<double>();
    m.steps_per_unit = b.at("steps_per_unit").get<int>();
    for (const auto& p : b.at("pinpoints")) {
        m.pinpoints.push_back({p.at("k_hat").get<int>(),
                               TransmitProfile(p.at("p").get<double>(), DirectionVector(p.at("d").get<std::vector<double>>()))});
        m.pinpoint_qv_star.push_back(p.at("qv_star").get<double>());
    }
    m.p_table = b.at("p_table").get<std::vector<std::vector<double>>>();
    m.qv_star_table = b.at("qv_star_table").get<std::vector<double>>();
    m.channel = std::make_shared<const LinkChannel>(build_channel(out.channel));
    out.design = std::move(m);
    return out;
}

}  // namespace vpmac
