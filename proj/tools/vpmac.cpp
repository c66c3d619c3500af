// vpmac: design verification and simulation front end.
//
//   vpmac design --config configs/two_rate.ini --out two_rate.json
//   vpmac verify --preset fading
//   vpmac run --preset fig6_threestage_throughput --seed 1 --out fig6.csv
//
// Exit codes: 0 success, 1 validation failure, 2 I/O or parse error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "vpmac/vpmac.hpp"

namespace {

using namespace vpmac;

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kIo = 2;

struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string preset;
    std::string design_file;
    std::string out;
    std::uint64_t seed = 1;
    long slots = 0;
    long decimate = 1;
    long tail = 500;
    int k_max = 30;
    bool seed_given = false;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::ios_base::failure("cannot open '" + path + "' for writing");
    return f;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    auto f = open_out(path);
    f << text;
    if (!f) throw std::ios_base::failure("failed writing '" + path + "'");
}

struct Loaded {
    Design design;
    ChannelSpec channel;
    std::shared_ptr<const LinkChannel> link;
    std::optional<Config> cfg;
    std::optional<DesignConfig> dc;
    double lipschitz_limit = 10.0;
};

Loaded load_design(const Options& o) {
    Loaded l;
    if (!o.design_file.empty()) {
        std::ifstream f(o.design_file);
        if (!f) throw std::ios_base::failure("cannot open design file '" + o.design_file + "'");
        auto doc = design_from_json(Json::parse(f));
        l.design = std::move(doc.design);
        l.channel = std::move(doc.channel);
    } else if (!o.config.empty()) {
        l.cfg = Config::load(o.config);
        l.dc = design_config_from(*l.cfg);
        l.lipschitz_limit = l.dc->lipschitz_limit;
        try {
            auto built = build_design(*l.dc);
            l.design = std::move(built.design);
        } catch (const DesignError& e) {
            throw ValidationFailure(e.what());
        }
        l.channel = l.dc->channel;
    } else if (!o.preset.empty()) {
        auto p = presets::design_preset(o.preset);
        l.design = std::move(p.design);
        l.channel = std::move(p.channel);
    } else {
        throw std::invalid_argument("need --config, --preset or --design");
    }
    l.link = std::make_shared<const LinkChannel>(build_channel(l.channel));
    return l;
}

void print_design_summary(std::ostream& os, const Design& d) {
    auto single = [&os](const std::string& tag, const SingleOptionDesign& s) {
        os << tag << "x*=" << format_number(s.x_star) << " b=" << format_number(s.b) << " J_eps=" << s.j_eps
           << " gamma_eps=" << format_number(s.gamma_eps) << " p_max=" << format_number(s.p_max) << "\n";
    };
    if (const auto* s = std::get_if<SingleOptionDesign>(&d)) {
        single("single: ", *s);
        return;
    }
    const auto& m = std::get<MultiOptionDesign>(d);
    single("head:   ", m.head);
    single("tail:   ", m.tail);
    os << "range:  K_lower=" << m.k_lower << " K_upper=" << m.k_upper << " pinpoints=";
    for (std::size_t i = 0; i < m.pinpoints.size(); ++i) os << (i ? "," : "") << m.pinpoints[i].k_hat;
    os << "\n";
}

int cmd_design(const Options& o) {
    const auto l = load_design(o);
    print_design_summary(std::cout, l.design);
    const auto rep = verify_design(l.design, *l.link, o.k_max, l.lipschitz_limit);
    std::cout << rep.to_string();
    if (!o.out.empty()) write_output(o.out, design_to_string(l.design, l.channel));
    if (!rep.passed()) throw ValidationFailure("verification failed: " + rep.first_failure()->name);
    return kOk;
}

int cmd_verify(const Options& o) {
    const auto l = load_design(o);
    print_design_summary(std::cout, l.design);
    const auto rep = verify_design(l.design, *l.link, o.k_max, l.lipschitz_limit);
    std::cout << rep.to_string();
    if (!rep.passed()) throw ValidationFailure("verification failed: " + rep.first_failure()->name);
    return kOk;
}

/// Truncates or extends the stage list to exactly `slots` slots.
void resize_scenario(Scenario& sc, long slots) {
    long total = 0;
    std::vector<Stage> out;
    for (const auto& s : sc.stages) {
        if (total >= slots) break;
        Stage t = s;
        t.duration = std::min(t.duration, slots - total);
        total += t.duration;
        out.push_back(t);
    }
    if (total < slots) out.back().duration += slots - total;
    sc.stages = out;
}

void print_run_summary(std::ostream& os, const Scenario& sc, const Trace& tr, long tail) {
    os << "summary:\n";
    const auto& last = tr.records.back();
    os << "  slots=" << tr.records.size() << " seed=" << tr.seed << " rng=" << kRngName << "\n";
    os << "  final_target=";
    for (std::size_t i = 0; i < last.target.size(); ++i) os << (i ? "," : "") << format_number(last.target[i]);
    os << " final_mean_profile=";
    for (std::size_t i = 0; i < last.mean_profile.size(); ++i) os << (i ? "," : "") << format_number(last.mean_profile[i]);
    os << "\n";
    const auto channel = build_channel(sc.channel);
    for (std::size_t s = 0; s < tr.stage_starts.size(); ++s) {
        const long first = tr.stage_starts[s];
        const long end = s + 1 < tr.stage_starts.size() ? tr.stage_starts[s + 1] - 1 : static_cast<long>(tr.records.size());
        const long from = std::max(first, end - tail + 1);
        const int users = tr.records[static_cast<std::size_t>(end - 1)].users;
        const auto eq = equilibrium_profile(sc.design, users);
        const auto eqv = eq.as_vector();
        std::vector<double> avg(eqv.size(), 0.0);
        double util = 0.0, util_ema = 0.0;
        for (long t = from; t <= end; ++t) {
            const auto& r = tr.records[static_cast<std::size_t>(t - 1)];
            for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += r.target[i];
            util += r.utility;
            util_ema += r.utility_ema;
        }
        const double n = static_cast<double>(end - from + 1);
        for (double& v : avg) v /= n;
        const double eq_util = utility_eval(design_utility(sc.design), channel, users, eq);
        os << "  stage " << s + 1 << ": slots " << first << "-" << end << " K=" << users << " tail_window=" << n
           << " mean_utility=" << format_number(util / n) << " mean_utility_ema=" << format_number(util_ema / n)
           << " equilibrium_utility=" << format_number(eq_util)
           << " target_distance=" << format_number(euclidean_distance(avg, eqv)) << "\n";
    }
}

int cmd_run(const Options& o) {
    if (o.decimate < 1) throw std::invalid_argument("--decimate must be >= 1");
    if (!o.preset.empty() && o.config.empty()) {
        const auto& names = presets::figure_names();
        if (std::find(names.begin(), names.end(), o.preset) == names.end())
            throw std::invalid_argument("unknown run preset '" + o.preset + "'");
        if (!presets::is_trace_figure(o.preset)) {
            std::ostringstream os;
            presets::write_table_csv(os, presets::figure_table(o.preset));
            write_output(o.out, os.str());
            if (!o.out.empty()) std::cout << "wrote " << o.out << "\n";
            return kOk;
        }
        Scenario sc = presets::figure_scenario(o.preset, o.seed);
        if (o.slots > 0) resize_scenario(sc, o.slots);
        const auto tr = run(sc);
        std::ostringstream os;
        write_trace_csv(os, tr, o.decimate, {{"preset", o.preset}});
        write_output(o.out, os.str());
        print_run_summary(o.out.empty() ? std::cerr : std::cout, sc, tr, o.tail);
        return kOk;
    }
    if (o.config.empty()) throw std::invalid_argument("run needs --preset or --config");
    Options design_opts = o;
    design_opts.preset.clear();
    const auto l = load_design(design_opts);
    Scenario sc = scenario_from_config(*l.cfg, *l.dc, l.design);
    if (o.seed_given) sc.seed = o.seed;
    if (o.slots > 0) resize_scenario(sc, o.slots);
    const auto tr = run(sc);
    std::ostringstream os;
    write_trace_csv(os, tr, o.decimate, {{"config", o.config}});
    write_output(o.out, os.str());
    print_run_summary(o.out.empty() ? std::cerr : std::cout, sc, tr, o.tail);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtual-packet contention MAC: design, verify and simulate"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "scenario/design config file");
        sub->add_option("--preset", o.preset, "named preset");
        sub->add_option("--out", o.out, "output file (default stdout)");
    };
    auto* design = app.add_subcommand("design", "build a design, verify it and write the design file");
    add_common(design);
    design->add_option("--kmax", o.k_max, "largest K for the fixed-point check");
    auto* verify = app.add_subcommand("verify", "verify a design without writing it");
    add_common(verify);
    verify->add_option("--design", o.design_file, "previously written design file");
    verify->add_option("--kmax", o.k_max, "largest K for the fixed-point check");
    auto* runc = app.add_subcommand("run", "simulate a scenario or produce figure data");
    add_common(runc);
    runc->add_option("--seed", o.seed, "random seed")->each([&o](const std::string&) { o.seed_given = true; });
    runc->add_option("--slots", o.slots, "total number of slots (truncates or extends the last stage)");
    runc->add_option("--decimate", o.decimate, "write every n-th slot");
    runc->add_option("--tail", o.tail, "tail window in slots for the summary means");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kIo;
    }
    try {
        if (*design) return cmd_design(o);
        if (*verify) return cmd_verify(o);
        return cmd_run(o);
    } catch (const ValidationFailure& e) {
        std::cerr << "validation: " << e.what() << "\n";
        return kValidation;
    } catch (const DesignError& e) {
        std::cerr << "validation: " << e.what() << "\n";
        return kValidation;
    } catch (const ConfigError& e) {
        std::cerr << (e.validation ? "validation: " : "parse: ") << e.what() << "\n";
        return e.validation ? kValidation : kIo;
    } catch (const Json::exception& e) {
        std::cerr << "parse: " << e.what() << "\n";
        return kIo;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io: " << e.what() << "\n";
        return kIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
}
