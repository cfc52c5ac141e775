// config.cpp

#include "hybridep/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

namespace hybridep {

namespace {

namespace pt = boost::property_tree;

const std::vector<std::string> kSections{"spectrum", "ep_scan", "cat_locus", "evolve", "wigner", "hp_compare"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Plain number, or a multiple of pi such as "pi/2", "3*pi/4", "-pi".
double to_double(const std::string& section, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    static const std::regex pi_form(R"(^([+-]?[0-9]*\.?[0-9]*(?:[eE][+-]?[0-9]+)?)\s*\*?\s*pi\s*(?:/\s*([0-9]*\.?[0-9]+))?$)");
    std::smatch m;
    if (std::regex_match(v, m, pi_form)) {
        std::string coef = m[1].str();
        double c = 1.0;
        if (coef == "-")
            c = -1.0;
        else if (!coef.empty() && coef != "+")
            c = std::stod(coef);
        const double den = m[2].matched ? std::stod(m[2].str()) : 1.0;
        return c * std::numbers::pi / den;
    }
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": not a number: '" + v + "'");
    }
}

int to_int(const std::string& section, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return static_cast<int>(d);
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": not an integer: '" + v + "'");
    }
}

std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

class Section {
public:
    Section(std::string name, const pt::ptree* tree, std::set<std::string> allowed)
        : name_(std::move(name)), tree_(tree) {
        if (!tree_) return;
        for (const auto& [k, v] : *tree_) {
            if (!v.empty()) throw ConfigError("[" + name_ + "] " + k + ": nested keys are not supported");
            if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in section [" + name_ + "]");
        }
    }

    std::optional<std::string> raw(const std::string& key) const {
        if (!tree_) return std::nullopt;
        const auto it = tree_->find(key);
        if (it == tree_->not_found()) return std::nullopt;
        return it->second.data();
    }
    bool has(const std::string& key) const { return raw(key).has_value(); }

    void number(const std::string& key, double& out) const {
        if (auto r = raw(key)) out = to_double(name_, key, *r);
    }
    void integer(const std::string& key, int& out) const {
        if (auto r = raw(key)) out = to_int(name_, key, *r);
    }
    double required_number(const std::string& key) const {
        auto r = raw(key);
        if (!r) throw ConfigError("missing required field '" + key + "' in section [" + name_ + "]");
        return to_double(name_, key, *r);
    }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    const pt::ptree* tree_;
};

Block parse_block(const Section& s, const std::string& v) {
    if (v == "even" || v == "-" || v == "minus") return Block::even;
    if (v == "odd" || v == "+" || v == "plus") return Block::odd;
    throw ConfigError("[" + s.name() + "] block: expected even|odd|both, got '" + v + "'");
}

void read_initial(const Section& s, InitialStateSpec& init) {
    s.integer("qubit_k", init.qubit_k);
    s.number("theta", init.theta);
    s.number("phi", init.phi);
    if (init.qubit_k != 0 && init.qubit_k != 1) throw ConfigError("[" + s.name() + "] qubit_k must be 0 or 1");
    if (init.theta < 0.0 || init.theta > std::numbers::pi + 1e-12)
        throw ConfigError("[" + s.name() + "] theta must lie in [0, pi]");
}

std::optional<AxisRange> read_range(const Section& s, const std::string& prefix, SweepAxis axis, AxisRange dflt,
                                    bool always) {
    const bool any = s.has(prefix + "_min") || s.has(prefix + "_max") || s.has(prefix + "_step");
    if (!any && !always) return std::nullopt;
    AxisRange r = dflt;
    r.axis = axis;
    s.number(prefix + "_min", r.min);
    s.number(prefix + "_max", r.max);
    s.number(prefix + "_step", r.step);
    try {
        r.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("[" + s.name() + "] " + e.what());
    }
    return r;
}

nlohmann::ordered_json range_json(const AxisRange& r) { return {{"min", r.min}, {"max", r.max}, {"step", r.step}}; }

nlohmann::ordered_json initial_json(const InitialStateSpec& i) {
    return {{"qubit_k", i.qubit_k}, {"theta", i.theta}, {"phi", i.phi}};
}

}  // namespace

std::vector<double> EvolveConfig::grid() const { return linspace(t_start, t_end, static_cast<std::size_t>(steps)); }

std::string section_for_command(const std::string& subcommand) {
    std::string s = subcommand;
    for (auto& c : s)
        if (c == '-') c = '_';
    return s;
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(const std::string& text, const std::optional<std::string>& expected_section) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }

    RunConfig cfg;
    for (const auto& [name, sub] : tree)
        if (sub.empty() && !sub.data().empty())
            throw ConfigError("unknown key '" + name + "' outside any section");

    // The ptree reader drops sections without keys, so headers are taken from the text.
    std::vector<std::string> present;
    {
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) {
            const std::string l = trim(line);
            if (l.size() < 2 || l.front() != '[' || l.back() != ']') continue;
            const std::string name = trim(l.substr(1, l.size() - 2));
            if (name == "model") continue;
            if (std::find(kSections.begin(), kSections.end(), name) == kSections.end())
                throw ConfigError("unknown section [" + name + "]");
            if (std::find(present.begin(), present.end(), name) == present.end()) present.push_back(name);
        }
    }
    if (present.empty()) throw ConfigError("no subcommand section; expected one of [spectrum], [ep_scan], [cat_locus], [evolve], [wigner], [hp_compare]");
    if (present.size() > 1) throw ConfigError("exactly one subcommand section allowed, found [" + present[0] + "] and [" + present[1] + "]");
    if (expected_section) {
        if (present.empty() || present[0] != *expected_section)
            throw ConfigError("missing section [" + *expected_section + "] for this subcommand");
    }
    if (!present.empty()) cfg.command = present[0];

    auto child = [&](const std::string& name) -> const pt::ptree* {
        const auto it = tree.find(name);
        return it == tree.not_found() ? nullptr : &it->second;
    };

    // model
    {
        const Section s("model", child("model"), {"epsilon", "delta", "delta_ratio", "D", "E", "g", "alpha", "N"});
        ModelParams& p = cfg.model;
        s.number("D", p.zero_field_D);
        s.number("E", p.strain_E);
        s.number("g", p.coupling_g);
        s.number("alpha", p.asymmetry_alpha);
        s.number("epsilon", p.epsilon);
        s.integer("N", p.ensemble_size_N);
        if (s.has("delta") && s.has("delta_ratio")) throw ConfigError("[model] give either delta or delta_ratio, not both");
        p.delta = 2.0 * p.zero_field_D;
        s.number("delta", p.delta);
        if (s.has("delta_ratio")) {
            double r = 0.0;
            s.number("delta_ratio", r);
            p.delta = 2.0 * r * p.zero_field_D;
        }
        try {
            p.validate();
        } catch (const ModelError& e) {
            throw ConfigError(std::string("[model] ") + e.what());
        }
    }

    if (cfg.command == "spectrum") {
        const Section s("spectrum", child("spectrum"), {"param", "min", "max", "step"});
        if (auto v = s.raw("param")) {
            const std::string p = trim(*v);
            if (p == "alpha") cfg.spectrum.param = SweepAxis::alpha;
            else if (p == "gamma") cfg.spectrum.param = SweepAxis::gamma;
            else if (p == "d_minus") cfg.spectrum.param = SweepAxis::d_minus;
            else throw ConfigError("[spectrum] param: expected alpha|gamma|d_minus, got '" + p + "'");
        }
        s.number("min", cfg.spectrum.min);
        s.number("max", cfg.spectrum.max);
        s.number("step", cfg.spectrum.step);
        if (!(cfg.spectrum.step > 0.0) || !(cfg.spectrum.max >= cfg.spectrum.min))
            throw ConfigError("[spectrum] need step > 0 and max >= min");
    } else if (cfg.command == "ep_scan") {
        const Section s("ep_scan", child("ep_scan"),
                        {"mode", "block", "alpha_min", "alpha_max", "alpha_step", "gamma_min", "gamma_max", "gamma_step",
                         "d_minus", "n_values", "gamma_N"});
        auto& e = cfg.ep_scan;
        if (auto v = s.raw("mode")) {
            const std::string m = trim(*v);
            if (m == "alpha_gamma") e.mode = EpScanMode::alpha_gamma;
            else if (m == "n_sweep") e.mode = EpScanMode::n_sweep;
            else throw ConfigError("[ep_scan] mode: expected alpha_gamma|n_sweep, got '" + m + "'");
        }
        if (auto v = s.raw("block")) {
            const std::string b = trim(*v);
            e.blocks = (b == "both") ? std::vector<Block>{Block::even, Block::odd} : std::vector<Block>{parse_block(s, b)};
        }
        if (e.mode == EpScanMode::n_sweep) e.alpha = {SweepAxis::alpha, 0.0, 1.0, 2e-3};
        e.alpha = *read_range(s, "alpha", SweepAxis::alpha, e.alpha, true);
        e.gamma = read_range(s, "gamma", SweepAxis::gamma, {SweepAxis::gamma, 0.0, 2.0, 1e-2}, false);
        if (auto v = s.raw("d_minus"))
            for (const auto& item : split_list(*v)) e.d_minus.push_back(to_double("ep_scan", "d_minus", item));
        if (auto v = s.raw("n_values")) {
            e.n_values.clear();
            for (const auto& item : split_list(*v)) {
                const int n = to_int("ep_scan", "n_values", item);
                if (n < 1) throw ConfigError("[ep_scan] n_values must be positive");
                e.n_values.push_back(n);
            }
        }
        if (s.has("gamma_N")) {
            double g = 0.0;
            s.number("gamma_N", g);
            e.gamma_N = g;
        }
    } else if (cfg.command == "cat_locus") {
        const Section s("cat_locus", child("cat_locus"),
                        {"alpha_min", "alpha_max", "alpha_step", "gamma_min", "gamma_max", "gamma_step", "qubit_k",
                         "theta", "phi", "steady_t"});
        auto& c = cfg.cat_locus;
        c.alpha = *read_range(s, "alpha", SweepAxis::alpha, c.alpha, true);
        c.gamma = read_range(s, "gamma", SweepAxis::gamma, {SweepAxis::gamma, 0.0, 2.0, 1e-2}, false);
        read_initial(s, c.initial);
        s.number("steady_t", c.steady_t);
        if (!(c.steady_t > 100.0)) throw ConfigError("[cat_locus] steady_t must exceed the 100 ns steadiness window");
    } else if (cfg.command == "evolve") {
        const Section s("evolve", child("evolve"), {"qubit_k", "theta", "phi", "t_start", "t_end", "steps", "method"});
        auto& e = cfg.evolve;
        read_initial(s, e.initial);
        s.number("t_start", e.t_start);
        e.t_end = s.required_number("t_end");
        s.integer("steps", e.steps);
        if (auto v = s.raw("method")) {
            const std::string m = trim(*v);
            if (m == "spectral") e.method = PropagatorMethod::spectral;
            else if (m == "jordan") e.method = PropagatorMethod::jordan;
            else if (m == "exponential") e.method = PropagatorMethod::exponential;
            else throw ConfigError("[evolve] method: expected spectral|jordan|exponential, got '" + m + "'");
        }
        if (e.t_start < 0.0) throw ConfigError("[evolve] t_start must be >= 0");
        if (e.steps < 2 || !(e.t_end > e.t_start)) throw ConfigError("[evolve] time grid must be strictly increasing (steps >= 2, t_end > t_start)");
    } else if (cfg.command == "wigner") {
        const Section s("wigner", child("wigner"), {"qubit_k", "theta", "phi", "t", "n_theta", "n_phi"});
        auto& w = cfg.wigner;
        read_initial(s, w.initial);
        w.t = s.required_number("t");
        s.integer("n_theta", w.n_theta);
        s.integer("n_phi", w.n_phi);
        if (w.t < 0.0) throw ConfigError("[wigner] t must be >= 0");
        if (w.n_theta < 32 || w.n_phi < 64) throw ConfigError("[wigner] grid must be at least n_theta=32, n_phi=64");
    } else if (cfg.command == "hp_compare") {
        const Section s("hp_compare", child("hp_compare"), {"n_max", "manifolds"});
        if (s.has("n_max")) {
            int n = 0;
            s.integer("n_max", n);
            if (n < 2) throw ConfigError("[hp_compare] n_max must be >= 2");
            cfg.hp_compare.n_max = n;
        }
        s.integer("manifolds", cfg.hp_compare.manifolds);
        if (cfg.hp_compare.manifolds < 1) throw ConfigError("[hp_compare] manifolds must be >= 1");
    }
    return cfg;
}

std::string RunConfig::echo() const {
    nlohmann::ordered_json j;
    j["model"] = {{"epsilon", model.epsilon},          {"delta", model.delta},
                  {"D", model.zero_field_D},           {"E", model.strain_E},
                  {"g", model.coupling_g},             {"alpha", model.asymmetry_alpha},
                  {"N", model.ensemble_size_N}};
    j["command"] = command;
    j["normalization"] = normalization == Normalization::unit ? "unit" : "trace";
    nlohmann::ordered_json s;
    if (command == "spectrum") {
        s = {{"param", to_string(spectrum.param)}, {"min", spectrum.min}, {"max", spectrum.max}, {"step", spectrum.step}};
    } else if (command == "ep_scan") {
        s["mode"] = ep_scan.mode == EpScanMode::alpha_gamma ? "alpha_gamma" : "n_sweep";
        std::vector<std::string> b;
        for (Block x : ep_scan.blocks) b.push_back(x == Block::even ? "even" : "odd");
        s["blocks"] = b;
        s["alpha"] = range_json(ep_scan.alpha);
        if (ep_scan.gamma) s["gamma"] = range_json(*ep_scan.gamma);
        s["d_minus"] = ep_scan.d_minus;
        s["n_values"] = ep_scan.n_values;
        if (ep_scan.gamma_N) s["gamma_N"] = *ep_scan.gamma_N;
    } else if (command == "cat_locus") {
        s["alpha"] = range_json(cat_locus.alpha);
        if (cat_locus.gamma) s["gamma"] = range_json(*cat_locus.gamma);
        s["initial"] = initial_json(cat_locus.initial);
        s["steady_t"] = cat_locus.steady_t;
    } else if (command == "evolve") {
        s = {{"initial", initial_json(evolve.initial)},
             {"t_start", evolve.t_start},
             {"t_end", evolve.t_end},
             {"steps", evolve.steps},
             {"method", to_string(evolve.method)}};
    } else if (command == "wigner") {
        s = {{"initial", initial_json(wigner.initial)}, {"t", wigner.t}, {"n_theta", wigner.n_theta}, {"n_phi", wigner.n_phi}};
    } else if (command == "hp_compare") {
        s["n_max"] = hp_compare.n_max.value_or(default_hp_truncation(model.ensemble_size_N));
        s["manifolds"] = hp_compare.manifolds;
    }
    if (!command.empty()) j[command] = s;
    return j.dump();
}

std::string RunConfig::hash() const { return fnv1a_hex(echo()); }

}  // namespace hybridep
