#include "ldi/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "ldi/errors.hpp"

namespace ldi {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

[[noreturn]] void fail_at(const IniFile& ini, const IniEntry& e, const std::string& msg) {
    throw ConfigError(ini.path + ":" + std::to_string(e.line) + ": " + msg);
}

} // namespace

double parse_double(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) throw ConfigError("empty number");
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + text + "'");
    }
    if (pos != t.size()) throw ConfigError("not a number: '" + text + "'");
    return v;
}

int parse_int(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) throw ConfigError("empty integer");
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(t, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not an integer: '" + text + "'");
    }
    if (pos != t.size()) throw ConfigError("not an integer: '" + text + "'");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& text) {
    std::string t = lower(trim(text));
    if (t == "true" || t == "1" || t == "on" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "off" || t == "no") return false;
    throw ConfigError("not a boolean: '" + text + "'");
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

Bend parse_bend(const std::string& text) {
    std::string t = lower(trim(text));
    if (t == "flat") return Bend::Flat;
    if (t == "bent") return Bend::Bent;
    throw ConfigError("bend must be 'flat' or 'bent', got '" + text + "'");
}

IniFile parse_ini_text(const std::string& text, const std::string& path) {
    IniFile ini;
    ini.path = path;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    std::set<std::pair<std::string, std::string>> seen;
    while (std::getline(in, line)) {
        ++line_no;
        auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": unterminated section header");
            section = lower(trim(line.substr(1, line.size() - 2)));
            if (section.empty())
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": empty section name");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        IniEntry e;
        e.section = section;
        e.key = lower(trim(line.substr(0, eq)));
        e.value = trim(line.substr(eq + 1));
        e.line = line_no;
        if (e.key.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        if (!seen.insert({e.section, e.key}).second)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": duplicate key '" + e.key + "' in section [" +
                              e.section + "]");
        ini.entries.push_back(std::move(e));
    }
    return ini;
}

IniFile parse_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_ini_text(buf.str(), path);
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

// Single source of truth for every accepted `section.key`.
const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"circuit.v_dd", [](RunConfig& c, const std::string& v) { c.ldi.v_dd = parse_double(v); }},
        {"circuit.v_tau", [](RunConfig& c, const std::string& v) { c.ldi.v_tau = parse_double(v); }},
        {"circuit.v_w", [](RunConfig& c, const std::string& v) { c.ldi.v_w = parse_double(v); }},
        {"circuit.c_syn_nf", [](RunConfig& c, const std::string& v) { c.ldi.c_syn = parse_double(v) * 1e-9; }},
        {"circuit.bend", [](RunConfig& c, const std::string& v) { c.ldi.bend = parse_bend(v); }},
        {"circuit.mpre_vt", [](RunConfig& c, const std::string& v) { c.ldi.mpre_effective_vt = parse_double(v); }},
        {"circuit.ss_p", [](RunConfig& c, const std::string& v) { c.ldi.ss_p = parse_double(v); }},
        {"circuit.ss_n", [](RunConfig& c, const std::string& v) { c.ldi.ss_n = parse_double(v); }},
        {"circuit.drive_scale", [](RunConfig& c, const std::string& v) { c.ldi.drive_scale = parse_double(v); }},
        {"pulse.period_s", [](RunConfig& c, const std::string& v) { c.ldi.pulse.period = parse_double(v); }},
        {"pulse.width_s", [](RunConfig& c, const std::string& v) { c.ldi.pulse.width = parse_double(v); }},
        {"pulse.level_high", [](RunConfig& c, const std::string& v) { c.ldi.pulse.level_high = parse_double(v); }},
        {"pulse.level_low", [](RunConfig& c, const std::string& v) { c.ldi.pulse.level_low = parse_double(v); }},
        {"pulse.n_cycles", [](RunConfig& c, const std::string& v) { c.ldi.pulse.n_cycles = parse_int(v); }},
        {"pulse.phase", [](RunConfig& c, const std::string& v) {
             std::string t = lower(trim(v));
             if (t == "high_first") c.ldi.pulse.phase = PulsePhase::HighFirst;
             else if (t == "low_first") c.ldi.pulse.phase = PulsePhase::LowFirst;
             else throw ConfigError("phase must be 'high_first' or 'low_first'");
         }},
        {"solver.method", [](RunConfig& c, const std::string& v) {
             std::string t = lower(trim(v));
             if (t == "be" || t == "backward_euler") c.solver.method = Method::BackwardEuler;
             else if (t == "tr" || t == "trapezoidal") c.solver.method = Method::Trapezoidal;
             else throw ConfigError("method must be 'be' or 'tr'");
         }},
        {"solver.dt_initial", [](RunConfig& c, const std::string& v) { c.solver.dt_initial = parse_double(v); }},
        {"solver.dt_min", [](RunConfig& c, const std::string& v) { c.solver.dt_min = parse_double(v); }},
        {"solver.dt_max", [](RunConfig& c, const std::string& v) { c.solver.dt_max = parse_double(v); }},
        {"solver.newton_abs_tol", [](RunConfig& c, const std::string& v) { c.solver.newton_abs_tol = parse_double(v); }},
        {"solver.newton_rel_tol", [](RunConfig& c, const std::string& v) { c.solver.newton_rel_tol = parse_double(v); }},
        {"solver.max_newton_iters", [](RunConfig& c, const std::string& v) { c.solver.max_newton_iters = parse_int(v); }},
        {"solver.voltage_step_limit", [](RunConfig& c, const std::string& v) { c.solver.voltage_step_limit = parse_double(v); }},
        {"solver.lte_tol", [](RunConfig& c, const std::string& v) { c.solver.lte_tol = parse_double(v); }},
        {"solver.dt_growth", [](RunConfig& c, const std::string& v) { c.solver.dt_growth = parse_double(v); }},
        {"solver.step_doubling", [](RunConfig& c, const std::string& v) { c.solver.use_step_doubling = parse_bool(v); }},
        {"solver.sample_dt", [](RunConfig& c, const std::string& v) { c.sample_dt = parse_double(v); }},
        {"pso.swarm_size", [](RunConfig& c, const std::string& v) { c.pso.swarm_size = parse_int(v); }},
        {"pso.iterations", [](RunConfig& c, const std::string& v) { c.pso.iterations = parse_int(v); }},
        {"pso.inertia", [](RunConfig& c, const std::string& v) { c.pso.inertia = parse_double(v); }},
        {"pso.cognitive", [](RunConfig& c, const std::string& v) { c.pso.cognitive = parse_double(v); }},
        {"pso.social", [](RunConfig& c, const std::string& v) { c.pso.social = parse_double(v); }},
        {"pso.tau_lo", [](RunConfig& c, const std::string& v) { c.pso.tau_lo = parse_double(v); }},
        {"pso.tau_hi", [](RunConfig& c, const std::string& v) { c.pso.tau_hi = parse_double(v); }},
        {"pso.seed", [](RunConfig& c, const std::string& v) {
             std::string t = trim(v);
             std::size_t pos = 0;
             unsigned long long s = 0;
             try {
                 s = std::stoull(t, &pos);
             } catch (const std::exception&) {
                 throw ConfigError("not a seed: '" + v + "'");
             }
             if (t.empty() || pos != t.size()) throw ConfigError("not a seed: '" + v + "'");
             c.pso.seed = static_cast<std::uint64_t>(s);
         }},
        {"fit.discard_first", [](RunConfig& c, const std::string& v) { c.discard_first = parse_int(v); }},
    };
    return table;
}

// Bare keys are unique across sections, so overrides may omit the section.
const std::map<std::string, std::string>& bare_key_index() {
    static const std::map<std::string, std::string> index = [] {
        std::map<std::string, std::string> m;
        for (const auto& [full, _] : setters()) {
            auto dot = full.find('.');
            m.emplace(full.substr(dot + 1), full);
        }
        return m;
    }();
    return index;
}

} // namespace

RunConfig run_config_from_ini(const IniFile& ini) {
    RunConfig cfg;
    const auto& table = setters();
    for (const auto& e : ini.entries) {
        auto it = table.find(e.section + "." + e.key);
        if (it == table.end())
            fail_at(ini, e, "unknown key '" + e.key + "' in section [" + e.section + "]");
        try {
            it->second(cfg, e.value);
        } catch (const ConfigError& err) {
            fail_at(ini, e, err.what());
        }
    }
    cfg.ldi.validate();
    cfg.solver.validate();
    cfg.pso.validate();
    if (!(cfg.sample_dt > 0.0)) throw ConfigError("sample_dt must be > 0");
    if (cfg.discard_first < 0) throw ConfigError("discard_first must be >= 0");
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value: '" + assignment + "'");
    std::string key = lower(trim(assignment.substr(0, eq)));
    std::string value = trim(assignment.substr(eq + 1));
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) {
        const auto& bare = bare_key_index();
        auto bit = bare.find(key);
        if (bit == bare.end())
            throw ConfigError("unknown config key: '" + key + "'");
        it = table.find(bit->second);
    }
    it->second(cfg, value);
}

} // namespace ldi
