#pragma once

#include <map>
#include <string>
#include <vector>

#include "ldi/fitting.hpp"
#include "ldi/ldi_circuit.hpp"
#include "ldi/solver.hpp"

namespace ldi {

// One parsed `key = value` line.
struct IniEntry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

// Plain-text config: `[section]` headers over `key = value` lines, `#` or
// `;` comments. Duplicate keys within a section are rejected.
struct IniFile {
    std::string path; // for error messages
    std::vector<IniEntry> entries;
};

IniFile parse_ini_file(const std::string& path);
IniFile parse_ini_text(const std::string& text, const std::string& path = "<string>");

// Everything one simulation + estimation run needs.
struct RunConfig {
    LdiConfig ldi;
    SolverConfig solver;
    PsoConfig pso;
    double sample_dt = 1e-3; // s, uniform resampling grid for traces
    int discard_first = 1;   // warm-up cycles dropped before fitting
};

// Applies every entry onto defaults; unknown sections/keys or malformed
// values throw ConfigError naming the offending line.
RunConfig run_config_from_ini(const IniFile& ini);

// Applies one `key=value` or `section.key=value` override in place.
void apply_override(RunConfig& cfg, const std::string& assignment);

// Strict scalar parsers (whole string must convert).
double parse_double(const std::string& text);
int parse_int(const std::string& text);
bool parse_bool(const std::string& text);
std::vector<double> parse_double_list(const std::string& text); // comma-separated
Bend parse_bend(const std::string& text);

} // namespace ldi
