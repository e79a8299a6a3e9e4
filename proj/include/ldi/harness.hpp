#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ldi/config.hpp"
#include "ldi/stats.hpp"

namespace ldi {

// One cell of an experiment matrix.
struct CellCondition {
    double c_syn_nf = 10.0;
    double v_w = 10.0;
    double period_s = 2.0;
    double width_s = 1.0;
    Bend bend = Bend::Flat;

    std::string dir_name() const; // e.g. "c10_w10_p2_flat"
    std::string label() const;    // human-readable
};

// Published statistics for one condition, in milliseconds.
struct ReferenceRecord {
    CellCondition cond;
    double min_ms = 0.0;
    double max_ms = 0.0;
    double median_ms = 0.0;
    double mean_ms = 0.0;
    std::string source; // reference table id
};

// All embedded reference rows; lookup by condition (nullopt if absent).
const std::vector<ReferenceRecord>& reference_records();
std::optional<ReferenceRecord> find_reference(const CellCondition& cond);

struct ExperimentSpec {
    std::string name;
    RunConfig base; // solver/pso/sampling defaults applied to every cell
    std::vector<double> c_syn_nf;
    std::vector<double> v_w;
    std::vector<std::pair<double, double>> period_width_s;
    std::vector<Bend> bends;
    std::string out_dir;

    void validate() const;                      // throws ConfigError
    std::vector<CellCondition> cells() const;   // full cross product
};

// Built-in matrices. `table2` is the single default operating point,
// `table3` spans capacitance x period x bend, `table6` spans weight
// voltage x period x bend.
ExperimentSpec named_spec(const std::string& name, const std::string& out_dir,
                          const RunConfig& base);

struct CellResult {
    CellCondition cond;
    std::string dir;
    bool ok = false;
    std::string error; // empty when ok
    double peak_i_syn = 0.0; // A
    std::vector<TauEstimate> charge_estimates;
    std::vector<TauEstimate> discharge_estimates;
    std::optional<TauStats> charge_stats;    // headline statistics
    std::optional<TauStats> discharge_stats; // reported, not compared
    std::optional<ReferenceRecord> reference;
};

struct HarnessCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct HarnessReport {
    std::string spec_name;
    std::uint64_t seed = 0;
    std::vector<CellResult> cells;
    std::vector<HarnessCheck> checks;
    bool all_cells_ok = false;
    bool all_checks_pass = false;
};

// Runs every cell (work pool capped by LDI_SIM_THREADS), writes
// trace.csv / estimates.csv / stats.csv per cell plus report.json at the
// top level, and evaluates the cross-cell ordering checks. Cell failures
// are recorded in the report, not thrown.
HarnessReport run_experiment(const ExperimentSpec& spec);

// report.json serialization (deterministic bytes for fixed inputs).
std::string report_to_json(const HarnessReport& report);

void write_estimates_csv(const std::string& path,
                         const std::vector<TauEstimate>& estimates);
void write_stats_csv(const std::string& path,
                     const std::optional<TauStats>& charge,
                     const std::optional<TauStats>& discharge);

} // namespace ldi
