#pragma once

#include "ldi/netlist.hpp"
#include "ldi/trace.hpp"

#include <map>
#include <string>
#include <vector>

namespace ldi {

enum class Method { BackwardEuler, Trapezoidal };

struct SolverConfig {
    Method method = Method::BackwardEuler;
    double dt_initial = 1e-3;  // s
    double dt_min = 1e-9;      // s
    double dt_max = 1e-2;      // s
    double newton_abs_tol = 1e-12;   // A
    double newton_rel_tol = 1e-6;    // relative to the largest element current
    // The damping clamp caps voltage travel per iteration, so the budget has
    // to cover worst-case node excursions (a +/-20 V stimulus edge) at
    // voltage_step_limit volts per iteration plus the quadratic tail.
    int max_newton_iters = 200;
    double voltage_step_limit = 0.5; // V, per-update damping clamp
    double lte_tol = 1e-4;     // V, step-doubling error estimate on capacitor nodes
    double dt_growth = 1.5;    // applied after comfortably accurate steps
    // Step-doubling both controls the timestep and hands back the two-half-step
    // solution. Disable for fixed-step convergence-order studies.
    bool use_step_doubling = true;
    bool record_raw = false;   // keep every accepted point + per-step diagnostics

    void validate() const;     // throws InvalidInput on inconsistent settings
};

struct CircuitState {
    double time = 0.0;
    std::vector<double> v;       // per node, v[GROUND] == 0
    std::vector<double> src_i;   // branch current per voltage source, A
    std::vector<double> cap_i;   // last companion current per capacitor, A
    std::vector<HysteresisState> hyst; // per transistor
};

// Blank state for a netlist: node voltages from `node_v` (absent -> 0 V),
// hysteresis copied from the netlist's initial states.
CircuitState initial_state(const Netlist& nl,
                           const std::map<std::string, double>& node_v = {});

enum class DcSources {
    Rest,   // pulse sources held at their inactive level
    AtTime, // waveforms evaluated at a given instant
};

// Newton solve with capacitors open; falls back to source-stepping
// continuation when the cold start diverges. Throws ConvergenceError.
CircuitState dc_operating_point(const Netlist& nl, const SolverConfig& cfg,
                                DcSources mode = DcSources::Rest, double t0 = 0.0);

struct Sampler {
    double uniform_dt = 1e-3;  // s, output grid spacing
    // Node names to export as v_node_<name> columns; empty = all non-ground.
    std::vector<std::string> node_columns;
};

// Per-accepted-step diagnostics, kept when record_raw is set.
struct RawPoint {
    double t = 0.0;
    double dt = 0.0;           // size of the step that produced this point
    int newton_iters = 0;
    double residual = 0.0;     // worst KCL residual, A
    double lte = 0.0;          // step-doubling estimate, V (0 when disabled)
    std::vector<double> v;     // all node voltages
    std::vector<double> cap_i; // companion currents at this point
};

struct TransientResult {
    Trace trace;                  // uniform grid per Sampler
    CircuitState final_state;
    std::vector<RawPoint> raw;    // empty unless record_raw
    long total_newton_iters = 0;
    long accepted_steps = 0;
    long rejected_steps = 0;
};

// Advance from state0 to t_end. Time points are forced at every stimulus
// edge and step control restarts there; each accepted state meets the
// Newton residual tolerance. Throws ConvergenceError on dt underflow.
TransientResult transient(const Netlist& nl, const CircuitState& state0,
                          const SolverConfig& cfg, double t_end,
                          const Sampler& sampler);

// Drain current of one transistor evaluated at a state's node voltages.
double transistor_current(const Netlist& nl, const CircuitState& st, int index);

// All probe readings (scale applied) at a state.
std::vector<double> probe_currents(const Netlist& nl, const CircuitState& st);

// Linear resistor built from a channel-dead transistor whose OFF floor
// provides the conductance: i(a->b) = g * (v_a - v_b).
void add_floor_resistor(NetlistBuilder& builder, const std::string& name,
                        double g_siemens, NodeId a, NodeId b);

} // namespace ldi
