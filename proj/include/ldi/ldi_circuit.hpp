#pragma once

#include "ldi/netlist.hpp"
#include "ldi/solver.hpp"

namespace ldi {

// Circuit-level calibration applied by build_ldi to its devices. The device
// characterization presets are untouched; these tune the one parameter the
// datasheets do not pin (subthreshold swing) and an overall drive scale so
// the synapse's time constants land in the reference range. See README
// ("Calibration") for how the values were chosen.
inline constexpr double LDI_CAL_SS_P = 2.6;     // V/decade, p-type devices
inline constexpr double LDI_CAL_SS_N = 1.5;     // V/decade, M_pre
inline constexpr double LDI_CAL_DRIVE = 3.5;    // multiplies channel K

struct LdiConfig {
    double v_dd = 15.0;    // V
    double v_tau = 9.0;    // V, gate of M_tau
    double v_w = 10.0;     // V, gate of M_W (weight)
    double c_syn = 10e-9;  // F
    Bend bend = Bend::Flat;
    PulseTrain pulse = {4.0, 2.0, 10.0, -10.0, 18, PulsePhase::HighFirst};
    // Effective switching threshold for the n-type input switch so that a
    // +/-10 V gate drive turns it fully on/off with margin.
    double mpre_effective_vt = 3.0;
    // Calibration knobs (defaults above).
    double ss_p = LDI_CAL_SS_P;
    double ss_n = LDI_CAL_SS_N;
    double drive_scale = LDI_CAL_DRIVE;

    void validate() const; // throws ConfigError
};

// Four-transistor log-domain integrator. Node names: vdd, gtau, gw, pre,
// syn, mid. Sources: vdd, vtau, vw, pre (the pulse). M_tau sources current
// into the syn node; the M_W / M_pre stack pulls it down while the pulse is
// high; M_syn mirrors V_syn into the probed output current i_syn (reported
// positive), its drain grounded through an ideal ammeter.
Netlist build_ldi(const LdiConfig& cfg);

struct BiasMarginReport {
    double v_syn_rest = 0.0;      // V, quiescent V_syn
    double i_tau_quiescent = 0.0; // A, M_tau current actually flowing at rest
    double i_tau_capability = 0.0;// A, M_tau sourcing capability at |V_DS| = 1 V
    double i_off_floor = 0.0;     // A, n-type OFF floor it must beat
    bool pass = false;
};

// Checks that M_tau can out-source the input switch's OFF floor while
// staying within a drain-source drop of 1 V (the retention condition).
BiasMarginReport bias_margin_check(const LdiConfig& cfg,
                                   const SolverConfig& solver = {});

} // namespace ldi
