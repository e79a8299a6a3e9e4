#pragma once

#include <string>

namespace ldi {

enum class Polarity { P, N };
enum class Bend { Flat, Bent };

// Drain bias at which the OFF-current floor is quoted. The floor is modelled
// as a linear drain-source conductance g_off = i_off / V_REF_OFF.
inline constexpr double V_REF_OFF = 20.0; // V

// Compact-model parameters for one device. Geometry and dielectric use the
// units the datasheets use; they cancel to amperes inside kp().
struct OfetParams {
    Polarity polarity = Polarity::P;
    double v_t = 0.0;        // V, threshold in the device's own gate-axis convention
    double mobility = 0.0;   // cm^2/(V*s)
    double width = 1000.0;   // um
    double length = 100.0;   // um
    double c_diel = 6.6406e-9; // F/cm^2 (400 nm parylene, eps_r = 3.0)
    double ss = 1.5;         // V/decade, subthreshold swing (model knob)
    double i_off = 0.0;      // A, OFF floor measured at V_REF_OFF
    double lambda = 0.0;     // 1/V, output-conductance factor (0 = ideal saturation)

    void validate() const;   // throws InvalidInput on nonsense values

    // K = mu * c_diel * W/L in A/V^2 (cm^2 cancels between mu and c_diel).
    double kp() const { return mobility * c_diel * (width / length); }
    // Exponential slope voltage: ss volts per decade = ss/ln(10) volts per e-fold.
    double v_slope() const;
};

// Phenomenological slow threshold drift: delta_vt relaxes toward
// alpha * (gate overdrive) with time constant tau_trap. Disabled by default;
// a disabled state is inert and contributes nothing to the current.
struct HysteresisState {
    bool enabled = false;
    double delta_vt = 0.0;   // V, current threshold shift
    double tau_trap = 10.0;  // s
    double alpha = 0.1;      // dimensionless coupling
};

// Signed drain current (conventional current into the drain terminal).
// Smooth in both bias axes, exactly zero at v_ds = 0, exponential below
// threshold, square-law above, plus the linear OFF floor.
double drain_current(const OfetParams& p, const HysteresisState& h,
                     double v_gs, double v_ds);

struct Conductances {
    double g_m;   // d(I_D)/d(v_gs), A/V
    double g_ds;  // d(I_D)/d(v_ds), A/V
};

// Analytic partial derivatives of drain_current at the operating point.
Conductances conductances(const OfetParams& p, const HysteresisState& h,
                          double v_gs, double v_ds);

// Gate overdrive in the "more positive = more ON" internal frame, including
// any hysteresis shift. Exposed because the hysteresis target tracks it.
double gate_overdrive(const OfetParams& p, const HysteresisState& h,
                      double v_gs, double v_ds);

// First-order relaxation of the trap state over dt at the given overdrive.
HysteresisState step_hysteresis(const HysteresisState& h, double v_overdrive,
                                double dt);

// Embedded characterization presets (flat and mechanically-bent columns).
OfetParams flat_preset(Polarity pol);
OfetParams bent_preset(Polarity pol);
inline OfetParams preset(Polarity pol, Bend b) {
    return b == Bend::Bent ? bent_preset(pol) : flat_preset(pol);
}

const char* to_string(Polarity p);
const char* to_string(Bend b);

} // namespace ldi
