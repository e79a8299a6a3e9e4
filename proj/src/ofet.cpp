#include "ldi/ofet.hpp"
#include "ldi/errors.hpp"

#include <cmath>

namespace ldi {

namespace {

const double LN10 = std::log(10.0);

// Numerically safe softplus: ln(1 + e^y).
double softplus(double y) {
    if (y > 30.0) return y;              // e^-30 below double noise for our ranges
    if (y < -30.0) return std::exp(y);
    return std::log1p(std::exp(y));
}

double logistic(double y) {
    if (y >= 0.0) return 1.0 / (1.0 + std::exp(-y));
    double e = std::exp(y);
    return e / (1.0 + e);
}

// Effective overdrive: v_eff(x) -> x for x >> v_sl (square law), and
// v_eff^2 -> (2 v_sl)^2 e^(x/v_sl) for x << -v_sl (exponential tail).
double v_eff(double x, double v_sl) {
    return 2.0 * v_sl * softplus(x / (2.0 * v_sl));
}

double d_v_eff(double x, double v_sl) {
    return logistic(x / (2.0 * v_sl));
}

struct FrameBias {
    double u_gs; // gate-source in the internal frame (positive = more ON)
    double u_ds; // drain-source in the internal frame
    double sign; // maps frame current back to terminal current
};

// P-type devices are handled by mirroring both bias axes into an N-like
// frame and negating the resulting current. The stored v_t is already the
// frame threshold for both polarities (the P column is quoted positive).
FrameBias to_frame(const OfetParams& p, double v_gs, double v_ds) {
    if (p.polarity == Polarity::P) return {-v_gs, -v_ds, -1.0};
    return {v_gs, v_ds, 1.0};
}

double frame_threshold(const OfetParams& p, const HysteresisState& h) {
    return p.v_t + (h.enabled ? h.delta_vt : 0.0);
}

void check_finite(double v_gs, double v_ds) {
    if (!std::isfinite(v_gs) || !std::isfinite(v_ds))
        throw InvalidInput("drain_current: non-finite bias");
}

} // namespace

void OfetParams::validate() const {
    if (!(mobility > 0.0)) throw InvalidInput("OfetParams: mobility must be > 0");
    if (!(width > 0.0)) throw InvalidInput("OfetParams: width must be > 0");
    if (!(length > 0.0)) throw InvalidInput("OfetParams: length must be > 0");
    if (!(c_diel > 0.0)) throw InvalidInput("OfetParams: c_diel must be > 0");
    if (!(ss > 0.0)) throw InvalidInput("OfetParams: ss must be > 0");
    if (!(i_off >= 0.0)) throw InvalidInput("OfetParams: i_off must be >= 0");
    if (!std::isfinite(v_t)) throw InvalidInput("OfetParams: v_t must be finite");
    if (!(lambda >= 0.0)) throw InvalidInput("OfetParams: lambda must be >= 0");
}

double OfetParams::v_slope() const { return ss / LN10; }

double gate_overdrive(const OfetParams& p, const HysteresisState& h,
                      double v_gs, double v_ds) {
    FrameBias fb = to_frame(p, v_gs, v_ds);
    return fb.u_gs - frame_threshold(p, h);
}

double drain_current(const OfetParams& p, const HysteresisState& h,
                     double v_gs, double v_ds) {
    check_finite(v_gs, v_ds);
    FrameBias fb = to_frame(p, v_gs, v_ds);
    const double vt = frame_threshold(p, h);
    const double vsl = p.v_slope();
    const double ovs = fb.u_gs - vt;            // source-side overdrive
    const double ovd = fb.u_gs - fb.u_ds - vt;  // drain-side overdrive
    const double es = v_eff(ovs, vsl);
    const double ed = v_eff(ovd, vsl);
    double i = 0.5 * p.kp() * (es * es - ed * ed);
    i *= 1.0 + p.lambda * std::abs(fb.u_ds);
    i += (p.i_off / V_REF_OFF) * fb.u_ds;
    return fb.sign * i;
}

Conductances conductances(const OfetParams& p, const HysteresisState& h,
                          double v_gs, double v_ds) {
    check_finite(v_gs, v_ds);
    FrameBias fb = to_frame(p, v_gs, v_ds);
    const double vt = frame_threshold(p, h);
    const double vsl = p.v_slope();
    const double ovs = fb.u_gs - vt;
    const double ovd = fb.u_gs - fb.u_ds - vt;
    const double es = v_eff(ovs, vsl);
    const double ed = v_eff(ovd, vsl);
    // d(v_eff^2)/dx = 2 v_eff logistic(x / 2 v_sl)
    const double ds = 2.0 * es * d_v_eff(ovs, vsl);
    const double dd = 2.0 * ed * d_v_eff(ovd, vsl);
    const double clm = 1.0 + p.lambda * std::abs(fb.u_ds);
    const double core = 0.5 * p.kp() * (es * es - ed * ed);
    // Frame-space partials; both chain-rule sign flips cancel for P devices,
    // so these are the terminal-space conductances for either polarity.
    double gm = 0.5 * p.kp() * (ds - dd) * clm;
    double gds = 0.5 * p.kp() * dd * clm;
    gds += core * p.lambda * (fb.u_ds >= 0.0 ? 1.0 : -1.0);
    gds += p.i_off / V_REF_OFF;
    return {gm, gds};
}

HysteresisState step_hysteresis(const HysteresisState& h, double v_overdrive,
                                double dt) {
    if (!h.enabled) return h;
    if (!(h.tau_trap > 0.0))
        throw ConfigError("step_hysteresis: tau_trap must be > 0 when enabled");
    if (!(dt > 0.0)) throw InvalidInput("step_hysteresis: dt must be > 0");
    HysteresisState out = h;
    const double target = h.alpha * v_overdrive;
    out.delta_vt = target + (h.delta_vt - target) * std::exp(-dt / h.tau_trap);
    return out;
}

namespace {
OfetParams base(Polarity pol) {
    OfetParams p;
    p.polarity = pol;
    p.width = 1000.0;
    p.length = 100.0;
    p.c_diel = 6.6406e-9;
    p.ss = 1.5;
    p.lambda = 0.0;
    return p;
}
} // namespace

OfetParams flat_preset(Polarity pol) {
    OfetParams p = base(pol);
    if (pol == Polarity::P) {
        p.v_t = 5.35;
        p.mobility = 0.31;
        p.i_off = 1.54e-10;
    } else {
        p.v_t = -19.39;
        p.mobility = 0.050;
        p.i_off = 6.92e-9;
    }
    return p;
}

OfetParams bent_preset(Polarity pol) {
    OfetParams p = base(pol);
    if (pol == Polarity::P) {
        p.v_t = 5.98;
        p.mobility = 0.34;
        p.i_off = 1.54e-10;   // p-type floor is bend-insensitive
    } else {
        p.v_t = -18.40;
        p.mobility = 0.052;
        p.i_off = 4.52e-9;    // bending lowers the n-type floor by 2.4 nA
    }
    return p;
}

const char* to_string(Polarity p) { return p == Polarity::P ? "p" : "n"; }
const char* to_string(Bend b) { return b == Bend::Bent ? "bent" : "flat"; }

} // namespace ldi
