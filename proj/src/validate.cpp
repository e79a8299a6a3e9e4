#include "ldi/validate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ldi/errors.hpp"
#include "ldi/ldi_circuit.hpp"
#include "ldi/solver.hpp"

namespace ldi {

CycleSegment synth_segment(Phase phase, double a, double b, double c, double tau,
                           double t_end, int n_samples) {
    if (n_samples < 2 || !(t_end > 0.0) || !(tau > 0.0))
        throw InvalidInput("synth_segment: bad grid or time constant");
    CycleSegment seg;
    seg.phase = phase;
    seg.t.reserve(static_cast<std::size_t>(n_samples));
    seg.i.reserve(static_cast<std::size_t>(n_samples));
    for (int k = 0; k < n_samples; ++k) {
        double t = t_end * static_cast<double>(k) / (n_samples - 1);
        double e = std::exp(-t / tau);
        seg.t.push_back(t);
        seg.i.push_back(phase == Phase::Charge ? a + b * e : c * e);
    }
    return seg;
}

void add_gaussian_noise(CycleSegment& seg, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, sigma);
    for (double& v : seg.i) v += dist(rng);
}

namespace {

struct RcSetup {
    Netlist nl;
    double r = 1e6;   // ohm
    double c = 1e-7;  // F -> tau = 0.1 s
    double v = 1.0;   // step level
    double tau() const { return r * c; }
};

RcSetup make_rc() {
    RcSetup rc;
    NetlistBuilder b;
    NodeId in = b.add_node("in");
    NodeId out = b.add_node("out");
    b.add_vsource("vin", {rc.v, {}}, in, GROUND);
    add_floor_resistor(b, "R1", 1.0 / rc.r, in, out);
    b.add_capacitor("C1", rc.c, out, GROUND);
    rc.nl = b.build();
    return rc;
}

SolverConfig fixed_step(Method method, double dt) {
    SolverConfig cfg;
    cfg.method = method;
    cfg.dt_initial = dt;
    cfg.dt_min = dt * 1e-6;
    cfg.dt_max = dt;
    cfg.use_step_doubling = false;
    cfg.record_raw = true;
    cfg.newton_abs_tol = 1e-15;
    cfg.newton_rel_tol = 1e-9;
    return cfg;
}

// Worst relative deviation of the simulated RC charging curve from the
// closed form, as a fraction of the step level.
double rc_step_error(Method method, double dt) {
    RcSetup rc = make_rc();
    CircuitState s0 = initial_state(rc.nl, {{"in", rc.v}, {"out", 0.0}});
    // Consistent capacitor current at t=0: the full step current flows.
    s0.cap_i[0] = rc.v / rc.r;
    SolverConfig cfg = fixed_step(method, dt);
    Sampler sampler;
    sampler.uniform_dt = rc.tau() / 10.0;
    TransientResult res = transient(rc.nl, s0, cfg, 5.0 * rc.tau(), sampler);
    NodeId out = rc.nl.find_node("out");
    double worst = 0.0;
    for (const auto& p : res.raw) {
        if (p.t <= 0.0) continue;
        double exact = rc.v * (1.0 - std::exp(-p.t / rc.tau()));
        worst = std::max(worst, std::abs(p.v[out] - exact) / rc.v);
    }
    return worst;
}

// Observed integration order from halving the step size.
double observed_order(Method method) {
    double e1 = rc_step_error(method, make_rc().tau() / 50.0);
    double e2 = rc_step_error(method, make_rc().tau() / 100.0);
    if (!(e1 > 0.0) || !(e2 > 0.0)) return 0.0;
    return std::log2(e1 / e2);
}

// Saturated transistor discharging a capacitor: the node must ramp at
// exactly I_sat / C for either integration method.
double ramp_slope_error(Method method) {
    OfetParams dev;
    dev.polarity = Polarity::N;
    dev.v_t = 0.0;
    dev.mobility = 0.05;
    dev.ss = 0.15;     // steep device: saturation current flat to ~exp(-38)
    dev.i_off = 1e-18; // negligible ohmic floor
    const double c = 1e-8;
    const double v_gate = 5.0;

    NetlistBuilder b;
    NodeId bias = b.add_node("bias");
    NodeId out = b.add_node("out");
    b.add_vsource("vg", {v_gate, {}}, bias, GROUND);
    b.add_transistor("M1", dev, bias, out, GROUND);
    b.add_capacitor("C1", c, out, GROUND);
    Netlist nl = b.build();

    const double i_sat = drain_current(dev, HysteresisState{}, v_gate, 10.0);
    const double slope_ref = -i_sat / c;

    CircuitState s0 = initial_state(nl, {{"bias", v_gate}, {"out", 12.0}});
    s0.cap_i[0] = -i_sat; // discharge current flows out of the capacitor
    SolverConfig cfg = fixed_step(method, 1e-3);
    Sampler sampler;
    sampler.uniform_dt = 1e-2;
    TransientResult res = transient(nl, s0, cfg, 0.2, sampler);

    NodeId node = nl.find_node("out");
    double st = 0, sv = 0, stt = 0, stv = 0;
    double n = 0;
    for (const auto& p : res.raw) {
        st += p.t;
        sv += p.v[node];
        stt += p.t * p.t;
        stv += p.t * p.v[node];
        n += 1;
    }
    double slope = (n * stv - st * sv) / (n * stt - st * st);
    return std::abs(slope - slope_ref) / std::abs(slope_ref);
}

struct FitCase {
    double pso_err_charge = 0.0;
    double pso_err_discharge_noisy = 0.0;
    double loglin_err_discharge = 0.0;
    double agreement = 0.0;
};

FitCase run_fit_cases() {
    FitCase f;
    PsoConfig pso;

    CycleSegment charge =
        synth_segment(Phase::Charge, 5e-6, -4e-6, 0.0, 0.1, 0.6, 600);
    f.pso_err_charge = std::abs(fit_pso(charge, pso).tau - 0.1) / 0.1;

    CycleSegment noisy =
        synth_segment(Phase::Discharge, 0.0, 0.0, 3e-6, 0.0685, 0.35, 350);
    double ptp = *std::max_element(noisy.i.begin(), noisy.i.end()) -
                 *std::min_element(noisy.i.begin(), noisy.i.end());
    add_gaussian_noise(noisy, 0.01 * ptp, 7);
    f.pso_err_discharge_noisy = std::abs(fit_pso(noisy, pso).tau - 0.0685) / 0.0685;

    CycleSegment clean =
        synth_segment(Phase::Discharge, 0.0, 0.0, 2e-6, 0.1, 0.55, 550);
    double tau_lin = fit_loglinear(clean).tau;
    double tau_pso = fit_pso(clean, pso).tau;
    f.loglin_err_discharge = std::abs(tau_lin - 0.1) / 0.1;
    f.agreement = std::abs(tau_pso - tau_lin) / tau_lin;
    return f;
}

} // namespace

std::vector<std::string> oracle_names() {
    return {"rc_step_be",          "rc_step_tr",
            "ramp_slope_be",       "ramp_slope_tr",
            "order_be",            "order_tr",
            "fit_pso_charge",      "fit_pso_discharge_noisy",
            "fit_loglinear",       "fit_agreement",
            "bias_margin_flat",    "bias_margin_bent"};
}

std::vector<OracleResult> run_oracles(const OracleOptions& opt) {
    std::vector<OracleResult> out;
    auto add = [&](std::string name, bool pass, double value, std::string detail) {
        out.push_back({std::move(name), pass, value, std::move(detail)});
    };

    const double tau = make_rc().tau();
    const double rc_dt = opt.rc_dt > 0.0 ? opt.rc_dt : tau / 1000.0;
    for (Method m : {Method::BackwardEuler, Method::Trapezoidal}) {
        const char* tag = m == Method::BackwardEuler ? "be" : "tr";
        double err = rc_step_error(m, rc_dt);
        add(std::string("rc_step_") + tag, err < 1e-3, err,
            "max |v - closed form| / step < 0.1%");
    }
    for (Method m : {Method::BackwardEuler, Method::Trapezoidal}) {
        const char* tag = m == Method::BackwardEuler ? "be" : "tr";
        double err = ramp_slope_error(m);
        add(std::string("ramp_slope_") + tag, err < 1e-5, err,
            "capacitor ramp slope vs I_sat/C, relative");
    }
    {
        double p_be = observed_order(Method::BackwardEuler);
        add("order_be", p_be >= 0.9, p_be, "observed order from dt halving >= 0.9");
        double p_tr = observed_order(Method::Trapezoidal);
        add("order_tr", p_tr >= 1.8, p_tr, "observed order from dt halving >= 1.8");
    }
    {
        FitCase f = run_fit_cases();
        add("fit_pso_charge", f.pso_err_charge < 0.01, f.pso_err_charge,
            "tau recovery on a noiseless synthetic charge, < 1%");
        add("fit_pso_discharge_noisy", f.pso_err_discharge_noisy < 0.05,
            f.pso_err_discharge_noisy,
            "tau recovery under 1% seeded gaussian noise, < 5%");
        add("fit_loglinear", f.loglin_err_discharge < 1e-6, f.loglin_err_discharge,
            "closed-form discharge recovery, < 1e-6 relative");
        add("fit_agreement", f.agreement < 0.02, f.agreement,
            "PSO vs log-linear tau on a clean segment, < 2%");
    }
    for (Bend bend : {Bend::Flat, Bend::Bent}) {
        LdiConfig cfg;
        cfg.bend = bend;
        BiasMarginReport r = bias_margin_check(cfg);
        const char* tag = bend == Bend::Flat ? "flat" : "bent";
        add(std::string("bias_margin_") + tag, r.pass,
            r.i_tau_capability / r.i_off_floor,
            "leak transistor capability over the input switch OFF floor > 1");
    }
    return out;
}

} // namespace ldi
