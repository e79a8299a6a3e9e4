#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "ldi/errors.hpp"
#include "ldi/solver.hpp"

using namespace ldi;

namespace {

// Step-driven RC: source -> floor resistor (1/R siemens) -> out node -> C.
Netlist rc_netlist(double r_ohms, double farads, const Waveform& wave) {
    NetlistBuilder b;
    NodeId in = b.add_node("in");
    NodeId out = b.add_node("out");
    b.add_vsource("vin", wave, in, GROUND);
    add_floor_resistor(b, "r", 1.0 / r_ohms, in, out);
    b.add_capacitor("c", farads, out, GROUND);
    return b.build();
}

} // namespace

TEST_CASE("dc pins a source-driven node at the source level") {
    NetlistBuilder b;
    NodeId a = b.add_node("a");
    b.add_vsource("v", {15.0, {}}, a, GROUND);
    Netlist nl = b.build();
    CircuitState st = dc_operating_point(nl, {});
    CHECK(st.v[a] == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(st.v[GROUND] == 0.0);
}

TEST_CASE("dc solves the symmetric divider at the midpoint") {
    NetlistBuilder b;
    NodeId top = b.add_node("top");
    NodeId mid = b.add_node("mid");
    b.add_vsource("v", {15.0, {}}, top, GROUND);
    add_floor_resistor(b, "r1", 1e-6, top, mid);
    add_floor_resistor(b, "r2", 1e-6, mid, GROUND);
    Netlist nl = b.build();
    CircuitState st = dc_operating_point(nl, {});
    CHECK(st.v[mid] == doctest::Approx(7.5).epsilon(1e-9));
}

TEST_CASE("zero-source netlist stays quiescent") {
    NetlistBuilder b;
    NodeId a = b.add_node("a");
    b.add_vsource("v", {0.0, {}}, a, GROUND);
    NodeId o = b.add_node("o");
    add_floor_resistor(b, "r", 1e-6, a, o);
    b.add_capacitor("c", 1e-8, o, GROUND);
    Netlist nl = b.build();

    Sampler sampler;
    sampler.uniform_dt = 1e-2;
    TransientResult res = transient(nl, initial_state(nl), {}, 1.0, sampler);
    for (double v : res.trace.column("v_node_o")) CHECK(std::abs(v) < 1e-12);
    CHECK(res.final_state.time == doctest::Approx(1.0));
}

TEST_CASE("adaptive transient tracks the RC charge curve") {
    const double R = 1e6, C = 1e-7, V = 15.0; // tau = 0.1 s
    Netlist nl = rc_netlist(R, C, {V, {}});
    CircuitState s0 = initial_state(nl, {{"in", V}});
    s0.cap_i[0] = V / R; // consistent initial capacitor current

    Sampler sampler;
    sampler.uniform_dt = 1e-3;
    for (Method m : {Method::BackwardEuler, Method::Trapezoidal}) {
        SolverConfig cfg;
        cfg.method = m;
        TransientResult res = transient(nl, s0, cfg, 0.5, sampler);
        const auto& v = res.trace.column("v_node_out");
        const auto& t = res.trace.t;
        for (size_t k = 0; k < t.size(); ++k) {
            double expect = V * (1.0 - std::exp(-t[k] / (R * C)));
            CHECK(std::abs(v[k] - expect) < 0.01 * V);
        }
    }
}

TEST_CASE("companion-current integral telescopes to C times delta-V") {
    const double R = 1e6, C = 1e-7, V = 15.0;
    Netlist nl = rc_netlist(R, C, {V, {}});
    CircuitState s0 = initial_state(nl, {{"in", V}});
    s0.cap_i[0] = V / R;

    SolverConfig cfg; // backward Euler: rectangle rule is exact per step
    cfg.record_raw = true;
    cfg.use_step_doubling = false; // keep cap_i the full-step companion value
    Sampler sampler;
    sampler.uniform_dt = 1e-2;
    TransientResult res = transient(nl, s0, cfg, 0.5, sampler);
    REQUIRE(!res.raw.empty());

    int out = nl.find_node("out");
    double charge = 0.0;
    for (const RawPoint& p : res.raw) charge += p.cap_i[0] * p.dt;
    double dv = res.raw.back().v[out] - 0.0;
    CHECK(charge == doctest::Approx(C * dv).epsilon(1e-6));
}

TEST_CASE("identical runs produce identical traces") {
    PulseTrain pulse{0.2, 0.1, 10.0, -10.0, 3, PulsePhase::HighFirst};
    Netlist nl = rc_netlist(1e6, 1e-7, {0.0, pulse});
    CircuitState s0 = initial_state(nl, {{"in", -10.0}});
    s0.cap_i[0] = -10.0 / 1e6;

    Sampler sampler;
    sampler.uniform_dt = 1e-3;
    TransientResult a = transient(nl, s0, {}, 0.6, sampler);
    TransientResult b = transient(nl, s0, {}, 0.6, sampler);
    REQUIRE(a.trace.size() == b.trace.size());
    REQUIRE(a.trace.names == b.trace.names);
    for (size_t c = 0; c < a.trace.cols.size(); ++c)
        for (size_t k = 0; k < a.trace.t.size(); ++k)
            CHECK(a.trace.cols[c][k] == b.trace.cols[c][k]);
    CHECK(a.accepted_steps == b.accepted_steps);
    CHECK(a.total_newton_iters == b.total_newton_iters);
}

TEST_CASE("starved iteration budget fails loudly with a timestamp") {
    // A +20 V source edge needs ~40 damped Newton updates; forbid both the
    // iterations and the dt fallback so the solver must give up.
    PulseTrain pulse{1.0, 0.5, 20.0, 0.0, 1, PulsePhase::HighFirst};
    Netlist nl = rc_netlist(1e6, 1e-12, {0.0, pulse});
    SolverConfig cfg;
    cfg.max_newton_iters = 5;
    cfg.dt_initial = cfg.dt_min = 1e-3;
    Sampler sampler;
    try {
        transient(nl, initial_state(nl), cfg, 0.5, sampler);
        FAIL("expected a convergence failure");
    } catch (const ConvergenceError& e) {
        CHECK(e.at_time >= 0.0);
    }
}

TEST_CASE("solver configuration is validated") {
    SolverConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.dt_min = 1.0;
    cfg.dt_max = 0.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.max_newton_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.voltage_step_limit = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("initial state maps node names and copies trap states") {
    NetlistBuilder b;
    NodeId g = b.add_node("g");
    NodeId d = b.add_node("d");
    b.add_vsource("vg", {5.0, {}}, g, GROUND);
    HysteresisState h;
    h.enabled = true;
    h.delta_vt = 0.25;
    b.add_transistor("M1", flat_preset(Polarity::N), g, d, GROUND, h);
    b.add_capacitor("c", 1e-9, d, GROUND);
    Netlist nl = b.build();

    CircuitState st = initial_state(nl, {{"d", 3.5}});
    CHECK(st.v[d] == 3.5);
    CHECK(st.v[g] == 0.0); // absent from the map
    REQUIRE(st.hyst.size() == 1);
    CHECK(st.hyst[0].delta_vt == 0.25);
    CHECK_THROWS_AS(initial_state(nl, {{"nope", 1.0}}), InvalidInput);
}

TEST_CASE("probe readings apply their scale to the transistor current") {
    NetlistBuilder b;
    NodeId g = b.add_node("g");
    NodeId d = b.add_node("d");
    b.add_vsource("vg", {10.0, {}}, g, GROUND);
    b.add_vsource("vd", {5.0, {}}, d, GROUND);
    b.add_transistor("M1", flat_preset(Polarity::N), g, d, GROUND);
    b.add_probe("i_neg", "M1", -1.0);
    Netlist nl = b.build();

    CircuitState st = dc_operating_point(nl, {});
    double i = transistor_current(nl, st, 0);
    CHECK(i > 0.0); // n-type, positive drain bias, gate well above threshold
    std::vector<double> probes = probe_currents(nl, st);
    REQUIRE(probes.size() == 1);
    CHECK(probes[0] == doctest::Approx(-i).epsilon(1e-12));
}

TEST_CASE("sampler exports requested node columns and the stimulus level") {
    PulseTrain pulse{0.2, 0.1, 10.0, -10.0, 2, PulsePhase::HighFirst};
    Netlist nl = rc_netlist(1e6, 1e-7, {0.0, pulse});
    CircuitState s0 = initial_state(nl, {{"in", -10.0}});
    s0.cap_i[0] = -1e-5;
    Sampler sampler;
    sampler.uniform_dt = 1e-2;
    sampler.node_columns = {"out"};
    Trace tr = transient(nl, s0, {}, 0.4, sampler).trace;
    CHECK(tr.column_index("v_node_out") >= 0);
    CHECK(tr.column_index("v_node_in") == -1); // not requested
    CHECK(tr.column_index("v_vin_V") >= 0);    // pulse source level
    CHECK(tr.column("v_vin_V")[0] == 10.0);
    CHECK(tr.t.front() == 0.0);
    CHECK(tr.t.back() == doctest::Approx(0.4));

    sampler.node_columns = {"typo"};
    CHECK_THROWS_AS(transient(nl, s0, {}, 0.4, sampler), InvalidInput);
}
