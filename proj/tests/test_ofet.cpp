#include <doctest.h>

#include <cmath>
#include <vector>

#include "ldi/errors.hpp"
#include "ldi/ofet.hpp"

using namespace ldi;

TEST_CASE("drain current is exactly zero at zero drain bias") {
    for (Polarity pol : {Polarity::P, Polarity::N}) {
        OfetParams p = flat_preset(pol);
        for (double vg : {-30.0, -5.0, 0.0, 3.7, 12.0}) {
            CHECK(drain_current(p, {}, vg, 0.0) == 0.0);
        }
    }
}

TEST_CASE("p-type at 10 V overdrive in saturation carries ~1.03 uA") {
    OfetParams p = flat_preset(Polarity::P);
    // Internal frame mirrors both axes for p-type: overdrive 10 V means
    // v_gs = -(v_t + 10), and v_ds = -20 V keeps the drain side dead.
    double i = drain_current(p, {}, -(p.v_t + 10.0), -20.0);
    double channel = std::abs(i) - p.i_off; // subtract the floor at 20 V drop
    CHECK(channel == doctest::Approx(1.03e-6).epsilon(0.01));
    CHECK(i < 0.0); // conventional current flows out of a p-type drain
}

TEST_CASE("deep-OFF current at the reference drain bias equals the preset floor") {
    OfetParams pf = flat_preset(Polarity::P);
    // Gate far above threshold in p-convention = channel off.
    CHECK(std::abs(drain_current(pf, {}, 10.0, -V_REF_OFF)) ==
          doctest::Approx(1.54e-10).epsilon(1e-3));

    OfetParams nf = flat_preset(Polarity::N);
    // n-type threshold is deeply negative; -30 V gate is still below it.
    CHECK(drain_current(nf, {}, -30.0, V_REF_OFF) ==
          doctest::Approx(6.92e-9).epsilon(1e-3));

    OfetParams nb = bent_preset(Polarity::N);
    CHECK(drain_current(nb, {}, -30.0, V_REF_OFF) ==
          doctest::Approx(4.52e-9).epsilon(1e-3));
}

TEST_CASE("presets carry the characterization constants") {
    OfetParams pf = flat_preset(Polarity::P);
    CHECK(pf.v_t == 5.35);
    CHECK(pf.mobility == 0.31);
    CHECK(pf.i_off == 1.54e-10);

    OfetParams pb = bent_preset(Polarity::P);
    CHECK(pb.v_t == 5.98);
    CHECK(pb.v_t - pf.v_t == doctest::Approx(0.63).epsilon(1e-12));
    CHECK(pb.mobility - pf.mobility == doctest::Approx(0.03).epsilon(1e-9));
    CHECK(pb.i_off == pf.i_off); // p-type floor is bend-insensitive

    OfetParams nf = flat_preset(Polarity::N);
    CHECK(nf.v_t == -19.39);
    CHECK(nf.mobility == 0.050);
    CHECK(nf.i_off == 6.92e-9);

    OfetParams nb = bent_preset(Polarity::N);
    CHECK(nb.v_t == -18.40);
    CHECK(nb.mobility - nf.mobility == doctest::Approx(0.002).epsilon(1e-9));
    CHECK(nf.i_off - nb.i_off == doctest::Approx(2.4e-9).epsilon(1e-9));

    for (const OfetParams& d : {pf, pb, nf, nb}) {
        CHECK(d.width == 1000.0);
        CHECK(d.length == 100.0);
        CHECK(d.c_diel == 6.6406e-9);
        CHECK_NOTHROW(d.validate());
    }
    CHECK(preset(Polarity::N, Bend::Bent).v_t == nb.v_t);
    CHECK(preset(Polarity::P, Bend::Flat).v_t == pf.v_t);
}

TEST_CASE("kp combines mobility, dielectric and geometry into A/V^2") {
    OfetParams p = flat_preset(Polarity::P);
    CHECK(p.kp() == doctest::Approx(0.31 * 6.6406e-9 * 10.0).epsilon(1e-12));
}

TEST_CASE("bending shifts the subthreshold transfer curve by the threshold delta") {
    OfetParams pf = flat_preset(Polarity::P);
    OfetParams pb = bent_preset(Polarity::P);
    double dvt = pb.v_t - pf.v_t;
    // In the exponential region the curves are parallel on a log axis up to
    // the mobility prefactor; compare floor-free channel currents.
    pf.i_off = 0.0;
    pb.i_off = 0.0;
    for (double ov : {-2.0, -3.0, -4.0}) {
        double vg_flat = -(pf.v_t + ov);
        double i_flat = std::abs(drain_current(pf, {}, vg_flat, -5.0));
        double i_bent = std::abs(drain_current(pb, {}, vg_flat - dvt, -5.0));
        CHECK(i_bent / i_flat ==
              doctest::Approx(pb.mobility / pf.mobility).epsilon(1e-6));
    }
}

TEST_CASE("current magnitude is non-decreasing in gate overdrive") {
    OfetParams n = flat_preset(Polarity::N);
    double prev = -1.0;
    for (double vg = -30.0; vg <= 10.0; vg += 0.25) {
        double i = drain_current(n, {}, vg, 5.0);
        CHECK(i >= prev - 1e-18);
        prev = i;
    }
    OfetParams p = flat_preset(Polarity::P);
    prev = -1.0;
    for (double vg = 10.0; vg >= -30.0; vg -= 0.25) {
        double i = std::abs(drain_current(p, {}, vg, -5.0));
        CHECK(i >= prev - 1e-18);
        prev = i;
    }
}

TEST_CASE("current is continuous across the subthreshold blend") {
    OfetParams n = flat_preset(Polarity::N);
    const double h = 1e-6;
    for (double vg = -25.0; vg <= -12.0; vg += 0.1) {
        for (double vd : {0.5, 5.0, 20.0}) {
            double di = drain_current(n, {}, vg + h, vd) - drain_current(n, {}, vg, vd);
            CHECK(std::abs(di) < 1e-9);
            double dd = drain_current(n, {}, vg, vd + h) - drain_current(n, {}, vg, vd);
            CHECK(std::abs(dd) < 1e-9);
        }
    }
}

TEST_CASE("polarity symmetry: mirrored biases and parameters mirror the current") {
    OfetParams p = flat_preset(Polarity::P);
    OfetParams n = p;
    n.polarity = Polarity::N;
    for (double vg : {-20.0, -10.0, -2.0, 1.0, 8.0}) {
        for (double vd : {-15.0, -1.0, 0.0, 2.0}) {
            CHECK(drain_current(p, {}, vg, vd) == -drain_current(n, {}, -vg, -vd));
        }
    }
}

TEST_CASE("conductances match finite differences of the current") {
    const double h = 1e-5;
    for (Polarity pol : {Polarity::P, Polarity::N}) {
        for (Bend bend : {Bend::Flat, Bend::Bent}) {
            OfetParams d = preset(pol, bend);
            for (double vg = -28.0; vg <= 8.0; vg += 4.0) {
                for (double vd = -18.0; vd <= 18.0; vd += 4.5) {
                    Conductances g = conductances(d, {}, vg, vd);
                    double fd_gm = (drain_current(d, {}, vg + h, vd) -
                                    drain_current(d, {}, vg - h, vd)) /
                                   (2.0 * h);
                    double fd_gds = (drain_current(d, {}, vg, vd + h) -
                                     drain_current(d, {}, vg, vd - h)) /
                                    (2.0 * h);
                    CHECK(std::abs(g.g_m - fd_gm) <=
                          1e-4 * std::max(std::abs(g.g_m), std::abs(fd_gm)) + 1e-15);
                    CHECK(std::abs(g.g_ds - fd_gds) <=
                          1e-4 * std::max(std::abs(g.g_ds), std::abs(fd_gds)) + 1e-15);
                }
            }
        }
    }
}

TEST_CASE("deep-OFF output conductance at zero drain bias is the floor conductance") {
    OfetParams n = flat_preset(Polarity::N);
    Conductances g = conductances(n, {}, -40.0, 0.0);
    CHECK(g.g_ds == doctest::Approx(n.i_off / V_REF_OFF).epsilon(1e-6));

    n.i_off = 0.0; // floor disabled: nothing left in a dead channel
    Conductances g0 = conductances(n, {}, -40.0, 5.0);
    CHECK(std::abs(g0.g_m) < 1e-15);
}

TEST_CASE("hysteresis state shifts the effective threshold") {
    OfetParams n = flat_preset(Polarity::N);
    HysteresisState h;
    h.enabled = true;
    h.delta_vt = 1.0;
    OfetParams shifted = n;
    shifted.v_t += 1.0;
    for (double vg : {-22.0, -15.0, -5.0}) {
        CHECK(drain_current(n, h, vg, 5.0) == drain_current(shifted, {}, vg, 5.0));
    }
}

TEST_CASE("trap relaxation follows the first-order closed form") {
    HysteresisState h;
    SUBCASE("disabled state is inert") {
        HysteresisState out = step_hysteresis(h, 100.0, 5.0);
        CHECK(out.delta_vt == h.delta_vt);
        CHECK(out.enabled == false);
    }
    SUBCASE("one trap time constant covers 63.21% of the gap") {
        h.enabled = true;
        h.alpha = 0.1;
        h.tau_trap = 10.0;
        HysteresisState out = step_hysteresis(h, 10.0, h.tau_trap);
        CHECK(out.delta_vt == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-9));
    }
    SUBCASE("vanishing step leaves the state unchanged") {
        h.enabled = true;
        h.delta_vt = 0.4;
        HysteresisState out = step_hysteresis(h, 10.0, 1e-15);
        CHECK(out.delta_vt == doctest::Approx(0.4).epsilon(1e-12));
    }
    SUBCASE("enabled state with nonpositive relaxation time is rejected") {
        h.enabled = true;
        h.tau_trap = 0.0;
        CHECK_THROWS_AS(step_hysteresis(h, 1.0, 0.1), ConfigError);
    }
}

TEST_CASE("parameter validation rejects nonsense") {
    OfetParams p = flat_preset(Polarity::P);
    p.mobility = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p = flat_preset(Polarity::P);
    p.ss = -1.0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p = flat_preset(Polarity::P);
    p.i_off = -1e-12;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    CHECK_THROWS_AS(drain_current(flat_preset(Polarity::N), {},
                                  std::nan(""), 1.0),
                    InvalidInput);
}
