#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldi/fitting.hpp"

namespace ldi {

// Synthesizes a noiseless first-order segment on a uniform grid:
// charge i(t) = a + b*exp(-t/tau), discharge i(t) = c*exp(-t/tau).
CycleSegment synth_segment(Phase phase, double a, double b, double c, double tau,
                           double t_end, int n_samples);

// Adds seeded gaussian noise (absolute amperes) in place.
void add_gaussian_noise(CycleSegment& seg, double sigma, std::uint64_t seed);

struct OracleResult {
    std::string name;
    bool pass = false;
    double value = 0.0;    // the measured quantity the threshold applies to
    std::string detail;    // what was measured and the threshold
};

struct OracleOptions {
    // Testing hook: overrides the RC step-response oracles' fixed time step
    // (default tau/1000). Oversized steps make the first-order oracle fail.
    double rc_dt = 0.0;
};

std::vector<std::string> oracle_names();

// Runs the full closed-form oracle suite: RC step response vs analytic
// solution, constant-current capacitor ramp slope, integration-order
// studies by step halving, fit recovery on synthetic segments, and the
// synapse bias margins.
std::vector<OracleResult> run_oracles(const OracleOptions& opt = {});

} // namespace ldi
