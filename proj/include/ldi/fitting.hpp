#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldi/stimulus.hpp"
#include "ldi/trace.hpp"

namespace ldi {

enum class Phase { Charge, Discharge };

std::string to_string(Phase p);

// One phase of one pulse cycle, time re-zeroed to the phase start.
struct CycleSegment {
    Phase phase = Phase::Charge;
    int source_cycle = 0;
    std::vector<double> t; // s, strictly increasing from the phase start
    std::vector<double> i; // A
};

// First-order fit of a segment. Charge phase: i(t) = a + b*exp(-t/tau);
// discharge phase: i(t) = c*exp(-t/tau). Unused coefficients stay zero.
struct TauEstimate {
    Phase phase = Phase::Charge;
    int source_cycle = 0;
    double tau = 0.0; // s
    double a = 0.0;   // A
    double b = 0.0;   // A
    double c = 0.0;   // A
    double sse = 0.0; // A^2
    bool converged = false;
    std::uint64_t seed = 0;
};

struct PsoConfig {
    int swarm_size = 50;
    int iterations = 200;
    double inertia = 0.729;
    double cognitive = 1.49445;
    double social = 1.49445;
    double tau_lo = 1e-3; // s
    double tau_hi = 10.0; // s
    std::uint64_t seed = 42;

    void validate() const; // throws ConfigError
};

// Cuts the chosen current column into per-cycle charge/discharge segments at
// the pulse edges, dropping the first `discard_first` cycles (cold-start
// transient). Throws InsufficientData when the trace covers too few cycles
// or a segment would carry fewer than 8 samples.
std::vector<CycleSegment> segment(const Trace& trace, const std::string& column,
                                  const PulseTrain& pulse, int discard_first = 1);

// Global-best particle swarm over (tau, a, b) / (tau, c) with reflective
// bounds. Deterministic for a given seed. Throws DegenerateTrace when the
// segment is too flat to identify tau.
TauEstimate fit_pso(const CycleSegment& seg, const PsoConfig& cfg = {});

// Deterministic closed-form cross-check: linear regression on the log of the
// (offset-removed) current. Throws FitDomainError when the data is not
// positive where the regression needs it to be.
TauEstimate fit_loglinear(const CycleSegment& seg);

} // namespace ldi
