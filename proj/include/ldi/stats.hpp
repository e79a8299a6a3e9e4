#pragma once

#include <cstddef>
#include <vector>

#include "ldi/fitting.hpp"

namespace ldi {

// Box-plot summary of a batch of time-constant estimates.
struct TauStats {
    double min = 0.0;        // s
    double max = 0.0;        // s
    double median = 0.0;     // s
    double mean = 0.0;       // s
    double q1 = 0.0;         // s
    double q3 = 0.0;         // s
    double whisker_lo = 0.0; // s, lowest datum within 1.5*IQR below q1
    double whisker_hi = 0.0; // s, highest datum within 1.5*IQR above q3
    std::size_t n = 0;
};

// Linear-interpolation ("type 7") quantile of an already-sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p);

// Order statistics over raw values. Throws InsufficientData when empty.
TauStats stats_of(std::vector<double> values);

// Same, over the tau of the converged estimates only. Throws
// InsufficientData when none converged.
TauStats stats(const std::vector<TauEstimate>& estimates);

} // namespace ldi
