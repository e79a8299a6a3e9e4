#pragma once

#include <vector>

namespace ldi {

enum class PulsePhase { HighFirst, LowFirst };

enum class EdgeDir { Rising, Falling };

struct Edge {
    double t;      // seconds
    EdgeDir dir;
};

// Periodic two-level gate drive. With HighFirst, cycle k is high on
// [k*period, k*period + width) and low for the rest of the cycle; after
// n_cycles*period the output stays at level_low. LowFirst mirrors this
// (low leads, the final `width` of each cycle is high).
struct PulseTrain {
    double period = 4.0;      // s
    double width = 2.0;       // s, duration of the high level per cycle
    double level_high = 10.0; // V
    double level_low = -10.0; // V
    int n_cycles = 18;
    PulsePhase phase = PulsePhase::HighFirst;

    void validate() const;           // throws InvalidInput
    double value_at(double t) const; // right-continuous at every edge
    double end_time() const { return period * n_cycles; }

    // Ordered switching instants; degenerate duty cycles (width 0 or a full
    // period) produce no edges at all.
    std::vector<Edge> edges() const;

    // [start, end) of the high interval of cycle k, and of the low interval.
    // Used by the segmentation stage so boundaries match edges exactly.
    void high_window(int k, double& start, double& end) const;
    void low_window(int k, double& start, double& end) const;
};

} // namespace ldi
