#include "ldi/stimulus.hpp"
#include "ldi/errors.hpp"

#include <cmath>

namespace ldi {

void PulseTrain::validate() const {
    if (!(period > 0.0)) throw InvalidInput("PulseTrain: period must be > 0");
    if (!(width >= 0.0 && width <= period))
        throw InvalidInput("PulseTrain: need 0 <= width <= period");
    if (n_cycles < 1) throw InvalidInput("PulseTrain: n_cycles must be >= 1");
    if (!std::isfinite(level_high) || !std::isfinite(level_low))
        throw InvalidInput("PulseTrain: levels must be finite");
}

double PulseTrain::value_at(double t) const {
    if (t < 0.0 || t >= end_time()) return level_low;
    const int k = static_cast<int>(std::floor(t / period));
    const double tc = t - k * period;
    const bool high = (phase == PulsePhase::HighFirst)
                          ? tc < width
                          : tc >= period - width;
    return high ? level_high : level_low;
}

std::vector<Edge> PulseTrain::edges() const {
    std::vector<Edge> out;
    if (width <= 0.0 || width >= period) return out; // degenerate duty: no switching
    out.reserve(2 * static_cast<size_t>(n_cycles));
    for (int k = 0; k < n_cycles; ++k) {
        double hs, he;
        high_window(k, hs, he);
        out.push_back({hs, EdgeDir::Rising});
        out.push_back({he, EdgeDir::Falling});
    }
    return out;
}

void PulseTrain::high_window(int k, double& start, double& end) const {
    if (phase == PulsePhase::HighFirst) {
        start = k * period;
        end = start + width;
    } else {
        end = (k + 1) * period;
        start = end - width;
    }
}

void PulseTrain::low_window(int k, double& start, double& end) const {
    if (phase == PulsePhase::HighFirst) {
        start = k * period + width;
        end = (k + 1) * period;
    } else {
        start = k * period;
        end = start + (period - width);
    }
}

} // namespace ldi
