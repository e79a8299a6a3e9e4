#include "ldi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ldi/errors.hpp"

namespace ldi {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw InsufficientData("quantile of empty sample");
    if (sorted.size() == 1) return sorted.front();
    p = std::clamp(p, 0.0, 1.0);
    double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    std::size_t k = static_cast<std::size_t>(std::floor(h));
    if (k + 1 >= sorted.size()) return sorted.back();
    double frac = h - static_cast<double>(k);
    return sorted[k] + frac * (sorted[k + 1] - sorted[k]);
}

TauStats stats_of(std::vector<double> values) {
    if (values.empty()) throw InsufficientData("stats over empty sample");
    std::sort(values.begin(), values.end());

    TauStats s;
    s.n = values.size();
    s.min = values.front();
    s.max = values.back();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    s.median = quantile_sorted(values, 0.5);
    s.q1 = quantile_sorted(values, 0.25);
    s.q3 = quantile_sorted(values, 0.75);

    double iqr = s.q3 - s.q1;
    double lo_fence = s.q1 - 1.5 * iqr;
    double hi_fence = s.q3 + 1.5 * iqr;
    // min <= q1 and max >= q3, so both searches land on a real datum.
    s.whisker_lo = *std::lower_bound(values.begin(), values.end(), lo_fence);
    s.whisker_hi = *std::prev(std::upper_bound(values.begin(), values.end(), hi_fence));
    return s;
}

TauStats stats(const std::vector<TauEstimate>& estimates) {
    std::vector<double> taus;
    taus.reserve(estimates.size());
    for (const auto& e : estimates)
        if (e.converged) taus.push_back(e.tau);
    if (taus.empty())
        throw InsufficientData("stats: no converged estimates");
    return stats_of(std::move(taus));
}

} // namespace ldi
