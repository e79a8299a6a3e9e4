#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "ldi/errors.hpp"
#include "ldi/stats.hpp"

using namespace ldi;

TEST_CASE("quartiles of {1,2,3,4} by linear interpolation") {
    TauStats s = stats_of({1.0, 2.0, 3.0, 4.0});
    CHECK(s.n == 4);
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.median == doctest::Approx(2.5));
    CHECK(s.q1 == doctest::Approx(1.75));
    CHECK(s.q3 == doctest::Approx(3.25));
    CHECK(s.min == 1.0);
    CHECK(s.max == 4.0);
    // IQR fences (-0.5, 5.5) cover everything: whiskers sit on the extremes.
    CHECK(s.whisker_lo == 1.0);
    CHECK(s.whisker_hi == 4.0);
}

TEST_CASE("summary of a realistic millisecond batch") {
    TauStats s = stats_of({67.15, 70.58, 68.21, 68.06});
    CHECK(s.min == doctest::Approx(67.15));
    CHECK(s.max == doctest::Approx(70.58));
    CHECK(s.mean == doctest::Approx(68.50));
    CHECK(s.median == doctest::Approx(0.5 * (68.06 + 68.21)));
}

TEST_CASE("single-value batch collapses every statistic") {
    TauStats s = stats_of({0.123});
    CHECK(s.n == 1);
    CHECK(s.min == 0.123);
    CHECK(s.max == 0.123);
    CHECK(s.median == 0.123);
    CHECK(s.mean == 0.123);
    CHECK(s.q1 == 0.123);
    CHECK(s.q3 == 0.123);
    CHECK(s.whisker_lo == 0.123);
    CHECK(s.whisker_hi == 0.123);
}

TEST_CASE("statistics are permutation-invariant") {
    std::vector<double> v{0.12, 0.07, 0.19, 0.11, 0.02, 0.15, 0.08};
    std::vector<double> shuffled = v;
    std::mt19937 rng(9);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    TauStats a = stats_of(v);
    TauStats b = stats_of(shuffled);
    CHECK(a.min == b.min);
    CHECK(a.max == b.max);
    CHECK(a.median == b.median);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-15));
    CHECK(a.q1 == b.q1);
    CHECK(a.q3 == b.q3);
    CHECK(a.whisker_lo == b.whisker_lo);
    CHECK(a.whisker_hi == b.whisker_hi);
}

TEST_CASE("order-statistic chain holds on random batches") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        size_t n = 1 + rng() % 40;
        std::vector<double> v(n);
        for (double& x : v) x = u(rng);
        TauStats s = stats_of(v);
        CHECK(s.min <= s.q1);
        CHECK(s.q1 <= s.median);
        CHECK(s.median <= s.q3);
        CHECK(s.q3 <= s.max);
        double iqr = s.q3 - s.q1;
        CHECK(s.whisker_lo >= s.q1 - 1.5 * iqr - 1e-15);
        CHECK(s.whisker_hi <= s.q3 + 1.5 * iqr + 1e-15);
        // Whiskers land on actual data.
        CHECK(std::count(v.begin(), v.end(), s.whisker_lo) > 0);
        CHECK(std::count(v.begin(), v.end(), s.whisker_hi) > 0);
    }
}

TEST_CASE("outliers pull the whiskers inside the data range") {
    TauStats s = stats_of({1.0, 10.0, 10.1, 10.2, 10.3, 10.4, 30.0});
    CHECK(s.whisker_lo > 1.0);
    CHECK(s.whisker_hi < 30.0);
}

TEST_CASE("sorted-sample quantiles interpolate between neighbors") {
    std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 5.0);
    CHECK(quantile_sorted(v, 0.5) == 3.0);
    CHECK(quantile_sorted(v, 0.125) == doctest::Approx(1.5));
}

TEST_CASE("estimate batches keep only converged entries") {
    auto make = [](double tau, bool conv) {
        TauEstimate e;
        e.tau = tau;
        e.converged = conv;
        return e;
    };
    std::vector<TauEstimate> ests{make(0.1, true), make(0.2, true),
                                  make(99.0, false), make(0.3, true),
                                  make(77.0, false)};
    TauStats s = stats(ests);
    CHECK(s.n == 3);
    CHECK(s.max == doctest::Approx(0.3));
    CHECK(s.mean == doctest::Approx(0.2));

    std::vector<TauEstimate> none{make(1.0, false)};
    CHECK_THROWS_AS(stats(none), InsufficientData);
    CHECK_THROWS_AS(stats({}), InsufficientData);
    CHECK_THROWS_AS(stats_of({}), InsufficientData);
}
