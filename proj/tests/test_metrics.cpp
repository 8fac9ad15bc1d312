#include "doctest.h"

#include "ffsteer/error.hpp"
#include "ffsteer/metrics.hpp"

#include <cmath>
#include <random>

using namespace ffsteer;

TEST_CASE("three-point fixture") {
    const MetricSet m = compute_metrics({0.0, 1.0, 2.0}, {0.0, 1.0, 3.0});
    CHECK(std::abs(m.rmse - std::sqrt(1.0 / 3.0)) < 1e-12);
    CHECK(std::abs(m.mae - 1.0 / 3.0) < 1e-12);
    CHECK(std::abs(m.fvu - 0.5) < 1e-12);
    CHECK(m.n == 3);
}

TEST_CASE("perfect and mean predictors") {
    const std::vector<double> y{0.3, -1.2, 2.5, 0.7, 0.1};
    const MetricSet perfect = compute_metrics(y, y);
    CHECK(perfect.rmse == 0.0);
    CHECK(perfect.mae == 0.0);
    CHECK(perfect.fvu == 0.0);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    CHECK(compute_metrics(y, std::vector<double>(y.size(), mean)).fvu == 1.0);
}

TEST_CASE("metric preconditions") {
    CHECK_THROWS_AS(compute_metrics({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), ZeroVariance);
    CHECK_THROWS_AS(compute_metrics({1.0, 2.0}, {1.0}), InvalidInput);
    CHECK_THROWS_AS(compute_metrics({1.0}, {1.0}), InvalidInput);
}

TEST_CASE("scale equivariance") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> y(100), p(100);
    for (int i = 0; i < 100; ++i) {
        y[i] = n(rng);
        p[i] = y[i] + 0.3 * n(rng);
    }
    const MetricSet base = compute_metrics(y, p);
    for (double c : {-3.0, 0.25, 7.0}) {
        std::vector<double> cy(y), cp(p);
        for (auto& v : cy) v *= c;
        for (auto& v : cp) v *= c;
        const MetricSet m = compute_metrics(cy, cp);
        CHECK(m.rmse == doctest::Approx(std::abs(c) * base.rmse).epsilon(1e-12));
        CHECK(m.mae == doctest::Approx(std::abs(c) * base.mae).epsilon(1e-12));
        CHECK(m.fvu == doctest::Approx(base.fvu).epsilon(1e-12));
        CHECK(m.rmse >= m.mae);
    }
}

TEST_CASE("cornering filter") {
    std::vector<SteerRecord> recs;
    for (int i = 0; i < 10; ++i) recs.push_back({0.0, 0.0, 0.0});
    CHECK(cornering_filter(recs).records.empty());

    recs.clear();
    // 4 above 0.003 in magnitude, 3 between 0.001 and 0.003, 2 below.
    for (double rho : {0.01, -0.004, 0.003, -0.02, 0.002, -0.0015, 0.001, 0.0005, -0.0001})
        recs.push_back({rho, rho > 0 ? 0.1 : -0.1, 0.0});
    CHECK(cornering_filter(recs, 0.003).records.size() == 4);
    CHECK(cornering_filter(recs, 0.001).records.size() == 7);
    CHECK(cornering_filter(recs, 0.0).records.size() == recs.size());

    for (double a : {0.0, 0.001, 0.002, 0.005}) {
        for (double b : {0.0, 0.0015, 0.003}) {
            const CorneringSet twice = cornering_filter(cornering_filter(recs, a).records, b);
            CHECK(twice.records.size() == cornering_filter(recs, std::max(a, b)).records.size());
        }
    }

    const CorneringSet c = cornering_filter({{0.01, -0.1, -0.12}, {0.01, 0.1, 0.08}}, 0.003);
    REQUIRE(c.normalized_error.size() == 2);
    CHECK(std::abs(c.normalized_error[0] - 0.02) < 1e-15);
    CHECK(std::abs(c.normalized_error[1] + 0.02) < 1e-15);
}

TEST_CASE("cross-correlation lag") {
    const double dt = 0.01;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    // Smoothed noise so the correlation peak is unique.
    std::vector<double> raw(1200), a(1000), b(1000);
    for (auto& v : raw) v = n(rng);
    for (int i = 0; i < 1200; ++i) {
        if (i > 0) raw[i] = 0.9 * raw[i - 1] + raw[i];
    }
    for (int i = 0; i < 1000; ++i) {
        a[i] = raw[100 + i];
        b[i] = raw[100 + i - 9];  // b lags a by 9 samples
    }
    const XcorrResult r = xcorr_lag(a, b, dt, 0.5);
    CHECK(r.lag_at_peak == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(xcorr_lag(b, a, dt, 0.5).lag_at_peak == doctest::Approx(-0.09).epsilon(1e-12));

    const XcorrResult self = xcorr_lag(a, a, dt, 0.5);
    CHECK(self.lag_at_peak == 0.0);
    CHECK(self.peak == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(self.lags.size() == 101);

    CHECK_THROWS_AS(xcorr_lag(std::vector<double>(a.size(), 1.0), a, dt, 0.2), ZeroVariance);
}

TEST_CASE("lateral jerk of a sinusoid") {
    const double dt = 0.01, w = 2.0;
    std::vector<double> ay;
    // A whole number of periods keeps the RMS exact.
    const int n = static_cast<int>(std::round(10.0 * 3.14159265358979323846 / w / dt));
    for (int i = 0; i <= n; ++i) ay.push_back(std::sin(w * i * dt));
    CHECK(lateral_jerk_rms(ay, dt) == doctest::Approx(w / std::sqrt(2.0)).epsilon(0.01));
    CHECK(lateral_jerk_rms(std::vector<double>(50, 3.0), dt) < 1e-12);
    CHECK(lateral_jerk_rms(std::vector<double>(50, 3.0), dt, 0.0) == 0.0);
}

TEST_CASE("jerk low-pass attenuates noise above the cutoff") {
    const double dt = 0.01;
    std::vector<double> ay;
    for (int i = 0; i < 2000; ++i) ay.push_back(std::sin(2.0 * 3.14159265358979323846 * 40.0 * i * dt));
    const double filtered = lateral_jerk_rms(ay, dt, 10.0);
    const double raw = lateral_jerk_rms(ay, dt, 0.0);
    CHECK(20.0 * std::log10(raw / filtered) > 20.0);
}

TEST_CASE("filtfilt passes DC and keeps phase") {
    const Biquad f = butterworth_lowpass(10.0, 100.0);
    CHECK((f.b0 + f.b1 + f.b2) / (1.0 + f.a1 + f.a2) == doctest::Approx(1.0).epsilon(1e-12));
    const auto flat = filtfilt(f, std::vector<double>(40, 2.5));
    for (double v : flat) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));

    std::vector<double> slow;
    for (int i = 0; i < 600; ++i) slow.push_back(std::sin(2.0 * 3.14159265358979323846 * 0.5 * i * 0.01));
    const auto y = filtfilt(f, slow);
    const XcorrResult r = xcorr_lag(slow, y, 0.01, 0.1);
    CHECK(r.lag_at_peak == 0.0);
}
