#include "ffsteer/metrics.hpp"

#include "ffsteer/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ffsteer {

MetricSet compute_metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw InvalidInput("compute_metrics: length mismatch " + std::to_string(y_true.size()) + " vs " +
                           std::to_string(y_pred.size()));
    }
    const std::size_t n = y_true.size();
    if (n < 2) throw InvalidInput("compute_metrics: need at least 2 samples");
    double mean = 0.0;
    for (double v : y_true) mean += v;
    mean /= static_cast<double>(n);
    double sse = 0.0, sae = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y_true[i] - y_pred[i];
        sse += e * e;
        sae += std::abs(e);
        const double d = y_true[i] - mean;
        sst += d * d;
    }
    if (!(sst > 0.0)) throw ZeroVariance("compute_metrics: reference series is constant");
    MetricSet m;
    m.n = n;
    m.rmse = std::sqrt(sse / static_cast<double>(n));
    m.mae = sae / static_cast<double>(n);
    m.fvu = sse / sst;
    return m;
}

CorneringSet cornering_filter(const std::vector<SteerRecord>& records, double rho_min) {
    CorneringSet out;
    for (const auto& r : records) {
        if (std::abs(r.rho) < rho_min) continue;
        out.records.push_back(r);
        const double sgn = r.delta > 0.0 ? 1.0 : (r.delta < 0.0 ? -1.0 : 0.0);
        out.normalized_error.push_back(sgn * (r.delta_ff - r.delta));
    }
    return out;
}

XcorrResult xcorr_lag(const std::vector<double>& a, const std::vector<double>& b, double dt, double max_lag) {
    if (a.size() != b.size()) throw InvalidInput("xcorr_lag: length mismatch");
    const std::size_t n = a.size();
    if (n < 2 || !(dt > 0.0)) throw InvalidInput("xcorr_lag: need n >= 2 and dt > 0");
    const long k_max = static_cast<long>(std::floor(max_lag / dt + 1e-9));
    if (k_max < 0 || 2 * k_max >= static_cast<long>(n)) {
        throw InvalidInput("xcorr_lag: max_lag must be below half the series duration");
    }
    auto centered = [n](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(n);
        std::vector<double> c(v.size());
        double ss = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            c[i] = v[i] - m;
            ss += c[i] * c[i];
        }
        return std::make_pair(c, ss);
    };
    const auto [ca, sa] = centered(a);
    const auto [cb, sb] = centered(b);
    if (!(sa > 0.0) || !(sb > 0.0)) throw ZeroVariance("xcorr_lag: constant series");
    const double norm = std::sqrt(sa * sb);

    XcorrResult res;
    long best_k = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (long k = -k_max; k <= k_max; ++k) {
        double acc = 0.0;
        const long lo = std::max(0L, -k);
        const long hi = std::min(static_cast<long>(n), static_cast<long>(n) - k);
        for (long i = lo; i < hi; ++i) acc += ca[i] * cb[i + k];
        const double c = acc / norm;
        res.lags.push_back(static_cast<double>(k) * dt);
        res.correlation.push_back(c);
        if (c > best || (c == best && std::labs(k) < std::labs(best_k))) {
            best = c;
            best_k = k;
        }
    }
    res.lag_at_peak = static_cast<double>(best_k) * dt;
    res.peak = best;
    return res;
}

Biquad butterworth_lowpass(double cutoff_hz, double sample_hz) {
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_hz / 2.0)) {
        throw InvalidInput("butterworth_lowpass: cutoff must lie in (0, Nyquist)");
    }
    const double k = std::tan(std::numbers::pi * cutoff_hz / sample_hz);
    const double q = std::numbers::sqrt2;
    const double norm = 1.0 / (1.0 + q * k + k * k);
    Biquad f;
    f.b0 = k * k * norm;
    f.b1 = 2.0 * f.b0;
    f.b2 = f.b0;
    f.a1 = 2.0 * (k * k - 1.0) * norm;
    f.a2 = (1.0 - q * k + k * k) * norm;
    return f;
}

namespace {

// Transposed direct form II, states primed for a constant input x0.
void filter_pass(const Biquad& f, std::vector<double>& x) {
    if (x.empty()) return;
    const double x0 = x.front();
    double z1 = (1.0 - f.b0) * x0;
    double z2 = (f.b2 - f.a2) * x0;
    for (double& v : x) {
        const double in = v;
        const double y = f.b0 * in + z1;
        z1 = f.b1 * in - f.a1 * y + z2;
        z2 = f.b2 * in - f.a2 * y;
        v = y;
    }
}

}  // namespace

std::vector<double> filtfilt(const Biquad& f, const std::vector<double>& x) {
    std::vector<double> y = x;
    filter_pass(f, y);
    std::reverse(y.begin(), y.end());
    filter_pass(f, y);
    std::reverse(y.begin(), y.end());
    return y;
}

double lateral_jerk_rms(const std::vector<double>& a_y, double dt, double cutoff_hz) {
    if (a_y.size() < 3) throw InvalidInput("lateral_jerk_rms: need at least 3 samples");
    if (!(dt > 0.0)) throw InvalidInput("lateral_jerk_rms: dt must be positive");
    const std::vector<double> y = cutoff_hz > 0.0 ? filtfilt(butterworth_lowpass(cutoff_hz, 1.0 / dt), a_y) : a_y;
    double ss = 0.0;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        const double j = (y[i + 1] - y[i - 1]) / (2.0 * dt);
        ss += j * j;
    }
    return std::sqrt(ss / static_cast<double>(y.size() - 2));
}

}  // namespace ffsteer
