#pragma once

#include <cstddef>
#include <vector>

namespace ffsteer {

struct MetricSet {
    double rmse = 0.0;
    double mae = 0.0;
    double fvu = 0.0;
    std::size_t n = 0;
};

/// RMSE, MAE and fraction of variance unexplained against the mean of y_true.
/// Throws InvalidInput on length mismatch or n < 2 and ZeroVariance when
/// y_true is constant.
MetricSet compute_metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred);

/// One steering sample as seen by the open-loop evaluation.
struct SteerRecord {
    double rho = 0.0;       // path curvature proxy a_y / v^2 [1/m]
    double delta = 0.0;     // measured steering [rad]
    double delta_ff = 0.0;  // predicted feedforward [rad]
};

struct CorneringSet {
    std::vector<SteerRecord> records;
    /// sgn(delta) (delta_ff - delta); positive means the prediction steers
    /// more than the driver did.
    std::vector<double> normalized_error;
};

CorneringSet cornering_filter(const std::vector<SteerRecord>& records, double rho_min = 0.003);

struct XcorrResult {
    double lag_at_peak = 0.0;      // [s], positive when b lags a
    double peak = 0.0;
    std::vector<double> lags;      // [s]
    std::vector<double> correlation;
};

/// Normalised cross-correlation sum_i a_i b_{i+k} / sqrt(sum a^2 sum b^2) of
/// the mean-removed series for integer lags |k| dt <= max_lag.
XcorrResult xcorr_lag(const std::vector<double>& a, const std::vector<double>& b, double dt, double max_lag);

/// Second-order Butterworth low-pass coefficients (bilinear transform with
/// prewarping); b0..b2 and a1, a2 with a0 = 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
};
Biquad butterworth_lowpass(double cutoff_hz, double sample_hz);

/// Zero-phase forward-backward filtering, initialised at steady state on the
/// edge samples.
std::vector<double> filtfilt(const Biquad& f, const std::vector<double>& x);

/// RMS of the central-difference derivative of a low-passed a_y. A cutoff
/// <= 0 skips the filter.
double lateral_jerk_rms(const std::vector<double>& a_y, double dt, double cutoff_hz = 10.0);

}  // namespace ffsteer
