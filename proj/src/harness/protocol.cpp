#include "ffsteer/error.hpp"
#include "ffsteer/harness.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace ffsteer::harness {

namespace {

// Solves the 3x3 system by Gaussian elimination with partial pivoting; a
// singular column gets a zero coefficient.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b) {
    for (int k = 0; k < 3; ++k) {
        int p = k;
        for (int i = k + 1; i < 3; ++i) {
            if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
        }
        std::swap(a[k], a[p]);
        std::swap(b[k], b[p]);
        if (std::abs(a[k][k]) < 1e-300) continue;
        for (int i = k + 1; i < 3; ++i) {
            const double f = a[i][k] / a[k][k];
            for (int j = k; j < 3; ++j) a[i][j] -= f * a[k][j];
            b[i] -= f * b[k];
        }
    }
    std::array<double, 3> x{};
    for (int i = 2; i >= 0; --i) {
        if (std::abs(a[i][i]) < 1e-300) continue;
        double s = b[i];
        for (int j = i + 1; j < 3; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

}  // namespace

BaselineTuning tune_baseline(const TelemetryLog& log, double wheelbase, double dt,
                             const std::vector<double>& tau_grid) {
    if (log.rows.size() < 10) throw InvalidInput("tune_baseline: log too short");
    BaselineTuning best;
    best.rmse = std::numeric_limits<double>::infinity();
    const std::size_t n = log.rows.size();
    for (double tau_ug : tau_grid) {
        for (double tau_long : tau_grid) {
            // Unit-gain filtered regressors; the filters are linear so the
            // gains factor out.
            std::vector<std::array<double, 3>> x(n);
            std::vector<double> z(n);
            double f_ug = 0.0, f_pos = 0.0, f_neg = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& r = log.rows[i];
                const double lng = r.ax_meas * r.ay_target;
                f_ug = low_pass(f_ug, r.ay_target, tau_ug, dt);
                f_pos = low_pass(f_pos, r.ax_meas >= 0.0 ? lng : 0.0, tau_long, dt);
                f_neg = low_pass(f_neg, r.ax_meas < 0.0 ? lng : 0.0, tau_long, dt);
                x[i] = {f_ug, f_pos, f_neg};
                z[i] = r.delta - r.ay_target * wheelbase / (r.vx * r.vx);
            }
            std::array<std::array<double, 3>, 3> a{};
            std::array<double, 3> b{};
            for (std::size_t i = 0; i < n; ++i) {
                for (int p = 0; p < 3; ++p) {
                    b[p] += x[i][p] * z[i];
                    for (int q = 0; q < 3; ++q) a[p][q] += x[i][p] * x[i][q];
                }
            }
            const auto k = solve3(a, b);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = k[0] * x[i][0] + k[1] * x[i][1] + k[2] * x[i][2] - z[i];
                ss += e * e;
            }
            const double rmse = std::sqrt(ss / static_cast<double>(n));
            if (rmse < best.rmse) {
                best.rmse = rmse;
                best.params = {k[0], k[1], k[2], tau_ug, tau_long};
            }
        }
    }
    return best;
}

ProtocolSplit split_test_lap(const TelemetryLog& log, int test_lap) {
    ProtocolSplit out;
    if (test_lap < 0) {
        out.fit = log;
        return out;
    }
    out.test = log.laps({test_lap});
    out.fit = log.without_laps({test_lap});
    return out;
}

}  // namespace ffsteer::harness
