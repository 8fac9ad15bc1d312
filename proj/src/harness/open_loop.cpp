#include "ffsteer/error.hpp"
#include "ffsteer/harness.hpp"

#include <algorithm>
#include <cmath>

namespace ffsteer::harness {

std::vector<double> replay(Feedforward& ff, const TelemetryLog& log) {
    ff.reset();
    std::vector<double> out;
    out.reserve(log.rows.size());
    for (const auto& r : log.rows) {
        FfInput in;
        in.a_y_target = r.ay_target;
        in.v_x = r.vx;
        in.a_x_actual = r.ax_meas;
        in.rho = r.rho();
        in.horizon = r.horizon;
        out.push_back(ff.steer(in));
    }
    return out;
}

std::vector<OpenLoopResult> eval_open_loop(const std::vector<Feedforward*>& controllers, const TelemetryLog& test,
                                           double rho_min, const std::vector<double>& ax_edges_in) {
    if (test.rows.size() < 2) throw InvalidInput("eval_open_loop: test log needs at least two rows");
    std::vector<double> edges = ax_edges_in;
    if (edges.empty()) {
        for (double e = -12.5; e <= 12.5 + 1e-9; e += 2.5) edges.push_back(e);
    }
    std::vector<double> truth;
    truth.reserve(test.rows.size());
    for (const auto& r : test.rows) truth.push_back(r.delta);

    std::vector<OpenLoopResult> out;
    for (Feedforward* ff : controllers) {
        OpenLoopResult res;
        res.controller = ff->name();
        const std::vector<double> pred = replay(*ff, test);
        res.full = compute_metrics(truth, pred);

        std::vector<SteerRecord> recs;
        recs.reserve(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) recs.push_back({test.rows[i].rho(), truth[i], pred[i]});
        const CorneringSet corner = cornering_filter(recs, rho_min);
        std::vector<double> ct, cp;
        for (const auto& r : corner.records) {
            ct.push_back(r.delta);
            cp.push_back(r.delta_ff);
        }
        if (ct.size() >= 2) {
            try {
                res.cornering = compute_metrics(ct, cp);
            } catch (const ZeroVariance&) {
                res.cornering = {};
            }
        }

        for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
            res.ax_bins.push_back({edges[b], edges[b + 1], 0.0, 0});
        }
        // Bin the cornering samples by logged longitudinal acceleration.
        std::size_t k = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (std::abs(recs[i].rho) < rho_min) continue;
            const double ax = test.rows[i].ax_meas;
            const double err = corner.normalized_error[k++];
            for (auto& bin : res.ax_bins) {
                if (ax >= bin.lo && ax < bin.hi) {
                    bin.mean_error += err;
                    ++bin.n;
                    break;
                }
            }
        }
        for (auto& bin : res.ax_bins) {
            if (bin.n > 0) bin.mean_error /= static_cast<double>(bin.n);
        }
        out.push_back(std::move(res));
    }
    return out;
}

}  // namespace ffsteer::harness
