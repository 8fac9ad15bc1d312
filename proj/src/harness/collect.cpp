#include "ffsteer/error.hpp"
#include "ffsteer/harness.hpp"

namespace ffsteer::harness {

std::vector<double> ramp_schedule(int n, double lo, double hi, const std::vector<double>& extra) {
    if (n < 1) throw InvalidInput("ramp_schedule: need at least one lap");
    std::vector<double> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

TelemetryLog collect_dataset(const Track& track, const VehicleParams& vehicle, Feedforward& ff,
                             const CollectConfig& cfg, RunReport* report) {
    ClosedLoopConfig loop = cfg.loop;
    loop.warmup_laps = 0;
    TelemetryLog log;
    RunReport rep = run_laps(track, vehicle, ff, cfg.schedule, loop, &log);
    if (report) *report = rep;
    if (rep.failed) {
        throw NotAttainable("collection failed in lap " + std::to_string(log.rows.empty() ? 0 : log.rows.back().lap_id) +
                            " (gg " + std::to_string(log.rows.empty() ? 0.0 : log.rows.back().gg_scale) +
                            "): " + rep.failure_cause);
    }
    return log;
}

}  // namespace ffsteer::harness
