#include "ffsteer/error.hpp"
#include "ffsteer/harness.hpp"

namespace ffsteer::harness {

namespace {

ClosedLoopConfig deploy_config(const FinetuneConfig& cfg) {
    ClosedLoopConfig loop = cfg.loop;
    loop.gg_scale = cfg.gg_scale;
    return loop;
}

// Seconds of telemetry dropped before a failure; the car is already leaving
// the line there and the samples are not representative.
constexpr double kFailureMargin = 2.0;

TelemetryLog usable(const TelemetryLog& log, const RunReport& rep) {
    if (!rep.failed) return log;
    const double cutoff = rep.failure_t - kFailureMargin;
    return log.filter([cutoff](const TelemetryRow& r) { return r.t < cutoff; });
}

}  // namespace

FinetuneTrace finetune_loop(const Track& track, const VehicleParams& vehicle, learning::Model& model,
                            const FinetuneConfig& cfg) {
    if (cfg.iterations < 1) throw InvalidInput("finetune_loop: need at least one iteration");
    const ClosedLoopConfig loop = deploy_config(cfg);
    FinetuneTrace trace;
    trace.controller = model.kind();
    for (int it = 0; it <= cfg.iterations; ++it) {
        auto snapshot = std::shared_ptr<const learning::Model>(model.clone());
        learning::LearnedFeedforward ff(snapshot, vehicle.wheelbase());
        TelemetryLog log;
        const RunReport rep = eval_closed_loop(track, vehicle, ff, loop, &log);
        trace.lap_times.push_back(rep.failed ? 0.0 : rep.mean_lap_time());
        trace.failed.push_back(rep.failed);
        if (it == cfg.iterations) break;

        const TelemetryLog data = usable(log, rep);
        if (data.rows.empty()) continue;
        auto records = learning::subsample(to_records(data, vehicle.wheelbase()), cfg.record_stride);
        const learning::Split split = learning::split_contiguous(records, 0.2);
        if (split.train.empty()) continue;
        const auto hist = learning::finetune(model, split.train, split.validation, cfg.train);
        trace.val_loss.push_back(hist.best_val_loss);
    }
    return trace;
}

FinetuneTrace finetune_loop_ehd(const Track& track, const VehicleParams& vehicle, EhdSurface& surface,
                                std::vector<EhdSample> samples, const FinetuneConfig& cfg) {
    if (cfg.iterations < 1) throw InvalidInput("finetune_loop_ehd: need at least one iteration");
    const ClosedLoopConfig loop = deploy_config(cfg);
    FinetuneTrace trace;
    trace.controller = "ehd";
    for (int it = 0; it <= cfg.iterations; ++it) {
        EhdFeedforward ff(surface, vehicle.wheelbase());
        TelemetryLog log;
        const RunReport rep = eval_closed_loop(track, vehicle, ff, loop, &log);
        trace.lap_times.push_back(rep.failed ? 0.0 : rep.mean_lap_time());
        trace.failed.push_back(rep.failed);
        if (it == cfg.iterations) break;
        const TelemetryLog data = usable(log, rep);
        if (data.rows.empty()) continue;
        const auto extra = to_ehd_samples(data, vehicle.wheelbase());
        samples.insert(samples.end(), extra.begin(), extra.end());
        surface = fit_ehd(samples).surface;
    }
    return trace;
}

}  // namespace ffsteer::harness
