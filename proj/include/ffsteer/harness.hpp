#pragma once

#include "ffsteer/controllers.hpp"
#include "ffsteer/learning/train.hpp"
#include "ffsteer/metrics.hpp"
#include "ffsteer/planner.hpp"
#include "ffsteer/track.hpp"
#include "ffsteer/vehicle.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ffsteer::harness {

// ----------------------------------------------------------------- telemetry

/// One controller-rate sample of a run.
struct TelemetryRow {
    double t = 0.0, s = 0.0, x = 0.0, y = 0.0, yaw = 0.0;
    double vx = 0.0, vy = 0.0, yaw_rate = 0.0;
    double delta = 0.0, delta_ff = 0.0, delta_fb = 0.0;
    double ax_meas = 0.0, ay_meas = 0.0;
    double ay_target = 0.0, ax_target = 0.0, v_target = 0.0;
    double lat_err = 0.0, head_err = 0.0;
    int lap_id = 0;
    double gg_scale = 0.0;
    std::vector<HorizonStep> horizon;

    double rho() const { return ay_target / (vx * vx); }
};

struct TelemetryLog {
    std::vector<TelemetryRow> rows;

    /// Main CSV with the fixed column set; horizons go to a sidecar file named
    /// horizon_path(path) with columns t,lap_id,v0,ax0,ay0,v1,...
    void write(const std::string& path) const;
    /// Reads the main CSV and, when present, its horizon sidecar.
    static TelemetryLog read(const std::string& path);
    static std::string horizon_path(const std::string& csv_path);

    std::vector<int> lap_ids() const;
    TelemetryLog filter(const std::function<bool(const TelemetryRow&)>& keep) const;
    TelemetryLog laps(const std::vector<int>& ids) const;
    TelemetryLog without_laps(const std::vector<int>& ids) const;
};

extern const std::vector<std::string> kTelemetryColumns;

/// Learning records from a log (requires horizons).
std::vector<learning::Record> to_records(const TelemetryLog& log, double wheelbase);

enum class EhdAySource { Target, Measured };
/// Steering-deviation samples for the EHD fit.
std::vector<EhdSample> to_ehd_samples(const TelemetryLog& log, double wheelbase,
                                      EhdAySource source = EhdAySource::Target);

// --------------------------------------------------------------- closed loop

struct ClosedLoopConfig {
    double gg_scale = 0.5;
    int warmup_laps = 1;
    int timed_laps = 2;
    bool feedback = true;
    double controller_dt = 0.01;
    int plant_substeps = 10;
    double failure_threshold = 2.2;  // [m]
    int horizon_len = 10;
    double v_cap = 80.0;             // [m/s]
    GgLimits limits;                 // gg_scale is overridden per lap
    TargetGains targets;
    FeedbackGains feedback_gains;
    double speed_gain = 0.5;         // [1/s]
    /// Runs longer than this multiple of the planned time are aborted.
    double timeout_factor = 2.0;
};

struct ErrorStats {
    double rmse = 0.0;
    double mae = 0.0;
    double max_abs = 0.0;
    std::size_t n = 0;
};
ErrorStats error_stats(const std::vector<double>& e);

/// The run fails as soon as |lateral error| reaches the threshold.
inline bool lateral_failure(double lateral_error, double threshold) {
    return !(std::abs(lateral_error) < threshold);
}

struct RunReport {
    std::string controller;
    double gg_scale = 0.0;
    bool feedback = true;
    std::vector<double> lap_times;        // timed laps only [s]
    std::vector<double> all_lap_times;    // every completed lap [s]
    bool failed = false;
    double failure_s = 0.0;
    double failure_t = 0.0;
    std::string failure_cause;
    double max_abs_lateral_error = 0.0;
    ErrorStats lateral_error;  // [m]
    ErrorStats velocity_error;  // [m/s]
    ErrorStats ay_error;        // [m/s^2]
    double lateral_jerk_rms = 0.0;  // [m/s^3]
    double jerk_cutoff_hz = 10.0;
    double sim_time = 0.0;
    std::uint64_t telemetry_hash = 0;

    double mean_lap_time() const;
};

/// Plans and caches one trajectory per GG scale.
class TrajectoryCache {
public:
    TrajectoryCache(const Track& track, GgLimits limits, double v_cap);
    const Trajectory& get(double gg_scale);

private:
    const Track& track_;
    GgLimits limits_;
    double v_cap_;
    std::map<double, Trajectory> cache_;
};

/// One continuous run with lap i driven against the trajectory planned at
/// gg_per_lap[i]. Laps < cfg.warmup_laps are excluded from lap_times. The
/// telemetry log, when given, receives every controller step up to the end
/// or the failure.
RunReport run_laps(const Track& track, const VehicleParams& vehicle, Feedforward& ff,
                   const std::vector<double>& gg_per_lap, const ClosedLoopConfig& cfg, TelemetryLog* log = nullptr);

/// warmup_laps + timed_laps at cfg.gg_scale.
RunReport eval_closed_loop(const Track& track, const VehicleParams& vehicle, Feedforward& ff,
                           const ClosedLoopConfig& cfg, TelemetryLog* log = nullptr);

// --------------------------------------------------------------- collection

/// n laps ramping linearly from lo to hi, followed by the extra test laps.
std::vector<double> ramp_schedule(int n, double lo, double hi, const std::vector<double>& extra = {});

struct CollectConfig {
    std::vector<double> schedule = ramp_schedule(26, 0.55, 0.95, {0.75});
    int test_lap = 26;  // lap id reserved for open-loop testing
    ClosedLoopConfig loop;
};

/// Drives the schedule with the given feedforward (the baseline in the
/// protocol) and returns the concatenated log. Throws OffTrack-style
/// NotAttainable when the run fails before the schedule is complete.
TelemetryLog collect_dataset(const Track& track, const VehicleParams& vehicle, Feedforward& ff,
                             const CollectConfig& cfg, RunReport* report = nullptr);

// ---------------------------------------------------------------- open loop

struct AxBin {
    double lo = 0.0, hi = 0.0;
    double mean_error = 0.0;  // steering-direction normalised [rad]
    std::size_t n = 0;
};

struct OpenLoopResult {
    std::string controller;
    MetricSet full;
    MetricSet cornering;
    std::vector<AxBin> ax_bins;
};

/// Replays a log through each feedforward (reset first, fed in order) and
/// compares against the logged steering angle.
std::vector<OpenLoopResult> eval_open_loop(const std::vector<Feedforward*>& controllers, const TelemetryLog& test,
                                           double rho_min = 0.003, const std::vector<double>& ax_edges = {});

/// Predicted feedforward for every row of a log.
std::vector<double> replay(Feedforward& ff, const TelemetryLog& log);

// -------------------------------------------------------------------- sweep

struct NamedController {
    std::string name;
    std::shared_ptr<const Feedforward> prototype;  // cloned per run
};

struct SweepControllerSummary {
    std::string controller;
    double max_gg = 0.0;       // highest completed grid point, 0 when none
    double relative_gg = 0.0;  // max_gg / best max_gg across controllers
    std::size_t runs = 0;
};

struct SweepResult {
    std::vector<RunReport> reports;  // ordered by controller, then gg
    std::vector<SweepControllerSummary> summary;
};

/// Each controller walks the ascending grid until its first failure. Controllers
/// run on up to `jobs` threads; results are ordered deterministically.
SweepResult gg_sweep(const Track& track, const VehicleParams& vehicle, const std::vector<NamedController>& controllers,
                     const std::vector<double>& grid, const ClosedLoopConfig& cfg, int jobs = 1);

/// Parses "lo:hi:step" or a comma list.
std::vector<double> parse_grid(const std::string& text);

// ---------------------------------------------------------------- finetune

struct FinetuneConfig {
    int iterations = 4;
    double gg_scale = 0.85;
    ClosedLoopConfig loop;
    learning::TrainConfig train;
    int record_stride = 1;
};

struct FinetuneTrace {
    std::string controller;
    std::vector<double> lap_times;  // iterations + 1 entries, index 0 = initial model
    std::vector<bool> failed;
    std::vector<double> val_loss;   // after each fine-tune [rad^2]; empty for EHD
};

/// Deploy, collect, fine-tune; repeated. Data after a failure is discarded
/// and the next iteration keeps the previous model.
FinetuneTrace finetune_loop(const Track& track, const VehicleParams& vehicle, learning::Model& model,
                            const FinetuneConfig& cfg);

/// EHD variant: the surface is refit on the original samples extended by
/// every successful deployment.
FinetuneTrace finetune_loop_ehd(const Track& track, const VehicleParams& vehicle, EhdSurface& surface,
                                std::vector<EhdSample> samples, const FinetuneConfig& cfg);

// ---------------------------------------------------------------- protocol

/// Fitting data and the held-out open-loop test lap of a collected log.
/// test_lap < 0 keeps everything for fitting and leaves test empty.
struct ProtocolSplit {
    TelemetryLog fit;
    TelemetryLog test;
};
ProtocolSplit split_test_lap(const TelemetryLog& log, int test_lap);


/// Least-squares baseline gains on a log for each pair of filter time
/// constants in the grid; the pair with the lowest steering RMSE wins.
struct BaselineTuning {
    BaselineParams params;
    double rmse = 0.0;  // [rad]
};
BaselineTuning tune_baseline(const TelemetryLog& log, double wheelbase, double dt,
                             const std::vector<double>& tau_grid = {0.0, 0.02, 0.05, 0.1, 0.2});

}  // namespace ffsteer::harness
