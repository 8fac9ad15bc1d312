#include "ffsteer/csv.hpp"
#include "ffsteer/error.hpp"
#include "ffsteer/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace ffsteer::harness {

ErrorStats error_stats(const std::vector<double>& e) {
    ErrorStats s;
    s.n = e.size();
    if (e.empty()) return s;
    double ss = 0.0, sa = 0.0;
    for (double v : e) {
        ss += v * v;
        sa += std::abs(v);
        s.max_abs = std::max(s.max_abs, std::abs(v));
    }
    s.rmse = std::sqrt(ss / static_cast<double>(e.size()));
    s.mae = sa / static_cast<double>(e.size());
    return s;
}

double RunReport::mean_lap_time() const {
    if (lap_times.empty()) return 0.0;
    return std::accumulate(lap_times.begin(), lap_times.end(), 0.0) / static_cast<double>(lap_times.size());
}

TrajectoryCache::TrajectoryCache(const Track& track, GgLimits limits, double v_cap)
    : track_(track), limits_(limits), v_cap_(v_cap) {}

const Trajectory& TrajectoryCache::get(double gg_scale) {
    auto it = cache_.find(gg_scale);
    if (it != cache_.end()) return it->second;
    GgLimits l = limits_;
    l.gg_scale = gg_scale;
    return cache_.emplace(gg_scale, plan_velocity(track_, l, v_cap_)).first->second;
}

RunReport run_laps(const Track& track, const VehicleParams& vehicle, Feedforward& ff,
                   const std::vector<double>& gg_per_lap, const ClosedLoopConfig& cfg, TelemetryLog* log) {
    if (gg_per_lap.empty()) throw InvalidInput("run_laps: empty lap schedule");
    if (cfg.plant_substeps < 1 || !(cfg.controller_dt > 0.0)) throw InvalidInput("run_laps: bad step sizes");
    if (!track.closed()) throw InvalidInput("closed-loop runs need a closed track");
    vehicle.validate();

    TrajectoryCache plans(track, cfg.limits, cfg.v_cap);
    double planned = 0.0;
    for (double gg : gg_per_lap) planned += plans.get(gg).lap_time();
    const double t_max = cfg.timeout_factor * planned + 10.0;

    const double L = track.total_length();
    const double plant_dt = cfg.controller_dt / cfg.plant_substeps;
    const Trajectory* traj = &plans.get(gg_per_lap.front());
    const CenterlinePose start = track.at(0.0);
    VehicleState state = initial_state(vehicle, start.x, start.y, start.heading, traj->at(0.0).v_target);

    SpeedControllerParams speed;
    speed.mass = vehicle.mass;
    speed.drag_coeff = vehicle.drag_coeff;
    speed.k_v = cfg.speed_gain;
    speed.max_drive_force = vehicle.max_drive_force;
    speed.max_brake_force = vehicle.max_brake_force;
    FeedbackGains fb_gains = cfg.feedback_gains;
    fb_gains.enabled = cfg.feedback;
    FeedbackState fb_state;
    ff.reset();

    RunReport rep;
    rep.controller = ff.name();
    rep.gg_scale = cfg.gg_scale;
    rep.feedback = cfg.feedback;
    if (log) log->rows.clear();

    std::vector<double> lat, verr, ayerr, ay_series;
    std::string hash_buf;
    Measurement meas;
    meas.v_x = state.v_x;
    double t = 0.0;
    double s_hint = 0.0;
    double s_prev = 0.0;
    double t_prev = 0.0;
    double last_cross = 0.0;
    long steps = 0;
    int lap = 0;
    const int n_laps = static_cast<int>(gg_per_lap.size());

    while (true) {
        Projection proj;
        try {
            proj = track.project(state.x, state.y, state.yaw, s_hint);
        } catch (const OffTrack& e) {
            rep.failed = true;
            rep.failure_cause = std::string("off track: ") + e.what();
            rep.failure_s = s_prev;
            rep.failure_t = t;
            break;
        }
        s_hint = proj.s;

        // Start-line crossing: s jumps from near L back to near 0.
        if (t > 0.0 && s_prev > 0.75 * L && proj.s < 0.25 * L) {
            const double before = L - s_prev;
            const double frac = before / (before + proj.s);
            const double t_cross = t_prev + frac * (t - t_prev);
            rep.all_lap_times.push_back(t_cross - last_cross);
            if (lap >= cfg.warmup_laps) rep.lap_times.push_back(t_cross - last_cross);
            last_cross = t_cross;
            ++lap;
            if (lap >= n_laps) break;
            traj = &plans.get(gg_per_lap[static_cast<std::size_t>(lap)]);
        }

        // Both correction loops act on the course (velocity direction) error;
        // a yaw-based heading error carries the steady sideslip and would
        // bias the car off the line in every corner.
        Projection course = proj;
        course.heading_error = wrap_angle(proj.heading_error + std::atan2(state.v_y, state.v_x));
        const Targets tg = target_generator(course, *traj, state.v_x, cfg.targets);
        std::vector<HorizonStep> horizon =
            sample_horizon(*traj, proj.s + state.v_x * cfg.targets.preview_time, cfg.horizon_len, cfg.controller_dt);
        const HorizonStep raw0 = horizon.front();
        for (auto& h : horizon) {
            h.v_x += state.v_x - raw0.v_x;
            h.a_x += tg.a_x_target - raw0.a_x;
            h.a_y += tg.a_y_target - raw0.a_y;
        }

        FfInput in;
        in.a_y_target = tg.a_y_target;
        in.v_x = state.v_x;
        in.a_x_actual = meas.a_x_actual;
        in.rho = tg.a_y_target / (state.v_x * state.v_x);
        in.horizon = std::move(horizon);
        const double delta_ff = ff.steer(in);
        const double delta_fb = feedback_steer(proj.lateral_error, course.heading_error,
                                               tg.a_y_target - meas.a_y_actual, fb_gains, cfg.controller_dt, fb_state);
        const double force = speed_controller(state.v_x, tg.v_target, tg.a_x_target, speed);

        TelemetryRow row;
        row.t = t;
        row.s = proj.s;
        row.x = state.x;
        row.y = state.y;
        row.yaw = state.yaw;
        row.vx = state.v_x;
        row.vy = state.v_y;
        row.yaw_rate = state.yaw_rate;
        row.delta = state.delta;
        row.delta_ff = delta_ff;
        row.delta_fb = delta_fb;
        row.ax_meas = meas.a_x_actual;
        row.ay_meas = meas.a_y_actual;
        row.ay_target = tg.a_y_target;
        row.ax_target = tg.a_x_target;
        row.v_target = tg.v_target;
        row.lat_err = proj.lateral_error;
        row.head_err = proj.heading_error;
        row.lap_id = lap;
        row.gg_scale = gg_per_lap[static_cast<std::size_t>(lap)];
        const double packed[] = {row.t,       row.s,        row.x,         row.y,        row.yaw,      row.vx,
                                 row.vy,      row.yaw_rate, row.delta,     row.delta_ff, row.delta_fb, row.ax_meas,
                                 row.ay_meas, row.ay_target, row.ax_target, row.v_target, row.lat_err, row.head_err};
        hash_buf.append(reinterpret_cast<const char*>(packed), sizeof(packed));
        lat.push_back(proj.lateral_error);
        verr.push_back(tg.v_target - state.v_x);
        ayerr.push_back(tg.a_y_target - meas.a_y_actual);
        ay_series.push_back(meas.a_y_actual);
        if (log) {
            row.horizon = in.horizon;
            log->rows.push_back(std::move(row));
        }

        if (lateral_failure(proj.lateral_error, cfg.failure_threshold)) {
            rep.failed = true;
            rep.failure_cause = "lateral error threshold";
            rep.failure_s = proj.s;
            rep.failure_t = t;
            break;
        }
        if (t > t_max) {
            rep.failed = true;
            rep.failure_cause = "timeout";
            rep.failure_s = proj.s;
            rep.failure_t = t;
            break;
        }

        s_prev = proj.s;
        t_prev = t;
        const VehicleInputs u{delta_ff + delta_fb, force};
        try {
            for (int k = 0; k < cfg.plant_substeps; ++k) {
                const StepResult r = step(state, vehicle, u, plant_dt, t + k * plant_dt);
                state = r.next;
                meas = r.meas;
            }
        } catch (const NumericalDivergence& e) {
            rep.failed = true;
            rep.failure_cause = std::string("numerical divergence: ") + e.what();
            rep.failure_s = proj.s;
            rep.failure_t = t;
            break;
        }
        t = static_cast<double>(++steps) * cfg.controller_dt;
    }

    rep.sim_time = t;
    rep.lateral_error = error_stats(lat);
    rep.max_abs_lateral_error = rep.lateral_error.max_abs;
    rep.velocity_error = error_stats(verr);
    rep.ay_error = error_stats(ayerr);
    rep.jerk_cutoff_hz = 10.0;
    if (ay_series.size() >= 3) rep.lateral_jerk_rms = lateral_jerk_rms(ay_series, cfg.controller_dt, rep.jerk_cutoff_hz);
    rep.telemetry_hash = csv::fnv1a(hash_buf);
    return rep;
}

RunReport eval_closed_loop(const Track& track, const VehicleParams& vehicle, Feedforward& ff,
                           const ClosedLoopConfig& cfg, TelemetryLog* log) {
    if (cfg.warmup_laps < 0 || cfg.timed_laps < 1) throw InvalidInput("eval_closed_loop: need at least one timed lap");
    const std::vector<double> schedule(static_cast<std::size_t>(cfg.warmup_laps + cfg.timed_laps), cfg.gg_scale);
    return run_laps(track, vehicle, ff, schedule, cfg, log);
}

}  // namespace ffsteer::harness
