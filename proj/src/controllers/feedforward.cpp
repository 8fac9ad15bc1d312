#include "ffsteer/controllers.hpp"

#include <algorithm>
#include <cmath>

namespace ffsteer {

namespace {
// Longitudinal authority never drops below this share of the nominal limit,
// so the generator can still brake when the lateral demand is saturated.
constexpr double kMinLongitudinalShare = 0.3;
}  // namespace

Targets target_generator(const Projection& proj, const Trajectory& traj, double v_now,
                         const TargetGains& gains) {
    Targets t;
    const TrajectorySample here = traj.at(proj.s);
    const TrajectorySample ahead = traj.at(proj.s + v_now * gains.preview_time);
    t.curvature_preview = ahead.curvature;
    t.a_y_target = ahead.curvature * v_now * v_now - gains.k_e * proj.lateral_error -
                   gains.k_psi * proj.heading_error * v_now;
    t.v_target = here.v_target;

    const GgLimits& lim = traj.limits();
    // The remainder follows the planned lateral load at the current position;
    // the previewed command runs ahead of it on corner entry.
    const double ratio = std::min(1.0, std::abs(here.a_y_target) / lim.lateral());
    const double share = std::max(kMinLongitudinalShare, std::sqrt(1.0 - ratio * ratio));
    const double ax = here.a_x_target + gains.k_v * (here.v_target - v_now);
    t.a_x_target = std::clamp(ax, -share * lim.brake(), share * lim.drive());
    return t;
}

double speed_controller(double v_now, double v_target, double a_x_target, const SpeedControllerParams& params) {
    const double f = params.mass * (a_x_target + params.k_v * (v_target - v_now)) +
                     params.drag_coeff * v_now * v_now;
    return std::clamp(f, -params.max_brake_force, params.max_drive_force);
}

}  // namespace ffsteer
