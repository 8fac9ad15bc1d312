#include "ffsteer/controllers.hpp"

#include <algorithm>

namespace ffsteer {

double feedback_steer(double lateral_error, double heading_error, double a_y_error,
                      const FeedbackGains& gains, double dt, FeedbackState& state) {
    double rate = 0.0;
    if (state.primed && dt > 0.0) rate = (lateral_error - state.prev_lateral_error) / dt;
    state.prev_lateral_error = lateral_error;
    state.primed = true;
    if (!gains.enabled) return 0.0;
    // Positive lateral error is left of the path, so steer right (negative).
    const double u = -(gains.kp * lateral_error + gains.kd * rate + gains.k_heading * heading_error) +
                     gains.k_ay * a_y_error;
    return std::clamp(u, -gains.limit, gains.limit);
}

}  // namespace ffsteer
