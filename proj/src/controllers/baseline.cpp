#include "ffsteer/controllers.hpp"

#include <cmath>

namespace ffsteer {

BaselineParams BaselineParams::tuned() {
    // Fitted by harness::tune_baseline on one timed lap at gg 0.75 driven with
    // the kinematic feedforward, then frozen.
    BaselineParams p;
    p.k_ug = 3.18e-4;
    p.k_long_pos = 1.609e-4;
    p.k_long_neg = 4.291e-5;
    p.tau_ug = 0.2;
    p.tau_long = 0.05;
    return p;
}

double low_pass(double y, double u, double tau, double dt) {
    if (tau <= 0.0) return u;
    return y + (1.0 - std::exp(-dt / tau)) * (u - y);
}

double ff_baseline(const FfInput& in, const BaselineParams& params, double wheelbase, double dt,
                   BaselineFilterState& state) {
    const double ackermann = in.ackermann(wheelbase);
    const double ug = params.k_ug * in.a_y_target;
    const double k_long = in.a_x_actual >= 0.0 ? params.k_long_pos : params.k_long_neg;
    const double lng = k_long * in.a_x_actual * in.a_y_target;
    state.ug = low_pass(state.ug, ug, params.tau_ug, dt);
    state.lng = low_pass(state.lng, lng, params.tau_long, dt);
    return ackermann + state.ug + state.lng;
}

BaselineFeedforward::BaselineFeedforward(BaselineParams params, double wheelbase, double dt)
    : params_(params), wheelbase_(wheelbase), dt_(dt) {}

double BaselineFeedforward::steer(const FfInput& in) {
    return ff_baseline(in, params_, wheelbase_, dt_, state_);
}

std::unique_ptr<Feedforward> BaselineFeedforward::clone() const {
    auto c = std::make_unique<BaselineFeedforward>(params_, wheelbase_, dt_);
    return c;
}

}  // namespace ffsteer
