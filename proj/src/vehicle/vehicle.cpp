#include "ffsteer/vehicle.hpp"

#include "ffsteer/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ffsteer {

double magic_formula(const TireCoefficients& tire, double slip_angle, double vertical_load) {
    const double ba = tire.B * slip_angle;
    return vertical_load * tire.D * std::sin(tire.C * std::atan(ba - tire.E * (ba - std::atan(ba))));
}

void VehicleParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(name) + " must be positive");
    };
    positive(mass, "mass");
    positive(yaw_inertia, "yaw_inertia");
    positive(l_f, "l_f");
    positive(l_r, "l_r");
    positive(track_width_f, "track_width_f");
    positive(track_width_r, "track_width_r");
    positive(h_cg, "h_cg");
    positive(tau_steer, "tau_steer");
    positive(steer_rate_limit, "steer_rate_limit");
    positive(steer_angle_limit, "steer_angle_limit");
    positive(max_drive_force, "max_drive_force");
    positive(max_brake_force, "max_brake_force");
    positive(gravity, "gravity");
    for (const auto* t : {&tire_f, &tire_r}) {
        if (!(t->B > 0.0 && t->C > 0.0 && t->D > 0.0 && t->E < 1.0)) {
            throw InvalidInput("Magic Formula needs B, C, D > 0 and E < 1");
        }
    }
    if (drag_coeff < 0.0 || downforce_coeff < 0.0) throw InvalidInput("aero coefficients must be >= 0");
    if (aero_balance_front < 0.0 || aero_balance_front > 1.0) throw InvalidInput("aero_balance_front in [0, 1]");
    if (brake_balance_front < 0.0 || brake_balance_front > 1.0) throw InvalidInput("brake_balance_front in [0, 1]");
}

std::array<double, 4> wheel_loads(const VehicleParams& p, double v_x, double a_x, double a_y) {
    const double l = p.wheelbase();
    const double weight = p.mass * p.gravity;
    const double down = p.downforce_coeff * v_x * v_x;
    const double front = weight * p.l_r / l + down * p.aero_balance_front - p.mass * a_x * p.h_cg / l;
    const double rear = weight * p.l_f / l + down * (1.0 - p.aero_balance_front) + p.mass * a_x * p.h_cg / l;
    // Lateral transfer split between axles by static weight share.
    const double lat_f = p.mass * a_y * p.h_cg / p.track_width_f * (p.l_r / l);
    const double lat_r = p.mass * a_y * p.h_cg / p.track_width_r * (p.l_f / l);
    std::array<double, 4> fz{front / 2.0 - lat_f, front / 2.0 + lat_f, rear / 2.0 - lat_r, rear / 2.0 + lat_r};
    for (auto& f : fz) f = std::max(f, 0.0);
    return fz;
}

namespace {

struct WheelGeometry {
    double x;
    double y;
};

std::array<WheelGeometry, 4> wheel_positions(const VehicleParams& p) {
    return {{{p.l_f, p.track_width_f / 2.0},
             {p.l_f, -p.track_width_f / 2.0},
             {-p.l_r, p.track_width_r / 2.0},
             {-p.l_r, -p.track_width_r / 2.0}}};
}

std::array<double, 4> longitudinal_demand(const VehicleParams& p, double drive_force) {
    std::array<double, 4> fx{};
    if (drive_force >= 0.0) {
        const double f = std::min(drive_force, p.max_drive_force);
        fx[RL] = fx[RR] = f / 2.0;
    } else {
        const double f = std::min(-drive_force, p.max_brake_force);
        fx[FL] = fx[FR] = -f * p.brake_balance_front / 2.0;
        fx[RL] = fx[RR] = -f * (1.0 - p.brake_balance_front) / 2.0;
    }
    return fx;
}

}  // namespace

Derivatives evaluate(const VehicleState& s, const VehicleParams& p, const VehicleInputs& in) {
    Derivatives d{};
    const double vx = std::max(s.v_x, kMinSpeed);
    const auto fz = wheel_loads(p, vx, s.a_x, s.a_y);
    const auto geo = wheel_positions(p);
    const auto fx_demand = longitudinal_demand(p, in.drive_force);

    double fx_body = 0.0;
    double fy_body = 0.0;
    double mz = 0.0;
    for (int i = 0; i < 4; ++i) {
        const bool front = i == FL || i == FR;
        const auto& tire = front ? p.tire_f : p.tire_r;
        const double steer = front ? s.delta : 0.0;
        const double vwx = vx - s.yaw_rate * geo[i].y;
        const double vwy = s.v_y + s.yaw_rate * geo[i].x;
        const double alpha = steer - std::atan2(vwy, vwx);

        const double cap = tire.D * fz[i];
        const double fx = std::clamp(fx_demand[i], -cap, cap);
        double fy = magic_formula(tire, alpha, fz[i]);
        if (cap > 0.0) {
            const double r = fx / cap;
            fy *= std::sqrt(std::max(0.0, 1.0 - r * r));
        }
        const double c = std::cos(steer);
        const double sn = std::sin(steer);
        const double fxb = fx * c - fy * sn;
        const double fyb = fx * sn + fy * c;
        fx_body += fxb;
        fy_body += fyb;
        mz += geo[i].x * fyb - geo[i].y * fxb;
    }
    fx_body -= p.drag_coeff * vx * vx;

    d.a_x = fx_body / p.mass;
    d.a_y = fy_body / p.mass;
    d.v_x_dot = d.a_x + s.v_y * s.yaw_rate;
    d.v_y_dot = d.a_y - vx * s.yaw_rate;
    d.yaw_rate_dot = mz / p.yaw_inertia;
    const double cy = std::cos(s.yaw);
    const double sy = std::sin(s.yaw);
    d.x_dot = vx * cy - s.v_y * sy;
    d.y_dot = vx * sy + s.v_y * cy;
    d.yaw_dot = s.yaw_rate;

    const double target = std::clamp(in.delta_cmd, -p.steer_angle_limit, p.steer_angle_limit);
    d.delta_dot = std::clamp((target - s.delta) / p.tau_steer, -p.steer_rate_limit, p.steer_rate_limit);

    d.alpha_f = s.delta - std::atan2(s.v_y + p.l_f * s.yaw_rate, vx);
    d.alpha_r = -std::atan2(s.v_y - p.l_r * s.yaw_rate, vx);
    d.f_z = fz;
    return d;
}

VehicleState initial_state(const VehicleParams& p, double x, double y, double yaw, double v_x) {
    VehicleState s;
    s.x = x;
    s.y = y;
    s.yaw = yaw;
    s.v_x = std::max(v_x, kMinSpeed);
    s.f_z = wheel_loads(p, s.v_x, 0.0, 0.0);
    return s;
}

namespace {

VehicleState advance(const VehicleState& s, const Derivatives& d, double h) {
    VehicleState n = s;
    n.x += h * d.x_dot;
    n.y += h * d.y_dot;
    n.yaw += h * d.yaw_dot;
    n.v_x += h * d.v_x_dot;
    n.v_y += h * d.v_y_dot;
    n.yaw_rate += h * d.yaw_rate_dot;
    n.delta += h * d.delta_dot;
    return n;
}

}  // namespace

StepResult step(const VehicleState& s, const VehicleParams& p, const VehicleInputs& in, double dt,
                double t_now) {
    if (!(dt > 0.0 && dt <= 0.005)) throw InvalidInput("plant dt must lie in (0, 0.005]");
    if (!std::isfinite(in.delta_cmd) || !std::isfinite(in.drive_force)) {
        throw InvalidInput("plant inputs must be finite");
    }
    const Derivatives k1 = evaluate(s, p, in);
    const Derivatives k2 = evaluate(advance(s, k1, dt / 2.0), p, in);
    const Derivatives k3 = evaluate(advance(s, k2, dt / 2.0), p, in);
    const Derivatives k4 = evaluate(advance(s, k3, dt), p, in);

    VehicleState n = s;
    const double w = dt / 6.0;
    n.x += w * (k1.x_dot + 2.0 * k2.x_dot + 2.0 * k3.x_dot + k4.x_dot);
    n.y += w * (k1.y_dot + 2.0 * k2.y_dot + 2.0 * k3.y_dot + k4.y_dot);
    n.yaw += w * (k1.yaw_dot + 2.0 * k2.yaw_dot + 2.0 * k3.yaw_dot + k4.yaw_dot);
    n.v_x += w * (k1.v_x_dot + 2.0 * k2.v_x_dot + 2.0 * k3.v_x_dot + k4.v_x_dot);
    n.v_y += w * (k1.v_y_dot + 2.0 * k2.v_y_dot + 2.0 * k3.v_y_dot + k4.v_y_dot);
    n.yaw_rate += w * (k1.yaw_rate_dot + 2.0 * k2.yaw_rate_dot + 2.0 * k3.yaw_rate_dot + k4.yaw_rate_dot);
    n.delta += w * (k1.delta_dot + 2.0 * k2.delta_dot + 2.0 * k3.delta_dot + k4.delta_dot);
    n.v_x = std::max(n.v_x, kMinSpeed);
    n.delta = std::clamp(n.delta, -p.steer_angle_limit, p.steer_angle_limit);

    const double speed = std::hypot(n.v_x, n.v_y);
    if (!std::isfinite(speed) || !std::isfinite(n.yaw_rate) || !std::isfinite(n.x) || !std::isfinite(n.y) ||
        speed > 150.0 || std::abs(n.yaw_rate) > 10.0) {
        throw NumericalDivergence("plant state out of bounds (|v| = " + std::to_string(speed) +
                                  ", yaw rate = " + std::to_string(n.yaw_rate) + ")");
    }

    // Outputs at the new instant, still with the lagged load transfer.
    const Derivatives out = evaluate(n, p, in);
    StepResult r;
    r.meas.t = t_now + dt;
    r.meas.v_x = n.v_x;
    r.meas.a_x_actual = out.a_x;
    r.meas.a_y_actual = out.a_y;
    r.meas.delta = n.delta;
    r.meas.yaw_rate = n.yaw_rate;
    r.meas.alpha_f = out.alpha_f;
    r.meas.alpha_r = out.alpha_r;

    n.a_x = out.a_x;
    n.a_y = out.a_y;
    n.f_z = wheel_loads(p, n.v_x, n.a_x, n.a_y);
    r.next = n;
    return r;
}

LinearSingleTrack LinearSingleTrack::from(const VehicleParams& p, double v_x) {
    const double l = p.wheelbase();
    const double down = p.downforce_coeff * v_x * v_x;
    const double fz_f = p.mass * p.gravity * p.l_r / l + down * p.aero_balance_front;
    const double fz_r = p.mass * p.gravity * p.l_f / l + down * (1.0 - p.aero_balance_front);
    LinearSingleTrack m;
    m.c_front = fz_f * p.tire_f.D * p.tire_f.C * p.tire_f.B;
    m.c_rear = fz_r * p.tire_r.D * p.tire_r.C * p.tire_r.B;
    m.understeer_gradient = p.mass / l * (p.l_r / m.c_front - p.l_f / m.c_rear);
    return m;
}

double LinearSingleTrack::steady_yaw_rate(const VehicleParams& p, double v_x, double delta) const {
    return v_x * delta / (p.wheelbase() + understeer_gradient * v_x * v_x);
}

namespace {

struct Settled {
    double a_y = 0.0;
    double a_y_spread = 0.0;
    double delta = 0.0;
    double v_x = 0.0;
    double alpha_f = 0.0;
    double alpha_r = 0.0;
    VehicleState final_state;
};

// Constant steering at held speed; averages outputs over the final window.
Settled settle(const VehicleParams& p, double v_ref, double delta_cmd, const VehicleState& start,
               const SweepOptions& opts) {
    VehicleState s = start;
    const auto n_total = static_cast<int>(std::round(opts.settle_time / opts.dt));
    const auto n_avg = static_cast<int>(std::round(opts.average_window / opts.dt));
    double integral = 0.0;
    Settled out;
    double sum_sq = 0.0;
    for (int i = 0; i < n_total; ++i) {
        const double err = v_ref - s.v_x;
        integral += err * opts.dt;
        const double force = p.mass * (4.0 * err + 4.0 * integral) + p.drag_coeff * s.v_x * s.v_x;
        const auto r = step(s, p, {delta_cmd, force}, opts.dt);
        s = r.next;
        if (i >= n_total - n_avg) {
            out.a_y += r.meas.a_y_actual;
            sum_sq += r.meas.a_y_actual * r.meas.a_y_actual;
            out.delta += r.meas.delta;
            out.v_x += r.meas.v_x;
            out.alpha_f += r.meas.alpha_f;
            out.alpha_r += r.meas.alpha_r;
        }
    }
    const double n = n_avg;
    out.a_y /= n;
    out.delta /= n;
    out.v_x /= n;
    out.alpha_f /= n;
    out.alpha_r /= n;
    out.a_y_spread = std::sqrt(std::max(0.0, sum_sq / n - out.a_y * out.a_y));
    out.final_state = s;
    return out;
}

}  // namespace

std::vector<HandlingPoint> steady_state_sweep(const VehicleParams& p, double v_x,
                                              const std::vector<double>& a_y_targets,
                                              const SweepOptions& opts) {
    p.validate();
    if (!(v_x >= kMinSpeed)) throw InvalidInput("sweep speed below minimum");
    const double l = p.wheelbase();
    const auto linear = LinearSingleTrack::from(p, v_x);
    std::vector<HandlingPoint> out;
    out.reserve(a_y_targets.size());

    const VehicleState straight = initial_state(p, 0.0, 0.0, 0.0, v_x);
    for (const double target_signed : a_y_targets) {
        const double sign = target_signed < 0.0 ? -1.0 : 1.0;
        const double target = std::abs(target_signed);
        if (target == 0.0) {
            const auto z = settle(p, v_x, 0.0, straight, opts);
            out.push_back({z.a_y, z.delta, z.delta - z.a_y * l / (z.v_x * z.v_x), z.alpha_f, z.alpha_r, z.v_x});
            continue;
        }
        // A spin-out while probing means the target lies beyond the grip limit.
        auto probe = [&](double delta) {
            try {
                return settle(p, v_x, delta, straight, opts);
            } catch (const NumericalDivergence& e) {
                throw NotAttainable("a_y = " + std::to_string(target_signed) + " diverged: " + e.what());
            }
        };

        double lo = 0.0;
        double hi = std::min((l / (v_x * v_x) + linear.understeer_gradient) * target, p.steer_angle_limit);
        Settled hi_res = probe(hi);
        double last_ay = hi_res.a_y;
        while (hi_res.a_y < target) {
            if (hi >= p.steer_angle_limit) {
                throw NotAttainable("a_y = " + std::to_string(target_signed) + " not reachable at v_x = " +
                                    std::to_string(v_x));
            }
            lo = hi;
            hi = std::min(hi * 1.25, p.steer_angle_limit);
            hi_res = probe(hi);
            if (hi_res.a_y < last_ay) {
                throw NotAttainable("lateral acceleration saturates below " + std::to_string(target_signed));
            }
            last_ay = hi_res.a_y;
        }
        Settled best = hi_res;
        for (int it = 0; it < opts.max_iterations && std::abs(best.a_y - target) >= opts.tolerance; ++it) {
            const double mid = 0.5 * (lo + hi);
            best = probe(mid);
            if (best.a_y < target) lo = mid;
            else hi = mid;
        }
        if (std::abs(best.a_y - target) >= opts.tolerance || best.a_y_spread > 0.5) {
            throw NotAttainable("no settled steady state for a_y = " + std::to_string(target_signed));
        }
        HandlingPoint hp;
        hp.a_y = sign * best.a_y;
        hp.delta = sign * best.delta;
        hp.v_x = best.v_x;
        hp.delta_dev = hp.delta - hp.a_y * l / (best.v_x * best.v_x);
        hp.alpha_f = sign * best.alpha_f;
        hp.alpha_r = sign * best.alpha_r;
        out.push_back(hp);
    }
    return out;
}

}  // namespace ffsteer
