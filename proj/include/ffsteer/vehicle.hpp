#pragma once

#include <array>
#include <string>
#include <vector>

namespace ffsteer {

/// Magic Formula lateral coefficients; D is the peak friction coefficient.
struct TireCoefficients {
    double B = 10.0;
    double C = 1.5;
    double D = 2.2;
    double E = 0.3;
};

/// Lateral force of one tire: Fz * D * sin(C * atan(B a - E (B a - atan(B a)))).
double magic_formula(const TireCoefficients& tire, double slip_angle, double vertical_load);

/// Parameters of the double-track plant. The defaults describe the benchmark
/// car: a 750 kg formula-style vehicle with moderate downforce.
struct VehicleParams {
    double mass = 750.0;            // [kg]
    double yaw_inertia = 1000.0;    // [kg m^2]
    double l_f = 1.6;               // CoG to front axle [m]
    double l_r = 1.4;               // CoG to rear axle [m]
    double track_width_f = 1.6;     // [m]
    double track_width_r = 1.55;    // [m]
    double h_cg = 0.3;              // [m]
    TireCoefficients tire_f{10.0, 1.5, 2.2, 0.3};
    TireCoefficients tire_r{12.5, 1.5, 2.35, 0.3};
    double tau_steer = 0.05;          // actuator time constant [s]
    double steer_rate_limit = 1.0;    // [rad/s]
    double steer_angle_limit = 0.35;  // [rad]
    double drag_coeff = 0.8;          // 0.5 rho Cd A [kg/m]
    double downforce_coeff = 2.5;     // 0.5 rho Cl A [kg/m]; 0 disables downforce
    double aero_balance_front = 1.4 / 3.0;
    double max_drive_force = 12000.0;  // [N], rear-wheel drive
    double max_brake_force = 30000.0;  // [N]
    double brake_balance_front = 0.6;
    double gravity = 9.81;

    double wheelbase() const { return l_f + l_r; }

    /// Throws InvalidInput when an invariant is violated.
    void validate() const;

    static VehicleParams from_json_file(const std::string& path);
    void to_json_file(const std::string& path) const;
    std::string to_json_string() const;
    static VehicleParams from_json_string(const std::string& text);
};

/// Wheel order used in all per-wheel arrays.
enum Wheel : int { FL = 0, FR = 1, RL = 2, RR = 3 };

struct VehicleState {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
    double v_x = 1.0;
    double v_y = 0.0;
    double yaw_rate = 0.0;
    double delta = 0.0;  // actual road-wheel angle
    // Body accelerations of the last sample; drive the quasi-static load
    // transfer of the next step.
    double a_x = 0.0;
    double a_y = 0.0;
    std::array<double, 4> f_z{};  // cached vertical loads [N]
};

struct Measurement {
    double t = 0.0;
    double v_x = 0.0;
    double a_x_actual = 0.0;
    double a_y_actual = 0.0;
    double delta = 0.0;
    double yaw_rate = 0.0;
    double alpha_f = 0.0;
    double alpha_r = 0.0;
};

struct VehicleInputs {
    double delta_cmd = 0.0;
    double drive_force = 0.0;  // positive drives, negative brakes [N]
};

struct StepResult {
    VehicleState next;
    Measurement meas;
};

/// Time derivatives and outputs of the continuous model at one instant.
struct Derivatives {
    double x_dot, y_dot, yaw_dot, v_x_dot, v_y_dot, yaw_rate_dot, delta_dot;
    double a_x, a_y;
    double alpha_f, alpha_r;
    std::array<double, 4> f_z;
};

/// Evaluates the model with load transfer driven by state.a_x / state.a_y.
Derivatives evaluate(const VehicleState& state, const VehicleParams& params, const VehicleInputs& inputs);

/// Vertical loads from static distribution, downforce at v_x and the given
/// accelerations.
std::array<double, 4> wheel_loads(const VehicleParams& params, double v_x, double a_x, double a_y);

/// Resting state at a pose and speed, loads initialised.
VehicleState initial_state(const VehicleParams& params, double x, double y, double yaw, double v_x);

/// One RK4 step. dt must lie in (0, 0.005]. Throws NumericalDivergence when
/// the state leaves sanity bounds.
StepResult step(const VehicleState& state, const VehicleParams& params, const VehicleInputs& inputs,
                double dt, double t_now = 0.0);

/// Minimum longitudinal speed enforced by the plant [m/s].
inline constexpr double kMinSpeed = 1.0;

struct HandlingPoint {
    double a_y = 0.0;        // settled mean lateral acceleration
    double delta = 0.0;      // settled road-wheel angle
    double delta_dev = 0.0;  // delta - a_y l / v_x^2
    double alpha_f = 0.0;
    double alpha_r = 0.0;
    double v_x = 0.0;
};

struct SweepOptions {
    double dt = 0.002;
    double settle_time = 5.0;
    double average_window = 1.0;
    double tolerance = 0.05;  // on mean a_y [m/s^2]
    int max_iterations = 60;
};

/// Steady-state cornering points at constant speed, found by bisection on a
/// constant steering command. Throws NotAttainable beyond the grip limit.
std::vector<HandlingPoint> steady_state_sweep(const VehicleParams& params, double v_x,
                                              const std::vector<double>& a_y_targets,
                                              const SweepOptions& opts = {});

/// Linear single-track reference: cornering stiffness per axle [N/rad] and the
/// resulting steady-state yaw rate for a steering angle.
struct LinearSingleTrack {
    double c_front = 0.0;
    double c_rear = 0.0;
    double understeer_gradient = 0.0;  // [rad / (m/s^2)]

    static LinearSingleTrack from(const VehicleParams& params, double v_x);
    double steady_yaw_rate(const VehicleParams& params, double v_x, double delta) const;
};

}  // namespace ffsteer
