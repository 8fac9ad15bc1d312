#pragma once

#include "ffsteer/planner.hpp"
#include "ffsteer/track.hpp"

#include <memory>
#include <string>
#include <vector>

namespace ffsteer {

/// Everything a feedforward controller may look at in one control step.
struct FfInput {
    double a_y_target = 0.0;   // [m/s^2]
    double v_x = 1.0;          // measured [m/s], >= 1
    double a_x_actual = 0.0;   // measured [m/s^2]
    std::vector<HorizonStep> horizon;  // learned controllers only
    double rho = 0.0;          // a_y_target / v_x^2 [1/m]

    double ackermann(double wheelbase) const { return a_y_target * wheelbase / (v_x * v_x); }
};

/// Common interface of all feedforward steering laws.
class Feedforward {
public:
    virtual ~Feedforward() = default;
    virtual std::string name() const = 0;
    /// Feedforward road-wheel angle [rad]. Stateful laws advance by one
    /// controller period per call.
    virtual double steer(const FfInput& in) = 0;
    virtual void reset() {}
    virtual std::unique_ptr<Feedforward> clone() const = 0;
};

// ---------------------------------------------------------------- baseline

struct BaselineParams {
    double k_ug = 0.0;        // [rad / (m/s^2)]
    double k_long_pos = 0.0;  // [rad / (m/s^2)^2], for a_x >= 0
    double k_long_neg = 0.0;  // for a_x < 0
    double tau_ug = 0.0;      // [s], 0 disables the filter
    double tau_long = 0.0;    // [s]

    /// Gains tuned on the benchmark plant.
    static BaselineParams tuned();
};

/// First-order low-pass state of the two filtered baseline terms.
struct BaselineFilterState {
    double ug = 0.0;
    double lng = 0.0;
};

/// Exponentially discretised first-order low-pass: one update of y towards u.
double low_pass(double y, double u, double tau, double dt);

/// Kinematic term plus low-pass filtered understeer and longitudinal terms.
double ff_baseline(const FfInput& in, const BaselineParams& params, double wheelbase, double dt,
                   BaselineFilterState& state);

class BaselineFeedforward final : public Feedforward {
public:
    BaselineFeedforward(BaselineParams params, double wheelbase, double dt);
    std::string name() const override { return "baseline"; }
    double steer(const FfInput& in) override;
    void reset() override { state_ = {}; }
    std::unique_ptr<Feedforward> clone() const override;
    const BaselineParams& params() const { return params_; }

private:
    BaselineParams params_;
    double wheelbase_;
    double dt_;
    BaselineFilterState state_;
};

// --------------------------------------------------------------------- EHD

/// Transformed handling-diagram surface:
///   z = delta_dev / a_y = kt_v1a3 * x * y + kt_a3 * x + kt_v1a1 * y + kt_a1,
/// with x = a_y^2 and y = v_x.
struct EhdSurface {
    double kt_v1a3 = 0.0;
    double kt_a3 = 0.0;
    double kt_v1a1 = 0.0;
    double kt_a1 = 0.0;

    /// Predicted steering deviation; odd in a_y by construction.
    double deviation(double a_y, double v_x) const {
        const double x = a_y * a_y;
        return a_y * (kt_v1a3 * x * v_x + kt_a3 * x + kt_v1a1 * v_x + kt_a1);
    }
    /// Secant understeer gradient z at (a_y, v_x).
    double secant_gradient(double a_y, double v_x) const {
        const double x = a_y * a_y;
        return kt_v1a3 * x * v_x + kt_a3 * x + kt_v1a1 * v_x + kt_a1;
    }
};

/// Factored form (k_v1 v + k_v0)(k_a3 a^3 + k_a1 a) recovered as the closest
/// rank-1 approximation of [[kt_v1a3, kt_a3], [kt_v1a1, kt_a1]]. Scale is
/// fixed by |(k_v1, k_v0)| = 1 with k_v0 >= 0.
struct EhdFactored {
    double k_v1 = 0.0;
    double k_v0 = 0.0;
    double k_a3 = 0.0;
    double k_a1 = 0.0;
    double discarded_singular_value = 0.0;
};
EhdFactored factor_surface(const EhdSurface& surface);

struct EhdSample {
    double a_y = 0.0;
    double v_x = 0.0;
    double delta_dev = 0.0;
};

struct EhdFit {
    EhdSurface surface;
    double residual_rms = 0.0;  // of delta_dev [rad]
    std::size_t n_samples = 0;
    bool used_orthogonal_fallback = false;
};

/// Ordinary least squares of z = delta_dev / a_y on [x y, x, y, 1]; samples
/// with |a_y| < min_ay are dropped. Throws RankDeficient when the regressors
/// do not span four dimensions.
EhdFit fit_ehd(const std::vector<EhdSample>& samples, double min_ay = 1.0);

double ff_ehd(const FfInput& in, const EhdSurface& surface, double wheelbase);

void write_ehd_json(const std::string& path, const EhdFit& fit);
EhdFit read_ehd_json(const std::string& path);

class EhdFeedforward final : public Feedforward {
public:
    EhdFeedforward(EhdSurface surface, double wheelbase) : surface_(surface), wheelbase_(wheelbase) {}
    std::string name() const override { return "ehd"; }
    double steer(const FfInput& in) override { return ff_ehd(in, surface_, wheelbase_); }
    std::unique_ptr<Feedforward> clone() const override { return std::make_unique<EhdFeedforward>(*this); }
    const EhdSurface& surface() const { return surface_; }

private:
    EhdSurface surface_;
    double wheelbase_;
};

/// Pure kinematic steering, a_y l / v_x^2.
class KinematicFeedforward final : public Feedforward {
public:
    explicit KinematicFeedforward(double wheelbase) : wheelbase_(wheelbase) {}
    std::string name() const override { return "kinematic"; }
    double steer(const FfInput& in) override { return in.ackermann(wheelbase_); }
    std::unique_ptr<Feedforward> clone() const override { return std::make_unique<KinematicFeedforward>(*this); }

private:
    double wheelbase_;
};

class ZeroFeedforward final : public Feedforward {
public:
    std::string name() const override { return "zero"; }
    double steer(const FfInput&) override { return 0.0; }
    std::unique_ptr<Feedforward> clone() const override { return std::make_unique<ZeroFeedforward>(); }
};

// ---------------------------------------------------------------- feedback

struct FeedbackGains {
    double kp = 0.01;         // [rad/m]
    double kd = 0.004;        // [rad s/m]
    double k_heading = 0.1;   // [rad/rad]
    double k_ay = 0.0;        // [rad / (m/s^2)]
    double limit = 0.05;      // output authority [rad]
    bool enabled = true;
};

struct FeedbackState {
    double prev_lateral_error = 0.0;
    bool primed = false;
};

/// PD on lateral error plus heading term, steering back towards the path,
/// saturated at +-limit. Returns 0 when disabled.
double feedback_steer(double lateral_error, double heading_error, double a_y_error,
                      const FeedbackGains& gains, double dt, FeedbackState& state);

// -------------------------------------------------------- target generator

struct TargetGains {
    double k_e = 2.0;            // [1/s^2]
    double k_psi = 2.0;          // [1/s]
    double k_v = 1.0;            // [1/s]
    double preview_time = 0.05;  // [s]
};

struct Targets {
    double a_y_target = 0.0;
    double a_x_target = 0.0;
    double v_target = 0.0;
    double curvature_preview = 0.0;
};

/// Surrogate for the high-level MPC: previewed curvature times v^2 plus slow
/// corrections towards the path; speed-profile tracking saturated by the
/// friction-ellipse remainder.
Targets target_generator(const Projection& proj, const Trajectory& traj, double v_now,
                         const TargetGains& gains);

// -------------------------------------------------------- speed controller

struct SpeedControllerParams {
    double mass = 750.0;
    double drag_coeff = 0.0;
    double k_v = 0.5;  // [1/s]
    double max_drive_force = 12000.0;
    double max_brake_force = 30000.0;
};

double speed_controller(double v_now, double v_target, double a_x_target, const SpeedControllerParams& params);

}  // namespace ffsteer
