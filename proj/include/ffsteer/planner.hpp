#pragma once

#include "ffsteer/track.hpp"

#include <string>
#include <vector>

namespace ffsteer {

/// Nominal acceleration envelope and the multiplicative GG scale applied to it.
struct GgLimits {
    double a_x_max_drive = 10.0;  // [m/s^2]
    double a_x_max_brake = 25.0;  // [m/s^2]
    double a_y_max = 25.0;        // [m/s^2]
    double gg_scale = 1.0;        // in (0, 1.2]

    double drive() const { return gg_scale * a_x_max_drive; }
    double brake() const { return gg_scale * a_x_max_brake; }
    double lateral() const { return gg_scale * a_y_max; }
    void validate() const;
};

struct TrajectorySample {
    double s = 0.0;
    double x = 0.0;
    double y = 0.0;
    double curvature = 0.0;
    double v_target = 0.0;
    double a_x_target = 0.0;
    double a_y_target = 0.0;
};

/// One step of a time-sampled horizon.
struct HorizonStep {
    double v_x = 0.0;
    double a_x = 0.0;
    double a_y = 0.0;
};

/// Reference trajectory on a closed track; samples coincide with the track
/// points, the last one closing the loop at s == length.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::vector<TrajectorySample> samples, GgLimits limits);

    const std::vector<TrajectorySample>& samples() const { return samples_; }
    const GgLimits& limits() const { return limits_; }
    double length() const { return samples_.empty() ? 0.0 : samples_.back().s; }

    /// Linear interpolation at s (wrapped onto the loop).
    TrajectorySample at(double s) const;

    /// Integral of ds / v over one lap.
    double lap_time() const;

    /// CSV with header s,x,y,curvature,v,ax,ay.
    void write_csv(const std::string& path) const;

private:
    std::vector<TrajectorySample> samples_;
    GgLimits limits_;
};

/// Curvature-limited speed followed by forward (drive) and backward (brake)
/// passes inside the friction ellipse, iterated around the loop to a fixed
/// point. Throws InfeasibleTrack if any corner forces v < 1 m/s.
Trajectory plan_velocity(const Track& track, const GgLimits& limits, double v_cap);

/// n triples walking forward in time from s_now with ds = v dt along the
/// planned speeds. The first triple is the plan at s_now.
std::vector<HorizonStep> sample_horizon(const Trajectory& traj, double s_now, int n, double dt);

}  // namespace ffsteer
