#include "ffsteer/planner.hpp"

#include "ffsteer/csv.hpp"
#include "ffsteer/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace ffsteer {

void GgLimits::validate() const {
    if (!(gg_scale > 0.0 && gg_scale <= 1.2)) throw InvalidInput("gg_scale must lie in (0, 1.2]");
    if (!(a_x_max_drive > 0.0 && a_x_max_brake > 0.0 && a_y_max > 0.0)) {
        throw InvalidInput("acceleration limits must be positive");
    }
}

Trajectory::Trajectory(std::vector<TrajectorySample> samples, GgLimits limits)
    : samples_(std::move(samples)), limits_(limits) {}

TrajectorySample Trajectory::at(double s) const {
    const double len = length();
    s = std::fmod(s, len);
    if (s < 0.0) s += len;
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), s,
                                     [](double v, const TrajectorySample& p) { return v < p.s; });
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - samples_.begin()) - 1));
    i = std::min(i, samples_.size() - 2);
    const auto& a = samples_[i];
    const auto& b = samples_[i + 1];
    const double t = (s - a.s) / (b.s - a.s);
    auto lerp = [t](double u, double v) { return u + t * (v - u); };
    return {s,
            lerp(a.x, b.x),
            lerp(a.y, b.y),
            lerp(a.curvature, b.curvature),
            lerp(a.v_target, b.v_target),
            lerp(a.a_x_target, b.a_x_target),
            lerp(a.a_y_target, b.a_y_target)};
}

double Trajectory::lap_time() const {
    double t = 0.0;
    for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
        const double ds = samples_[i + 1].s - samples_[i].s;
        t += 2.0 * ds / (samples_[i].v_target + samples_[i + 1].v_target);
    }
    return t;
}

void Trajectory::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    csv::write_header(out, {"s", "x", "y", "curvature", "v", "ax", "ay"});
    for (const auto& p : samples_) {
        csv::write_row(out, {p.s, p.x, p.y, p.curvature, p.v_target, p.a_x_target, p.a_y_target});
    }
}

namespace {

double ellipse_remainder(double a_y, double a_y_lim) {
    const double r = a_y / a_y_lim;
    return std::sqrt(std::max(0.0, 1.0 - r * r));
}

// Largest u = v_i^2 with u - w <= A sqrt(1 - (k u)^2), w = v_{i+1}^2.
double brake_reachable(double w, double a, double k) {
    if (k == 0.0) return w + a;
    const double a2k2 = a * a * k * k;
    const double disc = a * a * (1.0 + a2k2 - k * k * w * w);
    if (disc < 0.0) return w;
    return (w + std::sqrt(disc)) / (1.0 + a2k2);
}

}  // namespace

Trajectory plan_velocity(const Track& track, const GgLimits& limits, double v_cap) {
    limits.validate();
    if (!track.closed()) throw InvalidInput("velocity planning needs a closed track");
    if (!(v_cap > 0.0)) throw InvalidInput("v_cap must be positive");
    const auto& pts = track.points();
    const std::size_t n = pts.size() - 1;  // unique samples
    const double ay_lim = limits.lateral();

    std::vector<double> v_lim(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double k = std::abs(pts[i].curvature);
        v_lim[i] = k > 0.0 ? std::min(v_cap, std::sqrt(ay_lim / k)) : v_cap;
        if (v_lim[i] < 1.0) {
            throw InfeasibleTrack("curvature " + std::to_string(pts[i].curvature) + " at s = " +
                                  std::to_string(pts[i].s) + " forces v < 1 m/s");
        }
    }

    auto ds = [&](std::size_t i) { return pts[i + 1].s - pts[i].s; };

    // Forward pass: accelerate from i to i+1 within the ellipse at i.
    std::vector<double> fwd = v_lim;
    for (int iter = 0; iter < 3; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (i + 1) % n;
            const double ay = pts[i].curvature * fwd[i] * fwd[i];
            const double v2 = fwd[i] * fwd[i] + 2.0 * ds(i) * limits.drive() * ellipse_remainder(ay, ay_lim);
            const double cand = std::min(v_lim[j], std::sqrt(v2));
            if (cand < fwd[j]) {
                fwd[j] = cand;
                if (j == 0) changed = true;
            }
        }
        if (!changed) break;
    }
    // Backward pass: braking from i to i+1 within the ellipse at i.
    std::vector<double> bwd = v_lim;
    for (int iter = 0; iter < 3; ++iter) {
        bool changed = false;
        for (std::size_t m = 0; m < n; ++m) {
            const std::size_t i = n - 1 - m;
            const std::size_t j = (i + 1) % n;
            const double k = std::abs(pts[i].curvature) / ay_lim;
            const double u = brake_reachable(bwd[j] * bwd[j], 2.0 * ds(i) * limits.brake(), k);
            const double cand = std::min(v_lim[i], std::sqrt(u));
            if (cand < bwd[i]) {
                bwd[i] = cand;
                if (i == n - 1) changed = true;
            }
        }
        if (!changed) break;
    }

    std::vector<TrajectorySample> samples(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const std::size_t k = i % n;
        auto& smp = samples[i];
        smp.s = pts[i].s;
        smp.x = pts[i].x;
        smp.y = pts[i].y;
        smp.curvature = pts[k].curvature;
        smp.v_target = std::min(fwd[k], bwd[k]);
    }
    for (std::size_t i = 0; i <= n; ++i) {
        auto& smp = samples[i];
        const std::size_t k = i % n;
        const double v_next = samples[(k + 1) % n].v_target;
        smp.a_x_target = (v_next * v_next - smp.v_target * smp.v_target) / (2.0 * ds(k));
        smp.a_y_target = smp.curvature * smp.v_target * smp.v_target;
    }
    return Trajectory(std::move(samples), limits);
}

std::vector<HorizonStep> sample_horizon(const Trajectory& traj, double s_now, int n, double dt) {
    if (n < 1) throw InvalidInput("horizon length must be >= 1");
    if (!(dt > 0.0)) throw InvalidInput("horizon dt must be positive");
    std::vector<HorizonStep> out;
    out.reserve(static_cast<std::size_t>(n));
    double s = s_now;
    for (int k = 0; k < n; ++k) {
        const auto smp = traj.at(s);
        out.push_back({smp.v_target, smp.a_x_target, smp.a_y_target});
        s += smp.v_target * dt;
    }
    return out;
}

}  // namespace ffsteer
