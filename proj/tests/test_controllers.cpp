#include "doctest.h"

#include "ffsteer/controllers.hpp"
#include "ffsteer/error.hpp"
#include "ffsteer/vehicle.hpp"

#include <cmath>
#include <cstdio>
#include <random>

using namespace ffsteer;

namespace {

constexpr double kPi = 3.14159265358979323846;

const EhdSurface kGenerator{1e-6, -2e-5, -4e-6, 1.2e-3};

std::vector<EhdSample> grid_samples(const EhdSurface& gen) {
    std::vector<EhdSample> out;
    for (double ay = 2.0; ay <= 20.0; ay += 1.0)
        for (double v = 15.0; v <= 60.0; v += 5.0) out.push_back({ay, v, gen.deviation(ay, v)});
    return out;
}

std::vector<EhdSample> noisy_samples(const EhdSurface& gen, std::size_t n, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ua(-20.0, 20.0), uv(15.0, 60.0);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<EhdSample> out;
    while (out.size() < n) {
        const double ay = ua(rng), v = uv(rng);
        out.push_back({ay, v, gen.deviation(ay, v) + noise(rng)});
    }
    return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

FfInput input(double ay, double v, double ax = 0.0) {
    FfInput in;
    in.a_y_target = ay;
    in.v_x = v;
    in.a_x_actual = ax;
    in.rho = ay / (v * v);
    return in;
}

}  // namespace

TEST_CASE("baseline formula at filter steady state") {
    BaselineParams p;
    p.k_ug = 1e-3;
    p.k_long_neg = 2e-4;
    p.tau_ug = 0.1;
    p.tau_long = 0.05;
    BaselineFilterState st;
    double d = 0.0;
    for (int i = 0; i < 2000; ++i) d = ff_baseline(input(10.0, 50.0), p, 3.0, 0.01, st);
    CHECK(std::abs(d - 0.022) < 1e-12);
    for (int i = 0; i < 2000; ++i) d = ff_baseline(input(10.0, 50.0, -10.0), p, 3.0, 0.01, st);
    CHECK(std::abs(d - 0.002) < 1e-12);
    for (int i = 0; i < 5000; ++i) d = ff_baseline(input(0.0, 50.0), p, 3.0, 0.01, st);
    CHECK(std::abs(d) < 1e-15);
}

TEST_CASE("baseline without gains is pure kinematic steering") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ay(-30.0, 30.0), v(1.0, 80.0), ax(-25.0, 10.0);
    BaselineParams p;
    p.tau_ug = 0.2;
    p.tau_long = 0.05;
    BaselineFilterState st;
    for (int i = 0; i < 1000; ++i) {
        const FfInput in = input(ay(rng), v(rng), ax(rng));
        CHECK(ff_baseline(in, p, 3.0, 0.01, st) == in.ackermann(3.0));
    }
}

TEST_CASE("low-pass step response reaches 1 - 1/e after tau") {
    for (double tau : {0.05, 0.1, 0.2}) {
        const double dt = 0.01;
        double y = 0.0;
        const int n = static_cast<int>(std::lround(tau / dt));
        for (int i = 0; i < n; ++i) y = low_pass(y, 1.0, tau, dt);
        CHECK(std::abs(y - (1.0 - std::exp(-1.0))) / (1.0 - std::exp(-1.0)) < 0.02);
    }
    CHECK(low_pass(0.3, 1.0, 0.0, 0.01) == 1.0);
}

TEST_CASE("EHD feedforward identities") {
    const EhdSurface zero{};
    CHECK(ff_ehd(input(0.0, 30.0), kGenerator, 3.0) == 0.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ua(-30.0, 30.0), uv(1.0, 80.0);
    for (int i = 0; i < 1000; ++i) {
        const double ay = ua(rng), v = uv(rng);
        CHECK(ff_ehd(input(ay, v), zero, 3.0) == input(ay, v).ackermann(3.0));
        const double up = ff_ehd(input(ay, v), kGenerator, 3.0) - input(ay, v).ackermann(3.0);
        const double down = ff_ehd(input(-ay, v), kGenerator, 3.0) - input(-ay, v).ackermann(3.0);
        CHECK(down == -up);
        CHECK(kGenerator.deviation(-ay, v) == -kGenerator.deviation(ay, v));
    }
}

TEST_CASE("EHD fit recovers a noiseless surface") {
    const EhdFit fit = fit_ehd(grid_samples(kGenerator));
    CHECK(rel(fit.surface.kt_v1a3, kGenerator.kt_v1a3) < 1e-10);
    CHECK(rel(fit.surface.kt_a3, kGenerator.kt_a3) < 1e-10);
    CHECK(rel(fit.surface.kt_v1a1, kGenerator.kt_v1a1) < 1e-10);
    CHECK(rel(fit.surface.kt_a1, kGenerator.kt_a1) < 1e-10);
    CHECK(fit.residual_rms < 1e-12);
    CHECK(rel(ff_ehd(input(15.0, 30.0), fit.surface, 3.0), ff_ehd(input(15.0, 30.0), kGenerator, 3.0)) < 1e-10);
}

TEST_CASE("EHD fit with noise") {
    const EhdFit fit = fit_ehd(noisy_samples(kGenerator, 2000, 1e-3, 1));
    CHECK(rel(fit.residual_rms, 1e-3) < 0.1);
    double se = 0.0;
    int n = 0;
    for (double ay = -20.0; ay <= 20.0; ay += 0.5)
        for (double v = 15.0; v <= 60.0; v += 1.0, ++n) {
            const double e = fit.surface.deviation(ay, v) - kGenerator.deviation(ay, v);
            se += e * e;
        }
    CHECK(std::sqrt(se / n) < 2e-3);

    // Coefficient spread across seeds shrinks like 1 / sqrt(n).
    auto spread = [](std::size_t count) {
        double s = 0.0, ss = 0.0;
        const int seeds = 40;
        for (int k = 0; k < seeds; ++k) {
            const double c = fit_ehd(noisy_samples(kGenerator, count, 1e-3, 100 + k)).surface.kt_a1;
            s += c;
            ss += c * c;
        }
        return std::sqrt(ss / seeds - (s / seeds) * (s / seeds));
    };
    const double ratio = spread(500) / spread(2000);
    CHECK(ratio > 1.5);
    CHECK(ratio < 2.7);
}

TEST_CASE("EHD fit preconditions") {
    std::vector<EhdSample> one_speed;
    for (double ay = 2.0; ay < 20.0; ay += 1.0) one_speed.push_back({ay, 30.0, 1e-3 * ay});
    CHECK_THROWS_AS(fit_ehd(one_speed), RankDeficient);
    CHECK_THROWS_AS(fit_ehd({{0.5, 20.0, 0.0}, {0.2, 30.0, 0.0}, {0.1, 40.0, 0.0}, {0.3, 50.0, 0.0}}), RankDeficient);
}

TEST_CASE("EHD fit is never worse than a constant understeer gradient") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto samples = noisy_samples(kGenerator, 300, 2e-3, seed);
        const EhdFit fit = fit_ehd(samples);
        // Both fits are least squares in z = delta_dev / a_y; the constant model
        // is the mean of z.
        double zmean = 0.0;
        for (const auto& s : samples) zmean += s.delta_dev / s.a_y;
        zmean /= static_cast<double>(samples.size());
        double rss_const = 0.0, rss_ehd = 0.0;
        for (const auto& s : samples) {
            const double z = s.delta_dev / s.a_y;
            rss_const += (z - zmean) * (z - zmean);
            rss_ehd += (z - fit.surface.secant_gradient(s.a_y, s.v_x)) * (z - fit.surface.secant_gradient(s.a_y, s.v_x));
        }
        CHECK(rss_ehd <= rss_const);
    }
}

TEST_CASE("rank-1 factorisation") {
    const double kv1 = 0.6, kv0 = 0.8, ka3 = 2e-5, ka1 = 1.5e-3;
    const EhdSurface s{kv1 * ka3, kv0 * ka3, kv1 * ka1, kv0 * ka1};
    const EhdFactored f = factor_surface(s);
    CHECK(rel(f.k_v1, kv1) < 1e-12);
    CHECK(rel(f.k_v0, kv0) < 1e-12);
    CHECK(rel(f.k_a3, ka3) < 1e-12);
    CHECK(rel(f.k_a1, ka1) < 1e-12);
    CHECK(f.discarded_singular_value < 1e-15);
    for (double ay : {3.0, 12.0})
        for (double v : {20.0, 45.0})
            CHECK(rel((f.k_v1 * v + f.k_v0) * (f.k_a3 * ay * ay * ay + f.k_a1 * ay), s.deviation(ay, v)) < 1e-12);
    CHECK(factor_surface(kGenerator).discarded_singular_value > 0.0);
}

TEST_CASE("EHD JSON round trip") {
    const EhdFit fit = fit_ehd(noisy_samples(kGenerator, 200, 1e-3, 9));
    const std::string path = "test_ehd_roundtrip.json";
    write_ehd_json(path, fit);
    const EhdFit back = read_ehd_json(path);
    std::remove(path.c_str());
    CHECK(back.surface.kt_v1a3 == fit.surface.kt_v1a3);
    CHECK(back.surface.kt_a3 == fit.surface.kt_a3);
    CHECK(back.surface.kt_v1a1 == fit.surface.kt_v1a1);
    CHECK(back.surface.kt_a1 == fit.surface.kt_a1);
    CHECK(back.residual_rms == fit.residual_rms);
    CHECK(back.n_samples == fit.n_samples);
}

TEST_CASE("EHD fitted on the plant handling diagram") {
    const VehicleParams p;
    std::vector<EhdSample> samples;
    for (double v : {20.0, 30.0, 40.0}) {
        for (const auto& h : steady_state_sweep(p, v, {2.0, 5.0, 8.0, 11.0, 14.0, 17.0}))
            samples.push_back({h.a_y, h.v_x, h.delta_dev});
    }
    const EhdFit fit = fit_ehd(samples);
    // Secant understeer gradient grows with |a_y| at every speed and depends on speed.
    for (double v : {20.0, 30.0, 40.0}) {
        CHECK(fit.surface.secant_gradient(16.0, v) > fit.surface.secant_gradient(3.0, v));
    }
    CHECK(rel(fit.surface.secant_gradient(10.0, 20.0), fit.surface.secant_gradient(10.0, 40.0)) > 0.05);
    CHECK(fit.residual_rms < 2e-3);
}

TEST_CASE("feedforward outputs stay finite") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ay(-40.0, 40.0), v(1.0, 100.0), ax(-30.0, 15.0);
    BaselineFeedforward base(BaselineParams::tuned(), 3.0, 0.01);
    EhdFeedforward ehd(kGenerator, 3.0);
    KinematicFeedforward kin(3.0);
    for (int i = 0; i < 5000; ++i) {
        const FfInput in = input(ay(rng), v(rng), ax(rng));
        CHECK(std::isfinite(base.steer(in)));
        CHECK(std::isfinite(ehd.steer(in)));
        CHECK(std::isfinite(kin.steer(in)));
    }
}

TEST_CASE("feedback steering") {
    FeedbackGains g;
    FeedbackState st;
    CHECK(feedback_steer(0.0, 0.0, 0.0, g, 0.01, st) == 0.0);

    FeedbackGains p_only;
    p_only.kd = 0.0;
    p_only.k_heading = 0.0;
    FeedbackState st2;
    CHECK(feedback_steer(1.0, 0.0, 0.0, p_only, 0.01, st2) == -0.01);
    CHECK(feedback_steer(10.0, 0.0, 0.0, p_only, 0.01, st2) == -p_only.limit);
    CHECK(feedback_steer(-10.0, 0.0, 0.0, p_only, 0.01, st2) == p_only.limit);

    FeedbackGains off;
    off.enabled = false;
    FeedbackState st3;
    CHECK(feedback_steer(2.0, 0.4, 5.0, off, 0.01, st3) == 0.0);
}

TEST_CASE("target generator") {
    const Track circle = build_synthetic_track({TrackSegment::arc(2.0 * kPi * 100.0, 0.01)});
    GgLimits lim;
    const Trajectory traj = plan_velocity(circle, lim, 40.0);
    TargetGains g;
    Projection on;
    on.s = 50.0;
    const double v = traj.at(50.0).v_target;
    const Targets t = target_generator(on, traj, v, g);
    CHECK(t.a_y_target == doctest::Approx(0.01 * v * v).epsilon(1e-12));
    CHECK(t.a_x_target == 0.0);

    TrackBuildOptions opts;
    opts.closed = false;
    const Track line = build_synthetic_track({TrackSegment::straight(200.0)}, opts);
    std::vector<TrajectorySample> flat;
    for (const auto& p : line.points()) flat.push_back({p.s, p.x, p.y, 0.0, 20.0, 0.0, 0.0});
    const Trajectory straight(flat, lim);
    TargetGains ge;
    ge.k_e = 0.3;
    Projection right;
    right.s = 50.0;
    right.lateral_error = -1.0;
    CHECK(std::abs(target_generator(right, straight, 20.0, ge).a_y_target - 0.3) < 1e-12);
}

namespace {

// Lap of a point mass that executes the commanded accelerations instantly,
// integrated with ten substeps per controller period. Returns the worst
// lateral error.
double point_mass_lap(const TargetGains& g, double gg) {
    const Track track = default_track();
    GgLimits lim;
    lim.gg_scale = gg;
    const Trajectory traj = plan_velocity(track, lim, 80.0);
    const double dt = 0.01;
    const CenterlinePose start = track.at(0.0);
    double x = start.x, y = start.y, psi = start.heading, v = traj.at(0.0).v_target, s = 0.0;
    double worst = 0.0, travelled = 0.0;
    while (travelled < track.total_length()) {
        const Projection p = track.project(x, y, psi, s);
        worst = std::max(worst, std::abs(p.lateral_error));
        const Targets t = target_generator(p, traj, v, g);
        for (int k = 0; k < 10; ++k) {
            const double h = dt / 10.0;
            x += v * std::cos(psi) * h;
            y += v * std::sin(psi) * h;
            psi += t.a_y_target / v * h;
            v += t.a_x_target * h;
            travelled += v * h;
        }
        s = p.s;
    }
    return worst;
}

}  // namespace

TEST_CASE("target generator drives an ideal point mass around the track") {
    // Lag-free execution needs no preview.
    TargetGains ideal;
    ideal.preview_time = 0.0;
    const double worst = point_mass_lap(ideal, 0.7);
    INFO("max lateral error " << worst);
    CHECK(worst < 0.3);

    // The default preview leads the plant's actuator lag and so cuts corners
    // on a lag-free follower; 0.311 m when frozen.
    CHECK(point_mass_lap(TargetGains{}, 0.7) < 0.35);
}

TEST_CASE("speed controller") {
    SpeedControllerParams p;
    CHECK(speed_controller(30.0, 30.0, 0.0, p) == 0.0);
    CHECK(speed_controller(30.0, 30.0, 5.0, p) == doctest::Approx(3750.0));
    CHECK(speed_controller(30.0, 30.0, 50.0, p) == p.max_drive_force);
    CHECK(speed_controller(30.0, 30.0, -80.0, p) == -p.max_brake_force);
}
