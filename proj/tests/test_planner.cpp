#include "doctest.h"

#include "ffsteer/error.hpp"
#include "ffsteer/planner.hpp"

#include <cmath>

using namespace ffsteer;

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_trajectory(const Trajectory& traj) {
    const GgLimits& lim = traj.limits();
    for (const auto& s : traj.samples()) {
        CHECK(s.a_y_target == doctest::Approx(s.curvature * s.v_target * s.v_target).epsilon(1e-12));
        const double ax_lim = s.a_x_target >= 0.0 ? lim.drive() : lim.brake();
        const double r = std::hypot(s.a_x_target / ax_lim, s.a_y_target / lim.lateral());
        CHECK(r <= 1.0 + 1e-6);
        if (s.curvature != 0.0) CHECK((s.a_y_target > 0.0) == (s.curvature > 0.0));
    }
}

}  // namespace

TEST_CASE("constant-curvature circle plans constant speed") {
    const Track t = build_synthetic_track({TrackSegment::arc(2.0 * kPi * 50.0, 0.02)});
    GgLimits lim;
    lim.a_y_max = 20.0;
    lim.gg_scale = 1.0;
    const Trajectory traj = plan_velocity(t, lim, 80.0);
    for (const auto& s : traj.samples()) {
        CHECK(s.v_target == doctest::Approx(std::sqrt(1000.0)).epsilon(1e-9));
        CHECK(std::abs(s.a_x_target) < 1e-9);
    }
    const auto h = sample_horizon(traj, 10.0, 10, 0.01);
    REQUIRE(h.size() == 10);
    for (const auto& step : h) {
        CHECK(step.v_x == doctest::Approx(h[0].v_x));
        CHECK(step.a_y == doctest::Approx(h[0].a_y));
    }
}

TEST_CASE("default track profile respects the ellipse across the grid") {
    const Track t = default_track();
    GgLimits lim;
    double prev_time = 1e9;
    Trajectory prev;
    for (int k = 0; k <= 14; ++k) {
        lim.gg_scale = (10 + k) / 20.0;
        const Trajectory traj = plan_velocity(t, lim, 80.0);
        check_trajectory(traj);
        CHECK(traj.lap_time() < prev_time);
        if (!prev.samples().empty()) {
            for (std::size_t i = 0; i < traj.samples().size(); ++i)
                CHECK(traj.samples()[i].v_target >= prev.samples()[i].v_target - 1e-9);
        }
        prev_time = traj.lap_time();
        prev = traj;
    }
}

TEST_CASE("speed profile is continuous and braking-reachable") {
    const Track t = default_track();
    GgLimits lim;
    lim.gg_scale = 0.8;
    const Trajectory traj = plan_velocity(t, lim, 80.0);
    const auto& s = traj.samples();
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double ds = s[i].s - s[i - 1].s;
        // v^2 can drop by at most 2 a_brake ds between samples.
        CHECK(s[i - 1].v_target * s[i - 1].v_target - s[i].v_target * s[i].v_target <= 2.0 * lim.brake() * ds + 1e-6);
        CHECK(s[i].v_target * s[i].v_target - s[i - 1].v_target * s[i - 1].v_target <= 2.0 * lim.drive() * ds + 1e-6);
    }
    CHECK(s.front().v_target == doctest::Approx(s.back().v_target));
}

TEST_CASE("straight between identical hairpins is symmetric") {
    const double k = 0.05, arc = kPi / k;
    const Track t = build_synthetic_track({TrackSegment::straight(300.0), TrackSegment::arc(arc, k),
                                           TrackSegment::straight(300.0), TrackSegment::arc(arc, k)});
    GgLimits lim;
    lim.a_x_max_brake = 10.0;  // symmetric envelope gives a symmetric triangle
    const Trajectory traj = plan_velocity(t, lim, 45.0);
    // Sample 0 ends the last hairpin; mirror the straight about the midpoint
    // between it and the first sample of the next hairpin.
    const auto& smp = traj.samples();
    std::size_t j = 1;
    while (smp[j].curvature < 0.01) ++j;
    for (std::size_t i = 0; i <= j; ++i) CHECK(smp[i].v_target == doctest::Approx(smp[j - i].v_target).epsilon(1e-9));
    CHECK(traj.at(150.0).v_target == doctest::Approx(45.0));
    CHECK(smp[j / 2].a_x_target == 0.0);
    for (const auto& x : smp) CHECK(x.v_target <= 45.0 + 1e-12);
}

TEST_CASE("horizon sampling") {
    const Track t = default_track();
    GgLimits lim;
    lim.gg_scale = 0.7;
    const Trajectory traj = plan_velocity(t, lim, 80.0);

    const auto one = sample_horizon(traj, 123.4, 1, 0.01);
    REQUIRE(one.size() == 1);
    const auto at = traj.at(123.4);
    CHECK(one[0].v_x == at.v_target);
    CHECK(one[0].a_x == at.a_x_target);
    CHECK(one[0].a_y == at.a_y_target);

    // Find the start of the first braking zone and look at a horizon entering it.
    const auto& s = traj.samples();
    std::size_t brake = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i].a_x_target < -1.0 && s[i - 1].a_x_target >= -1e-9) {
            brake = i;
            break;
        }
    }
    REQUIRE(brake > 0);
    const double v = s[brake].v_target;
    const auto h = sample_horizon(traj, s[brake].s - 0.05 * v, 10, 0.01);
    CHECK(h.front().a_x > -1e-6);
    CHECK(h.back().a_x < -1.0);
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i].a_x <= h[i - 1].a_x + 1e-9);

    const auto wrap = sample_horizon(traj, traj.length() - 0.1, 5, 0.01);
    CHECK(wrap.size() == 5);
}

TEST_CASE("planner preconditions") {
    GgLimits bad;
    bad.gg_scale = 1.5;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    const Track t = build_synthetic_track({TrackSegment::arc(2.0 * kPi * 0.5, 2.0)});
    GgLimits tiny;
    tiny.gg_scale = 0.1;
    tiny.a_y_max = 1.0;
    CHECK_THROWS_AS(plan_velocity(t, tiny, 80.0), InfeasibleTrack);
}
