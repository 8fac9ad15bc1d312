#include "doctest.h"

#include "ffsteer/csv.hpp"
#include "ffsteer/error.hpp"
#include "ffsteer/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

using namespace ffsteer;
using namespace ffsteer::harness;

namespace {

// Kinematic steering plus a constant bias, so the car drifts off the line.
class BiasedFeedforward final : public Feedforward {
public:
    BiasedFeedforward(double wheelbase, double bias) : l_(wheelbase), bias_(bias) {}
    std::string name() const override { return "biased"; }
    double steer(const FfInput& in) override { return in.ackermann(l_) + bias_; }
    std::unique_ptr<Feedforward> clone() const override { return std::make_unique<BiasedFeedforward>(*this); }

private:
    double l_, bias_;
};

// Returns the logged steering angle of each row in order.
class ReplayFeedforward final : public Feedforward {
public:
    explicit ReplayFeedforward(std::vector<double> d) : d_(std::move(d)) {}
    std::string name() const override { return "replay"; }
    double steer(const FfInput&) override { return d_.at(i_++); }
    void reset() override { i_ = 0; }
    std::unique_ptr<Feedforward> clone() const override { return std::make_unique<ReplayFeedforward>(*this); }

private:
    std::vector<double> d_;
    std::size_t i_ = 0;
};

const Track& track() {
    static const Track t = default_track();
    return t;
}

ClosedLoopConfig quick(double gg) {
    ClosedLoopConfig c;
    c.gg_scale = gg;
    c.warmup_laps = 0;
    c.timed_laps = 1;
    return c;
}

}  // namespace

TEST_CASE("failure threshold is inclusive at 2.2 m") {
    CHECK(lateral_failure(2.2, 2.2));
    CHECK(lateral_failure(-2.2, 2.2));
    CHECK_FALSE(lateral_failure(2.199, 2.2));
    CHECK_FALSE(lateral_failure(-2.199, 2.2));
    CHECK(lateral_failure(std::nan(""), 2.2));
}

TEST_CASE("a drifting run fails at the first step at or beyond the threshold") {
    const VehicleParams p;
    BiasedFeedforward drift(p.wheelbase(), 0.004);
    ClosedLoopConfig c = quick(0.5);
    c.feedback = false;
    TelemetryLog log;
    const RunReport r = run_laps(track(), p, drift, {0.5}, c, &log);
    REQUIRE(r.failed);
    CHECK(r.failure_cause == "lateral error threshold");
    REQUIRE(!log.rows.empty());
    CHECK(std::abs(log.rows.back().lat_err) >= 2.2);
    for (std::size_t i = 0; i + 1 < log.rows.size(); ++i) REQUIRE(std::abs(log.rows[i].lat_err) < 2.2);
    CHECK(r.failure_t == log.rows.back().t);

    // Raising the threshold just above the largest error reached before the
    // failure step moves the failure later; setting it to that error keeps it.
    double before = 0.0;
    for (std::size_t i = 0; i + 1 < log.rows.size(); ++i) before = std::max(before, std::abs(log.rows[i].lat_err));
    ClosedLoopConfig at = c;
    at.failure_threshold = before;
    const RunReport ra = run_laps(track(), p, drift, {0.5}, at);
    CHECK(ra.failed);
    CHECK(ra.failure_t < r.failure_t);
}

TEST_CASE("no steering without feedback leaves the track before the first hairpin") {
    const VehicleParams p;
    ZeroFeedforward zero;
    ClosedLoopConfig c = quick(0.5);
    c.feedback = false;
    const RunReport r = eval_closed_loop(track(), p, zero, c);
    CHECK(r.failed);
    double first_hairpin = 0.0;
    for (const auto& pt : track().points()) {
        if (std::abs(pt.curvature) > 0.04) {
            first_hairpin = pt.s;
            break;
        }
    }
    CHECK(r.failure_s < first_hairpin);
}

TEST_CASE("easy pace completes with small errors") {
    const VehicleParams p;
    const double l = p.wheelbase();
    BaselineFeedforward base(BaselineParams::tuned(), l, 0.01);
    KinematicFeedforward kin(l);
    EhdFeedforward ehd(EhdSurface{0.0, 0.0, 0.0, 3e-4}, l);
    ClosedLoopConfig c;
    c.gg_scale = 0.3;
    for (Feedforward* ff : std::vector<Feedforward*>{&base, &kin, &ehd}) {
        const RunReport r = eval_closed_loop(track(), p, *ff, c);
        INFO(ff->name() << " max error " << r.max_abs_lateral_error);
        CHECK_FALSE(r.failed);
        CHECK(r.lap_times.size() == 2);
        CHECK(r.all_lap_times.size() == 3);
        CHECK(r.max_abs_lateral_error < 0.5);
        CHECK(std::isfinite(r.lateral_jerk_rms));
    }
}

TEST_CASE("collection bookkeeping and determinism") {
    const VehicleParams p;
    BaselineFeedforward base(BaselineParams::tuned(), p.wheelbase(), 0.01);
    CollectConfig cc;
    cc.schedule = {0.5};
    RunReport rep;
    const TelemetryLog a = collect_dataset(track(), p, base, cc, &rep);
    REQUIRE(rep.all_lap_times.size() == 1);
    const double expected = rep.all_lap_times[0] / 0.01;
    CHECK(std::abs(static_cast<double>(a.rows.size()) - expected) <= 1.0);
    CHECK(a.lap_ids() == std::vector<int>{0});
    for (std::size_t i = 1; i < a.rows.size(); ++i) REQUIRE(a.rows[i].t - a.rows[i - 1].t == doctest::Approx(0.01).epsilon(1e-9));
    for (const auto& r : a.rows) REQUIRE(r.horizon.size() == 10);

    RunReport rep2;
    const TelemetryLog b = collect_dataset(track(), p, base, cc, &rep2);
    CHECK(rep.telemetry_hash == rep2.telemetry_hash);
    a.write("test_collect_a.csv");
    b.write("test_collect_b.csv");
    CHECK(csv::fnv1a_file("test_collect_a.csv") == csv::fnv1a_file("test_collect_b.csv"));
    CHECK(csv::fnv1a_file(TelemetryLog::horizon_path("test_collect_a.csv")) ==
          csv::fnv1a_file(TelemetryLog::horizon_path("test_collect_b.csv")));

    const TelemetryLog back = TelemetryLog::read("test_collect_a.csv");
    REQUIRE(back.rows.size() == a.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); i += 97) {
        CHECK(back.rows[i].delta == a.rows[i].delta);
        CHECK(back.rows[i].ay_target == a.rows[i].ay_target);
        CHECK(back.rows[i].lap_id == a.rows[i].lap_id);
        REQUIRE(back.rows[i].horizon.size() == 10);
        CHECK(back.rows[i].horizon[9].a_y == a.rows[i].horizon[9].a_y);
    }
    for (const char* f : {"test_collect_a.csv", "test_collect_b.csv"}) {
        std::remove(f);
        std::remove(TelemetryLog::horizon_path(f).c_str());
    }
}

TEST_CASE("ramped schedule raises the lateral load lap by lap") {
    const VehicleParams p;
    BaselineFeedforward base(BaselineParams::tuned(), p.wheelbase(), 0.01);
    CollectConfig cc;
    cc.schedule = ramp_schedule(4, 0.55, 0.95, {0.75});
    cc.test_lap = 4;
    const TelemetryLog log = collect_dataset(track(), p, base, cc);
    CHECK(log.lap_ids() == std::vector<int>{0, 1, 2, 3, 4});
    double prev = 0.0;
    for (int lap = 0; lap < 4; ++lap) {
        double peak = 0.0;
        for (const auto& r : log.laps({lap}).rows) peak = std::max(peak, std::abs(r.ay_meas));
        CHECK(peak >= prev);
        prev = peak;
    }

    // The held-out lap never reaches fitting or training data.
    const ProtocolSplit sp = split_test_lap(log, cc.test_lap);
    CHECK(sp.test.lap_ids() == std::vector<int>{4});
    for (const auto& r : sp.fit.rows) REQUIRE(r.lap_id != 4);
    CHECK(sp.fit.rows.size() + sp.test.rows.size() == log.rows.size());
    const auto recs = to_records(sp.fit, p.wheelbase());
    for (const auto& r : recs) REQUIRE(r.lap != 4);
    const auto split = learning::split_contiguous(recs, 0.2);
    for (const auto& r : split.train) REQUIRE(r.lap != 4);
    for (const auto& r : split.validation) REQUIRE(r.lap != 4);
    CHECK(split_test_lap(log, -1).fit.rows.size() == log.rows.size());
}

TEST_CASE("open-loop evaluation") {
    const VehicleParams p;
    const double l = p.wheelbase();
    BaselineFeedforward base(BaselineParams::tuned(), l, 0.01);
    CollectConfig cc;
    cc.schedule = {0.7};
    const TelemetryLog log = collect_dataset(track(), p, base, cc);
    std::vector<double> logged;
    for (const auto& r : log.rows) logged.push_back(r.delta);
    ReplayFeedforward oracle(logged);
    KinematicFeedforward kin(l);
    const auto res = eval_open_loop({&oracle, &kin}, log);
    REQUIRE(res.size() == 2);
    CHECK(res[0].full.rmse == 0.0);
    CHECK(res[0].full.mae == 0.0);
    CHECK(res[0].full.fvu == 0.0);
    CHECK(res[1].full.fvu > 0.0);

    // Kinematic FVU is the share of steering variance carried by delta_dev.
    double mean = 0.0;
    for (double d : logged) mean += d;
    mean /= static_cast<double>(logged.size());
    double dev = 0.0, var = 0.0;
    for (const auto& r : log.rows) {
        const double e = r.delta - r.ay_target * l / (r.vx * r.vx);
        dev += e * e;
        var += (r.delta - mean) * (r.delta - mean);
    }
    CHECK(res[1].full.fvu == doctest::Approx(dev / var).epsilon(1e-9));
    CHECK(res[1].cornering.n < res[1].full.n);
    CHECK(!res[1].ax_bins.empty());
}

TEST_CASE("baseline tuning recovers known gains") {
    const double l = 3.0, dt = 0.01;
    BaselineParams truth;
    truth.k_ug = 4e-4;
    truth.k_long_pos = 1.5e-4;
    truth.k_long_neg = 6e-5;
    truth.tau_ug = 0.1;
    truth.tau_long = 0.05;
    TelemetryLog log;
    BaselineFilterState st;
    for (int i = 0; i < 3000; ++i) {
        const double t = i * dt;
        TelemetryRow r;
        r.t = t;
        r.vx = 30.0 + 10.0 * std::sin(0.3 * t);
        r.ay_target = 15.0 * std::sin(0.7 * t);
        r.ax_meas = 8.0 * std::sin(1.1 * t + 0.4);
        FfInput in;
        in.a_y_target = r.ay_target;
        in.v_x = r.vx;
        in.a_x_actual = r.ax_meas;
        r.delta = ff_baseline(in, truth, l, dt, st);
        log.rows.push_back(r);
    }
    const BaselineTuning tun = tune_baseline(log, l, dt);
    CHECK(tun.params.tau_ug == truth.tau_ug);
    CHECK(tun.params.tau_long == truth.tau_long);
    CHECK(std::abs(tun.params.k_ug / truth.k_ug - 1.0) < 1e-9);
    CHECK(std::abs(tun.params.k_long_pos / truth.k_long_pos - 1.0) < 1e-9);
    CHECK(std::abs(tun.params.k_long_neg / truth.k_long_neg - 1.0) < 1e-9);
    CHECK(tun.rmse < 1e-12);
}

TEST_CASE("sweep bookkeeping") {
    const VehicleParams p;
    const double l = p.wheelbase();
    std::vector<NamedController> cs{
        {"kinematic", std::make_shared<KinematicFeedforward>(l)},
        {"baseline", std::make_shared<BaselineFeedforward>(BaselineParams::tuned(), l, 0.01)}};
    ClosedLoopConfig c = quick(0.5);

    const SweepResult one = gg_sweep(track(), p, {cs[1]}, {0.6}, c);
    REQUIRE(one.reports.size() == 1);
    REQUIRE(one.summary.size() == 1);
    CHECK(one.summary[0].max_gg == (one.reports[0].failed ? 0.0 : 0.6));
    CHECK(one.summary[0].runs == 1);
    BaselineFeedforward direct(BaselineParams::tuned(), l, 0.01);
    ClosedLoopConfig at = c;
    at.gg_scale = 0.6;
    CHECK(eval_closed_loop(track(), p, direct, at).telemetry_hash == one.reports[0].telemetry_hash);

    const auto grid = parse_grid("0.5:0.7:0.1");
    CHECK(grid.size() == 3);
    const SweepResult a = gg_sweep(track(), p, cs, grid, c, 1);
    const SweepResult b = gg_sweep(track(), p, cs, grid, c, 3);
    REQUIRE(a.reports.size() == b.reports.size());
    for (std::size_t i = 0; i < a.reports.size(); ++i) {
        CHECK(a.reports[i].controller == b.reports[i].controller);
        CHECK(a.reports[i].gg_scale == b.reports[i].gg_scale);
        CHECK(a.reports[i].telemetry_hash == b.reports[i].telemetry_hash);
    }
    REQUIRE(a.summary.size() == 2);
    double best = 0.0;
    for (const auto& s : a.summary) best = std::max(best, s.max_gg);
    for (const auto& s : a.summary) CHECK(s.relative_gg == doctest::Approx(s.max_gg / best));
    CHECK(parse_grid("0.5,0.6") == std::vector<double>{0.5, 0.6});
    CHECK_THROWS_AS(parse_grid("0.7,0.5"), InvalidInput);
}

TEST_CASE("one fine-tune iteration without epochs equals a plain run") {
    const VehicleParams p;
    learning::MsnnModel m;
    m.init(1);
    FinetuneConfig fc;
    fc.iterations = 1;
    fc.gg_scale = 0.6;
    fc.train.epochs = 0;
    fc.loop = quick(0.6);
    const FinetuneTrace tr = finetune_loop(track(), p, m, fc);
    REQUIRE(tr.lap_times.size() == 2);

    learning::MsnnModel fresh;
    fresh.init(1);
    learning::LearnedFeedforward ff(std::make_shared<learning::MsnnModel>(fresh), p.wheelbase());
    ClosedLoopConfig c = fc.loop;
    c.gg_scale = fc.gg_scale;
    const RunReport r = eval_closed_loop(track(), p, ff, c);
    CHECK(tr.lap_times[0] == r.mean_lap_time());
}
