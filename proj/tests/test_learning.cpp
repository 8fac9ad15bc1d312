#include "doctest.h"

#include "ffsteer/controllers.hpp"
#include "ffsteer/error.hpp"
#include "ffsteer/learning/kernels.hpp"
#include "ffsteer/learning/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>

using namespace ffsteer;
using namespace ffsteer::learning;

namespace {

// Smooth random horizons resembling planner output.
std::vector<Record> synthetic_records(std::size_t n, int horizon, std::uint64_t seed, int laps = 10) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uv(15.0, 60.0), ua(-20.0, 20.0), ux(-15.0, 8.0), slope(-30.0, 30.0);
    std::vector<Record> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = uv(rng), ay = ua(rng), ax = ux(rng), day = slope(rng), dax = slope(rng);
        std::vector<HorizonStep> h;
        for (int k = 0; k < horizon; ++k) {
            const double t = 0.01 * k;
            h.push_back({v + ax * t, ax + dax * t, ay + day * t});
        }
        Record r = make_record(std::move(h), ay / (v * v), 0.0, 3.0, static_cast<int>(i * laps / n), 0.01 * i);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Record> label(std::vector<Record> recs, const Model& teacher) {
    for (auto& r : recs) r.delta_dev_true = teacher.predict(r.horizon, r.rho);
    return recs;
}

double loss_at(const Model& m, const Record& r, bool train_mode, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> g(m.params.size(), 0.0);
    return m.loss_and_grad(r, train_mode, &rng, 1.0, g);
}

// Central differences over every parameter; returns the number of mismatches.
int gradient_mismatches(Model& m, const Record& r, bool train_mode, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> g(m.params.size(), 0.0);
    m.loss_and_grad(r, train_mode, &rng, 1.0, g);
    const double h = 1e-5;
    int bad = 0;
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        const double keep = m.params.values[i];
        m.params.values[i] = keep + h;
        const double lp = loss_at(m, r, train_mode, seed);
        m.params.values[i] = keep - h;
        const double lm = loss_at(m, r, train_mode, seed);
        m.params.values[i] = keep;
        const double num = (lp - lm) / (2.0 * h);
        const double diff = std::abs(num - g[i]);
        const double scale = std::max(std::abs(num), std::abs(g[i]));
        if (diff > 1e-7 && diff > 1e-4 * scale) {
            if (bad < 5) MESSAGE("param " << i << " analytic " << g[i] << " numeric " << num);
            ++bad;
        }
    }
    return bad;
}

double fvu(const Model& m, const std::vector<Record>& data) {
    double mean = 0.0;
    for (const auto& r : data) mean += r.delta_dev_true;
    mean /= static_cast<double>(data.size());
    double num = 0.0, den = 0.0;
    for (const auto& r : data) {
        const double e = m.predict(r.horizon, r.rho) - r.delta_dev_true;
        num += e * e;
        den += (r.delta_dev_true - mean) * (r.delta_dev_true - mean);
    }
    return num / den;
}

}  // namespace

TEST_CASE("deviation target and records") {
    const std::vector<HorizonStep> h{{20.0, 0.0, 10.0}, {21.0, 1.0, 11.0}};
    CHECK(deviation_target(h, 0.1, 3.0) == 0.1 - 10.0 * 3.0 / 400.0);
    const Record r = make_record(h, 0.025, 0.1, 3.0, 4, 1.5);
    CHECK(r.delta_dev_true == deviation_target(h, 0.1, 3.0));
    CHECK(r.lap == 4);
}

TEST_CASE("normaliser round trip and train-only statistics") {
    const auto recs = synthetic_records(500, 10, 3);
    const Split sp = split_contiguous(recs, 0.2);
    const Normalizer n = Normalizer::fit(sp.train);
    const Normalizer other = Normalizer::fit(recs);
    CHECK(n.mean[0] != other.mean[0]);
    for (const auto& r : recs) {
        for (const auto& h : r.horizon) {
            const HorizonStep back = n.denormalize(n.normalize(h));
            CHECK(std::abs(back.v_x - h.v_x) < 1e-12);
            CHECK(std::abs(back.a_x - h.a_x) < 1e-12);
            CHECK(std::abs(back.a_y - h.a_y) < 1e-12);
        }
    }
    CHECK_THROWS_AS(Normalizer::fit({}), InvalidInput);
}

TEST_CASE("split keeps whole laps apart") {
    const auto recs = synthetic_records(1000, 3, 5, 10);
    const Split sp = split_contiguous(recs, 0.2);
    CHECK(sp.train.size() + sp.validation.size() == recs.size());
    for (const auto& v : sp.validation)
        for (const auto& t : sp.train) REQUIRE(v.lap != t.lap);
    CHECK(sp.validation.size() == 200);
    CHECK(subsample(recs, 10).size() == 100);
    CHECK(subsample(recs, 1).size() == recs.size());
}

TEST_CASE("LSTM forward basics") {
    LstmModel m;
    m.init(3);
    const auto recs = synthetic_records(20, 10, 1);
    m.fit_normalizer(recs);
    const double a = m.forward(recs[0].horizon, recs[0].rho);
    const double b = m.forward(recs[0].horizon, recs[0].rho);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
    std::fill(m.params.values.begin(), m.params.values.end(), 0.0);
    for (const auto& r : recs) CHECK(m.predict(r.horizon, r.rho) == 0.0);
    CHECK_THROWS_AS(m.forward(std::vector<HorizonStep>(3), 0.0), InvalidInput);
}

TEST_CASE("LSTM gradients match finite differences") {
    struct Cfg {
        int horizon, input, hidden;
        double dropout;
        bool train;
    };
    const Cfg cfgs[] = {{1, 1, 1, 0.0, false}, {2, 3, 2, 0.0, false}, {3, 4, 3, 0.1, true},  {5, 2, 4, 0.0, false},
                        {4, 5, 5, 0.5, true},  {10, 4, 6, 0.1, true}, {6, 3, 8, 0.2, true},  {10, 8, 4, 0.0, false},
                        {7, 6, 7, 0.3, true},  {3, 16, 9, 0.1, true}, {10, 16, 12, 0.1, true}, {2, 2, 16, 0.0, false}};
    std::uint64_t seed = 100;
    for (const auto& c : cfgs) {
        LstmModel m({c.horizon, c.input, c.hidden, c.dropout});
        m.init(seed);
        const auto recs = synthetic_records(30, c.horizon, seed);
        m.fit_normalizer(recs);
        // Random biases so no gate sits at its default.
        std::mt19937_64 rng(seed);
        m.params.fill_uniform("b", 0.5, rng);
        m.params.fill_uniform("proj_b", 0.5, rng);
        m.params.fill_uniform("out_b", 0.5, rng);
        Record r = recs[7];
        r.delta_dev_true = 0.01;
        INFO("config horizon " << c.horizon << " input " << c.input << " hidden " << c.hidden);
        CHECK(gradient_mismatches(m, r, c.train, seed + 1) == 0);
        ++seed;
    }
}

TEST_CASE("MS-NN gradients match finite differences") {
    struct Cfg {
        int ay, ax, vx, hidden, horizon;
        bool transient;
    };
    const Cfg cfgs[] = {{1, 1, 1, 2, 2, false}, {2, 2, 2, 4, 3, true},  {2, 1, 2, 3, 10, true}, {3, 2, 1, 5, 4, true},
                        {2, 2, 2, 8, 10, false}, {1, 3, 2, 6, 5, true},  {2, 2, 2, 32, 10, true}, {4, 1, 1, 2, 1, true},
                        {1, 1, 3, 7, 6, true},  {2, 3, 2, 4, 8, true}};
    std::uint64_t seed = 300;
    for (const auto& c : cfgs) {
        MsnnConfig mc;
        mc.regions_ay = c.ay;
        mc.regions_ax = c.ax;
        mc.regions_vx = c.vx;
        mc.hidden = c.hidden;
        mc.horizon = c.horizon;
        mc.transient = c.transient;
        MsnnModel m(mc);
        m.init(seed);
        const auto recs = synthetic_records(200, c.horizon, seed);
        m.fit_normalizer(recs);
        std::mt19937_64 rng(seed);
        m.params.fill_uniform("c1", 1.0, rng);
        m.params.fill_uniform("c3", 0.5, rng);
        Record r = recs[11];
        r.delta_dev_true = 0.02;
        INFO("regions " << c.ay << "x" << c.ax << "x" << c.vx << " hidden " << c.hidden);
        CHECK(gradient_mismatches(m, r, true, seed) == 0);
        ++seed;
    }
}

TEST_CASE("MS-NN structure") {
    MsnnModel m;
    m.init(4);
    const auto recs = synthetic_records(500, 10, 8);
    m.fit_normalizer(recs);
    CHECK(m.regions() == 8);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ua(-25.0, 25.0), ux(-20.0, 10.0), uv(10.0, 70.0);
    for (int i = 0; i < 1000; ++i) {
        const auto mem = m.memberships(ua(rng), ux(rng), uv(rng));
        double s = 0.0;
        for (double v : mem) s += v;
        CHECK(std::abs(s - 1.0) < 1e-12);
    }

    // Transient branch off: the output is odd in a_y.
    MsnnConfig mc;
    mc.transient = false;
    MsnnModel odd(mc);
    odd.init(5);
    odd.fit_normalizer(recs);
    for (int i = 0; i < 200; ++i) {
        const double ay = ua(rng), ax = ux(rng), v = uv(rng);
        CHECK(odd.steady_state(-ay, ax, v) == -odd.steady_state(ay, ax, v));
        std::vector<HorizonStep> h(10, HorizonStep{v, ax, ay}), hm(10, HorizonStep{v, ax, -ay});
        CHECK(odd.predict(hm, 0.0) == -odd.predict(h, 0.0));
    }

    // One region with c1 = k reduces to a constant understeer gradient.
    MsnnConfig one;
    one.regions_ay = one.regions_ax = one.regions_vx = 1;
    one.transient = false;
    MsnnModel lin(one);
    lin.init(1);
    lin.params.fill("c1", 1.7e-3);
    lin.params.fill("c3", 0.0);
    for (double ay : {-12.0, 0.5, 9.0}) {
        std::vector<HorizonStep> h(10, HorizonStep{30.0, 0.0, ay});
        CHECK(std::abs(lin.predict(h, 0.0) - 1.7e-3 * ay) < 1e-15);
    }
}

TEST_CASE("dropout is unbiased in expectation") {
    LstmModel m({10, 8, 16, 0.1});
    m.init(21);
    const auto recs = synthetic_records(20, 10, 21);
    m.fit_normalizer(recs);
    Record r = recs[3];
    r.delta_dev_true = 0.0;
    const double clean = m.forward(r.horizon, r.rho);
    const std::size_t ob = m.params.block("out_b").offset;
    std::mt19937_64 rng(99);
    const int n = 10000;
    double s = 0.0, ss = 0.0;
    std::vector<double> g(m.params.size());
    for (int i = 0; i < n; ++i) {
        std::fill(g.begin(), g.end(), 0.0);
        m.loss_and_grad(r, true, &rng, 1.0, g);
        const double y = 0.5 * g[ob];  // d(y^2)/d(out_b) = 2 y
        s += y;
        ss += y * y;
    }
    const double mean = s / n;
    const double sd = std::sqrt(std::max(0.0, ss / n - mean * mean));
    CHECK(std::abs(mean - clean) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));
    CHECK(sd > 0.0);
}

TEST_CASE("training is deterministic and keeps the best epoch") {
    const auto recs = synthetic_records(400, 10, 31);
    MsnnModel teacher;
    teacher.init(7);
    teacher.fit_normalizer(recs);
    const auto data = label(recs, teacher);
    const Split sp = split_contiguous(data, 0.2);
    TrainConfig tc;
    tc.epochs = 8;
    tc.batch_size = 32;
    auto run = [&] {
        LstmModel m({10, 8, 8, 0.1});
        m.init(2);
        const TrainHistory h = train(m, sp.train, sp.validation, tc);
        return std::make_pair(m.params.values, h);
    };
    const auto [p1, h1] = run();
    const auto [p2, h2] = run();
    CHECK(std::memcmp(p1.data(), p2.data(), p1.size() * sizeof(double)) == 0);
    CHECK(h1.val_loss == h2.val_loss);
    REQUIRE(h1.val_loss.size() == 8);
    double best = h1.val_loss.front();
    for (double v : h1.val_loss) best = std::min(best, v);
    CHECK(h1.best_val_loss == best);
    CHECK(h1.val_loss[static_cast<std::size_t>(h1.best_epoch)] == best);

    LstmModel m({10, 8, 8, 0.1});
    m.init(2);
    train(m, sp.train, sp.validation, tc);
    CHECK(mse(m, sp.validation) == h1.best_val_loss);
}

TEST_CASE("training does not depend on the kernel variant") {
    if (!kernels::avx2_available()) return;
    const auto recs = synthetic_records(200, 10, 41);
    MsnnModel teacher;
    teacher.init(9);
    teacher.fit_normalizer(recs);
    const auto data = label(recs, teacher);
    const Split sp = split_contiguous(data, 0.2);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 16;
    const kernels::Isa original = kernels::active_isa();
    std::vector<double> out[2];
    for (int k = 0; k < 2; ++k) {
        kernels::set_isa(k == 0 ? kernels::Isa::Scalar : kernels::Isa::Avx2);
        LstmModel m;
        m.init(1);
        train(m, sp.train, sp.validation, tc);
        out[k] = m.params.values;
    }
    kernels::set_isa(original);
    CHECK(std::memcmp(out[0].data(), out[1].data(), out[0].size() * sizeof(double)) == 0);
}

TEST_CASE("non-finite loss raises Diverged") {
    auto recs = synthetic_records(50, 10, 2);
    recs[4].delta_dev_true = std::nan("");
    MsnnModel m;
    m.init(1);
    TrainConfig tc;
    tc.epochs = 2;
    CHECK_THROWS_AS(train(m, recs, {}, tc), Diverged);
}

TEST_CASE("student recovers a teacher of the same architecture") {
    const LstmConfig cfg{5, 4, 16, 0.0};
    const auto recs = synthetic_records(2000, 5, 51, 10);
    LstmModel teacher(cfg);
    teacher.init(77);
    teacher.fit_normalizer(recs);
    const Split sp = split_contiguous(label(recs, teacher), 0.2);
    LstmModel student(cfg);
    student.init(78);
    // Plain Adam stalls around 1e-5; two tenfold learning-rate drops (via
    // finetune, which keeps the normaliser) get well below that.
    TrainConfig tc;
    tc.epochs = 200;
    tc.batch_size = 32;
    tc.patience = 200;
    tc.learning_rate = 1e-2;
    train(student, sp.train, sp.validation, tc);
    finetune(student, sp.train, sp.validation, tc);
    tc.learning_rate = 1e-3;
    const TrainHistory h = finetune(student, sp.train, sp.validation, tc);
    double mean = 0.0, var = 0.0;
    for (const auto& r : sp.validation) mean += r.delta_dev_true;
    mean /= static_cast<double>(sp.validation.size());
    for (const auto& r : sp.validation) var += (r.delta_dev_true - mean) * (r.delta_dev_true - mean);
    var /= static_cast<double>(sp.validation.size());
    INFO("validation mse / variance = " << h.best_val_loss / var);
    CHECK(h.best_val_loss / var < 1e-6);
}

TEST_CASE("LSTM learns the EHD surface") {
    const EhdSurface ehd{1e-6, -2e-5, -4e-6, 1.2e-3};
    auto recs = synthetic_records(3000, 10, 61, 10);
    for (auto& r : recs) r.delta_dev_true = ehd.deviation(r.horizon[0].a_y, r.horizon[0].v_x);
    const Split sp = split_contiguous(recs, 0.2);
    LstmModel m;
    m.init(5);
    TrainConfig tc;
    tc.epochs = 40;
    tc.batch_size = 64;
    train(m, sp.train, sp.validation, tc);
    const double f = fvu(m, sp.validation);
    INFO("held-out FVU " << f);
    CHECK(f < 0.05);
}

TEST_CASE("fine-tuning") {
    const auto recs = synthetic_records(600, 10, 71);
    MsnnModel teacher;
    teacher.init(3);
    teacher.fit_normalizer(recs);
    const Split sp = split_contiguous(label(recs, teacher), 0.2);
    MsnnModel m;
    m.init(4);
    TrainConfig tc;
    tc.epochs = 30;
    tc.batch_size = 32;
    const TrainHistory h = train(m, sp.train, sp.validation, tc);

    // Zero epochs leaves the parameters untouched.
    MsnnModel same = m;
    TrainConfig none = tc;
    none.epochs = 0;
    finetune(same, sp.train, sp.validation, none);
    CHECK(same.params.values == m.params.values);

    // Fine-tuning on the original data keeps the validation loss within 5%.
    MsnnModel again = m;
    TrainConfig ft = tc;
    ft.epochs = 10;
    finetune(again, sp.train, sp.validation, ft);
    CHECK(mse(again, sp.validation) <= 1.05 * h.best_val_loss);
    CHECK(again.norm.target_scale == m.norm.target_scale);
}

TEST_CASE("model JSON round trip") {
    const auto recs = synthetic_records(100, 10, 81);
    std::vector<std::unique_ptr<Model>> models;
    models.push_back(std::make_unique<LstmModel>(LstmConfig{10, 5, 7, 0.2}));
    MsnnConfig mc;
    mc.hidden = 5;
    mc.regions_ax = 3;
    models.push_back(std::make_unique<MsnnModel>(mc));
    for (auto& m : models) {
        m->init(12);
        m->fit_normalizer(recs);
        const std::string path = "test_model_" + m->kind() + ".json";
        save_model(path, *m);
        const auto back = load_model(path);
        std::remove(path.c_str());
        CHECK(back->kind() == m->kind());
        CHECK(back->params.values == m->params.values);
        for (const auto& r : recs) {
            const double a = m->predict(r.horizon, r.rho), b = back->predict(r.horizon, r.rho);
            CHECK(std::memcmp(&a, &b, sizeof a) == 0);
        }
    }
    CHECK_THROWS_AS(model_from_json("{\"kind\": \"cnn\"}"), InvalidInput);
}

TEST_CASE("permutation importance") {
    const auto recs = synthetic_records(600, 10, 91);
    MsnnConfig one;
    one.regions_ay = one.regions_ax = one.regions_vx = 1;
    one.transient = false;
    MsnnModel teacher(one);
    teacher.init(1);
    teacher.fit_normalizer(recs);
    teacher.params.fill("c1", 0.5);
    teacher.params.fill("c3", 0.1);
    const Importance imp = permutation_importance(teacher, recs, 500, 3);
    CHECK(imp.horizon == 10);
    CHECK(imp.by_step[2][0] > 0.0);
    for (int c = 0; c < 3; ++c)
        for (int t = 0; t < 10; ++t)
            if (c != 2 || t != 0) CHECK(imp.by_step[c][static_cast<std::size_t>(t)] == 0.0);
    CHECK(imp.has_rho);
    CHECK(imp.rho == 0.0);

    // A model that ignores a feature: LSTM with zero input weights on v_x.
    LstmModel m({10, 4, 4, 0.0});
    m.init(2);
    m.fit_normalizer(recs);
    double* w = m.params.data("proj_w");
    for (int r = 0; r < 4; ++r) w[0 * 4 + r] = 0.0;  // column 0 is v_x
    const Importance li = permutation_importance(m, recs, 300, 4);
    for (int t = 0; t < 10; ++t) CHECK(li.by_step[0][static_cast<std::size_t>(t)] == 0.0);
    CHECK(li.by_step[2][9] > 0.0);
}
