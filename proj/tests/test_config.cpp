#include "doctest.h"

#include "ffsteer/config.hpp"
#include "ffsteer/error.hpp"

#include <json.hpp>

using namespace ffsteer;
using namespace ffsteer::harness;

TEST_CASE("run config survives a JSON round trip") {
    RunConfig c;
    c.command = "sweep";
    c.controllers = {"baseline", "ehd"};
    c.ehd_file = "ehd.json";
    c.gg_grid = {0.5, 0.55, 0.6};
    c.strict = true;
    c.jobs = 3;
    c.loop.feedback = false;
    c.loop.gg_scale = 0.8;
    c.schedule = {0.6, 0.7};
    c.test_lap = 1;
    c.ehd_source = EhdAySource::Measured;
    c.train.epochs = 7;
    c.train.learning_rate = 2e-3;
    c.lstm.hidden = 12;
    c.record_stride = 4;
    c.seed = 99;
    c.baseline.k_ug = 1.25e-4;

    const std::string text = to_json(c);
    const RunConfig back = run_config_from_json(text);
    CHECK(to_json(back) == text);
    CHECK(back.controllers == c.controllers);
    CHECK(back.gg_grid == c.gg_grid);
    CHECK(back.strict);
    CHECK(back.jobs == 3);
    CHECK_FALSE(back.loop.feedback);
    CHECK(back.ehd_source == EhdAySource::Measured);
    CHECK(back.train.learning_rate == 2e-3);
    CHECK(back.lstm.hidden == 12);
    CHECK(back.seed == 99);
    CHECK(back.baseline.k_ug == 1.25e-4);
}

TEST_CASE("missing keys keep defaults") {
    const RunConfig d;
    const RunConfig c = run_config_from_json("{}");
    CHECK(to_json(c) == to_json(d));
    const RunConfig j = run_config_from_json(R"({"jobs": 5})");
    CHECK(j.jobs == 5);
    CHECK(j.test_lap == d.test_lap);
}

TEST_CASE("bad configs are rejected") {
    CHECK_THROWS_AS(run_config_from_json(R"({"jbos": 2})"), InvalidInput);
    CHECK_THROWS_AS(run_config_from_json("not json"), InvalidInput);
    CHECK_THROWS_AS(run_config_from_json(R"({"jobs": "two"})"), InvalidInput);
    CHECK_THROWS_AS(run_config_from_json(R"({"ehd_source": "guess"})"), InvalidInput);
    // Nested objects are strict as well.
    auto j = nlohmann::json::parse(to_json(RunConfig{}));
    REQUIRE(j.contains("loop"));
    j["loop"]["typo"] = 1;
    CHECK_THROWS_AS(run_config_from_json(j.dump()), InvalidInput);
    CHECK_THROWS_AS(read_run_config("/nonexistent/config.json"), InvalidInput);
}

TEST_CASE("controller factory") {
    RunConfig c;
    CHECK(expand_controllers({"all"}) == std::vector<std::string>{"baseline", "ehd", "msnn", "lstm"});
    CHECK(make_controller("baseline", c, 3.0)->name() == "baseline");
    CHECK(make_controller("kinematic", c, 3.0)->name() == "kinematic");
    CHECK_THROWS_AS(make_controller("ehd", c, 3.0), InvalidInput);
    CHECK_THROWS_AS(make_controller("lstm", c, 3.0), InvalidInput);
    CHECK_THROWS_AS(make_model("gru", c), InvalidInput);
}

TEST_CASE("report JSON carries the outcome") {
    RunReport r;
    r.controller = "baseline";
    r.gg_scale = 0.7;
    r.failed = true;
    r.failure_cause = "lateral error threshold";
    const auto j = nlohmann::json::parse(to_json(r, "t.csv"));
    CHECK(j.dump().find("lateral error threshold") != std::string::npos);
    CHECK(j.dump().find("t.csv") != std::string::npos);
}
