#include "ffsteer/config.hpp"

#include "ffsteer/error.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace ffsteer::harness {

namespace {

using Json = nlohmann::ordered_json;

// Reads fields out of one JSON object and complains about anything left over,
// so a typo in a config file fails loudly instead of silently using defaults.
class Reader {
public:
    Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw InvalidInput(where_ + ": expected a JSON object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput(where_ + "." + key + ": " + e.what());
        }
    }

    const Json* child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw InvalidInput(where_ + ": unknown key '" + it.key() + "'");
        }
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

Json limits_json(const GgLimits& g) {
    return {{"a_x_max_drive", g.a_x_max_drive}, {"a_x_max_brake", g.a_x_max_brake}, {"a_y_max", g.a_y_max}};
}

void read_limits(const Json& j, GgLimits& g) {
    Reader r(j, "loop.limits");
    r.get("a_x_max_drive", g.a_x_max_drive);
    r.get("a_x_max_brake", g.a_x_max_brake);
    r.get("a_y_max", g.a_y_max);
    r.finish();
}

Json targets_json(const TargetGains& t) {
    return {{"k_e", t.k_e}, {"k_psi", t.k_psi}, {"k_v", t.k_v}, {"preview_time", t.preview_time}};
}

void read_targets(const Json& j, TargetGains& t) {
    Reader r(j, "loop.targets");
    r.get("k_e", t.k_e);
    r.get("k_psi", t.k_psi);
    r.get("k_v", t.k_v);
    r.get("preview_time", t.preview_time);
    r.finish();
}

Json feedback_json(const FeedbackGains& f) {
    return {{"kp", f.kp}, {"kd", f.kd}, {"k_heading", f.k_heading}, {"k_ay", f.k_ay}, {"limit", f.limit}};
}

void read_feedback(const Json& j, FeedbackGains& f) {
    Reader r(j, "loop.feedback_gains");
    r.get("kp", f.kp);
    r.get("kd", f.kd);
    r.get("k_heading", f.k_heading);
    r.get("k_ay", f.k_ay);
    r.get("limit", f.limit);
    r.finish();
}

Json loop_json(const ClosedLoopConfig& c) {
    return {{"gg_scale", c.gg_scale},
            {"warmup_laps", c.warmup_laps},
            {"timed_laps", c.timed_laps},
            {"feedback", c.feedback},
            {"controller_dt", c.controller_dt},
            {"plant_substeps", c.plant_substeps},
            {"failure_threshold", c.failure_threshold},
            {"horizon_len", c.horizon_len},
            {"v_cap", c.v_cap},
            {"limits", limits_json(c.limits)},
            {"targets", targets_json(c.targets)},
            {"feedback_gains", feedback_json(c.feedback_gains)},
            {"speed_gain", c.speed_gain},
            {"timeout_factor", c.timeout_factor}};
}

void read_loop(const Json& j, ClosedLoopConfig& c) {
    Reader r(j, "loop");
    r.get("gg_scale", c.gg_scale);
    r.get("warmup_laps", c.warmup_laps);
    r.get("timed_laps", c.timed_laps);
    r.get("feedback", c.feedback);
    r.get("controller_dt", c.controller_dt);
    r.get("plant_substeps", c.plant_substeps);
    r.get("failure_threshold", c.failure_threshold);
    r.get("horizon_len", c.horizon_len);
    r.get("v_cap", c.v_cap);
    if (const Json* x = r.child("limits")) read_limits(*x, c.limits);
    if (const Json* x = r.child("targets")) read_targets(*x, c.targets);
    if (const Json* x = r.child("feedback_gains")) read_feedback(*x, c.feedback_gains);
    r.get("speed_gain", c.speed_gain);
    r.get("timeout_factor", c.timeout_factor);
    r.finish();
}

Json baseline_json(const BaselineParams& b) {
    return {{"k_ug", b.k_ug},
            {"k_long_pos", b.k_long_pos},
            {"k_long_neg", b.k_long_neg},
            {"tau_ug", b.tau_ug},
            {"tau_long", b.tau_long}};
}

void read_baseline(const Json& j, BaselineParams& b) {
    Reader r(j, "baseline");
    r.get("k_ug", b.k_ug);
    r.get("k_long_pos", b.k_long_pos);
    r.get("k_long_neg", b.k_long_neg);
    r.get("tau_ug", b.tau_ug);
    r.get("tau_long", b.tau_long);
    r.finish();
}

Json train_json(const learning::TrainConfig& t) {
    return {{"learning_rate", t.learning_rate},
            {"batch_size", t.batch_size},
            {"epochs", t.epochs},
            {"patience", t.patience},
            {"fine_tune_lr_scale", t.fine_tune_lr_scale},
            {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"eps", t.adam.eps}}}};
}

void read_train(const Json& j, learning::TrainConfig& t) {
    Reader r(j, "train");
    r.get("learning_rate", t.learning_rate);
    r.get("batch_size", t.batch_size);
    r.get("epochs", t.epochs);
    r.get("patience", t.patience);
    r.get("fine_tune_lr_scale", t.fine_tune_lr_scale);
    if (const Json* a = r.child("adam")) {
        Reader ar(*a, "train.adam");
        ar.get("beta1", t.adam.beta1);
        ar.get("beta2", t.adam.beta2);
        ar.get("eps", t.adam.eps);
        ar.finish();
    }
    r.finish();
}

Json lstm_json(const learning::LstmConfig& c) {
    return {{"horizon", c.horizon}, {"input_dim", c.input_dim}, {"hidden", c.hidden}, {"dropout", c.dropout}};
}

void read_lstm(const Json& j, learning::LstmConfig& c) {
    Reader r(j, "lstm");
    r.get("horizon", c.horizon);
    r.get("input_dim", c.input_dim);
    r.get("hidden", c.hidden);
    r.get("dropout", c.dropout);
    r.finish();
}

Json msnn_json(const learning::MsnnConfig& c) {
    return {{"horizon", c.horizon},       {"regions_ay", c.regions_ay}, {"regions_ax", c.regions_ax},
            {"regions_vx", c.regions_vx}, {"hidden", c.hidden},         {"ramp_width", c.ramp_width},
            {"transient", c.transient}};
}

void read_msnn(const Json& j, learning::MsnnConfig& c) {
    Reader r(j, "msnn");
    r.get("horizon", c.horizon);
    r.get("regions_ay", c.regions_ay);
    r.get("regions_ax", c.regions_ax);
    r.get("regions_vx", c.regions_vx);
    r.get("hidden", c.hidden);
    r.get("ramp_width", c.ramp_width);
    r.get("transient", c.transient);
    r.finish();
}

Json stats_json(const ErrorStats& e) {
    return {{"rmse", e.rmse}, {"mae", e.mae}, {"max_abs", e.max_abs}, {"n", e.n}};
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    out << text << '\n';
}

}  // namespace

std::string to_json(const RunConfig& c) {
    Json j;
    j["command"] = c.command;
    j["track_file"] = c.track_file;
    j["vehicle_file"] = c.vehicle_file;
    j["telemetry_file"] = c.telemetry_file;
    j["out_dir"] = c.out_dir;
    j["controllers"] = c.controllers;
    j["baseline"] = baseline_json(c.baseline);
    j["ehd_file"] = c.ehd_file;
    j["msnn_file"] = c.msnn_file;
    j["lstm_file"] = c.lstm_file;
    j["loop"] = loop_json(c.loop);
    j["plant_dt"] = c.plant_dt();
    j["gg_grid"] = c.gg_grid;
    j["strict"] = c.strict;
    j["jobs"] = c.jobs;
    j["schedule"] = c.schedule;
    j["test_lap"] = c.test_lap;
    j["ehd_min_ay"] = c.ehd_min_ay;
    j["ehd_source"] = c.ehd_source == EhdAySource::Target ? "target" : "measured";
    j["model_kind"] = c.model_kind;
    j["lstm"] = lstm_json(c.lstm);
    j["msnn"] = msnn_json(c.msnn);
    j["train"] = train_json(c.train);
    j["record_stride"] = c.record_stride;
    j["val_fraction"] = c.val_fraction;
    j["finetune_iterations"] = c.finetune_iterations;
    j["finetune_gg"] = c.finetune_gg;
    j["importance_samples"] = c.importance_samples;
    j["xcorr_max_lag"] = c.xcorr_max_lag;
    j["seed"] = c.seed;
    return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    Reader r(j, "config");
    r.get("command", c.command);
    r.get("track_file", c.track_file);
    r.get("vehicle_file", c.vehicle_file);
    r.get("telemetry_file", c.telemetry_file);
    r.get("out_dir", c.out_dir);
    r.get("controllers", c.controllers);
    if (const Json* x = r.child("baseline")) read_baseline(*x, c.baseline);
    r.get("ehd_file", c.ehd_file);
    r.get("msnn_file", c.msnn_file);
    r.get("lstm_file", c.lstm_file);
    if (const Json* x = r.child("loop")) read_loop(*x, c.loop);
    r.child("plant_dt");  // derived, accepted for round trips
    r.get("gg_grid", c.gg_grid);
    r.get("strict", c.strict);
    r.get("jobs", c.jobs);
    r.get("schedule", c.schedule);
    r.get("test_lap", c.test_lap);
    r.get("ehd_min_ay", c.ehd_min_ay);
    std::string source = "target";
    r.get("ehd_source", source);
    if (source == "target") c.ehd_source = EhdAySource::Target;
    else if (source == "measured") c.ehd_source = EhdAySource::Measured;
    else throw InvalidInput("ehd_source must be 'target' or 'measured'");
    r.get("model_kind", c.model_kind);
    if (const Json* x = r.child("lstm")) read_lstm(*x, c.lstm);
    if (const Json* x = r.child("msnn")) read_msnn(*x, c.msnn);
    if (const Json* x = r.child("train")) read_train(*x, c.train);
    r.get("record_stride", c.record_stride);
    r.get("val_fraction", c.val_fraction);
    r.get("finetune_iterations", c.finetune_iterations);
    r.get("finetune_gg", c.finetune_gg);
    r.get("importance_samples", c.importance_samples);
    r.get("xcorr_max_lag", c.xcorr_max_lag);
    r.get("seed", c.seed);
    r.finish();
    return c;
}

RunConfig read_run_config(const std::string& path) { return run_config_from_json(slurp(path)); }

void write_run_config(const std::string& path, const RunConfig& cfg) { spill(path, to_json(cfg)); }

std::string to_json(const RunReport& r, const std::string& telemetry_file) {
    Json j;
    j["controller"] = r.controller;
    j["gg_scale"] = r.gg_scale;
    j["feedback"] = r.feedback;
    j["lap_times"] = r.lap_times;
    j["all_lap_times"] = r.all_lap_times;
    j["mean_lap_time"] = r.mean_lap_time();
    j["failed"] = r.failed;
    j["failure_s"] = r.failure_s;
    j["failure_t"] = r.failure_t;
    j["failure_cause"] = r.failure_cause;
    j["max_abs_lateral_error"] = r.max_abs_lateral_error;
    j["lateral_error"] = stats_json(r.lateral_error);
    j["velocity_error"] = stats_json(r.velocity_error);
    j["ay_error"] = stats_json(r.ay_error);
    j["lateral_jerk_rms"] = r.lateral_jerk_rms;
    j["jerk_cutoff_hz"] = r.jerk_cutoff_hz;
    j["sim_time"] = r.sim_time;
    j["telemetry_hash"] = hex64(r.telemetry_hash);
    j["telemetry_file"] = telemetry_file;
    return j.dump(2);
}

void write_report(const std::string& path, const RunReport& report, const std::string& telemetry_file) {
    spill(path, to_json(report, telemetry_file));
}

Track load_track(const RunConfig& cfg) {
    if (cfg.track_file.empty()) return default_track();
    return Track::read_csv(cfg.track_file);
}

VehicleParams load_vehicle(const RunConfig& cfg) {
    VehicleParams p = cfg.vehicle_file.empty() ? VehicleParams{} : VehicleParams::from_json_file(cfg.vehicle_file);
    p.validate();
    return p;
}

std::shared_ptr<learning::Model> make_model(const std::string& kind, const RunConfig& cfg) {
    if (kind == "msnn") return std::make_shared<learning::MsnnModel>(cfg.msnn);
    if (kind == "lstm") return std::make_shared<learning::LstmModel>(cfg.lstm);
    throw InvalidInput("unknown model kind '" + kind + "' (expected msnn or lstm)");
}

std::shared_ptr<const Feedforward> make_controller(const std::string& name, const RunConfig& cfg,
                                                   double wheelbase) {
    if (name == "baseline") return std::make_shared<BaselineFeedforward>(cfg.baseline, wheelbase, cfg.loop.controller_dt);
    if (name == "kinematic") return std::make_shared<KinematicFeedforward>(wheelbase);
    if (name == "ehd") {
        if (cfg.ehd_file.empty()) throw InvalidInput("controller ehd needs --ehd <ehd.json>");
        return std::make_shared<EhdFeedforward>(read_ehd_json(cfg.ehd_file).surface, wheelbase);
    }
    if (name == "msnn" || name == "lstm") {
        const std::string& path = name == "msnn" ? cfg.msnn_file : cfg.lstm_file;
        if (path.empty()) throw InvalidInput("controller " + name + " needs --" + name + " <model.json>");
        std::shared_ptr<const learning::Model> model = learning::load_model(path);
        if (model->kind() != name) throw InvalidInput(path + " holds a " + model->kind() + " model, not " + name);
        return std::make_shared<learning::LearnedFeedforward>(model, wheelbase);
    }
    throw InvalidInput("unknown controller '" + name + "'");
}

std::vector<std::string> expand_controllers(const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (const auto& n : names) {
        if (n == "all") {
            for (const char* k : {"baseline", "ehd", "msnn", "lstm"}) out.emplace_back(k);
        } else {
            out.push_back(n);
        }
    }
    return out;
}

}  // namespace ffsteer::harness
