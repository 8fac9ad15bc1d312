// Command-line front end: one subcommand per protocol step. Every command
// writes its resolved configuration to <out>/config.json before running, and
// `--config <that file>` reproduces the run.

#include "ffsteer/config.hpp"
#include "ffsteer/csv.hpp"
#include "ffsteer/error.hpp"
#include "ffsteer/learning/dataset.hpp"
#include "ffsteer/learning/kernels.hpp"
#include "ffsteer/plots.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

namespace fs = std::filesystem;
using namespace ffsteer;
using harness::RunConfig;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

// Raised when a run completes but the outcome should fail the command
// (closed-loop failure under --strict).
struct RunFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string out_path(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); }

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    std::ofstream out(out_path(cfg, name));
    if (!out) throw InvalidInput("cannot write " + out_path(cfg, name));
    return out;
}

int parse_lap(const std::string& text) {
    std::string t = text;
    if (t.rfind("lap", 0) == 0) t = t.substr(3);
    try {
        std::size_t used = 0;
        const int v = std::stoi(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw InvalidInput("bad lap id '" + text + "' (expected e.g. 26 or lap26)");
    }
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    return out;
}

// A collection schedule may repeat or revisit gg values, unlike a sweep grid.
std::vector<double> parse_schedule(const std::string& text) {
    if (text.find(':') != std::string::npos) return harness::parse_grid(text);
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw InvalidInput("bad schedule entry '" + item + "'");
        }
    }
    if (out.empty()) throw InvalidInput("empty schedule");
    return out;
}

harness::TelemetryLog require_telemetry(const RunConfig& cfg) {
    if (cfg.telemetry_file.empty()) throw InvalidInput("--telemetry is required");
    return harness::TelemetryLog::read(cfg.telemetry_file);
}

void write_metric_row(std::ostream& os, const std::string& name, const MetricSet& full, const MetricSet& corner) {
    os << name;
    for (double v : {full.rmse, full.mae, full.fvu, static_cast<double>(full.n), corner.rmse, corner.mae, corner.fvu,
                     static_cast<double>(corner.n)}) {
        os << ',' << csv::format(v);
    }
    os << '\n';
}

void write_telemetry(const RunConfig& cfg, const harness::TelemetryLog& log) {
    log.write(out_path(cfg, "telemetry.csv"));
}

// ------------------------------------------------------------------ commands

int cmd_track_build(RunConfig& cfg, const std::string& segments_file, double spacing) {
    Track track;
    if (segments_file.empty()) {
        TrackBuildOptions opts;
        opts.spacing = spacing;
        track = build_synthetic_track(default_track_segments(), opts);
    } else {
        std::ifstream in(segments_file);
        if (!in) throw InvalidInput("cannot open " + segments_file);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput(segments_file + ": " + e.what());
        }
        std::vector<TrackSegment> segs;
        TrackBuildOptions opts;
        opts.spacing = spacing;
        opts.closed = j.value("closed", true);
        for (const auto& s : j.at("segments")) {
            const std::string kind = s.at("kind").get<std::string>();
            const double len = s.at("length").get<double>();
            if (kind == "straight") segs.push_back(TrackSegment::straight(len));
            else if (kind == "arc") segs.push_back(TrackSegment::arc(len, s.at("curvature").get<double>()));
            else if (kind == "clothoid")
                segs.push_back(TrackSegment::clothoid(len, s.at("curvature").get<double>(),
                                                      s.at("curvature_end").get<double>()));
            else throw InvalidInput("unknown segment kind '" + kind + "'");
        }
        track = build_synthetic_track(segs, opts);
    }
    track.write_csv(out_path(cfg, "track.csv"));
    plots::Figure f;
    f.name = "track";
    f.title = "Track centerline";
    f.xlabel = "x [m]";
    f.ylabel = "y [m]";
    plots::Series s{"centerline", {}, {}, false};
    for (const auto& p : track.points()) {
        s.x.push_back(p.x);
        s.y.push_back(p.y);
    }
    f.series.push_back(std::move(s));
    plots::write_figures({f}, cfg.out_dir);
    std::cout << "track: " << track.points().size() << " points, length " << track.total_length() << " m, turning "
              << total_turning(track) << " rad\n";
    return kOk;
}

int cmd_collect(RunConfig& cfg) {
    const Track track = harness::load_track(cfg);
    const VehicleParams vehicle = harness::load_vehicle(cfg);
    const std::string name = cfg.controllers.empty() ? "baseline" : cfg.controllers.front();
    auto ff = harness::make_controller(name, cfg, vehicle.wheelbase())->clone();
    harness::CollectConfig cc;
    cc.schedule = cfg.schedule;
    cc.test_lap = cfg.test_lap;
    cc.loop = cfg.loop;
    harness::RunReport rep;
    harness::TelemetryLog log;
    try {
        log = harness::collect_dataset(track, vehicle, *ff, cc, &rep);
    } catch (const NotAttainable&) {
        harness::write_report(out_path(cfg, "report.json"), rep);
        throw;
    }
    write_telemetry(cfg, log);
    harness::write_report(out_path(cfg, "report.json"), rep, "telemetry.csv");
    std::cout << "collected " << log.rows.size() << " rows over " << log.lap_ids().size() << " laps\n";
    return kOk;
}

int cmd_fit_ehd(RunConfig& cfg) {
    const VehicleParams vehicle = harness::load_vehicle(cfg);
    const auto log = harness::split_test_lap(require_telemetry(cfg), cfg.test_lap).fit;
    const auto samples = harness::to_ehd_samples(log, vehicle.wheelbase(), cfg.ehd_source);
    const EhdFit fit = fit_ehd(samples, cfg.ehd_min_ay);
    write_ehd_json(out_path(cfg, "ehd.json"), fit);
    std::vector<EhdSample> shown;
    const std::size_t stride = std::max<std::size_t>(1, samples.size() / 3000);
    for (std::size_t i = 0; i < samples.size(); i += stride) {
        if (samples[i].a_y >= 0.0) shown.push_back(samples[i]);
    }
    plots::write_figures({plots::handling_diagram(fit.surface, {20.0, 40.0, 60.0}, 25.0, cfg.baseline.k_ug, shown)},
                         cfg.out_dir);
    std::cout << "ehd: residual rms " << fit.residual_rms << " rad on " << fit.n_samples << " samples\n";
    return kOk;
}

int cmd_train(RunConfig& cfg, const std::string& init_file) {
    const VehicleParams vehicle = harness::load_vehicle(cfg);
    const auto log = harness::split_test_lap(require_telemetry(cfg), cfg.test_lap).fit;
    const auto records = learning::subsample(harness::to_records(log, vehicle.wheelbase()), cfg.record_stride);
    const auto split = learning::split_contiguous(records, cfg.val_fraction);
    std::shared_ptr<learning::Model> model;
    learning::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    learning::TrainHistory hist;
    if (!init_file.empty()) {
        model = learning::load_model(init_file);
        cfg.model_kind = model->kind();
        hist = learning::finetune(*model, split.train, split.validation, tc);
    } else {
        model = harness::make_model(cfg.model_kind, cfg);
        model->init(cfg.seed);
        hist = learning::train(*model, split.train, split.validation, tc);
    }
    learning::save_model(out_path(cfg, model->kind() + ".json"), *model);
    auto os = open_out(cfg, "history.csv");
    os << "epoch,train_loss,val_loss\n";
    for (std::size_t i = 0; i < hist.train_loss.size(); ++i) {
        os << i + 1 << ',' << csv::format(hist.train_loss[i]) << ',' << csv::format(hist.val_loss[i]) << '\n';
    }
    plots::Figure f;
    f.name = "history_" + model->kind();
    f.title = "Training loss (" + model->kind() + ")";
    f.xlabel = "epoch";
    f.ylabel = "mse [rad^2]";
    plots::Series tr{"train", {}, hist.train_loss, false}, va{"validation", {}, hist.val_loss, false};
    for (std::size_t i = 0; i < hist.train_loss.size(); ++i) {
        tr.x.push_back(static_cast<double>(i + 1));
        va.x.push_back(static_cast<double>(i + 1));
    }
    f.series = {tr, va};
    plots::write_figures({f}, cfg.out_dir);
    std::cout << model->kind() << ": " << split.train.size() << " train / " << split.validation.size()
              << " validation records, best epoch " << hist.best_epoch << ", validation rmse "
              << std::sqrt(hist.best_val_loss) << " rad (kernels: " << kernels::isa_name(kernels::active_isa())
              << ")\n";
    return kOk;
}

int cmd_eval_open(RunConfig& cfg) {
    const VehicleParams vehicle = harness::load_vehicle(cfg);
    const auto test = harness::split_test_lap(require_telemetry(cfg), cfg.test_lap).test;
    if (test.rows.empty()) throw InvalidInput("telemetry has no lap " + std::to_string(cfg.test_lap));
    std::vector<std::unique_ptr<Feedforward>> owned;
    std::vector<Feedforward*> ffs;
    for (const auto& name : harness::expand_controllers(cfg.controllers)) {
        owned.push_back(harness::make_controller(name, cfg, vehicle.wheelbase())->clone());
        ffs.push_back(owned.back().get());
    }
    const auto results = harness::eval_open_loop(ffs, test);
    auto os = open_out(cfg, "open_loop_metrics.csv");
    os << "model,rmse,mae,fvu,n,corner_rmse,corner_mae,corner_fvu,corner_n\n";
    for (const auto& r : results) write_metric_row(os, r.controller, r.full, r.cornering);
    auto bins = open_out(cfg, "open_loop_ax_bins.csv");
    bins << "model,ax_lo,ax_hi,mean_error,n\n";
    for (const auto& r : results) {
        for (const auto& b : r.ax_bins) {
            bins << r.controller << ',' << csv::format(b.lo) << ',' << csv::format(b.hi) << ','
                 << csv::format(b.mean_error) << ',' << b.n << '\n';
        }
    }
    plots::write_figures({plots::ax_error_profile(results)}, cfg.out_dir);
    for (const auto& r : results) {
        std::cout << r.controller << ": rmse " << r.full.rmse << " mae " << r.full.mae << " fvu " << r.full.fvu << '\n';
    }
    return kOk;
}

int cmd_eval_closed(RunConfig& cfg) {
    const Track track = harness::load_track(cfg);
    const VehicleParams vehicle = harness::load_vehicle(cfg);
    const std::string name = cfg.controllers.empty() ? "baseline" : cfg.controllers.front();
    auto ff = harness::make_controller(name, cfg, vehicle.wheelbase())->clone();
    harness::TelemetryLog log;
    const auto rep = harness::eval_closed_loop(track, vehicle, *ff, cfg.loop, &log);
    write_telemetry(cfg, log);
    harness::write_report(out_path(cfg, "report.json"), rep, "telemetry.csv");
    plots::write_figures(plots::time_series(log, "run"), cfg.out_dir);
    std::cout << name << " at gg " << cfg.loop.gg_scale << ": "
              << (rep.failed ? "FAILED (" + rep.failure_cause + ")" : "completed") << ", mean lap "
              << rep.mean_lap_time() << " s, max |e| " << rep.max_abs_lateral_error << " m\n";
    if (rep.failed && cfg.strict) throw RunFailed("closed-loop run failed");
    return kOk;
}

int cmd_sweep(RunConfig& cfg) {
    const Track track = harness::load_track(cfg);
    const VehicleParams vehicle = harness::load_vehicle(cfg);
    std::vector<harness::NamedController> ctrls;
    for (const auto& name : harness::expand_controllers(cfg.controllers)) {
        ctrls.push_back({name, harness::make_controller(name, cfg, vehicle.wheelbase())});
    }
    const auto sweep = harness::gg_sweep(track, vehicle, ctrls, cfg.gg_grid, cfg.loop, cfg.jobs);
    auto sum = open_out(cfg, "sweep_summary.csv");
    sum << "controller,max_gg,relative_gg,runs\n";
    for (const auto& s : sweep.summary) {
        sum << s.controller << ',' << csv::format(s.max_gg) << ',' << csv::format(s.relative_gg) << ',' << s.runs << '\n';
    }
    auto rep = open_out(cfg, "sweep_reports.csv");
    rep << "controller,gg_scale,feedback,failed,failure_s,mean_lap_time,max_abs_lateral_error,lateral_rmse,lateral_mae,"
           "velocity_rmse,velocity_mae,ay_rmse,ay_mae,lateral_jerk_rms,telemetry_hash\n";
    for (const auto& r : sweep.reports) {
        rep << r.controller;
        for (double v : {r.gg_scale, r.feedback ? 1.0 : 0.0, r.failed ? 1.0 : 0.0, r.failure_s, r.mean_lap_time(),
                         r.max_abs_lateral_error, r.lateral_error.rmse, r.lateral_error.mae, r.velocity_error.rmse,
                         r.velocity_error.mae, r.ay_error.rmse, r.ay_error.mae, r.lateral_jerk_rms}) {
            rep << ',' << csv::format(v);
        }
        rep << ',' << r.telemetry_hash << '\n';
    }
    plots::write_figures(plots::sweep_figures(sweep), cfg.out_dir);
    for (const auto& s : sweep.summary) {
        std::cout << s.controller << ": max gg " << s.max_gg << " (relative " << s.relative_gg << ")\n";
    }
    return kOk;
}

int cmd_finetune(RunConfig& cfg) {
    const Track track = harness::load_track(cfg);
    const VehicleParams vehicle = harness::load_vehicle(cfg);
    harness::FinetuneConfig fc;
    fc.iterations = cfg.finetune_iterations;
    fc.gg_scale = cfg.finetune_gg;
    fc.loop = cfg.loop;
    fc.train = cfg.train;
    fc.train.seed = cfg.seed;
    fc.record_stride = cfg.record_stride;
    std::vector<harness::FinetuneTrace> traces;
    for (const auto& name : harness::expand_controllers(cfg.controllers)) {
        if (name == "ehd") {
            if (cfg.ehd_file.empty()) throw InvalidInput("finetune of ehd needs --ehd");
            const auto log = harness::split_test_lap(require_telemetry(cfg), cfg.test_lap).fit;
            EhdSurface surface = read_ehd_json(cfg.ehd_file).surface;
            traces.push_back(harness::finetune_loop_ehd(
                track, vehicle, surface, harness::to_ehd_samples(log, vehicle.wheelbase(), cfg.ehd_source), fc));
            EhdFit fit;
            fit.surface = surface;
            write_ehd_json(out_path(cfg, "ehd_finetuned.json"), fit);
        } else if (name == "msnn" || name == "lstm") {
            const std::string& path = name == "msnn" ? cfg.msnn_file : cfg.lstm_file;
            if (path.empty()) throw InvalidInput("finetune of " + name + " needs --" + name);
            auto model = learning::load_model(path);
            traces.push_back(harness::finetune_loop(track, vehicle, *model, fc));
            learning::save_model(out_path(cfg, name + "_finetuned.json"), *model);
        } else {
            throw InvalidInput("finetune supports ehd, msnn and lstm, not '" + name + "'");
        }
    }
    auto os = open_out(cfg, "finetune.csv");
    os << "controller,iteration,lap_time,failed,val_loss\n";
    for (const auto& t : traces) {
        for (std::size_t i = 0; i < t.lap_times.size(); ++i) {
            const double vl = i >= 1 && i - 1 < t.val_loss.size() ? t.val_loss[i - 1] : 0.0;
            os << t.controller << ',' << i << ',' << csv::format(t.lap_times[i]) << ',' << (t.failed[i] ? 1 : 0) << ','
               << csv::format(vl) << '\n';
        }
        auto show = [&](std::size_t i) {
            return t.failed[i] ? std::string("failed") : std::to_string(t.lap_times[i]) + " s";
        };
        std::cout << t.controller << ": lap time " << show(0) << " -> " << show(t.lap_times.size() - 1) << '\n';
    }
    plots::write_figures({plots::finetune_figure(traces)}, cfg.out_dir);
    return kOk;
}

int cmd_report(RunConfig& cfg, const std::vector<std::string>& inputs) {
    std::size_t n = 0;
    for (const auto& dir : inputs) n += plots::render_plot_data(dir, cfg.out_dir).size();
    std::cout << "rendered " << n << " figures\n";
    return kOk;
}

int cmd_importance(RunConfig& cfg, const std::string& model_file) {
    const VehicleParams vehicle = harness::load_vehicle(cfg);
    if (model_file.empty()) throw InvalidInput("--model is required");
    const auto model = learning::load_model(model_file);
    const auto log = require_telemetry(cfg);
    const auto test = cfg.test_lap >= 0 ? log.laps({cfg.test_lap}) : log;
    const auto records = harness::to_records(test, vehicle.wheelbase());
    const auto imp = learning::permutation_importance(*model, records, cfg.importance_samples, cfg.seed);
    auto os = open_out(cfg, "importance.csv");
    os << "channel,step,offset_s,importance\n";
    const char* names[] = {"v_x", "a_x", "a_y"};
    for (int c = 0; c < 3; ++c) {
        for (int k = 0; k < imp.horizon; ++k) {
            os << names[c] << ',' << k << ',' << csv::format(k * cfg.loop.controller_dt) << ','
               << csv::format(imp.by_step[c][k]) << '\n';
        }
    }
    if (imp.has_rho) os << "rho,0,0," << csv::format(imp.rho) << '\n';

    std::vector<double> delta, ay;
    for (const auto& r : test.rows) {
        delta.push_back(r.delta);
        ay.push_back(r.ay_meas);
    }
    const auto xc = xcorr_lag(delta, ay, cfg.loop.controller_dt, cfg.xcorr_max_lag);
    auto xs = open_out(cfg, "xcorr.csv");
    xs << "lag_s,correlation\n";
    for (std::size_t i = 0; i < xc.lags.size(); ++i) xs << csv::format(xc.lags[i]) << ',' << csv::format(xc.correlation[i]) << '\n';
    plots::write_figures({plots::importance_heatmap(model->kind(), imp, cfg.loop.controller_dt),
                          plots::xcorr_figure(xc, "Measured steering vs lateral acceleration")},
                         cfg.out_dir);
    std::cout << "a_y lags steering by " << xc.lag_at_peak << " s (peak " << xc.peak << ")\n";
    return kOk;
}

// --------------------------------------------------------------------- flags

std::string find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--config") == 0 && i + 1 < argc) return argv[i + 1];
        if (std::strncmp(argv[i], "--config=", 9) == 0) return argv[i] + 9;
    }
    return {};
}

void add_common(CLI::App* sub, RunConfig& cfg, std::string& config_file) {
    sub->add_option("--config", config_file, "Resolved config from a previous run");
    sub->add_option("--out", cfg.out_dir, "Output directory");
    sub->add_option("--track", cfg.track_file, "Track centerline CSV (default layout when empty)");
    sub->add_option("--vehicle", cfg.vehicle_file, "Vehicle parameter JSON (defaults when empty)");
    sub->add_option("--seed", cfg.seed, "Seed for initialisation, shuffling and permutation")->capture_default_str();
}

void add_loop(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--gg", cfg.loop.gg_scale, "GG scale")->capture_default_str();
    sub->add_flag("--feedback,!--no-feedback", cfg.loop.feedback, "Enable the feedback steering loop");
    sub->add_option("--warmup-laps", cfg.loop.warmup_laps)->capture_default_str();
    sub->add_option("--timed-laps", cfg.loop.timed_laps)->capture_default_str();
    sub->add_option("--controller-dt", cfg.loop.controller_dt)->capture_default_str();
    sub->add_option("--substeps", cfg.loop.plant_substeps, "Plant steps per controller step")->capture_default_str();
    sub->add_option("--preview", cfg.loop.targets.preview_time, "Target generator preview [s]")->capture_default_str();
}

void add_models(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--ehd", cfg.ehd_file, "Fitted EHD surface JSON");
    sub->add_option("--msnn", cfg.msnn_file, "Trained MS-NN JSON");
    sub->add_option("--lstm", cfg.lstm_file, "Trained LSTM JSON");
}

void add_train(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--epochs", cfg.train.epochs)->capture_default_str();
    sub->add_option("--batch", cfg.train.batch_size)->capture_default_str();
    sub->add_option("--lr", cfg.train.learning_rate)->capture_default_str();
    sub->add_option("--patience", cfg.train.patience)->capture_default_str();
    sub->add_option("--stride", cfg.record_stride, "Keep every n-th record")->capture_default_str();
    sub->add_option("--val-fraction", cfg.val_fraction)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    const std::string preset = find_config_arg(argc, argv);
    try {
        if (!preset.empty()) cfg = harness::read_run_config(preset);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }

    CLI::App app{"Feedforward steering benchmark"};
    app.require_subcommand(1);
    std::string config_file;
    std::string lap_text = std::to_string(cfg.test_lap);
    std::string controllers_text;
    std::string grid_text;
    std::string schedule_text;
    std::string source_text = cfg.ehd_source == harness::EhdAySource::Target ? "target" : "measured";
    std::string segments_file, init_file, model_file, simd = "auto";
    std::vector<std::string> report_inputs;
    double spacing = 1.0;

    auto* track_build = app.add_subcommand("track-build", "Build a track centerline CSV");
    add_common(track_build, cfg, config_file);
    track_build->add_option("--segments", segments_file, "Segment list JSON (default layout when empty)");
    track_build->add_option("--spacing", spacing, "Resampling distance [m]")->capture_default_str();

    auto* collect = app.add_subcommand("collect", "Drive the ramped gg schedule and log telemetry");
    add_common(collect, cfg, config_file);
    add_loop(collect, cfg);
    add_models(collect, cfg);
    collect->add_option("--controller", controllers_text, "Collecting feedforward (default baseline)");
    collect->add_option("--schedule", schedule_text, "gg per lap, lo:hi:step or comma list");
    collect->add_option("--test-lap", lap_text, "Lap id reserved for testing")->capture_default_str();

    auto* fit = app.add_subcommand("fit-ehd", "Fit the extended handling diagram surface");
    add_common(fit, cfg, config_file);
    fit->add_option("--telemetry", cfg.telemetry_file, "Telemetry CSV")->required(preset.empty());
    fit->add_option("--min-ay", cfg.ehd_min_ay, "Smallest |a_y| used [m/s^2]")->capture_default_str();
    fit->add_option("--ay-source", source_text, "target or measured")->check(CLI::IsMember({"target", "measured"}));
    fit->add_option("--test-lap", lap_text, "Lap excluded from fitting (-1 keeps all)")->capture_default_str();

    auto* train = app.add_subcommand("train", "Train an MS-NN or LSTM on telemetry");
    add_common(train, cfg, config_file);
    add_train(train, cfg);
    train->add_option("--model", cfg.model_kind, "msnn or lstm")->check(CLI::IsMember({"msnn", "lstm"}));
    train->add_option("--telemetry", cfg.telemetry_file, "Telemetry CSV")->required(preset.empty());
    train->add_option("--test-lap", lap_text, "Lap excluded from training (-1 keeps all)")->capture_default_str();
    train->add_option("--init", init_file, "Fine-tune this model instead of training from scratch");
    train->add_option("--simd", simd, "Kernel selection")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    auto* eval_open = app.add_subcommand("eval-open", "Open-loop steering prediction on a test lap");
    add_common(eval_open, cfg, config_file);
    add_models(eval_open, cfg);
    eval_open->add_option("--models", controllers_text, "Comma list or 'all'");
    eval_open->add_option("--telemetry", cfg.telemetry_file, "Telemetry CSV")->required(preset.empty());
    eval_open->add_option("--test-lap", lap_text, "Test lap id, e.g. 26 or lap26")->capture_default_str();

    auto* eval_closed = app.add_subcommand("eval-closed", "Closed-loop laps with one controller");
    add_common(eval_closed, cfg, config_file);
    add_loop(eval_closed, cfg);
    add_models(eval_closed, cfg);
    eval_closed->add_option("--controller", controllers_text, "Feedforward to deploy");
    eval_closed->add_flag("--strict", cfg.strict, "Exit with code 2 when the run fails");

    auto* sweep = app.add_subcommand("sweep", "Closed-loop gg sweep until failure");
    add_common(sweep, cfg, config_file);
    add_loop(sweep, cfg);
    add_models(sweep, cfg);
    sweep->add_option("--controllers", controllers_text, "Comma list or 'all'");
    sweep->add_option("--grid", grid_text, "gg grid, lo:hi:step or comma list");
    sweep->add_option("--jobs", cfg.jobs, "Parallel controllers")->capture_default_str();

    auto* finetune = app.add_subcommand("finetune", "Iterative deploy-and-retrain loop");
    add_common(finetune, cfg, config_file);
    add_loop(finetune, cfg);
    add_models(finetune, cfg);
    add_train(finetune, cfg);
    finetune->add_option("--controllers", controllers_text, "Comma list of ehd, msnn, lstm");
    finetune->add_option("--iterations", cfg.finetune_iterations)->capture_default_str();
    finetune->add_option("--finetune-gg", cfg.finetune_gg, "Deployment gg scale")->capture_default_str();
    finetune->add_option("--telemetry", cfg.telemetry_file, "Original fitting telemetry (needed for ehd)");
    finetune->add_option("--test-lap", lap_text, "Lap excluded from the EHD samples")->capture_default_str();

    auto* report = app.add_subcommand("report", "Re-render plot data from earlier runs");
    add_common(report, cfg, config_file);
    report->add_option("--in", report_inputs, "Directories holding *.plot.json")->required();

    auto* importance = app.add_subcommand("importance", "Permutation importance and steering/a_y lag");
    add_common(importance, cfg, config_file);
    importance->add_option("--model", model_file, "Trained model JSON")->required();
    importance->add_option("--telemetry", cfg.telemetry_file, "Telemetry CSV")->required(preset.empty());
    importance->add_option("--test-lap", lap_text, "Lap used (-1 for all)")->capture_default_str();
    importance->add_option("--samples", cfg.importance_samples)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        cfg.command = command;
        cfg.test_lap = lap_text == "-1" ? -1 : parse_lap(lap_text);
        cfg.ehd_source = source_text == "target" ? harness::EhdAySource::Target : harness::EhdAySource::Measured;
        if (!controllers_text.empty()) cfg.controllers = split_list(controllers_text);
        if (!grid_text.empty()) cfg.gg_grid = harness::parse_grid(grid_text);
        if (!schedule_text.empty()) cfg.schedule = parse_schedule(schedule_text);
        if (command == "sweep" && controllers_text.empty() && preset.empty()) cfg.controllers = {"all"};
        if (command == "eval-open" && controllers_text.empty() && preset.empty()) cfg.controllers = {"baseline", "ehd"};
        if (command == "finetune" && controllers_text.empty() && preset.empty()) cfg.controllers = {"msnn", "lstm"};
        if (cfg.out_dir.empty()) {
            const char* root = std::getenv("FFSTEER_OUT");
            cfg.out_dir = (fs::path(root && *root ? root : "out") / command).string();
        }
        if (simd != "auto") kernels::set_isa(simd == "avx2" ? kernels::Isa::Avx2
                                                                      : kernels::Isa::Scalar);
        fs::create_directories(cfg.out_dir);
        harness::write_run_config(out_path(cfg, "config.json"), cfg);

        if (command == "track-build") return cmd_track_build(cfg, segments_file, spacing);
        if (command == "collect") return cmd_collect(cfg);
        if (command == "fit-ehd") return cmd_fit_ehd(cfg);
        if (command == "train") return cmd_train(cfg, init_file);
        if (command == "eval-open") return cmd_eval_open(cfg);
        if (command == "eval-closed") return cmd_eval_closed(cfg);
        if (command == "sweep") return cmd_sweep(cfg);
        if (command == "finetune") return cmd_finetune(cfg);
        if (command == "report") return cmd_report(cfg, report_inputs);
        if (command == "importance") return cmd_importance(cfg, model_file);
        return kValidation;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const RunFailed& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
