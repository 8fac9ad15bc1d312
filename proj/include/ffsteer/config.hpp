#pragma once

#include "ffsteer/harness.hpp"
#include "ffsteer/learning/models.hpp"
#include "ffsteer/learning/train.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ffsteer::harness {

/// Everything a CLI command needs to reproduce a run. Paths are taken as
/// given; empty track/vehicle files select the built-in defaults.
struct RunConfig {
    std::string command;  // informational, echoed with the config
    std::string track_file;
    std::string vehicle_file;
    std::string telemetry_file;
    std::string out_dir;

    std::vector<std::string> controllers{"baseline"};
    BaselineParams baseline = BaselineParams::tuned();
    std::string ehd_file;
    std::string msnn_file;
    std::string lstm_file;

    ClosedLoopConfig loop;
    std::vector<double> gg_grid{0.5};
    bool strict = false;  // closed-loop failure becomes a non-zero exit
    int jobs = 1;

    std::vector<double> schedule = ramp_schedule(26, 0.55, 0.95, {0.75});
    int test_lap = 26;

    double ehd_min_ay = 1.0;
    EhdAySource ehd_source = EhdAySource::Target;

    std::string model_kind = "msnn";
    learning::LstmConfig lstm;
    learning::MsnnConfig msnn;
    learning::TrainConfig train;
    int record_stride = 1;
    double val_fraction = 0.2;

    int finetune_iterations = 4;
    double finetune_gg = 0.85;

    std::size_t importance_samples = 2000;
    double xcorr_max_lag = 0.5;  // [s]

    std::uint64_t seed = 1;

    /// Plant integration step implied by the controller rate and substeps.
    double plant_dt() const { return loop.controller_dt / loop.plant_substeps; }
};

/// Full JSON with every field, defaults included.
std::string to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown keys throw InvalidInput.
RunConfig run_config_from_json(const std::string& text);
RunConfig read_run_config(const std::string& path);
void write_run_config(const std::string& path, const RunConfig& cfg);

std::string to_json(const RunReport& report, const std::string& telemetry_file = "");
void write_report(const std::string& path, const RunReport& report, const std::string& telemetry_file = "");

Track load_track(const RunConfig& cfg);
VehicleParams load_vehicle(const RunConfig& cfg);

/// Instantiates a named controller ("baseline", "ehd", "msnn", "lstm",
/// "kinematic") from the parameter files in the config.
std::shared_ptr<const Feedforward> make_controller(const std::string& name, const RunConfig& cfg,
                                                   double wheelbase);
std::shared_ptr<learning::Model> make_model(const std::string& kind, const RunConfig& cfg);

/// "all" expands to the four benchmarked controllers.
std::vector<std::string> expand_controllers(const std::vector<std::string>& names);

}  // namespace ffsteer::harness
