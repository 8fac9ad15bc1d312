#pragma once

#include "ffsteer/planner.hpp"

#include <array>
#include <vector>

namespace ffsteer::learning {

/// One training example: the target horizon seen by the controller and the
/// steering deviation the plant actually needed.
struct Record {
    std::vector<HorizonStep> horizon;  // (v_x, a_x, a_y) per step
    double rho = 0.0;                  // [1/m]
    double delta_dev_true = 0.0;       // [rad]
    double delta_measured = 0.0;       // [rad]
    int lap = 0;
    double t = 0.0;
};

/// delta - a_y l / v_x^2 using the first horizon step.
double deviation_target(const std::vector<HorizonStep>& horizon, double delta_measured, double wheelbase);

/// Builds a record and fills delta_dev_true from the first horizon step.
Record make_record(std::vector<HorizonStep> horizon, double rho, double delta_measured, double wheelbase,
                   int lap = 0, double t = 0.0);

/// Input and target scaling, computed on a training split only. Horizon
/// channels are centred and scaled; rho, the signed a_y used by the MS-NN
/// experts and the target are scaled only, which keeps odd structure odd.
struct Normalizer {
    std::array<double, 3> mean{0.0, 0.0, 0.0};  // v_x, a_x, a_y
    std::array<double, 3> stddev{1.0, 1.0, 1.0};
    double rho_scale = 1.0;
    double a_y_scale = 1.0;
    double target_scale = 1.0;

    static Normalizer fit(const std::vector<Record>& train);
    std::array<double, 3> normalize(const HorizonStep& h) const;
    HorizonStep denormalize(const std::array<double, 3>& z) const;
};

struct Split {
    std::vector<Record> train;
    std::vector<Record> validation;
};

/// Splits by whole laps: every round(1/val_fraction)-th lap (in order of
/// appearance) goes to validation. With fewer laps than that the last lap is
/// held out, and a single-lap set falls back to its trailing block.
Split split_contiguous(const std::vector<Record>& records, double val_fraction = 0.2);

/// Keeps every stride-th record.
std::vector<Record> subsample(const std::vector<Record>& records, int stride);

}  // namespace ffsteer::learning
