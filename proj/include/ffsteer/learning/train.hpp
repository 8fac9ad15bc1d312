#pragma once

#include "ffsteer/controllers.hpp"
#include "ffsteer/learning/models.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ffsteer::learning {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 256;
    int epochs = 500;
    int patience = 25;  // epochs without validation improvement
    std::uint64_t seed = 1;
    bool fine_tune = false;
    double fine_tune_lr_scale = 0.1;
    AdamConfig adam;
};

struct TrainHistory {
    std::vector<double> train_loss;  // mean over mini-batches [rad^2]
    std::vector<double> val_loss;    // full validation set [rad^2]
    int best_epoch = -1;             // -1 when no epoch ran
    double best_val_loss = 0.0;
};

/// Mean squared error of predict() against delta_dev_true [rad^2].
double mse(const Model& model, const std::vector<Record>& data);

/// Mini-batch Adam on the normalised squared error. Fits the normaliser on
/// train unless cfg.fine_tune is set, keeps the best-validation parameters and
/// throws Diverged on a non-finite loss. An empty validation set tracks the
/// training loss instead.
TrainHistory train(Model& model, const std::vector<Record>& train, const std::vector<Record>& validation,
                   const TrainConfig& cfg);

/// Continues from the current parameters on new data only, with the learning
/// rate scaled by cfg.fine_tune_lr_scale and the normaliser left untouched.
TrainHistory finetune(Model& model, const std::vector<Record>& train, const std::vector<Record>& validation,
                      TrainConfig cfg);

/// Mean absolute change of the prediction when one input feature is permuted
/// across a random subset of the data.
struct Importance {
    int horizon = 0;
    std::vector<double> by_step[3];  // v_x, a_x, a_y; one entry per horizon step [rad]
    double rho = 0.0;
    bool has_rho = false;
};
Importance permutation_importance(const Model& model, const std::vector<Record>& data, std::size_t n_samples,
                                  std::uint64_t seed);

void save_model(const std::string& path, const Model& model);
std::unique_ptr<Model> load_model(const std::string& path);
std::string model_to_json(const Model& model);
std::unique_ptr<Model> model_from_json(const std::string& text);

/// Kinematic steering plus a learned deviation on the controller's horizon.
class LearnedFeedforward final : public Feedforward {
public:
    LearnedFeedforward(std::shared_ptr<const Model> model, double wheelbase)
        : model_(std::move(model)), wheelbase_(wheelbase) {}
    std::string name() const override { return model_->kind(); }
    double steer(const FfInput& in) override { return in.ackermann(wheelbase_) + model_->predict(in.horizon, in.rho); }
    std::unique_ptr<Feedforward> clone() const override { return std::make_unique<LearnedFeedforward>(*this); }
    const Model& model() const { return *model_; }

private:
    std::shared_ptr<const Model> model_;
    double wheelbase_;
};

}  // namespace ffsteer::learning
