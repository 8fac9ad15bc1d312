#pragma once

#include "ffsteer/learning/dataset.hpp"
#include "ffsteer/learning/params.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace ffsteer::learning {

/// Common interface of the learned steering-deviation models. Outputs are in
/// units of target_scale internally; predict() returns radians.
class Model {
public:
    virtual ~Model() = default;
    virtual std::string kind() const = 0;
    virtual int horizon_len() const = 0;
    virtual std::unique_ptr<Model> clone() const = 0;

    /// Fresh random parameters.
    virtual void init(std::uint64_t seed) = 0;
    /// Normalisation (and any data-placed structure) from a training split.
    virtual void fit_normalizer(const std::vector<Record>& train) { norm = Normalizer::fit(train); }

    /// Normalised output with dropout off.
    virtual double forward(const std::vector<HorizonStep>& horizon, double rho) const = 0;

    /// Squared error against the normalised target; adds weight * d(loss)/d(params)
    /// to grad. rng drives dropout and may be null when train_mode is off.
    virtual double loss_and_grad(const Record& r, bool train_mode, std::mt19937_64* rng, double weight,
                                 std::vector<double>& grad) const = 0;

    /// Steering deviation in radians.
    double predict(const std::vector<HorizonStep>& horizon, double rho) const {
        return forward(horizon, rho) * norm.target_scale;
    }

    ParamSet params;
    Normalizer norm;
};

struct LstmConfig {
    int horizon = 10;
    int input_dim = 16;
    int hidden = 64;
    double dropout = 0.1;
};

/// Linear input projection, one LSTM layer (gate order i, f, g, o), inverted
/// dropout on the final hidden state and a dense output.
class LstmModel final : public Model {
public:
    explicit LstmModel(LstmConfig cfg = {});
    std::string kind() const override { return "lstm"; }
    int horizon_len() const override { return cfg_.horizon; }
    std::unique_ptr<Model> clone() const override { return std::make_unique<LstmModel>(*this); }
    void init(std::uint64_t seed) override;
    double forward(const std::vector<HorizonStep>& horizon, double rho) const override;
    double loss_and_grad(const Record& r, bool train_mode, std::mt19937_64* rng, double weight,
                         std::vector<double>& grad) const override;
    const LstmConfig& config() const { return cfg_; }

private:
    struct Cache;
    double run(const std::vector<HorizonStep>& horizon, const std::vector<double>* mask, Cache* cache) const;

    LstmConfig cfg_;
};

struct MsnnConfig {
    int horizon = 10;
    int regions_ay = 2;  // over |a_y|
    int regions_ax = 2;
    int regions_vx = 2;
    int hidden = 32;
    double ramp_width = 0.15;  // logistic width in normalised units
    bool transient = true;
};

/// Gated local handling-diagram experts c1 a + c3 a^3 over (|a_y|, a_x, v_x)
/// plus a small dense transient branch on the flattened horizon and rho.
class MsnnModel final : public Model {
public:
    explicit MsnnModel(MsnnConfig cfg = {});
    std::string kind() const override { return "msnn"; }
    int horizon_len() const override { return cfg_.horizon; }
    std::unique_ptr<Model> clone() const override { return std::make_unique<MsnnModel>(*this); }
    void init(std::uint64_t seed) override;
    /// Also places the region boundaries at training-data quantiles.
    void fit_normalizer(const std::vector<Record>& train) override;
    double forward(const std::vector<HorizonStep>& horizon, double rho) const override;
    double loss_and_grad(const Record& r, bool train_mode, std::mt19937_64* rng, double weight,
                         std::vector<double>& grad) const override;

    int regions() const { return cfg_.regions_ay * cfg_.regions_ax * cfg_.regions_vx; }
    /// Region memberships at a raw (a_y, a_x, v_x); they sum to one.
    std::vector<double> memberships(double a_y, double a_x, double v_x) const;
    /// Steady-state part only, in radians.
    double steady_state(double a_y, double a_x, double v_x) const;

    const MsnnConfig& config() const { return cfg_; }
    /// Boundaries per gating dimension, in normalised gating coordinates.
    std::array<std::vector<double>, 3> boundaries;

private:
    std::array<double, 3> gating_coords(double a_y, double a_x, double v_x) const;
    void transient_input(const std::vector<HorizonStep>& horizon, double rho, std::vector<double>& x) const;

    MsnnConfig cfg_;
};

}  // namespace ffsteer::learning
