#include "ffsteer/learning/train.hpp"

#include "ffsteer/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ffsteer::learning {

double mse(const Model& model, const std::vector<Record>& data) {
    if (data.empty()) throw InvalidInput("mse: empty data set");
    double ss = 0.0;
    for (const auto& r : data) {
        const double e = model.predict(r.horizon, r.rho) - r.delta_dev_true;
        ss += e * e;
    }
    return ss / static_cast<double>(data.size());
}

TrainHistory train(Model& model, const std::vector<Record>& train_set, const std::vector<Record>& validation,
                   const TrainConfig& cfg) {
    if (train_set.empty()) throw InvalidInput("train: empty training set");
    if (cfg.batch_size < 1 || cfg.epochs < 0 || cfg.patience < 1 || !(cfg.learning_rate > 0.0)) {
        throw InvalidInput("train: invalid configuration");
    }
    if (!cfg.fine_tune) model.fit_normalizer(train_set);
    const double lr = cfg.fine_tune ? cfg.learning_rate * cfg.fine_tune_lr_scale : cfg.learning_rate;
    const double scale2 = model.norm.target_scale * model.norm.target_scale;
    const std::vector<Record>& monitor = validation.empty() ? train_set : validation;

    TrainHistory hist;
    if (cfg.epochs == 0) return hist;

    std::mt19937_64 rng(cfg.seed);
    Adam opt(model.params.size(), cfg.adam);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(model.params.size());
    std::vector<double> best = model.params.values;
    hist.best_val_loss = mse(model, monitor);
    int since_best = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const double w = 1.0 / static_cast<double>(end - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                batch_loss += model.loss_and_grad(train_set[order[i]], true, &rng, w, grad);
            }
            batch_loss *= w;
            if (!std::isfinite(batch_loss)) {
                throw Diverged("training loss became non-finite in epoch " + std::to_string(epoch));
            }
            opt.step(model.params.values, grad, lr);
            loss_sum += batch_loss;
            ++batches;
        }
        const double val = mse(model, monitor);
        if (!std::isfinite(val)) throw Diverged("validation loss became non-finite in epoch " + std::to_string(epoch));
        hist.train_loss.push_back(loss_sum / batches * scale2);
        hist.val_loss.push_back(val);
        if (val < hist.best_val_loss) {
            hist.best_val_loss = val;
            hist.best_epoch = epoch;
            best = model.params.values;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    model.params.values = best;
    return hist;
}

TrainHistory finetune(Model& model, const std::vector<Record>& train_set, const std::vector<Record>& validation,
                      TrainConfig cfg) {
    cfg.fine_tune = true;
    return train(model, train_set, validation, cfg);
}

Importance permutation_importance(const Model& model, const std::vector<Record>& data, std::size_t n_samples,
                                  std::uint64_t seed) {
    if (data.empty()) throw InvalidInput("permutation_importance: empty data set");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    shuffle(idx, rng);
    idx.resize(std::min(n_samples, data.size()));
    std::vector<Record> subset;
    subset.reserve(idx.size());
    for (std::size_t i : idx) subset.push_back(data[i]);

    std::vector<double> base(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) base[i] = model.predict(subset[i].horizon, subset[i].rho);

    const int n = model.horizon_len();
    Importance imp;
    imp.horizon = n;
    imp.has_rho = model.kind() == "msnn";

    auto score = [&](auto&& get, auto&& set) {
        std::vector<double> values(subset.size());
        for (std::size_t i = 0; i < subset.size(); ++i) values[i] = get(subset[i]);
        std::vector<std::size_t> perm(subset.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        shuffle(perm, rng);
        double acc = 0.0;
        for (std::size_t i = 0; i < subset.size(); ++i) {
            Record r = subset[i];
            set(r, values[perm[i]]);
            acc += std::abs(model.predict(r.horizon, r.rho) - base[i]);
        }
        return acc / static_cast<double>(subset.size());
    };

    for (int c = 0; c < 3; ++c) {
        imp.by_step[c].resize(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) {
            auto field = [c, t](Record& r) -> double& {
                HorizonStep& h = r.horizon[static_cast<std::size_t>(t)];
                return c == 0 ? h.v_x : (c == 1 ? h.a_x : h.a_y);
            };
            imp.by_step[c][static_cast<std::size_t>(t)] =
                score([&](const Record& r) { return field(const_cast<Record&>(r)); },
                      [&](Record& r, double v) { field(r) = v; });
        }
    }
    if (imp.has_rho) {
        imp.rho = score([](const Record& r) { return r.rho; }, [](Record& r, double v) { r.rho = v; });
    }
    return imp;
}

}  // namespace ffsteer::learning
