#include "ffsteer/learning/dataset.hpp"

#include "ffsteer/error.hpp"

#include <algorithm>
#include <cmath>

namespace ffsteer::learning {

double deviation_target(const std::vector<HorizonStep>& horizon, double delta_measured, double wheelbase) {
    if (horizon.empty()) throw InvalidInput("deviation_target: empty horizon");
    const HorizonStep& h0 = horizon.front();
    const double v = std::max(h0.v_x, 1.0);
    return delta_measured - h0.a_y * wheelbase / (v * v);
}

Record make_record(std::vector<HorizonStep> horizon, double rho, double delta_measured, double wheelbase, int lap,
                   double t) {
    Record r;
    r.delta_dev_true = deviation_target(horizon, delta_measured, wheelbase);
    r.horizon = std::move(horizon);
    r.rho = rho;
    r.delta_measured = delta_measured;
    r.lap = lap;
    r.t = t;
    return r;
}

namespace {

double safe_scale(double s) { return (std::isfinite(s) && s > 1e-12) ? s : 1.0; }

}  // namespace

Normalizer Normalizer::fit(const std::vector<Record>& train) {
    if (train.empty()) throw InvalidInput("Normalizer::fit: empty training set");
    Normalizer n;
    std::array<double, 3> sum{}, sq{};
    double count = 0.0;
    double rho2 = 0.0, ay2 = 0.0, tgt2 = 0.0;
    for (const auto& r : train) {
        for (const auto& h : r.horizon) {
            const double v[3] = {h.v_x, h.a_x, h.a_y};
            for (int c = 0; c < 3; ++c) sum[c] += v[c];
            count += 1.0;
        }
        rho2 += r.rho * r.rho;
        ay2 += r.horizon.front().a_y * r.horizon.front().a_y;
        tgt2 += r.delta_dev_true * r.delta_dev_true;
    }
    for (int c = 0; c < 3; ++c) n.mean[c] = sum[c] / count;
    for (const auto& r : train) {
        for (const auto& h : r.horizon) {
            const double v[3] = {h.v_x, h.a_x, h.a_y};
            for (int c = 0; c < 3; ++c) sq[c] += (v[c] - n.mean[c]) * (v[c] - n.mean[c]);
        }
    }
    const double m = static_cast<double>(train.size());
    for (int c = 0; c < 3; ++c) n.stddev[c] = safe_scale(std::sqrt(sq[c] / count));
    n.rho_scale = safe_scale(std::sqrt(rho2 / m));
    n.a_y_scale = safe_scale(std::sqrt(ay2 / m));
    n.target_scale = safe_scale(std::sqrt(tgt2 / m));
    return n;
}

std::array<double, 3> Normalizer::normalize(const HorizonStep& h) const {
    return {(h.v_x - mean[0]) / stddev[0], (h.a_x - mean[1]) / stddev[1], (h.a_y - mean[2]) / stddev[2]};
}

HorizonStep Normalizer::denormalize(const std::array<double, 3>& z) const {
    return {z[0] * stddev[0] + mean[0], z[1] * stddev[1] + mean[1], z[2] * stddev[2] + mean[2]};
}

Split split_contiguous(const std::vector<Record>& records, double val_fraction) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidInput("val_fraction must lie in (0, 1)");
    Split out;
    if (records.empty()) return out;
    std::vector<int> laps;
    for (const auto& r : records) {
        if (laps.empty() || laps.back() != r.lap) {
            if (std::find(laps.begin(), laps.end(), r.lap) == laps.end()) laps.push_back(r.lap);
        }
    }
    const int every = std::max(2, static_cast<int>(std::lround(1.0 / val_fraction)));
    if (laps.size() == 1) {
        const std::size_t cut =
            records.size() - std::max<std::size_t>(1, static_cast<std::size_t>(val_fraction * records.size()));
        out.train.assign(records.begin(), records.begin() + static_cast<long>(cut));
        out.validation.assign(records.begin() + static_cast<long>(cut), records.end());
        return out;
    }
    std::vector<int> held;
    if (static_cast<int>(laps.size()) < every) {
        held.push_back(laps.back());
    } else {
        for (std::size_t i = 0; i < laps.size(); ++i) {
            if (static_cast<int>(i % every) == every - 1) held.push_back(laps[i]);
        }
    }
    for (const auto& r : records) {
        const bool val = std::find(held.begin(), held.end(), r.lap) != held.end();
        (val ? out.validation : out.train).push_back(r);
    }
    return out;
}

std::vector<Record> subsample(const std::vector<Record>& records, int stride) {
    if (stride < 1) throw InvalidInput("subsample: stride must be >= 1");
    std::vector<Record> out;
    out.reserve(records.size() / static_cast<std::size_t>(stride) + 1);
    for (std::size_t i = 0; i < records.size(); i += static_cast<std::size_t>(stride)) out.push_back(records[i]);
    return out;
}

}  // namespace ffsteer::learning
