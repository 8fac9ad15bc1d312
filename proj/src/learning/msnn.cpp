#include "ffsteer/learning/models.hpp"

#include "ffsteer/error.hpp"
#include "ffsteer/learning/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace ffsteer::learning {

namespace {

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Memberships of x in regions separated by sorted boundaries; differences of
// logistic ramps.
void ramp_memberships(double x, const std::vector<double>& bounds, double width, std::vector<double>& out) {
    const std::size_t r = bounds.size() + 1;
    out.assign(r, 0.0);
    if (r == 1) {
        out[0] = 1.0;
        return;
    }
    std::vector<double> s(bounds.size());
    for (std::size_t k = 0; k < bounds.size(); ++k) s[k] = logistic((x - bounds[k]) / width);
    out[0] = 1.0 - s[0];
    for (std::size_t k = 1; k + 1 < r; ++k) out[k] = s[k - 1] - s[k];
    out[r - 1] = s.back();
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return v[lo] + f * (v[hi] - v[lo]);
}

}  // namespace

MsnnModel::MsnnModel(MsnnConfig cfg) : cfg_(cfg) {
    if (cfg_.horizon < 1 || cfg_.hidden < 1 || cfg_.regions_ay < 1 || cfg_.regions_ax < 1 || cfg_.regions_vx < 1) {
        throw InvalidInput("MsnnConfig: sizes must be positive");
    }
    if (!(cfg_.ramp_width > 0.0)) throw InvalidInput("MsnnConfig: ramp_width must be positive");
    const int g = regions();
    const int in = 3 * cfg_.horizon + 1;
    params.add("c1", g, 1);
    params.add("c3", g, 1);
    params.add("w1", cfg_.hidden, in);
    params.add("b1", cfg_.hidden, 1);
    params.add("w2", cfg_.hidden, cfg_.hidden);
    params.add("b2", cfg_.hidden, 1);
    params.add("w3", 1, cfg_.hidden);
    params.add("b3", 1, 1);
    // Evenly spread defaults until fit_normalizer sees data.
    const int counts[3] = {cfg_.regions_ay, cfg_.regions_ax, cfg_.regions_vx};
    for (int dim = 0; dim < 3; ++dim) {
        for (int k = 1; k < counts[dim]; ++k) {
            boundaries[dim].push_back(-1.0 + 2.0 * static_cast<double>(k) / counts[dim] + (dim == 0 ? 1.0 : 0.0));
        }
    }
}

void MsnnModel::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int in = 3 * cfg_.horizon + 1;
    params.fill("c1", 0.0);
    params.fill("c3", 0.0);
    params.fill_uniform("w1", 1.0 / std::sqrt(static_cast<double>(in)), rng);
    params.fill("b1", 0.0);
    params.fill_uniform("w2", 1.0 / std::sqrt(static_cast<double>(cfg_.hidden)), rng);
    params.fill("b2", 0.0);
    if (cfg_.transient) {
        params.fill_uniform("w3", 0.1 / std::sqrt(static_cast<double>(cfg_.hidden)), rng);
    } else {
        params.fill("w3", 0.0);
    }
    params.fill("b3", 0.0);
}

std::array<double, 3> MsnnModel::gating_coords(double a_y, double a_x, double v_x) const {
    return {std::abs(a_y) / norm.a_y_scale, (a_x - norm.mean[1]) / norm.stddev[1],
            (v_x - norm.mean[0]) / norm.stddev[0]};
}

void MsnnModel::fit_normalizer(const std::vector<Record>& train) {
    Model::fit_normalizer(train);
    const int counts[3] = {cfg_.regions_ay, cfg_.regions_ax, cfg_.regions_vx};
    std::array<std::vector<double>, 3> coords;
    for (const auto& r : train) {
        const auto& h = r.horizon.front();
        const auto c = gating_coords(h.a_y, h.a_x, h.v_x);
        for (int dim = 0; dim < 3; ++dim) coords[dim].push_back(c[dim]);
    }
    for (int dim = 0; dim < 3; ++dim) {
        boundaries[dim].clear();
        for (int k = 1; k < counts[dim]; ++k) {
            boundaries[dim].push_back(quantile(coords[dim], static_cast<double>(k) / counts[dim]));
        }
    }
}

std::vector<double> MsnnModel::memberships(double a_y, double a_x, double v_x) const {
    const auto c = gating_coords(a_y, a_x, v_x);
    std::vector<double> m0, m1, m2;
    ramp_memberships(c[0], boundaries[0], cfg_.ramp_width, m0);
    ramp_memberships(c[1], boundaries[1], cfg_.ramp_width, m1);
    ramp_memberships(c[2], boundaries[2], cfg_.ramp_width, m2);
    std::vector<double> m;
    m.reserve(static_cast<std::size_t>(regions()));
    double total = 0.0;
    for (double p0 : m0) {
        for (double p1 : m1) {
            for (double p2 : m2) {
                m.push_back(p0 * p1 * p2);
                total += m.back();
            }
        }
    }
    for (double& v : m) v /= total;
    return m;
}

void MsnnModel::transient_input(const std::vector<HorizonStep>& horizon, double rho, std::vector<double>& x) const {
    x.resize(static_cast<std::size_t>(3 * cfg_.horizon + 1));
    for (int t = 0; t < cfg_.horizon; ++t) {
        const auto z = norm.normalize(horizon[t]);
        for (int c = 0; c < 3; ++c) x[static_cast<std::size_t>(3 * t + c)] = z[c];
    }
    x.back() = rho / norm.rho_scale;
}

double MsnnModel::steady_state(double a_y, double a_x, double v_x) const {
    const auto m = memberships(a_y, a_x, v_x);
    const double a = a_y / norm.a_y_scale;
    const double* c1 = params.data("c1");
    const double* c3 = params.data("c3");
    double out = 0.0;
    for (std::size_t g = 0; g < m.size(); ++g) out += m[g] * (c1[g] * a + c3[g] * a * a * a);
    return out * norm.target_scale;
}

double MsnnModel::forward(const std::vector<HorizonStep>& horizon, double rho) const {
    if (static_cast<int>(horizon.size()) != cfg_.horizon) {
        throw InvalidInput("MS-NN expects a horizon of " + std::to_string(cfg_.horizon) + " steps, got " +
                           std::to_string(horizon.size()));
    }
    const auto& h0 = horizon.front();
    double y = steady_state(h0.a_y, h0.a_x, h0.v_x) / norm.target_scale;
    if (!cfg_.transient) return y;

    const int hs = cfg_.hidden;
    const int in = 3 * cfg_.horizon + 1;
    std::vector<double> x;
    transient_input(horizon, rho, x);
    std::vector<double> h1(params.data("b1"), params.data("b1") + hs);
    kernels::gemv(params.data("w1"), hs, in, x.data(), h1.data());
    for (double& v : h1) v = std::tanh(v);
    std::vector<double> h2(params.data("b2"), params.data("b2") + hs);
    kernels::gemv(params.data("w2"), hs, hs, h1.data(), h2.data());
    for (double& v : h2) v = std::tanh(v);
    y += params.data("b3")[0] + kernels::dot(params.data("w3"), h2.data(), static_cast<std::size_t>(hs));
    return y;
}

double MsnnModel::loss_and_grad(const Record& r, bool, std::mt19937_64*, double weight,
                                std::vector<double>& grad) const {
    if (grad.size() != params.size()) grad.assign(params.size(), 0.0);
    if (static_cast<int>(r.horizon.size()) != cfg_.horizon) {
        throw InvalidInput("MS-NN expects a horizon of " + std::to_string(cfg_.horizon) + " steps");
    }
    const int hs = cfg_.hidden;
    const int in = 3 * cfg_.horizon + 1;
    const auto& h0 = r.horizon.front();
    const auto m = memberships(h0.a_y, h0.a_x, h0.v_x);
    const double a = h0.a_y / norm.a_y_scale;
    const double a3 = a * a * a;
    const double* c1 = params.data("c1");
    const double* c3 = params.data("c3");
    double y = 0.0;
    for (std::size_t g = 0; g < m.size(); ++g) y += m[g] * (c1[g] * a + c3[g] * a3);
    if (!cfg_.transient) {
        const double err = y - r.delta_dev_true / norm.target_scale;
        const double dy = weight * 2.0 * err;
        double* g_c1 = grad.data() + params.block("c1").offset;
        double* g_c3 = grad.data() + params.block("c3").offset;
        for (std::size_t g = 0; g < m.size(); ++g) {
            g_c1[g] += dy * m[g] * a;
            g_c3[g] += dy * m[g] * a3;
        }
        return err * err;
    }

    std::vector<double> x;
    transient_input(r.horizon, r.rho, x);
    std::vector<double> h1(params.data("b1"), params.data("b1") + hs);
    kernels::gemv(params.data("w1"), hs, in, x.data(), h1.data());
    for (double& v : h1) v = std::tanh(v);
    std::vector<double> h2(params.data("b2"), params.data("b2") + hs);
    kernels::gemv(params.data("w2"), hs, hs, h1.data(), h2.data());
    for (double& v : h2) v = std::tanh(v);
    const double* w3 = params.data("w3");
    y += params.data("b3")[0] + kernels::dot(w3, h2.data(), static_cast<std::size_t>(hs));

    const double err = y - r.delta_dev_true / norm.target_scale;
    const double dy = weight * 2.0 * err;
    auto g_at = [&](const char* name) { return grad.data() + params.block(name).offset; };

    double* g_c1 = g_at("c1");
    double* g_c3 = g_at("c3");
    for (std::size_t g = 0; g < m.size(); ++g) {
        g_c1[g] += dy * m[g] * a;
        g_c3[g] += dy * m[g] * a3;
    }
    g_at("b3")[0] += dy;
    kernels::axpy(static_cast<std::size_t>(hs), dy, h2.data(), g_at("w3"));
    std::vector<double> d2(static_cast<std::size_t>(hs));
    for (int j = 0; j < hs; ++j) d2[j] = dy * w3[j] * (1.0 - h2[j] * h2[j]);
    kernels::axpy(static_cast<std::size_t>(hs), 1.0, d2.data(), g_at("b2"));
    kernels::ger(g_at("w2"), hs, hs, 1.0, d2.data(), h1.data());
    std::vector<double> d1(static_cast<std::size_t>(hs), 0.0);
    kernels::gemv_t(params.data("w2"), hs, hs, d2.data(), d1.data());
    for (int j = 0; j < hs; ++j) d1[j] *= (1.0 - h1[j] * h1[j]);
    kernels::axpy(static_cast<std::size_t>(hs), 1.0, d1.data(), g_at("b1"));
    kernels::ger(g_at("w1"), hs, in, 1.0, d1.data(), x.data());
    return err * err;
}

}  // namespace ffsteer::learning
