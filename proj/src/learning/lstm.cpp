#include "ffsteer/learning/models.hpp"

#include "ffsteer/error.hpp"
#include "ffsteer/learning/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace ffsteer::learning {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

struct LstmModel::Cache {
    int n = 0;
    std::vector<double> x;     // n x 3
    std::vector<double> u;     // n x D
    std::vector<double> gate;  // n x 4H, post-activation
    std::vector<double> c;     // (n + 1) x H, c[0] = 0
    std::vector<double> h;     // (n + 1) x H, h[0] = 0
    std::vector<double> hd;    // H, final hidden state after dropout
};

LstmModel::LstmModel(LstmConfig cfg) : cfg_(cfg) {
    if (cfg_.horizon < 1 || cfg_.input_dim < 1 || cfg_.hidden < 1) throw InvalidInput("LstmConfig: sizes must be positive");
    if (!(cfg_.dropout >= 0.0 && cfg_.dropout < 1.0)) throw InvalidInput("LstmConfig: dropout must lie in [0, 1)");
    const int d = cfg_.input_dim;
    const int h = cfg_.hidden;
    params.add("proj_w", d, 3);
    params.add("proj_b", d, 1);
    params.add("w_x", 4 * h, d);
    params.add("w_h", 4 * h, h);
    params.add("b", 4 * h, 1);
    params.add("out_w", 1, h);
    params.add("out_b", 1, 1);
}

void LstmModel::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int d = cfg_.input_dim;
    const int h = cfg_.hidden;
    params.fill_uniform("proj_w", 1.0 / std::sqrt(3.0), rng);
    params.fill("proj_b", 0.0);
    params.fill_uniform("w_x", 1.0 / std::sqrt(static_cast<double>(d)), rng);
    params.fill_uniform("w_h", 1.0 / std::sqrt(static_cast<double>(h)), rng);
    params.fill("b", 0.0);
    double* b = params.data("b");
    for (int j = h; j < 2 * h; ++j) b[j] = 1.0;  // forget gate starts open
    params.fill_uniform("out_w", 1.0 / std::sqrt(static_cast<double>(h)), rng);
    params.fill("out_b", 0.0);
}

double LstmModel::run(const std::vector<HorizonStep>& horizon, const std::vector<double>* mask, Cache* cache) const {
    if (static_cast<int>(horizon.size()) != cfg_.horizon) {
        throw InvalidInput("LSTM expects a horizon of " + std::to_string(cfg_.horizon) + " steps, got " +
                           std::to_string(horizon.size()));
    }
    const int n = cfg_.horizon;
    const int d = cfg_.input_dim;
    const int hs = cfg_.hidden;
    const int g4 = 4 * hs;
    const double* proj_w = params.data("proj_w");
    const double* proj_b = params.data("proj_b");
    const double* w_x = params.data("w_x");
    const double* w_h = params.data("w_h");
    const double* b = params.data("b");

    Cache local;
    Cache& k = cache ? *cache : local;
    k.n = n;
    k.x.assign(static_cast<std::size_t>(n) * 3, 0.0);
    k.u.assign(static_cast<std::size_t>(n) * d, 0.0);
    k.gate.assign(static_cast<std::size_t>(n) * g4, 0.0);
    k.c.assign(static_cast<std::size_t>(n + 1) * hs, 0.0);
    k.h.assign(static_cast<std::size_t>(n + 1) * hs, 0.0);

    for (int t = 0; t < n; ++t) {
        const auto z3 = norm.normalize(horizon[t]);
        double* x = &k.x[static_cast<std::size_t>(t) * 3];
        for (int c = 0; c < 3; ++c) x[c] = z3[c];
        double* u = &k.u[static_cast<std::size_t>(t) * d];
        for (int j = 0; j < d; ++j) u[j] = proj_b[j];
        kernels::gemv(proj_w, d, 3, x, u);

        double* z = &k.gate[static_cast<std::size_t>(t) * g4];
        for (int j = 0; j < g4; ++j) z[j] = b[j];
        kernels::gemv(w_x, g4, d, u, z);
        const double* h_prev = &k.h[static_cast<std::size_t>(t) * hs];
        kernels::gemv(w_h, g4, hs, h_prev, z);

        const double* c_prev = &k.c[static_cast<std::size_t>(t) * hs];
        double* c_new = &k.c[static_cast<std::size_t>(t + 1) * hs];
        double* h_new = &k.h[static_cast<std::size_t>(t + 1) * hs];
        for (int j = 0; j < hs; ++j) {
            const double ig = sigmoid(z[j]);
            const double fg = sigmoid(z[hs + j]);
            const double gg = std::tanh(z[2 * hs + j]);
            const double og = sigmoid(z[3 * hs + j]);
            z[j] = ig;
            z[hs + j] = fg;
            z[2 * hs + j] = gg;
            z[3 * hs + j] = og;
            c_new[j] = fg * c_prev[j] + ig * gg;
            h_new[j] = og * std::tanh(c_new[j]);
        }
    }

    const double* h_last = &k.h[static_cast<std::size_t>(n) * hs];
    k.hd.assign(h_last, h_last + hs);
    if (mask) {
        for (int j = 0; j < hs; ++j) k.hd[j] *= (*mask)[j];
    }
    return params.data("out_b")[0] + kernels::dot(params.data("out_w"), k.hd.data(), static_cast<std::size_t>(hs));
}

double LstmModel::forward(const std::vector<HorizonStep>& horizon, double) const {
    return run(horizon, nullptr, nullptr);
}

double LstmModel::loss_and_grad(const Record& r, bool train_mode, std::mt19937_64* rng, double weight,
                                std::vector<double>& grad) const {
    if (grad.size() != params.size()) grad.assign(params.size(), 0.0);
    const int n = cfg_.horizon;
    const int d = cfg_.input_dim;
    const int hs = cfg_.hidden;
    const int g4 = 4 * hs;

    std::vector<double> mask;
    const bool use_dropout = train_mode && cfg_.dropout > 0.0;
    if (use_dropout) {
        if (!rng) throw InvalidInput("LSTM training with dropout needs a random stream");
        const double keep = 1.0 - cfg_.dropout;
        mask.resize(static_cast<std::size_t>(hs));
        for (auto& m : mask) m = uniform01(*rng) < keep ? 1.0 / keep : 0.0;
    }
    Cache k;
    const double y = run(r.horizon, use_dropout ? &mask : nullptr, &k);
    const double target = r.delta_dev_true / norm.target_scale;
    const double err = y - target;
    const double dy = weight * 2.0 * err;

    auto off = [&](const char* name) { return params.block(name).offset; };
    double* g_proj_w = grad.data() + off("proj_w");
    double* g_proj_b = grad.data() + off("proj_b");
    double* g_w_x = grad.data() + off("w_x");
    double* g_w_h = grad.data() + off("w_h");
    double* g_b = grad.data() + off("b");
    double* g_out_w = grad.data() + off("out_w");
    double* g_out_b = grad.data() + off("out_b");
    const double* w_x = params.data("w_x");
    const double* w_h = params.data("w_h");
    const double* out_w = params.data("out_w");

    g_out_b[0] += dy;
    kernels::axpy(static_cast<std::size_t>(hs), dy, k.hd.data(), g_out_w);

    std::vector<double> dh(static_cast<std::size_t>(hs));
    for (int j = 0; j < hs; ++j) dh[j] = dy * out_w[j] * (use_dropout ? mask[j] : 1.0);
    std::vector<double> dc(static_cast<std::size_t>(hs), 0.0);
    std::vector<double> dz(static_cast<std::size_t>(g4));
    std::vector<double> du(static_cast<std::size_t>(d));
    std::vector<double> dh_prev(static_cast<std::size_t>(hs));

    for (int t = n - 1; t >= 0; --t) {
        const double* gate = &k.gate[static_cast<std::size_t>(t) * g4];
        const double* c_prev = &k.c[static_cast<std::size_t>(t) * hs];
        const double* c_now = &k.c[static_cast<std::size_t>(t + 1) * hs];
        const double* h_prev = &k.h[static_cast<std::size_t>(t) * hs];
        for (int j = 0; j < hs; ++j) {
            const double ig = gate[j];
            const double fg = gate[hs + j];
            const double gg = gate[2 * hs + j];
            const double og = gate[3 * hs + j];
            const double tc = std::tanh(c_now[j]);
            const double d_o = dh[j] * tc;
            const double d_c = dc[j] + dh[j] * og * (1.0 - tc * tc);
            dz[j] = d_c * gg * ig * (1.0 - ig);
            dz[hs + j] = d_c * c_prev[j] * fg * (1.0 - fg);
            dz[2 * hs + j] = d_c * ig * (1.0 - gg * gg);
            dz[3 * hs + j] = d_o * og * (1.0 - og);
            dc[j] = d_c * fg;
        }
        kernels::axpy(static_cast<std::size_t>(g4), 1.0, dz.data(), g_b);
        const double* u = &k.u[static_cast<std::size_t>(t) * d];
        kernels::ger(g_w_x, g4, d, 1.0, dz.data(), u);
        kernels::ger(g_w_h, g4, hs, 1.0, dz.data(), h_prev);
        std::fill(du.begin(), du.end(), 0.0);
        kernels::gemv_t(w_x, g4, d, dz.data(), du.data());
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        kernels::gemv_t(w_h, g4, hs, dz.data(), dh_prev.data());
        const double* x = &k.x[static_cast<std::size_t>(t) * 3];
        kernels::ger(g_proj_w, d, 3, 1.0, du.data(), x);
        kernels::axpy(static_cast<std::size_t>(d), 1.0, du.data(), g_proj_b);
        dh.swap(dh_prev);
    }
    return err * err;
}

}  // namespace ffsteer::learning
