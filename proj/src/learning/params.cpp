#include "ffsteer/learning/params.hpp"

#include "ffsteer/error.hpp"
#include "ffsteer/learning/kernels.hpp"

#include <cmath>

namespace ffsteer::learning {

std::size_t ParamSet::add(const std::string& name, int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw InvalidInput("parameter block '" + name + "' has empty shape");
    for (const auto& b : blocks_) {
        if (b.name == name) throw InvalidInput("duplicate parameter block '" + name + "'");
    }
    ParamBlock b{name, values.size(), rows, cols};
    values.resize(values.size() + b.size(), 0.0);
    blocks_.push_back(b);
    return b.offset;
}

const ParamBlock& ParamSet::block(const std::string& name) const {
    for (const auto& b : blocks_) {
        if (b.name == name) return b;
    }
    throw InvalidInput("no parameter block named '" + name + "'");
}

void ParamSet::fill_uniform(const std::string& name, double scale, std::mt19937_64& rng) {
    const auto& b = block(name);
    for (std::size_t i = 0; i < b.size(); ++i) values[b.offset + i] = scale * (2.0 * uniform01(rng) - 1.0);
}

void ParamSet::fill(const std::string& name, double value) {
    const auto& b = block(name);
    for (std::size_t i = 0; i < b.size(); ++i) values[b.offset + i] = value;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Adam::Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw InvalidInput("Adam: size mismatch");
    ++t_;
    kernels::AdamStep s;
    s.lr = lr;
    s.beta1 = cfg_.beta1;
    s.beta2 = cfg_.beta2;
    s.eps = cfg_.eps;
    s.bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    s.bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    kernels::adam_update(params.size(), params.data(), m_.data(), v_.data(), grad.data(), s);
}

}  // namespace ffsteer::learning
