#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ffsteer::learning {

/// A named rows x cols view into a flat parameter vector, column-major.
struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;
    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

class ParamSet {
public:
    /// Appends a zero-initialised block and returns its offset.
    std::size_t add(const std::string& name, int rows, int cols);

    const ParamBlock& block(const std::string& name) const;
    const std::vector<ParamBlock>& blocks() const { return blocks_; }

    double* data(const std::string& name) { return values.data() + block(name).offset; }
    const double* data(const std::string& name) const { return values.data() + block(name).offset; }
    std::size_t size() const { return values.size(); }

    /// Uniform(-scale, scale) fill of one block.
    void fill_uniform(const std::string& name, double scale, std::mt19937_64& rng);
    void fill(const std::string& name, double value);

    std::vector<double> values;

private:
    std::vector<ParamBlock> blocks_;
};

/// Uniform double in [0, 1) from the top 53 bits; portable across standard
/// libraries, unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng);

/// Fisher-Yates shuffle driven by uniform01, for the same reason.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(v[i - 1], v[j < i ? j : i - 1]);
    }
}

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(std::size_t n, AdamConfig cfg = {});
    void step(std::vector<double>& params, const std::vector<double>& grad, double lr);
    long steps() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

}  // namespace ffsteer::learning
