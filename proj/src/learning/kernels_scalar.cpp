#include "ffsteer/learning/kernels.hpp"

#include <cmath>

namespace ffsteer::kernels::scalar {

void gemv(const double* a, int rows, int cols, const double* x, double* y) {
    for (int c = 0; c < cols; ++c) {
        const double* col = a + static_cast<std::size_t>(c) * rows;
        const double xc = x[c];
        for (int r = 0; r < rows; ++r) y[r] += col[r] * xc;
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < n4; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double s = (s0 + s1) + (s2 + s3);
    for (std::size_t i = n4; i < n; ++i) s += a[i] * b[i];
    return s;
}

void gemv_t(const double* a, int rows, int cols, const double* x, double* y) {
    for (int c = 0; c < cols; ++c) {
        y[c] += dot(a + static_cast<std::size_t>(c) * rows, x, static_cast<std::size_t>(rows));
    }
}

void ger(double* a, int rows, int cols, double alpha, const double* x, const double* y) {
    for (int c = 0; c < cols; ++c) {
        double* col = a + static_cast<std::size_t>(c) * rows;
        const double yc = alpha * y[c];
        for (int r = 0; r < rows; ++r) col[r] += x[r] * yc;
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void adam_update(std::size_t n, double* p, double* m, double* v, const double* g, const AdamStep& s) {
    const double c1 = 1.0 - s.beta1;
    const double c2 = 1.0 - s.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = s.beta1 * m[i] + c1 * g[i];
        v[i] = s.beta2 * v[i] + c2 * (g[i] * g[i]);
        const double mh = m[i] / s.bias1;
        const double vh = v[i] / s.bias2;
        p[i] -= s.lr * mh / (std::sqrt(vh) + s.eps);
    }
}

}  // namespace ffsteer::kernels::scalar
