#include "ffsteer/learning/kernels.hpp"

#if defined(FFSTEER_BUILD_AVX2)

#include <immintrin.h>

namespace ffsteer::kernels::avx2 {

void gemv(const double* a, int rows, int cols, const double* x, double* y) {
    int r = 0;
    for (; r + 4 <= rows; r += 4) {
        __m256d acc = _mm256_loadu_pd(y + r);
        for (int c = 0; c < cols; ++c) {
            const __m256d col = _mm256_loadu_pd(a + static_cast<std::size_t>(c) * rows + r);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(col, _mm256_set1_pd(x[c])));
        }
        _mm256_storeu_pd(y + r, acc);
    }
    for (; r < rows; ++r) {
        double acc = y[r];
        for (int c = 0; c < cols; ++c) acc += a[static_cast<std::size_t>(c) * rows + r] * x[c];
        y[r] = acc;
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n4; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
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
        const __m256d vy = _mm256_set1_pd(yc);
        int r = 0;
        for (; r + 4 <= rows; r += 4) {
            const __m256d upd = _mm256_mul_pd(_mm256_loadu_pd(x + r), vy);
            _mm256_storeu_pd(col + r, _mm256_add_pd(_mm256_loadu_pd(col + r), upd));
        }
        for (; r < rows; ++r) col[r] += x[r] * yc;
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void adam_update(std::size_t n, double* p, double* m, double* v, const double* g, const AdamStep& s) {
    const __m256d b1 = _mm256_set1_pd(s.beta1);
    const __m256d b2 = _mm256_set1_pd(s.beta2);
    const __m256d c1 = _mm256_set1_pd(1.0 - s.beta1);
    const __m256d c2 = _mm256_set1_pd(1.0 - s.beta2);
    const __m256d bias1 = _mm256_set1_pd(s.bias1);
    const __m256d bias2 = _mm256_set1_pd(s.bias2);
    const __m256d lr = _mm256_set1_pd(s.lr);
    const __m256d eps = _mm256_set1_pd(s.eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, gi));
        const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                         _mm256_mul_pd(c2, _mm256_mul_pd(gi, gi)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d mh = _mm256_div_pd(mi, bias1);
        const __m256d vh = _mm256_div_pd(vi, bias2);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, mh), _mm256_add_pd(_mm256_sqrt_pd(vh), eps));
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    if (i < n) scalar::adam_update(n - i, p + i, m + i, v + i, g + i, s);
}

}  // namespace ffsteer::kernels::avx2

#else

#include "ffsteer/error.hpp"

namespace ffsteer::kernels::avx2 {

[[noreturn]] static void missing() { throw InvalidInput("AVX2 kernels were not compiled in"); }

void gemv(const double*, int, int, const double*, double*) { missing(); }
void gemv_t(const double*, int, int, const double*, double*) { missing(); }
void ger(double*, int, int, double, const double*, const double*) { missing(); }
double dot(const double*, const double*, std::size_t) { missing(); }
void axpy(std::size_t, double, const double*, double*) { missing(); }
void adam_update(std::size_t, double*, double*, double*, const double*, const AdamStep&) { missing(); }

}  // namespace ffsteer::kernels::avx2

#endif
