#pragma once

#include <cstddef>

// Dense linear-algebra kernels used by the learned models. Matrices are
// column-major: element (r, c) of a rows x cols matrix lives at a[c * rows + r].
//
// Every kernel has a scalar reference and an optional AVX2 variant with the
// same summation order, so both produce bit-identical results. The dispatched
// entry points pick the variant once at startup; FFSTEER_SIMD=scalar in the
// environment forces the reference path.
namespace ffsteer::kernels {

enum class Isa { Scalar, Avx2 };

Isa active_isa();
/// Overrides the dispatch choice; requesting Avx2 on a machine without it
/// throws InvalidInput.
void set_isa(Isa isa);
bool avx2_available();
const char* isa_name(Isa isa);

/// y[r] += sum_c a(r, c) x[c], accumulated in increasing c.
void gemv(const double* a, int rows, int cols, const double* x, double* y);
/// y[c] += dot(column c, x).
void gemv_t(const double* a, int rows, int cols, const double* x, double* y);
/// a(r, c) += x[r] * (alpha * y[c]).
void ger(double* a, int rows, int cols, double alpha, const double* x, const double* y);
/// Four interleaved partial sums over the leading multiple of 4, combined as
/// (s0 + s1) + (s2 + s3), then the tail added in order.
double dot(const double* a, const double* b, std::size_t n);
/// y[i] += alpha * x[i]
void axpy(std::size_t n, double alpha, const double* x, double* y);

struct AdamStep {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double bias1 = 1.0;  // 1 - beta1^t
    double bias2 = 1.0;  // 1 - beta2^t
};
void adam_update(std::size_t n, double* p, double* m, double* v, const double* g, const AdamStep& s);

namespace scalar {
void gemv(const double* a, int rows, int cols, const double* x, double* y);
void gemv_t(const double* a, int rows, int cols, const double* x, double* y);
void ger(double* a, int rows, int cols, double alpha, const double* x, const double* y);
double dot(const double* a, const double* b, std::size_t n);
void axpy(std::size_t n, double alpha, const double* x, double* y);
void adam_update(std::size_t n, double* p, double* m, double* v, const double* g, const AdamStep& s);
}  // namespace scalar

namespace avx2 {
void gemv(const double* a, int rows, int cols, const double* x, double* y);
void gemv_t(const double* a, int rows, int cols, const double* x, double* y);
void ger(double* a, int rows, int cols, double alpha, const double* x, const double* y);
double dot(const double* a, const double* b, std::size_t n);
void axpy(std::size_t n, double alpha, const double* x, double* y);
void adam_update(std::size_t n, double* p, double* m, double* v, const double* g, const AdamStep& s);
}  // namespace avx2

}  // namespace ffsteer::kernels
