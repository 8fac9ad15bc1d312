#include "ffsteer/learning/kernels.hpp"

#include "ffsteer/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace ffsteer::kernels {

namespace {

Isa detect() {
    const char* env = std::getenv("FFSTEER_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return Isa::Scalar;
    return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

bool avx2_available() {
#if defined(FFSTEER_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
    if (isa == Isa::Avx2 && !avx2_available()) throw InvalidInput("AVX2 is not available on this machine");
    current().store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void gemv(const double* a, int rows, int cols, const double* x, double* y) {
    if (active_isa() == Isa::Avx2) return avx2::gemv(a, rows, cols, x, y);
    scalar::gemv(a, rows, cols, x, y);
}

void gemv_t(const double* a, int rows, int cols, const double* x, double* y) {
    if (active_isa() == Isa::Avx2) return avx2::gemv_t(a, rows, cols, x, y);
    scalar::gemv_t(a, rows, cols, x, y);
}

void ger(double* a, int rows, int cols, double alpha, const double* x, const double* y) {
    if (active_isa() == Isa::Avx2) return avx2::ger(a, rows, cols, alpha, x, y);
    scalar::ger(a, rows, cols, alpha, x, y);
}

double dot(const double* a, const double* b, std::size_t n) {
    if (active_isa() == Isa::Avx2) return avx2::dot(a, b, n);
    return scalar::dot(a, b, n);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    if (active_isa() == Isa::Avx2) return avx2::axpy(n, alpha, x, y);
    scalar::axpy(n, alpha, x, y);
}

void adam_update(std::size_t n, double* p, double* m, double* v, const double* g, const AdamStep& s) {
    if (active_isa() == Isa::Avx2) return avx2::adam_update(n, p, m, v, g, s);
    scalar::adam_update(n, p, m, v, g, s);
}

}  // namespace ffsteer::kernels
