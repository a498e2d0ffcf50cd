#include "ktnz/kernels.hpp"

#include <atomic>

#include "kernels_impl.hpp"
#include "ktnz/errors.hpp"

namespace ktnz::kernels {

namespace {

using detail::KernelTable;

std::atomic<std::uint64_t> g_multiplies{0};

bool cpu_has_avx2() {
#if defined(KTNZ_HAVE_AVX2_BUILD)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

bool cpu_has_neon() {
#if defined(KTNZ_HAVE_NEON_BUILD)
    return true; // baseline on aarch64
#else
    return false;
#endif
}

Backend pick_default() {
    if (cpu_has_avx2()) return Backend::Avx2;
    if (cpu_has_neon()) return Backend::Neon;
    return Backend::Scalar;
}

struct State {
    Backend backend = pick_default();
    const KernelTable* table = nullptr;

    State() { bind(); }

    void bind() {
        switch (backend) {
        case Backend::Scalar:
            table = &detail::scalar_table();
            break;
        case Backend::Avx2:
#if defined(KTNZ_HAVE_AVX2_BUILD)
            table = &detail::avx2_table();
            break;
#else
            fail(ErrorCode::Unsupported, "AVX2 backend not built");
#endif
        case Backend::Neon:
#if defined(KTNZ_HAVE_NEON_BUILD)
            table = &detail::neon_table();
            break;
#else
            fail(ErrorCode::Unsupported, "NEON backend not built");
#endif
        }
    }
};

State& state() {
    static State s;
    return s;
}

} // namespace

const char* backend_name(Backend b) {
    switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
    }
    return "?";
}

Backend active_backend() { return state().backend; }

bool backend_available(Backend b) {
    switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return cpu_has_avx2();
    case Backend::Neon: return cpu_has_neon();
    }
    return false;
}

void set_backend(Backend b) {
    if (!backend_available(b)) {
        fail(ErrorCode::Unsupported,
             std::string("backend not available on this CPU: ") +
                 backend_name(b));
    }
    state().backend = b;
    state().bind();
}

void matmul(double* c, const double* a, const double* b,
            std::size_t m, std::size_t k, std::size_t n) {
    g_multiplies.fetch_add(static_cast<std::uint64_t>(m) * k * n,
                           std::memory_order_relaxed);
    state().table->matmul(c, a, b, m, k, n);
}

void hadamard(double* out, const double* a, const double* b, std::size_t n) {
    state().table->hadamard(out, a, b, n);
}

void relu(double* out, const double* in, std::size_t n) {
    state().table->relu(out, in, n);
}

void scale(double* out, const double* in, double alpha, std::size_t n) {
    state().table->scale(out, in, alpha, n);
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
    state().table->axpy(y, alpha, x, n);
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sumsq(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

std::uint64_t multiply_count() {
    return g_multiplies.load(std::memory_order_relaxed);
}

void reset_multiply_count() {
    g_multiplies.store(0, std::memory_order_relaxed);
}

} // namespace ktnz::kernels
