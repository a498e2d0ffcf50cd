#pragma once

#include <cstddef>
#include <cstdint>

// Low-level arithmetic kernels behind the tensor engine. Each kernel has a
// scalar reference implementation plus SIMD variants (AVX2 on x86-64, NEON on
// aarch64) selected at runtime. The SIMD variants vectorize only lanes whose
// per-element accumulation order matches the scalar loop, so every backend
// produces bit-identical output; the equivalence tests assert exactly that.
//
// matmul accumulates in ikj order (fixed inner loop, no FMA); reductions
// (dot, sumsq) are deliberately scalar-only so their summation order is the
// canonical sequential one everywhere.
namespace ktnz::kernels {

enum class Backend {
    Scalar,
    Avx2,
    Neon,
};

const char* backend_name(Backend b);

/// Backend chosen at startup (best available), unless overridden.
Backend active_backend();

bool backend_available(Backend b);

/// Force a backend; throws Unsupported if this CPU cannot run it.
void set_backend(Backend b);

/// c (m x n) = a (m x k) * b (k x n), all row-major. c is overwritten.
void matmul(double* c, const double* a, const double* b,
            std::size_t m, std::size_t k, std::size_t n);

/// out[i] = a[i] * b[i]
void hadamard(double* out, const double* a, const double* b, std::size_t n);

/// out[i] = max(0, in[i])
void relu(double* out, const double* in, std::size_t n);

/// out[i] = alpha * in[i]
void scale(double* out, const double* in, double alpha, std::size_t n);

/// y[i] += alpha * x[i]
void axpy(double* y, double alpha, const double* x, std::size_t n);

/// Sequential-order reductions (scalar on every backend).
double dot(const double* a, const double* b, std::size_t n);
double sumsq(const double* a, std::size_t n);

/// Multiply tally for the contraction engine: matmul adds m*k*n per call,
/// matching its exact loop trip count on every backend.
std::uint64_t multiply_count();
void reset_multiply_count();

} // namespace ktnz::kernels
