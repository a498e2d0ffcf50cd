#include "kernels_impl.hpp"

#if defined(KTNZ_HAVE_NEON_BUILD)

#include <arm_neon.h>
#include <cstring>

// NEON variants, 2 doubles per lane. Same accumulation-order discipline as
// the AVX2 file: mul+add, never fused, so output is bit-identical to scalar.
namespace ktnz::kernels::detail {

namespace {

void matmul_neon(double* c, const double* a, const double* b,
                 std::size_t m, std::size_t k, std::size_t n) {
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* c_row = c + i * n;
        const double* a_row = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double a_ik = a_row[kk];
            const double* b_row = b + kk * n;
            const float64x2_t a_vec = vdupq_n_f64(a_ik);
            std::size_t j = 0;
            for (; j + 2 <= n; j += 2) {
                float64x2_t b_vec = vld1q_f64(b_row + j);
                float64x2_t c_vec = vld1q_f64(c_row + j);
                c_vec = vaddq_f64(c_vec, vmulq_f64(a_vec, b_vec));
                vst1q_f64(c_row + j, c_vec);
            }
            for (; j < n; ++j) {
                c_row[j] += a_ik * b_row[j];
            }
        }
    }
}

void hadamard_neon(double* out, const double* a, const double* b,
                   std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void relu_neon(double* out, const double* in, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t v = vld1q_f64(in + i);
        uint64x2_t mask = vcgtq_f64(v, zero);
        vst1q_f64(out + i, vreinterpretq_f64_u64(
                               vandq_u64(mask, vreinterpretq_u64_f64(v))));
    }
    for (; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void scale_neon(double* out, const double* in, double alpha, std::size_t n) {
    const float64x2_t a_vec = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vmulq_f64(a_vec, vld1q_f64(in + i)));
    }
    for (; i < n; ++i) out[i] = alpha * in[i];
}

void axpy_neon(double* y, double alpha, const double* x, std::size_t n) {
    const float64x2_t a_vec = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t y_vec = vld1q_f64(y + i);
        y_vec = vaddq_f64(y_vec, vmulq_f64(a_vec, vld1q_f64(x + i)));
        vst1q_f64(y + i, y_vec);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace

const KernelTable& neon_table() {
    static const KernelTable table{
        matmul_neon, hadamard_neon, relu_neon, scale_neon, axpy_neon,
    };
    return table;
}

} // namespace ktnz::kernels::detail

#endif // KTNZ_HAVE_NEON_BUILD
