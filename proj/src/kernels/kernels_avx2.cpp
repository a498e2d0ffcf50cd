#include "kernels_impl.hpp"

#if defined(KTNZ_HAVE_AVX2_BUILD)

#include <cstring>
#include <immintrin.h>

// AVX2 variants. The j lane of matmul is vectorized with mul+add (no FMA):
// each c[i,j] still receives one rounded product per k, in ascending k, so
// results are bit-identical to the scalar reference.
namespace ktnz::kernels::detail {

namespace {

void matmul_avx2(double* c, const double* a, const double* b,
                 std::size_t m, std::size_t k, std::size_t n) {
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* c_row = c + i * n;
        const double* a_row = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double a_ik = a_row[kk];
            const double* b_row = b + kk * n;
            const __m256d a_vec = _mm256_set1_pd(a_ik);
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d b_vec = _mm256_loadu_pd(b_row + j);
                __m256d c_vec = _mm256_loadu_pd(c_row + j);
                c_vec = _mm256_add_pd(c_vec, _mm256_mul_pd(a_vec, b_vec));
                _mm256_storeu_pd(c_row + j, c_vec);
            }
            for (; j < n; ++j) {
                c_row[j] += a_ik * b_row[j];
            }
        }
    }
}

void hadamard_avx2(double* out, const double* a, const double* b,
                   std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                  _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

// Compare-and-mask rather than max: agrees with the scalar ternary on -0.0
// and NaN inputs, where maxpd does not.
void relu_avx2(double* out, const double* in, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(in + i);
        __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, v));
    }
    for (; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void scale_avx2(double* out, const double* in, double alpha, std::size_t n) {
    const __m256d a_vec = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(a_vec, _mm256_loadu_pd(in + i)));
    }
    for (; i < n; ++i) out[i] = alpha * in[i];
}

void axpy_avx2(double* y, double alpha, const double* x, std::size_t n) {
    const __m256d a_vec = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d y_vec = _mm256_loadu_pd(y + i);
        y_vec = _mm256_add_pd(y_vec, _mm256_mul_pd(a_vec, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, y_vec);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        matmul_avx2, hadamard_avx2, relu_avx2, scale_avx2, axpy_avx2,
    };
    return table;
}

} // namespace ktnz::kernels::detail

#endif // KTNZ_HAVE_AVX2_BUILD
