#include "kernels_impl.hpp"

#include <cstring>

namespace ktnz::kernels::detail {

namespace {

// Reference matmul, ikj order: every c[i,j] accumulates contributions in
// ascending k. SIMD variants must reproduce this order element-for-element.
void matmul_scalar(double* c, const double* a, const double* b,
                   std::size_t m, std::size_t k, std::size_t n) {
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* c_row = c + i * n;
        const double* a_row = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double a_ik = a_row[kk];
            const double* b_row = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) {
                c_row[j] += a_ik * b_row[j];
            }
        }
    }
}

void hadamard_scalar(double* out, const double* a, const double* b,
                     std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void relu_scalar(double* out, const double* in, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void scale_scalar(double* out, const double* in, double alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * in[i];
}

void axpy_scalar(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        matmul_scalar, hadamard_scalar, relu_scalar, scale_scalar, axpy_scalar,
    };
    return table;
}

} // namespace ktnz::kernels::detail
