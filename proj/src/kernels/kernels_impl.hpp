#pragma once

#include <cstddef>

// Internal per-backend entry points. Only the dispatcher includes this.
namespace ktnz::kernels::detail {

struct KernelTable {
    void (*matmul)(double*, const double*, const double*,
                   std::size_t, std::size_t, std::size_t);
    void (*hadamard)(double*, const double*, const double*, std::size_t);
    void (*relu)(double*, const double*, std::size_t);
    void (*scale)(double*, const double*, double, std::size_t);
    void (*axpy)(double*, double, const double*, std::size_t);
};

const KernelTable& scalar_table();

#if defined(__x86_64__) || defined(_M_X64)
#define KTNZ_HAVE_AVX2_BUILD 1
const KernelTable& avx2_table();
#endif

#if defined(__aarch64__)
#define KTNZ_HAVE_NEON_BUILD 1
const KernelTable& neon_table();
#endif

} // namespace ktnz::kernels::detail
