#include "ktnz/kernels.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstring>
#include <random>
#include <vector>

#include "ktnz/errors.hpp"

namespace k = ktnz::kernels;

namespace {

// Restores the startup backend when a test finishes.
struct BackendGuard {
    k::Backend saved = k::active_backend();
    ~BackendGuard() { k::set_backend(saved); }
};

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::vector<double> v(n);
    for (double& x : v) {
        x = 2.0 * (static_cast<double>(eng() >> 11) * 0x1p-53) - 1.0;
    }
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
    EXPECT_TRUE(k::backend_available(k::Backend::Scalar));
}

TEST(Kernels, MatmulMatchesHandComputed) {
    BackendGuard guard;
    k::set_backend(k::Backend::Scalar);
    // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
    const std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8};
    std::vector<double> c(4);
    k::matmul(c.data(), a.data(), b.data(), 2, 2, 2);
    EXPECT_EQ(c, (std::vector<double>{19, 22, 43, 50}));
}

TEST(Kernels, MultiplyCounterTracksMatmulSize) {
    const auto a = random_vec(5 * 7, 1), b = random_vec(7 * 3, 2);
    std::vector<double> c(5 * 3);
    k::reset_multiply_count();
    k::matmul(c.data(), a.data(), b.data(), 5, 7, 3);
    EXPECT_EQ(k::multiply_count(), 5u * 7u * 3u);
}

TEST(Kernels, SimdBackendsBitwiseEqualScalar) {
    BackendGuard guard;
    std::vector<k::Backend> simd;
    if (k::backend_available(k::Backend::Avx2)) simd.push_back(k::Backend::Avx2);
    if (k::backend_available(k::Backend::Neon)) simd.push_back(k::Backend::Neon);
    if (simd.empty()) GTEST_SKIP() << "no SIMD backend on this CPU";

    // Odd sizes exercise the vector remainder lanes.
    const std::vector<std::array<std::size_t, 3>> shapes{
        {1, 1, 1}, {3, 5, 7}, {8, 8, 8}, {13, 9, 11}, {2, 31, 6}, {17, 4, 33}};
    for (const auto backend : simd) {
        for (const auto [m, kk, n] : shapes) {
            const auto a = random_vec(m * kk, 11 * m + n);
            const auto b = random_vec(kk * n, 7 * kk + m);
            std::vector<double> ref(m * n), alt(m * n);
            k::set_backend(k::Backend::Scalar);
            k::matmul(ref.data(), a.data(), b.data(), m, kk, n);
            k::set_backend(backend);
            k::matmul(alt.data(), a.data(), b.data(), m, kk, n);
            EXPECT_TRUE(bitwise_equal(ref, alt))
                << k::backend_name(backend) << " matmul diverges at " << m
                << "x" << kk << "x" << n;
        }

        for (const std::size_t n : {1u, 4u, 7u, 64u, 129u}) {
            auto a = random_vec(n, n + 1);
            const auto b = random_vec(n, n + 2);
            a[0] = -0.0; // relu sign edge
            if (n > 2) a[2] = 0.0;

            std::vector<double> r1(n), r2(n);
            k::set_backend(k::Backend::Scalar);
            k::hadamard(r1.data(), a.data(), b.data(), n);
            k::set_backend(backend);
            k::hadamard(r2.data(), a.data(), b.data(), n);
            EXPECT_TRUE(bitwise_equal(r1, r2)) << "hadamard n=" << n;

            k::set_backend(k::Backend::Scalar);
            k::relu(r1.data(), a.data(), n);
            k::set_backend(backend);
            k::relu(r2.data(), a.data(), n);
            EXPECT_TRUE(bitwise_equal(r1, r2)) << "relu n=" << n;

            k::set_backend(k::Backend::Scalar);
            k::scale(r1.data(), a.data(), 0.37, n);
            k::set_backend(backend);
            k::scale(r2.data(), a.data(), 0.37, n);
            EXPECT_TRUE(bitwise_equal(r1, r2)) << "scale n=" << n;

            std::vector<double> y1 = b, y2 = b;
            k::set_backend(k::Backend::Scalar);
            k::axpy(y1.data(), -1.25, a.data(), n);
            k::set_backend(backend);
            k::axpy(y2.data(), -1.25, a.data(), n);
            EXPECT_TRUE(bitwise_equal(y1, y2)) << "axpy n=" << n;
        }
    }
}

TEST(Kernels, ReductionsAreSequentialOrder) {
    const auto a = random_vec(101, 5), b = random_vec(101, 6);
    double expect_dot = 0.0, expect_ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        expect_dot += a[i] * b[i];
        expect_ss += a[i] * a[i];
    }
    EXPECT_EQ(k::dot(a.data(), b.data(), a.size()), expect_dot);
    EXPECT_EQ(k::sumsq(a.data(), a.size()), expect_ss);
}

TEST(Kernels, SetUnavailableBackendThrows) {
    if (!k::backend_available(k::Backend::Neon)) {
        EXPECT_THROW(k::set_backend(k::Backend::Neon), ktnz::Error);
    }
    if (!k::backend_available(k::Backend::Avx2)) {
        EXPECT_THROW(k::set_backend(k::Backend::Avx2), ktnz::Error);
    }
}
