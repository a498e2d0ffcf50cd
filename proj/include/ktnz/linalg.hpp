#pragma once

#include <cstddef>
#include <vector>

#include "ktnz/tensor.hpp"

namespace ktnz {

/// Thin SVD of a rank-2 tensor M (m x n): M == u * diag(s) * v with
/// n_sv = min(m, n), u of shape m x n_sv (orthonormal columns), v of shape
/// n_sv x n (orthonormal rows), s descending and nonnegative.
struct SvdFactors {
    DenseTensor u;
    std::vector<double> s;
    DenseTensor v;

    std::size_t n_sv() const { return s.size(); }
};

/// One-sided Jacobi SVD. Iteration cap 60 sweeps; converged when every
/// off-diagonal Gram entry is below 1e-12 * ||M||_F^2. Singular values below
/// 1e-14 * s_max are clamped to zero; each left vector's largest-magnitude
/// entry is made nonnegative. Throws NoConvergence past the cap.
SvdFactors svd(const DenseTensor& m);

/// Rank-`keep` reconstruction sum_{k<keep} s_k u_k v_k.
DenseTensor truncated_reconstruct(const SvdFactors& f, std::size_t keep);

/// Ordinary least squares via the SVD pseudo-inverse: argmin ||A x - b||_2.
std::vector<double> lstsq(const DenseTensor& a, const std::vector<double>& b);

} // namespace ktnz
