#pragma once

// Independent reference implementations used only by the tests. Everything
// here deliberately avoids the library's execution paths: contraction by
// exhaustive nested loops, eigenvalues by two-sided Jacobi, convolution and
// pooling by direct index arithmetic, and a from-scratch model forward pass.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ktnz/data.hpp"
#include "ktnz/model.hpp"
#include "ktnz/tensor.hpp"

namespace oracle {

struct ContractResult {
    ktnz::DenseTensor tensor;
    std::uint64_t multiplies = 0;
};

/// Full nested-loop evaluation over every assignment of every distinct
/// symbol, counting each scalar multiply as it happens.
ContractResult naive_contract(const std::vector<ktnz::DenseTensor>& inputs,
                              const ktnz::ContractionSpec& spec);

/// Eigenvalues of a symmetric matrix, descending (two-sided cyclic Jacobi).
std::vector<double> jacobi_eig(const ktnz::DenseTensor& sym);

ktnz::DenseTensor naive_im2col(const ktnz::Image& img, const ktnz::ConvGeometry& g);
ktnz::Image naive_conv2d(const ktnz::Image& img, const ktnz::Kernel& k,
                         const ktnz::ConvGeometry& g);
ktnz::Image naive_avg_pool(const ktnz::Image& img, std::size_t window,
                           std::size_t stride);
ktnz::Image naive_max_pool(const ktnz::Image& img, std::size_t window,
                           std::size_t stride);

/// Independent end-to-end forward pass (plain loops, no im2col/contraction);
/// returns class probabilities.
std::vector<double> naive_forward(const ktnz::ModelSpec& m, const ktnz::Image& img);

/// Deterministic uniform [-1, 1) fill.
void fill_uniform(ktnz::DenseTensor& t, std::mt19937_64& eng);
ktnz::DenseTensor random_tensor(std::vector<std::size_t> dims, std::uint64_t seed);

double max_abs_diff(const ktnz::DenseTensor& a, const ktnz::DenseTensor& b);

} // namespace oracle
