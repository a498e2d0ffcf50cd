#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>

#include "ktnz/tensor.hpp"

namespace ktnz {

/// Analytical shape of one Tucker-decomposed convolution. `ranks` follows
/// the decomposition's internal index order: (|alpha|, |beta|, |gamma|,
/// |delta|) for the (KH, KW, IN, OUT) mode matrices respectively.
struct ConvShape {
    std::size_t kernel_h = 1; // X
    std::size_t kernel_w = 1; // Y
    std::size_t c_in = 1;
    std::size_t c_out = 1;
    std::size_t h_out = 1;
    std::size_t w_out = 1;
    std::array<std::size_t, 4> ranks{1, 1, 1, 1};
};

/// Multiply-accumulate counts (proportionality constant 1) for a dense vs
/// Tucker-decomposed convolution, plus the derived ratios.
struct CostEstimate {
    std::uint64_t dense_cost = 0;
    std::uint64_t cost1 = 0; // absorb mode matrices into the patch tensor
    std::uint64_t cost2 = 0; // contract with the core
    std::uint64_t cost3 = 0; // multiply in the output mode matrix
    std::uint64_t tucker_cost = 0;
    double speedup = 0.0;
    double memory_cr = 0.0;
    /// The fixed contraction order assumes c_in > X; flagged, not an error.
    bool order_assumption_violated = false;
};

/// Product of the sizes of all distinct indices in the contraction.
std::uint64_t contraction_cost(const ContractionSpec& spec,
                               const std::map<char, std::size_t>& sizes);

/// Dense kernel size over the Tucker component count:
/// XYCinCout / (X|a| + Y|b| + Cin|g| + Cout|d|).
double tucker_memory_cr(const ConvShape& s);

/// Dense cost H W X Y Cin Cout against the three-stage Tucker contraction.
CostEstimate tucker_conv_costs(const ConvShape& s);

} // namespace ktnz
