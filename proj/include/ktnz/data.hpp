#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ktnz/conv.hpp"

namespace ktnz {

struct Sample {
    Image image;
    int label = 0;
};

using Dataset = std::vector<Sample>;

/// Standard CIFAR-10 binary records: 1 label byte + 3072 channel-major pixel
/// bytes (R, G, B; row-major 32x32). Pixels scale to [0,1] doubles, images
/// come out as (3, 32, 32).
Dataset load_cifar10(const std::string& path);

/// Deterministic 1x16x16 grayscale dataset: class c renders a canonical
/// glyph (bars, diagonals, corners, cross, ring) plus seeded Gaussian noise.
/// Same (n, classes, seed, sigma) always produces bitwise-identical data.
Dataset synth_dataset(std::size_t n, std::size_t classes, std::uint64_t seed,
                      double sigma = 0.1);

} // namespace ktnz
