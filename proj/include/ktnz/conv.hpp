#pragma once

#include <cstddef>
#include <utility>

#include "ktnz/tensor.hpp"

namespace ktnz {

/// Convolution geometry: kernel extent, strides, zero padding.
struct ConvGeometry {
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    std::size_t stride_h = 1;
    std::size_t stride_w = 1;
    std::size_t pad_h = 0;
    std::size_t pad_w = 0;
};

/// Output spatial dims (h - kh + 2 ph) / sh + 1 (and likewise for w), with
/// exact integer division. Inexact stride geometry is an error, not a floor.
std::pair<std::size_t, std::size_t> output_dims(const ConvGeometry& g,
                                                std::size_t h, std::size_t w);

/// 4-mode convolution kernel, canonical mode order (OUT, IN, KH, KW).
class Kernel {
public:
    explicit Kernel(DenseTensor t);

    const DenseTensor& tensor() const { return t_; }
    std::size_t out_channels() const { return t_.dim(0); }
    std::size_t in_channels() const { return t_.dim(1); }
    std::size_t kh() const { return t_.dim(2); }
    std::size_t kw() const { return t_.dim(3); }

private:
    DenseTensor t_;
};

/// 3-mode image, mode order (C, H, W).
class Image {
public:
    explicit Image(DenseTensor t);

    const DenseTensor& tensor() const { return t_; }
    std::size_t channels() const { return t_.dim(0); }
    std::size_t height() const { return t_.dim(1); }
    std::size_t width() const { return t_.dim(2); }

private:
    DenseTensor t_;
};

/// 5-mode patch tensor, mode order (H_out, W_out, C_in, KH, KW).
class PatchTensor {
public:
    explicit PatchTensor(DenseTensor t);

    const DenseTensor& tensor() const { return t_; }

private:
    DenseTensor t_;
};

/// Patch tensor construction: entry (i,j,c,a,b) is the padded-image value at
/// channel c, row i*stride_h + a - pad_h, col j*stride_w + b - pad_w; zero
/// where the coordinate falls inside the padding.
PatchTensor im2col(const Image& img, const ConvGeometry& g);

/// Cross-correlation (no kernel flip): out(o,i,j) = sum_{c,a,b}
/// patch(i,j,c,a,b) * k(o,c,a,b), executed as one contract() call.
Image conv2d(const Image& img, const Kernel& k, const ConvGeometry& g);

/// Per-channel window mean, executed as the patch-tensor contraction with an
/// all-ones vector and an all-(1/window^2) vector.
Image avg_pool(const Image& img, std::size_t window, std::size_t stride);

DenseTensor relu(const DenseTensor& t);
Image relu(const Image& img);

/// Per-window maximum (not expressible as a contraction; direct loops).
Image max_pool(const Image& img, std::size_t window, std::size_t stride);

} // namespace ktnz
