#include "ktnz/conv.hpp"

#include <algorithm>
#include <string>

#include "ktnz/errors.hpp"
#include "ktnz/kernels.hpp"

namespace ktnz {

namespace {

std::size_t one_output_dim(std::size_t in, std::size_t kernel, std::size_t stride,
                           std::size_t pad, const char* axis) {
    if (kernel < 1 || stride < 1) {
        fail(ErrorCode::NonIntegralGeometry,
             std::string("kernel and stride must be >= 1 on axis ") + axis);
    }
    const long long numer = static_cast<long long>(in) + 2 * static_cast<long long>(pad) -
                            static_cast<long long>(kernel);
    if (numer < 0) {
        fail(ErrorCode::NonPositiveOutput,
             std::string("kernel larger than padded input on axis ") + axis);
    }
    if (numer % static_cast<long long>(stride) != 0) {
        fail(ErrorCode::NonIntegralGeometry,
             std::string("stride does not divide exactly on axis ") + axis);
    }
    return static_cast<std::size_t>(numer / static_cast<long long>(stride)) + 1;
}

} // namespace

std::pair<std::size_t, std::size_t> output_dims(const ConvGeometry& g,
                                                std::size_t h, std::size_t w) {
    if (h < 1 || w < 1) {
        fail(ErrorCode::NonPositiveOutput, "input dims must be >= 1");
    }
    return {one_output_dim(h, g.kernel_h, g.stride_h, g.pad_h, "h"),
            one_output_dim(w, g.kernel_w, g.stride_w, g.pad_w, "w")};
}

Kernel::Kernel(DenseTensor t) : t_(std::move(t)) {
    if (t_.rank() != 4) {
        fail(ErrorCode::SizeMismatch, "kernel must be a rank-4 tensor, got rank " +
                                          std::to_string(t_.rank()));
    }
    t_ = t_.with_labels({"OUT", "IN", "KH", "KW"});
}

Image::Image(DenseTensor t) : t_(std::move(t)) {
    if (t_.rank() != 3) {
        fail(ErrorCode::SizeMismatch, "image must be a rank-3 tensor, got rank " +
                                          std::to_string(t_.rank()));
    }
}

PatchTensor::PatchTensor(DenseTensor t) : t_(std::move(t)) {
    if (t_.rank() != 5) {
        fail(ErrorCode::SizeMismatch, "patch tensor must be rank 5");
    }
}

PatchTensor im2col(const Image& img, const ConvGeometry& g) {
    const auto [h_out, w_out] = output_dims(g, img.height(), img.width());
    const std::size_t c_in = img.channels();
    const std::size_t h = img.height(), w = img.width();

    DenseTensor out({h_out, w_out, c_in, g.kernel_h, g.kernel_w});
    double* dst = out.mutable_data().data();
    const double* src = img.tensor().data().data();
    for (std::size_t i = 0; i < h_out; ++i) {
        for (std::size_t j = 0; j < w_out; ++j) {
            for (std::size_t c = 0; c < c_in; ++c) {
                for (std::size_t a = 0; a < g.kernel_h; ++a) {
                    const long long row = static_cast<long long>(i * g.stride_h + a) -
                                          static_cast<long long>(g.pad_h);
                    for (std::size_t b = 0; b < g.kernel_w; ++b) {
                        const long long col = static_cast<long long>(j * g.stride_w + b) -
                                              static_cast<long long>(g.pad_w);
                        double v = 0.0;
                        if (row >= 0 && col >= 0 && row < static_cast<long long>(h) &&
                            col < static_cast<long long>(w)) {
                            v = src[(c * h + static_cast<std::size_t>(row)) * w +
                                    static_cast<std::size_t>(col)];
                        }
                        *dst++ = v;
                    }
                }
            }
        }
    }
    return PatchTensor(std::move(out));
}

Image conv2d(const Image& img, const Kernel& k, const ConvGeometry& g) {
    if (img.channels() != k.in_channels()) {
        fail(ErrorCode::ChannelMismatch,
             "image has " + std::to_string(img.channels()) +
                 " channels, kernel expects " + std::to_string(k.in_channels()));
    }
    if (g.kernel_h != k.kh() || g.kernel_w != k.kw()) {
        fail(ErrorCode::SizeMismatch, "geometry kernel extent disagrees with kernel dims");
    }
    const PatchTensor patch = im2col(img, g);
    DenseTensor out = contract({patch.tensor(), k.tensor()}, "ijcab,ocab->oij");
    return Image(std::move(out));
}

Image avg_pool(const Image& img, std::size_t window, std::size_t stride) {
    const ConvGeometry g{window, window, stride, stride, 0, 0};
    const PatchTensor patch = im2col(img, g);
    const double alpha = 1.0 / (static_cast<double>(window) * static_cast<double>(window));
    DenseTensor out = contract(
        {patch.tensor(), ones_vector(window), constant_vector(window, alpha)},
        "ijcab,a,b->cij");
    return Image(std::move(out));
}

DenseTensor relu(const DenseTensor& t) {
    DenseTensor out(t.dims());
    kernels::relu(out.mutable_data().data(), t.data().data(), t.size());
    return out;
}

Image relu(const Image& img) { return Image(relu(img.tensor())); }

Image max_pool(const Image& img, std::size_t window, std::size_t stride) {
    const ConvGeometry g{window, window, stride, stride, 0, 0};
    const auto [h_out, w_out] = output_dims(g, img.height(), img.width());
    const std::size_t c_in = img.channels();

    DenseTensor out({c_in, h_out, w_out});
    const double* src = img.tensor().data().data();
    double* dst = out.mutable_data().data();
    const std::size_t h = img.height(), w = img.width();
    for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t i = 0; i < h_out; ++i) {
            for (std::size_t j = 0; j < w_out; ++j) {
                double best = src[(c * h + i * stride) * w + j * stride];
                for (std::size_t a = 0; a < window; ++a) {
                    for (std::size_t b = 0; b < window; ++b) {
                        best = std::max(best, src[(c * h + i * stride + a) * w +
                                                  j * stride + b]);
                    }
                }
                dst[(c * h_out + i) * w_out + j] = best;
            }
        }
    }
    return Image(std::move(out));
}

} // namespace ktnz
