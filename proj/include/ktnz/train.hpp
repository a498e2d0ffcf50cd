#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ktnz/data.hpp"
#include "ktnz/model.hpp"

namespace ktnz {

struct EvalResult {
    double top1 = 0.0;
    double top5 = 0.0;
    std::size_t n_samples = 0;
};

/// Forward pass per sample; top-1/top-5 with ties broken toward the lower
/// class index.
EvalResult evaluate(const ModelSpec& m, const Dataset& data);

/// Class probabilities for one image (the model must end in softmax).
std::vector<double> forward_probs(const ModelSpec& m, const Image& img);

struct TrainOptions {
    std::size_t epochs = 1;
    double lr = 0.05;
    std::size_t batch = 32;
    std::uint64_t seed = 0;
};

struct TrainResult {
    ModelSpec model;
    /// Mean cross-entropy per epoch (recorded, not asserted monotone).
    std::vector<double> loss_trace;
};

/// Mini-batch SGD with cross-entropy; gradients by backpropagation through
/// the im2col contraction. Deterministic given (arch, data, opts). Throws
/// DivergenceDetected when the loss turns non-finite.
TrainResult train_toy(const ModelSpec& arch, const Dataset& data,
                      const TrainOptions& opts);

/// Per-sample parameter gradients of the cross-entropy loss (for oracles
/// and tests): returns grads for every parameter, in model parameter order.
std::map<std::string, DenseTensor> loss_gradients(const ModelSpec& m,
                                                  const Image& img, int label);

/// Cross-entropy of one sample under the model.
double sample_loss(const ModelSpec& m, const Image& img, int label);

/// conv(1->8, 5x5, pad 2) / relu / avg_pool(2,2) / conv(8->16, 3x3, pad 1) /
/// relu / avg_pool(2,2) / flatten / dense(->classes) / softmax on 1x16x16
/// inputs, with seeded uniform init.
ModelSpec make_toy_model(std::size_t classes, std::uint64_t seed);

} // namespace ktnz
