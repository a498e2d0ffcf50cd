#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "ktnz/conv.hpp"
#include "ktnz/tensor.hpp"

namespace ktnz {

enum class LayerKind {
    Conv,
    Relu,
    AvgPool,
    MaxPool,
    Flatten,
    Dense,
    Softmax,
};

/// One layer description. Conv and dense layers carry a name plus parameter
/// references; `bias` may be empty on conv layers (no bias term).
struct Layer {
    LayerKind kind = LayerKind::Relu;
    std::string name;
    ConvGeometry geom;                 // conv
    std::size_t window = 0, stride = 0; // pools
    std::string weight;                // conv kernel / dense weight param name
    std::string bias;                  // param name, empty = none (conv only)
};

Layer conv_layer(std::string name, ConvGeometry geom, std::string kernel,
                 std::string bias = {});
Layer relu_layer();
Layer avg_pool_layer(std::size_t window, std::size_t stride);
Layer max_pool_layer(std::size_t window, std::size_t stride);
Layer flatten_layer();
Layer dense_layer(std::string name, std::string weight, std::string bias);
Layer softmax_layer();

/// Ordered layers plus named parameter tensors. `input_shape` is (C, H, W).
struct ModelSpec {
    std::array<std::size_t, 3> input_shape{1, 1, 1};
    std::vector<Layer> layers;
    std::map<std::string, DenseTensor> parameters;

    const Layer* find_layer(const std::string& name) const;
};

/// Walk activation shapes through the layers; throws ShapeInconsistency on
/// any missing parameter or incompatible shape, naming the layer.
void validate_model(const ModelSpec& m);

/// Activation shape after the last layer: {n} for vectors, {C,H,W} images.
std::vector<std::size_t> output_shape(const ModelSpec& m);

/// KTNZ v1 container: magic "KTNZ", u16 version, length-prefixed canonical
/// layer text, then a tensor table. Little-endian, bit-exact round trips.
void save_model(const ModelSpec& m, const std::string& path);
ModelSpec load_model(const std::string& path);

/// The canonical layer text block (exactly what save_model embeds).
std::string describe_layers(const ModelSpec& m);

bool models_bitwise_equal(const ModelSpec& a, const ModelSpec& b);

} // namespace ktnz
