#include "ktnz/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ktnz/errors.hpp"
#include "ktnz/kernels.hpp"

namespace ktnz {

namespace {

struct TraceEntry {
    DenseTensor input;  // activation entering the layer
    DenseTensor patch;  // conv only: cached im2col result
    DenseTensor output; // activation leaving the layer
};

DenseTensor softmax_vec(const DenseTensor& x) {
    const std::size_t n = x.size();
    double m = x.data()[0];
    for (double v : x.data()) m = std::max(m, v);
    DenseTensor out({n});
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(x.data()[i] - m);
        out.mutable_data()[i] = e;
        total += e;
    }
    for (double& v : out.mutable_data()) v /= total;
    return out;
}

DenseTensor apply_layer(const ModelSpec& m, const Layer& l,
                        const DenseTensor& act, DenseTensor* patch_out) {
    switch (l.kind) {
    case LayerKind::Conv: {
        const Image img(act);
        const Kernel k(m.parameters.at(l.weight));
        const PatchTensor patch = im2col(img, l.geom);
        if (patch_out) *patch_out = patch.tensor();
        DenseTensor out =
            contract({patch.tensor(), k.tensor()}, "ijcab,ocab->oij");
        if (!l.bias.empty()) {
            const DenseTensor& b = m.parameters.at(l.bias);
            const std::size_t spatial = out.dim(1) * out.dim(2);
            for (std::size_t o = 0; o < out.dim(0); ++o) {
                const double bo = b.data()[o];
                for (std::size_t s = 0; s < spatial; ++s) {
                    out.mutable_data()[o * spatial + s] += bo;
                }
            }
        }
        return out;
    }
    case LayerKind::Relu:
        return relu(act);
    case LayerKind::AvgPool:
        return avg_pool(Image(act), l.window, l.stride).tensor();
    case LayerKind::MaxPool:
        return max_pool(Image(act), l.window, l.stride).tensor();
    case LayerKind::Flatten:
        return act.reshape({act.size()});
    case LayerKind::Dense: {
        const DenseTensor& w = m.parameters.at(l.weight);
        const DenseTensor& b = m.parameters.at(l.bias);
        DenseTensor out({w.dim(0)});
        kernels::matmul(out.mutable_data().data(), w.data().data(),
                        act.data().data(), w.dim(0), w.dim(1), 1);
        kernels::axpy(out.mutable_data().data(), 1.0, b.data().data(), w.dim(0));
        return out;
    }
    case LayerKind::Softmax:
        return softmax_vec(act);
    }
    fail(ErrorCode::ShapeInconsistency, "unknown layer kind");
}

DenseTensor forward(const ModelSpec& m, const Image& img,
                    std::vector<TraceEntry>* trace) {
    DenseTensor act = img.tensor();
    for (const Layer& l : m.layers) {
        TraceEntry entry;
        if (trace) entry.input = act;
        DenseTensor out = apply_layer(m, l, act, trace ? &entry.patch : nullptr);
        if (trace) {
            entry.output = out;
            trace->push_back(std::move(entry));
        }
        act = std::move(out);
    }
    return act;
}

// Scatter the patch-tensor gradient back onto the image (transpose of
// im2col).
DenseTensor col2im(const DenseTensor& dpatch, const ConvGeometry& g,
                   std::size_t c_in, std::size_t h, std::size_t w) {
    DenseTensor out({c_in, h, w});
    const std::size_t h_out = dpatch.dim(0), w_out = dpatch.dim(1);
    const double* src = dpatch.data().data();
    double* dst = out.mutable_data().data();
    for (std::size_t i = 0; i < h_out; ++i) {
        for (std::size_t j = 0; j < w_out; ++j) {
            for (std::size_t c = 0; c < c_in; ++c) {
                for (std::size_t a = 0; a < g.kernel_h; ++a) {
                    const long long row = static_cast<long long>(i * g.stride_h + a) -
                                          static_cast<long long>(g.pad_h);
                    for (std::size_t b = 0; b < g.kernel_w; ++b) {
                        const long long col = static_cast<long long>(j * g.stride_w + b) -
                                              static_cast<long long>(g.pad_w);
                        const double v = *src++;
                        if (row >= 0 && col >= 0 && row < static_cast<long long>(h) &&
                            col < static_cast<long long>(w)) {
                            dst[(c * h + static_cast<std::size_t>(row)) * w +
                                static_cast<std::size_t>(col)] += v;
                        }
                    }
                }
            }
        }
    }
    return out;
}

void accumulate(std::map<std::string, DenseTensor>& grads,
                const std::string& name, const DenseTensor& g) {
    auto it = grads.find(name);
    if (it == grads.end()) {
        grads.emplace(name, g);
    } else {
        kernels::axpy(it->second.mutable_data().data(), 1.0, g.data().data(),
                      g.size());
    }
}

// Backward pass from the softmax/cross-entropy head; `probs` is the cached
// softmax output. Adds this sample's parameter gradients into `grads`.
void backward(const ModelSpec& m, const std::vector<TraceEntry>& trace,
              int label, std::map<std::string, DenseTensor>& grads) {
    if (m.layers.empty() || m.layers.back().kind != LayerKind::Softmax) {
        fail(ErrorCode::ShapeInconsistency,
             "training requires a final softmax layer");
    }
    const DenseTensor& probs = trace.back().output;
    DenseTensor g = probs;
    g.mutable_data()[static_cast<std::size_t>(label)] -= 1.0;

    for (std::size_t li = m.layers.size() - 1; li-- > 0;) {
        const Layer& l = m.layers[li];
        const TraceEntry& t = trace[li];
        switch (l.kind) {
        case LayerKind::Conv: {
            // out(o,i,j) = sum_{cab} patch(i,j,c,a,b) k(o,c,a,b) + bias(o)
            accumulate(grads, l.weight,
                       contract({g, t.patch}, "oij,ijcab->ocab"));
            if (!l.bias.empty()) {
                accumulate(grads, l.bias, contract({g}, "oij->o"));
            }
            const DenseTensor dpatch =
                contract({g, m.parameters.at(l.weight)}, "oij,ocab->ijcab");
            g = col2im(dpatch, l.geom, t.input.dim(0), t.input.dim(1),
                       t.input.dim(2));
            break;
        }
        case LayerKind::Relu: {
            DenseTensor masked(g.dims());
            for (std::size_t i = 0; i < g.size(); ++i) {
                masked.mutable_data()[i] =
                    t.input.data()[i] > 0.0 ? g.data()[i] : 0.0;
            }
            g = std::move(masked);
            break;
        }
        case LayerKind::AvgPool: {
            const double inv = 1.0 / (static_cast<double>(l.window) * l.window);
            DenseTensor din(t.input.dims());
            const std::size_t c_in = t.input.dim(0), h = t.input.dim(1),
                              w = t.input.dim(2);
            const std::size_t h_out = g.dim(1), w_out = g.dim(2);
            for (std::size_t c = 0; c < c_in; ++c) {
                for (std::size_t i = 0; i < h_out; ++i) {
                    for (std::size_t j = 0; j < w_out; ++j) {
                        const double go =
                            g.data()[(c * h_out + i) * w_out + j] * inv;
                        for (std::size_t a = 0; a < l.window; ++a) {
                            for (std::size_t b = 0; b < l.window; ++b) {
                                din.mutable_data()[(c * h + i * l.stride + a) * w +
                                                   j * l.stride + b] += go;
                            }
                        }
                    }
                }
            }
            g = std::move(din);
            break;
        }
        case LayerKind::MaxPool: {
            DenseTensor din(t.input.dims());
            const std::size_t c_in = t.input.dim(0), h = t.input.dim(1),
                              w = t.input.dim(2);
            const std::size_t h_out = g.dim(1), w_out = g.dim(2);
            for (std::size_t c = 0; c < c_in; ++c) {
                for (std::size_t i = 0; i < h_out; ++i) {
                    for (std::size_t j = 0; j < w_out; ++j) {
                        // first maximum wins (deterministic tie-break)
                        std::size_t best_r = i * l.stride, best_c = j * l.stride;
                        double best = t.input.data()[(c * h + best_r) * w + best_c];
                        for (std::size_t a = 0; a < l.window; ++a) {
                            for (std::size_t b = 0; b < l.window; ++b) {
                                const std::size_t rr = i * l.stride + a;
                                const std::size_t cc = j * l.stride + b;
                                const double v = t.input.data()[(c * h + rr) * w + cc];
                                if (v > best) {
                                    best = v;
                                    best_r = rr;
                                    best_c = cc;
                                }
                            }
                        }
                        din.mutable_data()[(c * h + best_r) * w + best_c] +=
                            g.data()[(c * h_out + i) * w_out + j];
                    }
                }
            }
            g = std::move(din);
            break;
        }
        case LayerKind::Flatten:
            g = g.reshape(t.input.dims());
            break;
        case LayerKind::Dense: {
            const DenseTensor& w = m.parameters.at(l.weight);
            const std::size_t out_n = w.dim(0), in_n = w.dim(1);
            DenseTensor dw({out_n, in_n});
            kernels::matmul(dw.mutable_data().data(), g.data().data(),
                            t.input.data().data(), out_n, 1, in_n);
            accumulate(grads, l.weight, dw);
            accumulate(grads, l.bias, g);
            DenseTensor dx({in_n});
            const DenseTensor wt = w.permute({1, 0});
            kernels::matmul(dx.mutable_data().data(), wt.data().data(),
                            g.data().data(), in_n, out_n, 1);
            g = std::move(dx);
            break;
        }
        case LayerKind::Softmax:
            fail(ErrorCode::ShapeInconsistency,
                 "softmax is only supported as the final layer");
        }
    }
}

double loss_from_probs(const DenseTensor& probs, int label) {
    const double p = std::max(probs.data()[static_cast<std::size_t>(label)],
                              1e-300);
    return -std::log(p);
}

void fisher_yates(std::vector<std::size_t>& order, std::mt19937_64& eng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(eng() % i);
        std::swap(order[i - 1], order[j]);
    }
}

} // namespace

std::vector<double> forward_probs(const ModelSpec& m, const Image& img) {
    const DenseTensor out = forward(m, img, nullptr);
    return out.data();
}

EvalResult evaluate(const ModelSpec& m, const Dataset& data) {
    validate_model(m);
    EvalResult r;
    r.n_samples = data.size();
    if (data.empty()) return r;

    std::size_t hits1 = 0, hits5 = 0;
    for (const Sample& s : data) {
        const std::vector<double> probs = forward_probs(m, s.image);
        if (static_cast<std::size_t>(s.label) >= probs.size()) {
            fail(ErrorCode::ShapeInconsistency,
                 "label exceeds model output size");
        }
        std::vector<std::size_t> idx(probs.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return probs[a] > probs[b];
        });
        const std::size_t label = static_cast<std::size_t>(s.label);
        if (idx[0] == label) ++hits1;
        const std::size_t top = std::min<std::size_t>(5, idx.size());
        for (std::size_t i = 0; i < top; ++i) {
            if (idx[i] == label) {
                ++hits5;
                break;
            }
        }
    }
    r.top1 = static_cast<double>(hits1) / static_cast<double>(data.size());
    r.top5 = static_cast<double>(hits5) / static_cast<double>(data.size());
    return r;
}

std::map<std::string, DenseTensor> loss_gradients(const ModelSpec& m,
                                                  const Image& img, int label) {
    std::vector<TraceEntry> trace;
    (void)forward(m, img, &trace);
    std::map<std::string, DenseTensor> grads;
    backward(m, trace, label, grads);
    return grads;
}

double sample_loss(const ModelSpec& m, const Image& img, int label) {
    const DenseTensor probs = forward(m, img, nullptr);
    return loss_from_probs(probs, label);
}

TrainResult train_toy(const ModelSpec& arch, const Dataset& data,
                      const TrainOptions& opts) {
    validate_model(arch);
    if (arch.layers.empty() || arch.layers.back().kind != LayerKind::Softmax) {
        fail(ErrorCode::ShapeInconsistency,
             "training requires a final softmax layer");
    }

    TrainResult result;
    result.model = arch;
    ModelSpec& m = result.model;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 eng(opts.seed);
    const std::size_t batch = std::max<std::size_t>(1, opts.batch);

    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        fisher_yates(order, eng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < data.size(); start += batch) {
            const std::size_t end = std::min(start + batch, data.size());
            std::map<std::string, DenseTensor> grads;
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const Sample& s = data[order[i]];
                std::vector<TraceEntry> trace;
                (void)forward(m, s.image, &trace);
                batch_loss += loss_from_probs(trace.back().output, s.label);
                backward(m, trace, s.label, grads);
            }
            if (!std::isfinite(batch_loss)) {
                fail(ErrorCode::DivergenceDetected, "non-finite training loss");
            }
            epoch_loss += batch_loss;
            const double step = -opts.lr / static_cast<double>(end - start);
            for (auto& [name, g] : grads) {
                DenseTensor& p = m.parameters.at(name);
                kernels::axpy(p.mutable_data().data(), step, g.data().data(),
                              g.size());
            }
        }
        result.loss_trace.push_back(
            data.empty() ? 0.0 : epoch_loss / static_cast<double>(data.size()));
    }
    return result;
}

ModelSpec make_toy_model(std::size_t classes, std::uint64_t seed) {
    ModelSpec m;
    m.input_shape = {1, 16, 16};
    m.layers = {
        conv_layer("conv1", ConvGeometry{5, 5, 1, 1, 2, 2}, "conv1.w", "conv1.b"),
        relu_layer(),
        avg_pool_layer(2, 2),
        conv_layer("conv2", ConvGeometry{3, 3, 1, 1, 1, 1}, "conv2.w", "conv2.b"),
        relu_layer(),
        avg_pool_layer(2, 2),
        flatten_layer(),
        dense_layer("fc", "fc.w", "fc.b"),
        softmax_layer(),
    };

    std::mt19937_64 eng(seed);
    auto uniform_sym = [&](double bound) {
        const double u = static_cast<double>(eng() >> 11) * 0x1p-53;
        return (2.0 * u - 1.0) * bound;
    };
    auto init = [&](std::vector<std::size_t> dims, std::size_t fan_in) {
        DenseTensor t(std::move(dims));
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double& v : t.mutable_data()) v = uniform_sym(bound);
        return t;
    };

    m.parameters.emplace("conv1.w", init({8, 1, 5, 5}, 1 * 5 * 5));
    m.parameters.emplace("conv1.b", DenseTensor({8}));
    m.parameters.emplace("conv2.w", init({16, 8, 3, 3}, 8 * 3 * 3));
    m.parameters.emplace("conv2.b", DenseTensor({16}));
    m.parameters.emplace("fc.w", init({classes, 16 * 4 * 4}, 16 * 4 * 4));
    m.parameters.emplace("fc.b", DenseTensor({classes}));
    validate_model(m);
    return m;
}

} // namespace ktnz
