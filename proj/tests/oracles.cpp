#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

using ktnz::ContractionSpec;
using ktnz::ConvGeometry;
using ktnz::DenseTensor;
using ktnz::Image;
using ktnz::Kernel;
using ktnz::ModelSpec;

ContractResult naive_contract(const std::vector<DenseTensor>& inputs,
                              const ContractionSpec& spec) {
    // Distinct symbols in order of first appearance.
    std::string symbols;
    std::map<char, std::size_t> size_of;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        for (std::size_t m = 0; m < spec.inputs[t].size(); ++m) {
            const char c = spec.inputs[t][m];
            if (!size_of.count(c)) {
                symbols += c;
                size_of[c] = inputs[t].dim(m);
            }
        }
    }

    std::vector<std::size_t> out_dims;
    for (char c : spec.output) out_dims.push_back(size_of.at(c));
    DenseTensor out(out_dims);

    std::map<char, std::size_t> idx;
    for (char c : symbols) idx[c] = 0;

    std::uint64_t multiplies = 0;
    while (true) {
        double prod = 1.0;
        bool first = true;
        for (std::size_t t = 0; t < inputs.size(); ++t) {
            std::vector<std::size_t> mi;
            for (char c : spec.inputs[t]) mi.push_back(idx.at(c));
            const double v = inputs[t].at(mi);
            if (first) {
                prod = v;
                first = false;
            } else {
                prod *= v;
                ++multiplies;
            }
        }
        std::vector<std::size_t> oi;
        for (char c : spec.output) oi.push_back(idx.at(c));
        out.mutable_data()[ktnz::flat_index(out_dims, oi)] += prod;

        // Advance the joint counter (last symbol fastest).
        std::size_t pos = symbols.size();
        while (pos > 0) {
            --pos;
            const char c = symbols[pos];
            if (++idx[c] < size_of[c]) break;
            idx[c] = 0;
            if (pos == 0) return {std::move(out), multiplies};
        }
        if (symbols.empty()) return {std::move(out), multiplies};
    }
}

std::vector<double> jacobi_eig(const DenseTensor& sym) {
    const std::size_t n = sym.dim(0);
    std::vector<double> a = sym.data();
    auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

    double norm = 0.0;
    for (double v : a) norm += v * v;
    const double tol = 1e-14 * std::max(norm, 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq * apq < tol) continue;
                rotated = true;
                const double tau = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = at(i, i);
    std::sort(eig.begin(), eig.end(), std::greater<double>());
    return eig;
}

DenseTensor naive_im2col(const Image& img, const ConvGeometry& g) {
    const auto [h_out, w_out] = ktnz::output_dims(g, img.height(), img.width());
    DenseTensor out({h_out, w_out, img.channels(), g.kernel_h, g.kernel_w});
    for (std::size_t i = 0; i < h_out; ++i) {
        for (std::size_t j = 0; j < w_out; ++j) {
            for (std::size_t c = 0; c < img.channels(); ++c) {
                for (std::size_t a = 0; a < g.kernel_h; ++a) {
                    for (std::size_t b = 0; b < g.kernel_w; ++b) {
                        const long long r =
                            static_cast<long long>(i * g.stride_h + a) -
                            static_cast<long long>(g.pad_h);
                        const long long cc =
                            static_cast<long long>(j * g.stride_w + b) -
                            static_cast<long long>(g.pad_w);
                        double v = 0.0;
                        if (r >= 0 && cc >= 0 &&
                            r < static_cast<long long>(img.height()) &&
                            cc < static_cast<long long>(img.width())) {
                            v = img.tensor().at({c, static_cast<std::size_t>(r),
                                                 static_cast<std::size_t>(cc)});
                        }
                        out.at_mut({i, j, c, a, b}) = v;
                    }
                }
            }
        }
    }
    return out;
}

Image naive_conv2d(const Image& img, const Kernel& k, const ConvGeometry& g) {
    const auto [h_out, w_out] = ktnz::output_dims(g, img.height(), img.width());
    DenseTensor out({k.out_channels(), h_out, w_out});
    for (std::size_t o = 0; o < k.out_channels(); ++o) {
        for (std::size_t i = 0; i < h_out; ++i) {
            for (std::size_t j = 0; j < w_out; ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < k.in_channels(); ++c) {
                    for (std::size_t a = 0; a < g.kernel_h; ++a) {
                        for (std::size_t b = 0; b < g.kernel_w; ++b) {
                            const long long r =
                                static_cast<long long>(i * g.stride_h + a) -
                                static_cast<long long>(g.pad_h);
                            const long long cc =
                                static_cast<long long>(j * g.stride_w + b) -
                                static_cast<long long>(g.pad_w);
                            if (r < 0 || cc < 0 ||
                                r >= static_cast<long long>(img.height()) ||
                                cc >= static_cast<long long>(img.width())) {
                                continue;
                            }
                            acc += img.tensor().at({c, static_cast<std::size_t>(r),
                                                    static_cast<std::size_t>(cc)}) *
                                   k.tensor().at({o, c, a, b});
                        }
                    }
                }
                out.at_mut({o, i, j}) = acc;
            }
        }
    }
    return Image(std::move(out));
}

Image naive_avg_pool(const Image& img, std::size_t window, std::size_t stride) {
    const ConvGeometry g{window, window, stride, stride, 0, 0};
    const auto [h_out, w_out] = ktnz::output_dims(g, img.height(), img.width());
    DenseTensor out({img.channels(), h_out, w_out});
    for (std::size_t c = 0; c < img.channels(); ++c) {
        for (std::size_t i = 0; i < h_out; ++i) {
            for (std::size_t j = 0; j < w_out; ++j) {
                double acc = 0.0;
                for (std::size_t a = 0; a < window; ++a) {
                    for (std::size_t b = 0; b < window; ++b) {
                        acc += img.tensor().at({c, i * stride + a, j * stride + b});
                    }
                }
                out.at_mut({c, i, j}) =
                    acc / (static_cast<double>(window) * window);
            }
        }
    }
    return Image(std::move(out));
}

Image naive_max_pool(const Image& img, std::size_t window, std::size_t stride) {
    const ConvGeometry g{window, window, stride, stride, 0, 0};
    const auto [h_out, w_out] = ktnz::output_dims(g, img.height(), img.width());
    DenseTensor out({img.channels(), h_out, w_out});
    for (std::size_t c = 0; c < img.channels(); ++c) {
        for (std::size_t i = 0; i < h_out; ++i) {
            for (std::size_t j = 0; j < w_out; ++j) {
                double best = img.tensor().at({c, i * stride, j * stride});
                for (std::size_t a = 0; a < window; ++a) {
                    for (std::size_t b = 0; b < window; ++b) {
                        best = std::max(
                            best, img.tensor().at({c, i * stride + a, j * stride + b}));
                    }
                }
                out.at_mut({c, i, j}) = best;
            }
        }
    }
    return Image(std::move(out));
}

std::vector<double> naive_forward(const ModelSpec& m, const Image& img) {
    // Image activations as (C,H,W) tensors, vector activations rank-1.
    DenseTensor act = img.tensor();
    for (const ktnz::Layer& l : m.layers) {
        switch (l.kind) {
        case ktnz::LayerKind::Conv: {
            const Kernel k(m.parameters.at(l.weight));
            Image out = naive_conv2d(Image(act), k, l.geom);
            DenseTensor t = out.tensor();
            if (!l.bias.empty()) {
                const DenseTensor& b = m.parameters.at(l.bias);
                for (std::size_t o = 0; o < t.dim(0); ++o) {
                    for (std::size_t i = 0; i < t.dim(1); ++i) {
                        for (std::size_t j = 0; j < t.dim(2); ++j) {
                            t.at_mut({o, i, j}) += b.at({o});
                        }
                    }
                }
            }
            act = std::move(t);
            break;
        }
        case ktnz::LayerKind::Relu: {
            DenseTensor t = act;
            for (double& v : t.mutable_data()) v = v > 0.0 ? v : 0.0;
            act = std::move(t);
            break;
        }
        case ktnz::LayerKind::AvgPool:
            act = naive_avg_pool(Image(act), l.window, l.stride).tensor();
            break;
        case ktnz::LayerKind::MaxPool:
            act = naive_max_pool(Image(act), l.window, l.stride).tensor();
            break;
        case ktnz::LayerKind::Flatten:
            act = act.reshape({act.size()});
            break;
        case ktnz::LayerKind::Dense: {
            const DenseTensor& w = m.parameters.at(l.weight);
            const DenseTensor& b = m.parameters.at(l.bias);
            DenseTensor out({w.dim(0)});
            for (std::size_t i = 0; i < w.dim(0); ++i) {
                double acc = b.at({i});
                for (std::size_t j = 0; j < w.dim(1); ++j) {
                    acc += w.at({i, j}) * act.at({j});
                }
                out.at_mut({i}) = acc;
            }
            act = std::move(out);
            break;
        }
        case ktnz::LayerKind::Softmax: {
            double mx = act.data()[0];
            for (double v : act.data()) mx = std::max(mx, v);
            double total = 0.0;
            DenseTensor out({act.size()});
            for (std::size_t i = 0; i < act.size(); ++i) {
                out.at_mut({i}) = std::exp(act.data()[i] - mx);
                total += out.at({i});
            }
            for (double& v : out.mutable_data()) v /= total;
            act = std::move(out);
            break;
        }
        }
    }
    return act.data();
}

void fill_uniform(DenseTensor& t, std::mt19937_64& eng) {
    for (double& v : t.mutable_data()) {
        v = 2.0 * (static_cast<double>(eng() >> 11) * 0x1p-53) - 1.0;
    }
}

DenseTensor random_tensor(std::vector<std::size_t> dims, std::uint64_t seed) {
    DenseTensor t(std::move(dims));
    std::mt19937_64 eng(seed);
    fill_uniform(t, eng);
    return t;
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims() != b.dims()) throw std::runtime_error("shape mismatch in oracle");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

} // namespace oracle
