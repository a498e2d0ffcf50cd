#include "ktnz/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "ktnz/errors.hpp"
#include "ktnz/kernels.hpp"

namespace ktnz {

std::size_t product(const std::vector<std::size_t>& dims) {
    std::size_t p = 1;
    for (std::size_t d : dims) p *= d;
    return p;
}

std::size_t flat_index(const std::vector<std::size_t>& dims,
                       const std::vector<std::size_t>& idx) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        flat = flat * dims[i] + idx[i];
    }
    return flat;
}

namespace {

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& dims) {
    std::vector<std::size_t> strides(dims.size(), 1);
    for (std::size_t i = dims.size(); i-- > 1;) {
        strides[i - 1] = strides[i] * dims[i];
    }
    return strides;
}

// Advance a row-major multi-index counter; returns false after the last one.
bool advance(std::vector<std::size_t>& idx, const std::vector<std::size_t>& dims) {
    for (std::size_t i = dims.size(); i-- > 0;) {
        if (++idx[i] < dims[i]) return true;
        idx[i] = 0;
    }
    return false;
}

} // namespace

DenseTensor::DenseTensor() : dims_{}, data_(1, 0.0) {}

DenseTensor::DenseTensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), data_(product(dims_), 0.0) {
    check_invariants();
}

DenseTensor::DenseTensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    check_invariants();
}

DenseTensor::DenseTensor(std::vector<std::size_t> dims, std::vector<double> data,
                         std::vector<std::string> mode_labels)
    : dims_(std::move(dims)), data_(std::move(data)),
      labels_(std::move(mode_labels)) {
    check_invariants();
}

void DenseTensor::check_invariants() const {
    for (std::size_t d : dims_) {
        if (d < 1) fail(ErrorCode::SizeMismatch, "tensor mode size must be >= 1");
    }
    if (data_.size() != product(dims_)) {
        fail(ErrorCode::SizeMismatch,
             "data length " + std::to_string(data_.size()) +
                 " does not match mode-size product " +
                 std::to_string(product(dims_)));
    }
    if (!labels_.empty()) {
        if (labels_.size() != dims_.size()) {
            fail(ErrorCode::SizeMismatch, "one mode label per mode required");
        }
        std::unordered_set<std::string> seen;
        for (const auto& l : labels_) {
            if (!seen.insert(l).second) {
                fail(ErrorCode::SizeMismatch, "duplicate mode label: " + l);
            }
        }
    }
}

DenseTensor DenseTensor::with_labels(std::vector<std::string> labels) const {
    return DenseTensor(dims_, data_, std::move(labels));
}

double DenseTensor::at(std::initializer_list<std::size_t> idx) const {
    return at(std::vector<std::size_t>(idx));
}

double DenseTensor::at(const std::vector<std::size_t>& idx) const {
    return data_[flat_index(dims_, idx)];
}

double& DenseTensor::at_mut(const std::vector<std::size_t>& idx) {
    return data_[flat_index(dims_, idx)];
}

DenseTensor DenseTensor::reshape(std::vector<std::size_t> new_dims) const {
    if (product(new_dims) != data_.size()) {
        fail(ErrorCode::SizeMismatch,
             "reshape target holds " + std::to_string(product(new_dims)) +
                 " elements, tensor holds " + std::to_string(data_.size()));
    }
    return DenseTensor(std::move(new_dims), data_);
}

DenseTensor DenseTensor::permute(const std::vector<std::size_t>& order) const {
    const std::size_t r = rank();
    if (order.size() != r) {
        fail(ErrorCode::BadPermutation, "permutation length != rank");
    }
    std::vector<bool> seen(r, false);
    for (std::size_t p : order) {
        if (p >= r || seen[p]) {
            fail(ErrorCode::BadPermutation, "order is not a permutation");
        }
        seen[p] = true;
    }

    std::vector<std::size_t> new_dims(r);
    for (std::size_t i = 0; i < r; ++i) new_dims[i] = dims_[order[i]];

    const auto src_strides = row_major_strides(dims_);
    std::vector<std::size_t> gather_strides(r);
    for (std::size_t i = 0; i < r; ++i) gather_strides[i] = src_strides[order[i]];

    std::vector<double> out(data_.size());
    if (r == 0) {
        out = data_;
    } else {
        std::vector<std::size_t> idx(r, 0);
        std::size_t dst = 0;
        do {
            std::size_t src = 0;
            for (std::size_t i = 0; i < r; ++i) src += idx[i] * gather_strides[i];
            out[dst++] = data_[src];
        } while (advance(idx, new_dims));
    }

    std::vector<std::string> new_labels;
    if (!labels_.empty()) {
        new_labels.resize(r);
        for (std::size_t i = 0; i < r; ++i) new_labels[i] = labels_[order[i]];
    }
    return DenseTensor(std::move(new_dims), std::move(out), std::move(new_labels));
}

ContractionSpec ContractionSpec::parse(std::string_view text) {
    ContractionSpec spec;
    const auto arrow = text.find("->");
    if (arrow == std::string_view::npos) {
        fail(ErrorCode::SpecMismatch, "contraction spec needs '->'");
    }
    std::string_view lhs = text.substr(0, arrow);
    spec.output = std::string(text.substr(arrow + 2));

    std::string current;
    for (char c : lhs) {
        if (c == ',') {
            spec.inputs.push_back(current);
            current.clear();
        } else if (c != ' ') {
            current += c;
        }
    }
    spec.inputs.push_back(current);
    return spec;
}

namespace {

struct Operand {
    std::string syms; // one char per mode, all distinct
    DenseTensor tensor;
};

// Collapse repeated symbols within one tensor to a generalized diagonal.
Operand collapse_diagonal(const DenseTensor& t, const std::string& syms) {
    std::string distinct;
    for (char c : syms) {
        if (distinct.find(c) == std::string::npos) distinct += c;
    }
    if (distinct.size() == syms.size()) return {distinct, t};

    std::vector<std::size_t> out_dims;
    for (char c : distinct) out_dims.push_back(t.dim(syms.find(c)));

    const auto src_strides = row_major_strides(t.dims());
    std::vector<std::size_t> gather(distinct.size(), 0);
    for (std::size_t m = 0; m < syms.size(); ++m) {
        gather[distinct.find(syms[m])] += src_strides[m];
    }

    DenseTensor out(out_dims);
    std::vector<std::size_t> idx(out_dims.size(), 0);
    std::size_t dst = 0;
    do {
        std::size_t src = 0;
        for (std::size_t i = 0; i < idx.size(); ++i) src += idx[i] * gather[i];
        out.mutable_data()[dst++] = t.data()[src];
    } while (advance(idx, out_dims));
    return {distinct, std::move(out)};
}

// Sum over the modes whose symbols are not in `keep`, preserving row-major
// accumulation order over the source.
Operand sum_out(const Operand& op, const std::unordered_set<char>& keep) {
    std::string kept_syms;
    std::vector<std::size_t> kept_modes;
    for (std::size_t m = 0; m < op.syms.size(); ++m) {
        if (keep.count(op.syms[m])) {
            kept_syms += op.syms[m];
            kept_modes.push_back(m);
        }
    }
    if (kept_syms.size() == op.syms.size()) return op;

    std::vector<std::size_t> out_dims;
    for (std::size_t m : kept_modes) out_dims.push_back(op.tensor.dim(m));

    DenseTensor out(out_dims);
    const auto out_strides = row_major_strides(out_dims);
    const auto& dims = op.tensor.dims();
    std::vector<std::size_t> idx(dims.size(), 0);
    std::size_t src = 0;
    do {
        std::size_t dst = 0;
        for (std::size_t i = 0; i < kept_modes.size(); ++i) {
            dst += idx[kept_modes[i]] * out_strides[i];
        }
        out.mutable_data()[dst] += op.tensor.data()[src++];
    } while (advance(idx, dims));
    return {kept_syms, std::move(out)};
}

std::vector<std::size_t> mode_order_for(const std::string& syms,
                                        const std::string& target) {
    std::vector<std::size_t> order;
    order.reserve(target.size());
    for (char c : target) order.push_back(syms.find(c));
    return order;
}

// One pairwise contraction: batch symbols stay, shared-dead symbols are
// summed, everything else crosses. Runs as a (batched) matmul.
Operand contract_pair(const Operand& lhs, const Operand& rhs,
                      const std::unordered_set<char>& needed_later) {
    std::unordered_set<char> rhs_syms(rhs.syms.begin(), rhs.syms.end());

    std::string batch, left_only, shared_dead, right_only;
    for (char c : lhs.syms) {
        if (rhs_syms.count(c)) {
            if (needed_later.count(c)) batch += c;
            else shared_dead += c;
        } else {
            left_only += c;
        }
    }
    std::unordered_set<char> lhs_syms(lhs.syms.begin(), lhs.syms.end());
    for (char c : rhs.syms) {
        if (!lhs_syms.count(c)) right_only += c;
    }

    const DenseTensor l =
        lhs.tensor.permute(mode_order_for(lhs.syms, batch + left_only + shared_dead));
    const DenseTensor r =
        rhs.tensor.permute(mode_order_for(rhs.syms, batch + shared_dead + right_only));

    std::size_t nb = 1, nm = 1, nk = 1, nn = 1;
    {
        std::size_t i = 0;
        for (std::size_t c = 0; c < batch.size(); ++c) nb *= l.dim(i++);
        for (std::size_t c = 0; c < left_only.size(); ++c) nm *= l.dim(i++);
        for (std::size_t c = 0; c < shared_dead.size(); ++c) nk *= l.dim(i++);
        i = batch.size() + shared_dead.size();
        for (std::size_t c = 0; c < right_only.size(); ++c) nn *= r.dim(i++);
    }

    std::vector<std::size_t> out_dims;
    std::string out_syms = batch + left_only + right_only;
    {
        std::size_t i = 0;
        for (std::size_t c = 0; c < batch.size(); ++c) out_dims.push_back(l.dim(i++));
        for (std::size_t c = 0; c < left_only.size(); ++c) out_dims.push_back(l.dim(i++));
        i = batch.size() + shared_dead.size();
        for (std::size_t c = 0; c < right_only.size(); ++c) out_dims.push_back(r.dim(i++));
    }

    DenseTensor out(out_dims);
    for (std::size_t b = 0; b < nb; ++b) {
        kernels::matmul(out.mutable_data().data() + b * nm * nn,
                        l.data().data() + b * nm * nk,
                        r.data().data() + b * nk * nn, nm, nk, nn);
    }
    return {std::move(out_syms), std::move(out)};
}

} // namespace

DenseTensor contract(const std::vector<DenseTensor>& inputs,
                     const ContractionSpec& spec) {
    std::vector<std::size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), 0);
    return contract(inputs, spec, order);
}

DenseTensor contract(const std::vector<DenseTensor>& inputs,
                     std::string_view spec_text) {
    return contract(inputs, ContractionSpec::parse(spec_text));
}

DenseTensor contract(const std::vector<DenseTensor>& inputs,
                     const ContractionSpec& spec,
                     const std::vector<std::size_t>& order) {
    if (inputs.empty() || spec.inputs.size() != inputs.size()) {
        fail(ErrorCode::SpecMismatch, "spec lists " +
                                          std::to_string(spec.inputs.size()) +
                                          " inputs, got " +
                                          std::to_string(inputs.size()));
    }
    if (order.size() != inputs.size()) {
        fail(ErrorCode::SpecMismatch, "contraction order length != input count");
    }
    {
        std::vector<bool> seen(inputs.size(), false);
        for (std::size_t p : order) {
            if (p >= inputs.size() || seen[p]) {
                fail(ErrorCode::SpecMismatch,
                     "contraction order is not a permutation of the inputs");
            }
            seen[p] = true;
        }
    }

    // Symbol/size agreement across all inputs.
    std::unordered_map<char, std::size_t> sizes;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        const auto& syms = spec.inputs[t];
        if (syms.size() != inputs[t].rank()) {
            fail(ErrorCode::SpecMismatch,
                 "input " + std::to_string(t) + " has rank " +
                     std::to_string(inputs[t].rank()) + " but spec gives " +
                     std::to_string(syms.size()) + " symbols");
        }
        for (std::size_t m = 0; m < syms.size(); ++m) {
            auto [it, fresh] = sizes.emplace(syms[m], inputs[t].dim(m));
            if (!fresh && it->second != inputs[t].dim(m)) {
                fail(ErrorCode::SpecMismatch,
                     std::string("symbol '") + syms[m] +
                         "' used with conflicting sizes");
            }
        }
    }
    for (char c : spec.output) {
        if (!sizes.count(c)) {
            fail(ErrorCode::SpecMismatch,
                 std::string("output symbol '") + c + "' missing from inputs");
        }
    }

    std::vector<Operand> ops;
    ops.reserve(inputs.size());
    for (std::size_t t : order) {
        ops.push_back(collapse_diagonal(inputs[t], spec.inputs[t]));
    }

    Operand acc = std::move(ops.front());
    for (std::size_t step = 1; step < ops.size(); ++step) {
        std::unordered_set<char> needed(spec.output.begin(), spec.output.end());
        for (std::size_t later = step + 1; later < ops.size(); ++later) {
            for (char c : ops[later].syms) needed.insert(c);
        }
        // Symbols dead on one side only are summed out before pairing.
        {
            std::unordered_set<char> keep = needed;
            for (char c : ops[step].syms) keep.insert(c);
            acc = sum_out(acc, keep);
        }
        {
            std::unordered_set<char> keep = needed;
            for (char c : acc.syms) keep.insert(c);
            ops[step] = sum_out(ops[step], keep);
        }
        acc = contract_pair(acc, ops[step], needed);
    }

    acc = sum_out(acc, std::unordered_set<char>(spec.output.begin(),
                                                spec.output.end()));
    return acc.tensor.permute(mode_order_for(acc.syms, spec.output));
}

DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b) {
    if (!a.same_shape(b)) {
        fail(ErrorCode::SizeMismatch, "hadamard operands must share dims");
    }
    DenseTensor out(a.dims());
    kernels::hadamard(out.mutable_data().data(), a.data().data(),
                      b.data().data(), a.size());
    return out;
}

double frobenius_norm(const DenseTensor& t) {
    return std::sqrt(kernels::sumsq(t.data().data(), t.size()));
}

DenseTensor copy_tensor(std::size_t n_modes, std::size_t dim) {
    DenseTensor out(std::vector<std::size_t>(n_modes, dim));
    if (n_modes == 0) {
        out.mutable_data()[0] = 1.0;
        return out;
    }
    std::size_t diag_stride = 0;
    for (std::size_t m = 0, s = 1; m < n_modes; ++m) {
        diag_stride += s;
        s *= dim;
    }
    for (std::size_t i = 0; i < dim; ++i) {
        out.mutable_data()[i * diag_stride] = 1.0;
    }
    return out;
}

DenseTensor constant_vector(std::size_t n, double alpha) {
    return DenseTensor({n}, std::vector<double>(n, alpha));
}

DenseTensor ones_vector(std::size_t n) { return constant_vector(n, 1.0); }

DenseTensor identity_matrix(std::size_t n) { return copy_tensor(2, n); }

} // namespace ktnz
