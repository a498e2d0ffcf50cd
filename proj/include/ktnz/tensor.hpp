#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace ktnz {

/// Dense N-mode tensor of doubles, row-major (last mode fastest).
/// Values are immutable in spirit: every operation returns a new tensor.
class DenseTensor {
public:
    /// Scalar (rank 0, one element, value 0).
    DenseTensor();

    /// Zero-filled tensor.
    explicit DenseTensor(std::vector<std::size_t> dims);

    DenseTensor(std::vector<std::size_t> dims, std::vector<double> data);

    DenseTensor(std::vector<std::size_t> dims, std::vector<double> data,
                std::vector<std::string> mode_labels);

    std::size_t rank() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t dim(std::size_t i) const { return dims_[i]; }
    std::size_t size() const { return data_.size(); }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& mutable_data() { return data_; }

    /// Empty when the tensor carries no labels.
    const std::vector<std::string>& mode_labels() const { return labels_; }
    bool has_labels() const { return !labels_.empty(); }
    DenseTensor with_labels(std::vector<std::string> labels) const;

    double at(std::initializer_list<std::size_t> idx) const;
    double at(const std::vector<std::size_t>& idx) const;
    double& at_mut(const std::vector<std::size_t>& idx);
    double at_flat(std::size_t i) const { return data_[i]; }

    /// Row-major reinterpretation; element count must match. Labels drop.
    DenseTensor reshape(std::vector<std::size_t> new_dims) const;

    /// result.dims[i] == dims[order[i]]; labels permuted alongside.
    DenseTensor permute(const std::vector<std::size_t>& order) const;

    bool same_shape(const DenseTensor& other) const {
        return dims_ == other.dims_;
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<double> data_;
    std::vector<std::string> labels_;

    void check_invariants() const;
};

/// Einsum-style wiring: one subscript string per input plus an output
/// subscript, e.g. parse("ij,jk->ik"). Symbols are single characters.
struct ContractionSpec {
    std::vector<std::string> inputs;
    std::string output;

    static ContractionSpec parse(std::string_view text);
};

/// Contract a tensor network. Multi-tensor specs fold pairwise in `order`
/// (default left-to-right); each pairwise step is permute -> reshape ->
/// matmul, so the engine's multiply tally obeys the product-of-index-sizes
/// cost rule step by step.
DenseTensor contract(const std::vector<DenseTensor>& inputs,
                     const ContractionSpec& spec);
DenseTensor contract(const std::vector<DenseTensor>& inputs,
                     const ContractionSpec& spec,
                     const std::vector<std::size_t>& order);
DenseTensor contract(const std::vector<DenseTensor>& inputs,
                     std::string_view spec_text);

/// Elementwise product; shapes must match.
DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b);

double frobenius_norm(const DenseTensor& t);

/// n_modes-way delta tensor: 1 where all indices agree, else 0.
DenseTensor copy_tensor(std::size_t n_modes, std::size_t dim);

/// Vector with every component alpha.
DenseTensor constant_vector(std::size_t n, double alpha);
DenseTensor ones_vector(std::size_t n);

DenseTensor identity_matrix(std::size_t n);

/// Row-major flat offset of a multi-index.
std::size_t flat_index(const std::vector<std::size_t>& dims,
                       const std::vector<std::size_t>& idx);

std::size_t product(const std::vector<std::size_t>& dims);

} // namespace ktnz
