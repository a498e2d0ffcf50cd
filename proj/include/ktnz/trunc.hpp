#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ktnz/conv.hpp"
#include "ktnz/decomp.hpp"

namespace ktnz {

/// A proper, nonempty subset of the kernel modes {OUT, IN, KH, KW},
/// identifying the matrix cut used for SVD truncation. Named by listing the
/// modes grouped on one side, e.g. "OUT,KW".
class Bipartition {
public:
    /// Mode indices into the canonical order (OUT=0, IN=1, KH=2, KW=3).
    explicit Bipartition(std::vector<std::size_t> left_modes);

    static Bipartition parse(std::string_view text);

    const std::vector<std::size_t>& left() const { return left_; }
    std::vector<std::size_t> right() const;
    Bipartition complement() const;
    std::string name() const;

    /// The seven cuts studied in the experiments.
    static const std::vector<Bipartition>& studied();

private:
    std::vector<std::size_t> left_; // ascending, 1..3 entries
};

/// Rows enumerate the left modes (canonical order), columns the rest.
DenseTensor matricize(const Kernel& k, const Bipartition& b);

/// Exact inverse of matricize given the original kernel dims.
Kernel dematricize(const DenseTensor& m, const Bipartition& b,
                   const std::array<std::size_t, 4>& kernel_dims);

/// Everything a single truncation did to a kernel.
struct TruncationReport {
    std::string cut;    // bipartition name, or "CP"
    std::size_t kept = 0; // singular values kept, or CP rank
    double norm_before = 0.0;
    double norm_after = 0.0;
    double norm_loss_pct = 0.0;
    double entropy_before = 0.0;
    double entropy_after = 0.0;
    double corr_loss_pct = 0.0;
    double compression_ratio = 0.0;
    bool zero_kernel = false; // metrics flagged zero, kernel left unchanged
};

/// SVD truncation across a bipartition: keep the largest `keep` singular
/// values of the matricization and fold the result back into a kernel.
std::pair<Kernel, TruncationReport>
truncate_bipartition(const Kernel& k, const Bipartition& b, std::size_t keep);

/// CP truncation: replace the kernel with the rank-`rank` ALS reconstruction.
/// Entropy fields are computed on the {OUT} bipartition of the before/after
/// kernels.
std::pair<Kernel, TruncationReport>
truncate_cp(const Kernel& k, std::size_t rank, const CpAlsOptions& opts = {});

/// Singular values of matricize(k, b), descending.
std::vector<double> spectrum(const Kernel& k, const Bipartition& b);

/// Shannon entropy of p_k = s_k^2 / sum s^2, with 0 ln 0 = 0. Throws
/// ZeroSpectrum when every value is zero.
double entanglement_entropy(const std::vector<double>& s);

/// (before - after) / before * 100; returns 0 when before is not positive.
double norm_loss_pct(double before, double after);
double corr_loss_pct(double e_before, double e_after);

/// Dense parameter count over factored storage U(:, :keep), s(:keep),
/// V(:keep, :). May fall below 1: truncation can inflate the count.
double compression_ratio_svd(const Bipartition& b,
                             const std::array<std::size_t, 4>& dims,
                             std::size_t keep);

/// Threshold under which a kernel counts as zero for truncation metrics.
inline constexpr double kZeroKernelNorm = 1e-12;

} // namespace ktnz
