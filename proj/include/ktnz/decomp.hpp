#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ktnz/conv.hpp"
#include "ktnz/tensor.hpp"

namespace ktnz {

/// Tucker factors in kernel mode order (OUT, IN, KH, KW). Mode matrices have
/// orthonormal columns; the core absorbs the singular values, which are kept
/// alongside as per-mode metadata (full spectra, descending).
struct TuckerFactors {
    DenseTensor core;
    std::array<DenseTensor, 4> modes;
    std::array<std::vector<double>, 4> singvals;
    std::array<std::size_t, 4> ranks;
};

/// Plain HOSVD (no HOOI refinement): mode matrix i holds the top-ranks[i]
/// left singular vectors of the mode-i matricization. nullopt ranks = full.
TuckerFactors hosvd(const Kernel& k,
                    std::optional<std::array<std::size_t, 4>> ranks = {});

Kernel tucker_reconstruct(const TuckerFactors& f);

/// CP factors: four (mode_dim x rank) matrices with unit-norm columns;
/// weights carry the magnitudes, sorted descending.
struct CpFactors {
    std::size_t rank = 0;
    std::array<DenseTensor, 4> factors;
    std::vector<double> weights;
};

struct CpAlsOptions {
    std::size_t max_iters = 500;
    double tol = 1e-8;
    std::uint64_t seed = 0;
};

struct CpAlsResult {
    CpFactors factors;
    bool converged = false;
    /// Relative fit error after each sweep; last entry is the final fit.
    std::vector<double> fit_trace;

    double final_fit() const { return fit_trace.empty() ? 0.0 : fit_trace.back(); }
};

/// Alternating least squares with per-sweep column renormalization and ridge
/// repair of ill-conditioned normal matrices. Not converging within
/// max_iters is not an error; the flag reports it.
CpAlsResult cp_als(const Kernel& k, std::size_t rank,
                   const CpAlsOptions& opts = {});

Kernel cp_reconstruct(const CpFactors& f);

/// Tensor-train cores for a 4-mode kernel; boundary cores have a singleton
/// bond. bond_spectra[k] is the full singular spectrum observed at bond k
/// during the sweep (equal to the bipartition spectrum of the first k modes
/// of the permuted kernel when earlier bonds are untruncated).
struct TtFactors {
    std::vector<DenseTensor> cores;
    std::vector<std::size_t> bond_dims;
    std::vector<std::vector<double>> bond_spectra;
    std::array<std::size_t, 4> mode_order{0, 1, 2, 3};
};

/// Sequential-SVD sweep: matricize, SVD, truncate to max_bond, carry S*V
/// forward. nullopt bonds = full (lossless).
TtFactors tt_svd(const Kernel& k,
                 std::optional<std::array<std::size_t, 3>> max_bond = {},
                 std::array<std::size_t, 4> mode_order = {0, 1, 2, 3});

Kernel tt_reconstruct(const TtFactors& f);

} // namespace ktnz
