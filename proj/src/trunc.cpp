#include "ktnz/trunc.hpp"

#include <algorithm>
#include <cmath>

#include "ktnz/errors.hpp"
#include "ktnz/linalg.hpp"

namespace ktnz {

namespace {

const std::array<const char*, 4> kModeNames{"OUT", "IN", "KH", "KW"};

std::size_t mode_index(std::string_view name) {
    for (std::size_t i = 0; i < 4; ++i) {
        if (name == kModeNames[i]) return i;
    }
    fail(ErrorCode::BadConfig, "unknown kernel mode: " + std::string(name));
}

} // namespace

Bipartition::Bipartition(std::vector<std::size_t> left_modes)
    : left_(std::move(left_modes)) {
    std::sort(left_.begin(), left_.end());
    if (left_.empty() || left_.size() > 3) {
        fail(ErrorCode::BadConfig, "bipartition needs 1..3 modes on the left");
    }
    for (std::size_t i = 0; i < left_.size(); ++i) {
        if (left_[i] > 3 || (i > 0 && left_[i] == left_[i - 1])) {
            fail(ErrorCode::BadConfig, "bipartition modes must be distinct kernel modes");
        }
    }
}

Bipartition Bipartition::parse(std::string_view text) {
    std::vector<std::size_t> modes;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view token = text.substr(start, end - start);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        if (!token.empty()) modes.push_back(mode_index(token));
        if (end == text.size()) break;
        start = end + 1;
    }
    return Bipartition(std::move(modes));
}

std::vector<std::size_t> Bipartition::right() const {
    std::vector<std::size_t> r;
    for (std::size_t m = 0; m < 4; ++m) {
        if (std::find(left_.begin(), left_.end(), m) == left_.end()) {
            r.push_back(m);
        }
    }
    return r;
}

Bipartition Bipartition::complement() const { return Bipartition(right()); }

std::string Bipartition::name() const {
    std::string out;
    for (std::size_t m : left_) {
        if (!out.empty()) out += ',';
        out += kModeNames[m];
    }
    return out;
}

const std::vector<Bipartition>& Bipartition::studied() {
    static const std::vector<Bipartition> cuts = [] {
        std::vector<Bipartition> v;
        v.push_back(Bipartition({0}));
        v.push_back(Bipartition({1}));
        v.push_back(Bipartition({3}));
        v.push_back(Bipartition({2}));
        v.push_back(Bipartition({0, 1}));
        v.push_back(Bipartition({0, 3}));
        v.push_back(Bipartition({0, 2}));
        return v;
    }();
    return cuts;
}

DenseTensor matricize(const Kernel& k, const Bipartition& b) {
    std::vector<std::size_t> order = b.left();
    const std::vector<std::size_t> right = b.right();
    order.insert(order.end(), right.begin(), right.end());

    std::size_t rows = 1, cols = 1;
    for (std::size_t m : b.left()) rows *= k.tensor().dim(m);
    for (std::size_t m : right) cols *= k.tensor().dim(m);
    return k.tensor().permute(order).reshape({rows, cols});
}

Kernel dematricize(const DenseTensor& m, const Bipartition& b,
                   const std::array<std::size_t, 4>& kernel_dims) {
    std::vector<std::size_t> order = b.left();
    const std::vector<std::size_t> right = b.right();
    order.insert(order.end(), right.begin(), right.end());

    std::vector<std::size_t> permuted_dims;
    for (std::size_t mode : order) permuted_dims.push_back(kernel_dims[mode]);

    std::vector<std::size_t> inverse(4);
    for (std::size_t i = 0; i < 4; ++i) inverse[order[i]] = i;
    return Kernel(m.reshape(permuted_dims).permute(inverse));
}

double entanglement_entropy(const std::vector<double>& s) {
    double total = 0.0;
    for (double v : s) total += v * v;
    if (!(total > 0.0)) {
        fail(ErrorCode::ZeroSpectrum, "entropy of an all-zero spectrum");
    }
    double e = 0.0;
    for (double v : s) {
        const double p = v * v / total;
        if (p > 0.0) e -= p * std::log(p);
    }
    return e < 0.0 ? 0.0 : e;
}

double norm_loss_pct(double before, double after) {
    if (!(before > 0.0)) return 0.0;
    // Rounding can leave after a hair above before at keep == n_sv; the
    // report contract keeps the loss in [0, 100].
    return std::max(0.0, (before - after) / before * 100.0);
}

double corr_loss_pct(double e_before, double e_after) {
    if (!(e_before > 0.0)) return 0.0;
    return (e_before - e_after) / e_before * 100.0;
}

double compression_ratio_svd(const Bipartition& b,
                             const std::array<std::size_t, 4>& dims,
                             std::size_t keep) {
    std::size_t rows = 1, cols = 1, total = 1;
    for (std::size_t m : b.left()) rows *= dims[m];
    for (std::size_t m : b.right()) cols *= dims[m];
    for (std::size_t d : dims) total *= d;
    return static_cast<double>(total) /
           (static_cast<double>(keep) * static_cast<double>(rows + cols + 1));
}

std::vector<double> spectrum(const Kernel& k, const Bipartition& b) {
    return svd(matricize(k, b)).s;
}

std::pair<Kernel, TruncationReport>
truncate_bipartition(const Kernel& k, const Bipartition& b, std::size_t keep) {
    const std::array<std::size_t, 4> dims{k.tensor().dim(0), k.tensor().dim(1),
                                          k.tensor().dim(2), k.tensor().dim(3)};
    std::size_t rows = 1, cols = 1;
    for (std::size_t m : b.left()) rows *= dims[m];
    for (std::size_t m : b.right()) cols *= dims[m];
    const std::size_t n_sv = std::min(rows, cols);
    if (keep < 1 || keep > n_sv) {
        fail(ErrorCode::BadRank, "keep must lie in [1, " + std::to_string(n_sv) +
                                     "], got " + std::to_string(keep));
    }

    TruncationReport rep;
    rep.cut = b.name();
    rep.kept = keep;
    rep.compression_ratio = compression_ratio_svd(b, dims, keep);

    const double norm_before = frobenius_norm(k.tensor());
    if (norm_before < kZeroKernelNorm) {
        rep.zero_kernel = true;
        return {k, rep};
    }

    const SvdFactors f = svd(matricize(k, b));
    const DenseTensor truncated = truncated_reconstruct(f, keep);
    Kernel out = dematricize(truncated, b, dims);

    rep.norm_before = norm_before;
    rep.norm_after = frobenius_norm(out.tensor());
    rep.norm_loss_pct = norm_loss_pct(rep.norm_before, rep.norm_after);
    rep.entropy_before = entanglement_entropy(f.s);
    rep.entropy_after = entanglement_entropy(
        std::vector<double>(f.s.begin(), f.s.begin() + keep));
    rep.corr_loss_pct = corr_loss_pct(rep.entropy_before, rep.entropy_after);
    return {std::move(out), rep};
}

std::pair<Kernel, TruncationReport>
truncate_cp(const Kernel& k, std::size_t rank, const CpAlsOptions& opts) {
    if (rank < 1) fail(ErrorCode::BadRank, "CP rank must be >= 1");
    const std::array<std::size_t, 4> dims{k.tensor().dim(0), k.tensor().dim(1),
                                          k.tensor().dim(2), k.tensor().dim(3)};

    TruncationReport rep;
    rep.cut = "CP";
    rep.kept = rank;
    const std::size_t dense = dims[0] * dims[1] * dims[2] * dims[3];
    const std::size_t mode_sum = dims[0] + dims[1] + dims[2] + dims[3];
    rep.compression_ratio = static_cast<double>(dense) /
                            (static_cast<double>(rank) * mode_sum + rank);

    const double norm_before = frobenius_norm(k.tensor());
    if (norm_before < kZeroKernelNorm) {
        rep.zero_kernel = true;
        return {k, rep};
    }

    const CpAlsResult als = cp_als(k, rank, opts);
    Kernel out = cp_reconstruct(als.factors);

    const Bipartition out_cut({0});
    rep.norm_before = norm_before;
    rep.norm_after = frobenius_norm(out.tensor());
    rep.norm_loss_pct = norm_loss_pct(rep.norm_before, rep.norm_after);
    rep.entropy_before = entanglement_entropy(spectrum(k, out_cut));
    const std::vector<double> spec_after = spectrum(out, out_cut);
    double total_after = 0.0;
    for (double v : spec_after) total_after += v * v;
    rep.entropy_after = total_after > 0.0 ? entanglement_entropy(spec_after) : 0.0;
    rep.corr_loss_pct = corr_loss_pct(rep.entropy_before, rep.entropy_after);
    return {std::move(out), rep};
}

} // namespace ktnz
