#include "ktnz/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ktnz/errors.hpp"
#include "ktnz/kernels.hpp"
#include "ktnz/linalg.hpp"

namespace ktnz {

namespace {

// Mode-m unfolding: mode m first, remaining modes in natural order.
DenseTensor unfold(const DenseTensor& t, std::size_t mode) {
    std::vector<std::size_t> order{mode};
    for (std::size_t i = 0; i < t.rank(); ++i) {
        if (i != mode) order.push_back(i);
    }
    const DenseTensor p = t.permute(order);
    return p.reshape({t.dim(mode), t.size() / t.dim(mode)});
}

std::size_t feasible_rank(const DenseTensor& t, std::size_t mode) {
    return std::min(t.dim(mode), t.size() / t.dim(mode));
}

DenseTensor first_columns(const DenseTensor& m, std::size_t k) {
    const std::size_t rows = m.dim(0), cols = m.dim(1);
    DenseTensor out({rows, k});
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            out.mutable_data()[i * k + j] = m.data()[i * cols + j];
        }
    }
    return out;
}

double uniform_pm1(std::mt19937_64& eng) {
    // [0,1) from the top 53 bits, mapped to [-1,1); stdlib-distribution-free
    // so results are identical across standard libraries.
    const double u = static_cast<double>(eng() >> 11) * 0x1p-53;
    return 2.0 * u - 1.0;
}

} // namespace

TuckerFactors hosvd(const Kernel& k,
                    std::optional<std::array<std::size_t, 4>> ranks) {
    const DenseTensor& t = k.tensor();

    TuckerFactors f;
    for (std::size_t m = 0; m < 4; ++m) {
        const std::size_t feasible = feasible_rank(t, m);
        const std::size_t want = ranks ? (*ranks)[m] : feasible;
        if (want < 1 || want > feasible) {
            fail(ErrorCode::BadRank,
                 "mode " + std::to_string(m) + " rank must lie in [1, " +
                     std::to_string(feasible) + "], got " + std::to_string(want));
        }
        const SvdFactors sf = svd(unfold(t, m));
        f.modes[m] = first_columns(sf.u, want);
        f.singvals[m] = sf.s;
        f.ranks[m] = want;
    }

    f.core = contract({t, f.modes[0], f.modes[1], f.modes[2], f.modes[3]},
                      "oikw,oa,ib,kc,wd->abcd");
    return f;
}

Kernel tucker_reconstruct(const TuckerFactors& f) {
    if (f.core.rank() != 4) {
        fail(ErrorCode::SizeMismatch, "tucker core must be rank 4");
    }
    for (std::size_t m = 0; m < 4; ++m) {
        if (f.modes[m].rank() != 2 || f.modes[m].dim(1) != f.core.dim(m)) {
            fail(ErrorCode::SizeMismatch,
                 "mode matrix " + std::to_string(m) + " disagrees with core");
        }
    }
    return Kernel(contract({f.core, f.modes[0], f.modes[1], f.modes[2], f.modes[3]},
                           "abcd,oa,ib,kc,wd->oikw"));
}

namespace {

// Khatri-Rao product of the three factors other than `mode`, with rows
// enumerating the unfolding's column multi-index in natural order.
DenseTensor krp_others(const std::array<DenseTensor, 4>& f, std::size_t mode,
                       std::size_t r) {
    std::vector<const DenseTensor*> others;
    for (std::size_t m = 0; m < 4; ++m) {
        if (m != mode) others.push_back(&f[m]);
    }
    const std::size_t d0 = others[0]->dim(0), d1 = others[1]->dim(0),
                      d2 = others[2]->dim(0);
    DenseTensor z({d0 * d1 * d2, r});
    double* out = z.mutable_data().data();
    for (std::size_t i0 = 0; i0 < d0; ++i0) {
        for (std::size_t i1 = 0; i1 < d1; ++i1) {
            for (std::size_t i2 = 0; i2 < d2; ++i2) {
                for (std::size_t a = 0; a < r; ++a) {
                    *out++ = others[0]->data()[i0 * r + a] *
                             others[1]->data()[i1 * r + a] *
                             others[2]->data()[i2 * r + a];
                }
            }
        }
    }
    return z;
}

DenseTensor gram(const DenseTensor& a) {
    const std::size_t n = a.dim(0), r = a.dim(1);
    const DenseTensor at = a.permute({1, 0});
    DenseTensor g({r, r});
    kernels::matmul(g.mutable_data().data(), at.data().data(), a.data().data(),
                    r, n, r);
    return g;
}

// Solve X * G = M for X given symmetric PSD G, with ridge repair when the
// conditioning exceeds 1e12.
DenseTensor solve_normal(const DenseTensor& m, DenseTensor g) {
    const std::size_t r = g.dim(0);
    SvdFactors sf = svd(g);
    const double s_max = sf.s.front();
    const double s_min = sf.s.back();
    if (!(s_min > 0.0) || s_max / s_min > 1e12) {
        double trace = 0.0;
        for (std::size_t i = 0; i < r; ++i) trace += g.data()[i * r + i];
        if (!(trace > 0.0)) {
            fail(ErrorCode::SingularUpdate,
                 "normal matrix is singular beyond ridge repair");
        }
        for (std::size_t i = 0; i < r; ++i) {
            g.mutable_data()[i * r + i] += 1e-12 * trace;
        }
        sf = svd(g);
    }
    // X = M * G^-1 = M * v^T diag(1/s) u^T
    const std::size_t rows = m.dim(0);
    const DenseTensor vt = sf.v.permute({1, 0}); // r x r
    DenseTensor mv({rows, r});
    kernels::matmul(mv.mutable_data().data(), m.data().data(), vt.data().data(),
                    rows, r, r);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            mv.mutable_data()[i * r + j] =
                sf.s[j] > 0.0 ? mv.data()[i * r + j] / sf.s[j] : 0.0;
        }
    }
    const DenseTensor ut = sf.u.permute({1, 0});
    DenseTensor x({rows, r});
    kernels::matmul(x.mutable_data().data(), mv.data().data(), ut.data().data(),
                    rows, r, r);
    return x;
}

// Normalize columns to unit norm; returns per-column norms.
std::vector<double> normalize_columns(DenseTensor& a) {
    const std::size_t n = a.dim(0), r = a.dim(1);
    std::vector<double> norms(r, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = a.data()[i * r + j];
            acc += v * v;
        }
        norms[j] = std::sqrt(acc);
        if (norms[j] > 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                a.mutable_data()[i * r + j] /= norms[j];
            }
        }
    }
    return norms;
}

} // namespace

Kernel cp_reconstruct(const CpFactors& f) {
    const std::size_t r = f.rank;
    if (f.weights.size() != r) {
        fail(ErrorCode::SizeMismatch, "weights length must equal rank");
    }
    std::array<std::size_t, 4> d{};
    for (std::size_t m = 0; m < 4; ++m) {
        if (f.factors[m].rank() != 2 || f.factors[m].dim(1) != r) {
            fail(ErrorCode::SizeMismatch,
                 "factor " + std::to_string(m) + " must be (dim x rank)");
        }
        d[m] = f.factors[m].dim(0);
    }
    DenseTensor out({d[0], d[1], d[2], d[3]});
    double* dst = out.mutable_data().data();
    const auto& f0 = f.factors[0].data();
    const auto& f1 = f.factors[1].data();
    const auto& f2 = f.factors[2].data();
    const auto& f3 = f.factors[3].data();
    std::size_t pos = 0;
    for (std::size_t o = 0; o < d[0]; ++o) {
        for (std::size_t i = 0; i < d[1]; ++i) {
            for (std::size_t kh = 0; kh < d[2]; ++kh) {
                for (std::size_t kw = 0; kw < d[3]; ++kw) {
                    double acc = 0.0;
                    for (std::size_t a = 0; a < r; ++a) {
                        acc += f.weights[a] * f0[o * r + a] * f1[i * r + a] *
                               f2[kh * r + a] * f3[kw * r + a];
                    }
                    dst[pos++] = acc;
                }
            }
        }
    }
    return Kernel(std::move(out));
}

CpAlsResult cp_als(const Kernel& k, std::size_t rank, const CpAlsOptions& opts) {
    if (rank < 1) fail(ErrorCode::BadRank, "CP rank must be >= 1");
    const DenseTensor& t = k.tensor();
    const std::array<std::size_t, 4> dims{t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
    const double norm_k = frobenius_norm(t);

    std::array<DenseTensor, 4> unfoldings{unfold(t, 0), unfold(t, 1),
                                          unfold(t, 2), unfold(t, 3)};

    // Init: HOSVD leading vectors when the rank fits every mode, otherwise
    // seeded uniform in [-1, 1].
    std::array<DenseTensor, 4> factors;
    const bool hosvd_init =
        rank <= *std::min_element(dims.begin(), dims.end());
    if (hosvd_init) {
        for (std::size_t m = 0; m < 4; ++m) {
            factors[m] = first_columns(svd(unfoldings[m]).u, rank);
        }
    } else {
        std::mt19937_64 eng(opts.seed);
        for (std::size_t m = 0; m < 4; ++m) {
            DenseTensor f({dims[m], rank});
            for (double& v : f.mutable_data()) v = uniform_pm1(eng);
            factors[m] = std::move(f);
        }
    }

    std::vector<double> weights(rank, 1.0);
    CpAlsResult result;

    auto current_fit = [&]() {
        CpFactors f{rank, factors, weights};
        const Kernel recon = cp_reconstruct(f);
        double diff_sq = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double d = t.data()[i] - recon.tensor().data()[i];
            diff_sq += d * d;
        }
        return norm_k > 0.0 ? std::sqrt(diff_sq) / norm_k : std::sqrt(diff_sq);
    };

    double prev_fit = -1.0;
    for (std::size_t sweep = 0; sweep < opts.max_iters; ++sweep) {
        // Fold current weights into mode 0 so the working factors carry the
        // full magnitude during the sweep.
        for (std::size_t i = 0; i < dims[0]; ++i) {
            for (std::size_t a = 0; a < rank; ++a) {
                factors[0].mutable_data()[i * rank + a] *= weights[a];
            }
        }
        std::fill(weights.begin(), weights.end(), 1.0);

        for (std::size_t mode = 0; mode < 4; ++mode) {
            const DenseTensor z = krp_others(factors, mode, rank);
            DenseTensor m({dims[mode], rank});
            kernels::matmul(m.mutable_data().data(),
                            unfoldings[mode].data().data(), z.data().data(),
                            dims[mode], z.dim(0), rank);
            // Gamma = hadamard of the other factors' Gram matrices.
            DenseTensor gamma({rank, rank},
                              std::vector<double>(rank * rank, 1.0));
            for (std::size_t other = 0; other < 4; ++other) {
                if (other == mode) continue;
                const DenseTensor g = gram(factors[other]);
                kernels::hadamard(gamma.mutable_data().data(),
                                  gamma.data().data(), g.data().data(),
                                  rank * rank);
            }
            factors[mode] = solve_normal(m, std::move(gamma));
        }

        // Renormalize columns into weights; keep components sorted by weight.
        std::array<std::vector<double>, 4> col_norms;
        for (std::size_t m = 0; m < 4; ++m) {
            col_norms[m] = normalize_columns(factors[m]);
        }
        for (std::size_t a = 0; a < rank; ++a) {
            weights[a] = col_norms[0][a] * col_norms[1][a] * col_norms[2][a] *
                         col_norms[3][a];
        }
        std::vector<std::size_t> perm(rank);
        std::iota(perm.begin(), perm.end(), 0);
        std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
            return weights[a] > weights[b];
        });
        std::vector<double> new_weights(rank);
        for (std::size_t a = 0; a < rank; ++a) new_weights[a] = weights[perm[a]];
        weights = std::move(new_weights);
        for (std::size_t m = 0; m < 4; ++m) {
            DenseTensor shuffled({dims[m], rank});
            for (std::size_t i = 0; i < dims[m]; ++i) {
                for (std::size_t a = 0; a < rank; ++a) {
                    shuffled.mutable_data()[i * rank + a] =
                        factors[m].data()[i * rank + perm[a]];
                }
            }
            factors[m] = std::move(shuffled);
        }

        const double fit = current_fit();
        result.fit_trace.push_back(fit);
        if (prev_fit >= 0.0 && std::abs(prev_fit - fit) < opts.tol) {
            result.converged = true;
            break;
        }
        prev_fit = fit;
    }

    result.factors = CpFactors{rank, std::move(factors), std::move(weights)};
    return result;
}

TtFactors tt_svd(const Kernel& k,
                 std::optional<std::array<std::size_t, 3>> max_bond,
                 std::array<std::size_t, 4> mode_order) {
    const DenseTensor& t = k.tensor();
    const std::vector<std::size_t> order(mode_order.begin(), mode_order.end());
    const DenseTensor permuted = t.permute(order);
    const std::array<std::size_t, 4> e{permuted.dim(0), permuted.dim(1),
                                       permuted.dim(2), permuted.dim(3)};

    if (max_bond) {
        for (std::size_t b : *max_bond) {
            if (b < 1) fail(ErrorCode::BadRank, "TT bond dims must be >= 1");
        }
    }

    TtFactors f;
    f.mode_order = mode_order;

    DenseTensor carry = permuted.reshape({e[0], e[1] * e[2] * e[3]});
    std::size_t left = 1;
    for (std::size_t bond = 0; bond < 3; ++bond) {
        const std::size_t rows = left * e[bond];
        const std::size_t cols = carry.size() / rows;
        const SvdFactors sf = svd(carry.reshape({rows, cols}));
        f.bond_spectra.push_back(sf.s);
        const std::size_t keep =
            max_bond ? std::min((*max_bond)[bond], sf.n_sv()) : sf.n_sv();
        f.bond_dims.push_back(keep);

        f.cores.push_back(first_columns(sf.u, keep).reshape({left, e[bond], keep}));

        // carry = diag(s[:keep]) * v[:keep, :]
        DenseTensor next({keep, cols});
        for (std::size_t i = 0; i < keep; ++i) {
            kernels::scale(next.mutable_data().data() + i * cols,
                           sf.v.data().data() + i * cols, sf.s[i], cols);
        }
        carry = std::move(next);
        left = keep;
    }
    f.cores.push_back(carry.reshape({left, e[3], 1}));
    return f;
}

Kernel tt_reconstruct(const TtFactors& f) {
    if (f.cores.size() != 4) {
        fail(ErrorCode::SizeMismatch, "expected 4 TT cores");
    }
    DenseTensor acc = contract({f.cores[0], f.cores[1]}, "lab,bcd->lacd");
    acc = contract({acc, f.cores[2]}, "lacd,def->lacef");
    acc = contract({acc, f.cores[3]}, "lacef,fgh->lacegh");
    // (1, e0, e1, e2, e3, 1) -> (e0, e1, e2, e3), then undo the mode order.
    acc = acc.reshape({acc.dim(1), acc.dim(2), acc.dim(3), acc.dim(4)});
    std::vector<std::size_t> inverse(4);
    for (std::size_t i = 0; i < 4; ++i) inverse[f.mode_order[i]] = i;
    return Kernel(acc.permute(inverse));
}

} // namespace ktnz
