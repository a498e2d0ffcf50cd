#include "ktnz/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ktnz/errors.hpp"
#include "ktnz/kernels.hpp"

namespace ktnz {

namespace {

constexpr int kMaxSweeps = 60;
constexpr double kGramTol = 1e-12;  // relative to ||M||_F^2
constexpr double kClampTol = 1e-14; // relative to s_max

// Column-major working matrix: col(j) is contiguous.
struct ColMat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    double* col(std::size_t j) { return a.data() + j * rows; }
    const double* col(std::size_t j) const { return a.data() + j * rows; }
};

ColMat to_colmajor(const DenseTensor& m, bool transpose) {
    const std::size_t r = m.dim(0), c = m.dim(1);
    ColMat out;
    out.rows = transpose ? c : r;
    out.cols = transpose ? r : c;
    out.a.resize(r * c);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double v = m.data()[i * c + j];
            if (transpose) out.a[i * c + j] = v; // col i gets row i of m
            else out.a[j * r + i] = v;
        }
    }
    return out;
}

void rotate_cols(ColMat& m, std::size_t i, std::size_t j, double cs, double sn) {
    double* ci = m.col(i);
    double* cj = m.col(j);
    for (std::size_t k = 0; k < m.rows; ++k) {
        const double t = ci[k];
        ci[k] = cs * t - sn * cj[k];
        cj[k] = sn * t + cs * cj[k];
    }
}

// Orthonormal completion for a zero column: first canonical basis vector
// with a healthy residual after projecting out the existing columns.
void complete_column(ColMat& u, std::size_t target,
                     const std::vector<bool>& filled) {
    const std::size_t p = u.rows;
    for (std::size_t cand = 0; cand < p; ++cand) {
        std::vector<double> vec(p, 0.0);
        vec[cand] = 1.0;
        for (std::size_t j = 0; j < u.cols; ++j) {
            if (!filled[j]) continue;
            const double proj = kernels::dot(u.col(j), vec.data(), p);
            kernels::axpy(vec.data(), -proj, u.col(j), p);
        }
        const double nrm = std::sqrt(kernels::sumsq(vec.data(), p));
        if (nrm > 0.5) {
            for (std::size_t k = 0; k < p; ++k) u.col(target)[k] = vec[k] / nrm;
            return;
        }
    }
    fail(ErrorCode::NoConvergence, "orthonormal completion failed");
}

} // namespace

SvdFactors svd(const DenseTensor& m) {
    if (m.rank() != 2) {
        fail(ErrorCode::SizeMismatch, "svd expects a rank-2 tensor, got rank " +
                                          std::to_string(m.rank()));
    }
    const std::size_t rows = m.dim(0), cols = m.dim(1);
    const bool transposed = rows < cols;

    ColMat w = to_colmajor(m, transposed); // tall: w.rows >= w.cols
    const std::size_t p = w.rows, q = w.cols;

    ColMat rot; // accumulated right rotations, q x q identity to start
    rot.rows = rot.cols = q;
    rot.a.assign(q * q, 0.0);
    for (std::size_t j = 0; j < q; ++j) rot.col(j)[j] = 1.0;

    const double norm_sq = kernels::sumsq(w.a.data(), w.a.size());
    const double off_tol = kGramTol * norm_sq;

    if (norm_sq > 0.0) {
        int sweep = 0;
        for (; sweep < kMaxSweeps; ++sweep) {
            bool rotated = false;
            for (std::size_t i = 0; i + 1 < q; ++i) {
                for (std::size_t j = i + 1; j < q; ++j) {
                    const double g = kernels::dot(w.col(i), w.col(j), p);
                    if (std::abs(g) < off_tol) continue;
                    rotated = true;
                    const double aii = kernels::sumsq(w.col(i), p);
                    const double ajj = kernels::sumsq(w.col(j), p);
                    const double zeta = (ajj - aii) / (2.0 * g);
                    const double t =
                        (zeta >= 0.0 ? 1.0 : -1.0) /
                        (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                    const double cs = 1.0 / std::sqrt(1.0 + t * t);
                    const double sn = cs * t;
                    rotate_cols(w, i, j, cs, sn);
                    rotate_cols(rot, i, j, cs, sn);
                }
            }
            if (!rotated) break;
        }
        if (sweep == kMaxSweeps) {
            fail(ErrorCode::NoConvergence,
                 "one-sided Jacobi did not converge in 60 sweeps");
        }
    }

    std::vector<double> sigma(q);
    for (std::size_t j = 0; j < q; ++j) {
        sigma[j] = std::sqrt(kernels::sumsq(w.col(j), p));
    }

    std::vector<std::size_t> perm(q);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        return sigma[a] > sigma[b];
    });

    const double s_max = sigma.empty() ? 0.0 : sigma[perm[0]];
    const double clamp = kClampTol * s_max;

    ColMat u; // p x q
    u.rows = p;
    u.cols = q;
    u.a.assign(p * q, 0.0);
    ColMat vt_cols; // rot columns permuted; col j = right vector j
    vt_cols.rows = q;
    vt_cols.cols = q;
    vt_cols.a.assign(q * q, 0.0);

    std::vector<double> s(q);
    std::vector<bool> filled(q, false);
    for (std::size_t j = 0; j < q; ++j) {
        const std::size_t src = perm[j];
        s[j] = sigma[src] <= clamp ? 0.0 : sigma[src];
        std::copy(rot.col(src), rot.col(src) + q, vt_cols.col(j));
        if (s[j] > 0.0) {
            const double inv = 1.0 / sigma[src];
            for (std::size_t k = 0; k < p; ++k) u.col(j)[k] = w.col(src)[k] * inv;
            filled[j] = true;
        }
    }
    for (std::size_t j = 0; j < q; ++j) {
        if (!filled[j]) {
            complete_column(u, j, filled);
            filled[j] = true;
        }
    }

    // Largest-magnitude entry of each left vector made nonnegative.
    for (std::size_t j = 0; j < q; ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        const double* const ucol = transposed ? vt_cols.col(j) : u.col(j);
        const std::size_t ulen = transposed ? q : p;
        for (std::size_t k = 0; k < ulen; ++k) {
            const double mag = std::abs(ucol[k]);
            if (mag > best) {
                best = mag;
                arg = k;
            }
        }
        if (ucol[arg] < 0.0) {
            for (std::size_t k = 0; k < p; ++k) u.col(j)[k] = -u.col(j)[k];
            for (std::size_t k = 0; k < q; ++k) vt_cols.col(j)[k] = -vt_cols.col(j)[k];
        }
    }

    // Assemble row-major factors in the caller's orientation.
    const std::size_t n_sv = q;
    DenseTensor fu({rows, n_sv});
    DenseTensor fv({n_sv, cols});
    if (!transposed) {
        // m = u * diag(s) * rot^T
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < n_sv; ++j) {
                fu.mutable_data()[i * n_sv + j] = u.col(j)[i];
            }
        }
        for (std::size_t j = 0; j < n_sv; ++j) {
            for (std::size_t i = 0; i < cols; ++i) {
                fv.mutable_data()[j * cols + i] = vt_cols.col(j)[i];
            }
        }
    } else {
        // m^T = u * diag(s) * rot^T, so m = rot * diag(s) * u^T
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < n_sv; ++j) {
                fu.mutable_data()[i * n_sv + j] = vt_cols.col(j)[i];
            }
        }
        for (std::size_t j = 0; j < n_sv; ++j) {
            for (std::size_t i = 0; i < cols; ++i) {
                fv.mutable_data()[j * cols + i] = u.col(j)[i];
            }
        }
    }
    return SvdFactors{std::move(fu), std::move(s), std::move(fv)};
}

DenseTensor truncated_reconstruct(const SvdFactors& f, std::size_t keep) {
    const std::size_t n_sv = f.n_sv();
    if (keep < 1 || keep > n_sv) {
        fail(ErrorCode::BadRank, "keep must lie in [1, " + std::to_string(n_sv) +
                                     "], got " + std::to_string(keep));
    }
    const std::size_t m = f.u.dim(0), n = f.v.dim(1);

    // (u[:, :keep] * diag(s[:keep])) * v[:keep, :]
    std::vector<double> us(m * keep);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < keep; ++j) {
            us[i * keep + j] = f.u.data()[i * n_sv + j] * f.s[j];
        }
    }
    DenseTensor out({m, n});
    kernels::matmul(out.mutable_data().data(), us.data(), f.v.data().data(), m,
                    keep, n);
    return out;
}

std::vector<double> lstsq(const DenseTensor& a, const std::vector<double>& b) {
    if (a.rank() != 2 || a.dim(0) != b.size()) {
        fail(ErrorCode::SizeMismatch, "lstsq shape mismatch");
    }
    const SvdFactors f = svd(a);
    const std::size_t m = a.dim(0), n = a.dim(1), k = f.n_sv();
    std::vector<double> uy(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += f.u.data()[i * k + j] * b[i];
        uy[j] = f.s[j] > 0.0 ? acc / f.s[j] : 0.0;
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) x[i] += f.v.data()[j * n + i] * uy[j];
    }
    return x;
}

} // namespace ktnz
