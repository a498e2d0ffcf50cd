#include "ktnz/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ktnz/errors.hpp"
#include "ktnz/linalg.hpp"
#include "oracles.hpp"

using ktnz::ContractionSpec;
using ktnz::DenseTensor;
using ktnz::Error;
using ktnz::ErrorCode;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::Unsupported;
}

} // namespace

TEST(Reshape, RowMajorReinterpretation) {
    std::vector<double> data(36);
    std::iota(data.begin(), data.end(), 0.0);
    const DenseTensor t({6, 6}, data);
    const DenseTensor r = t.reshape({2, 3, 6});
    EXPECT_EQ(r.dims(), (std::vector<std::size_t>{2, 3, 6}));
    EXPECT_EQ(r.data(), data);
}

TEST(Reshape, IdentityAndFlatten) {
    const DenseTensor v({4}, {1, 2, 3, 4});
    EXPECT_EQ(v.reshape({4}).data(), v.data());

    const DenseTensor m({2, 2}, {1, 2, 3, 4});
    const DenseTensor flat = m.reshape({4});
    EXPECT_EQ(flat.data(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Reshape, SizeMismatchAndLabelDrop) {
    const DenseTensor t({2, 3}, std::vector<double>(6, 1.0), {"a", "b"});
    EXPECT_EQ(code_of([&] { (void)t.reshape({4}); }), ErrorCode::SizeMismatch);
    EXPECT_FALSE(t.reshape({3, 2}).has_labels());
}

TEST(Permute, Transpose) {
    const DenseTensor m({2, 2}, {1, 2, 3, 4});
    const DenseTensor mt = m.permute({1, 0});
    EXPECT_EQ(mt.data(), (std::vector<double>{1, 3, 2, 4}));
}

TEST(Permute, IdentityIsBitwise) {
    const DenseTensor t = oracle::random_tensor({3, 4, 5}, 42);
    const DenseTensor same = t.permute({0, 1, 2});
    EXPECT_EQ(same.data(), t.data());
}

TEST(Permute, IndexFormulaOracle) {
    const DenseTensor t = oracle::random_tensor({2, 3, 4}, 7);
    const std::vector<std::size_t> order{2, 0, 1};
    const DenseTensor p = t.permute(order);
    ASSERT_EQ(p.dims(), (std::vector<std::size_t>{4, 2, 3}));
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 2; ++b) {
            for (std::size_t c = 0; c < 3; ++c) {
                // result(j) == t(j at order positions)
                EXPECT_EQ(p.at({a, b, c}), t.at({b, c, a}));
            }
        }
    }
}

TEST(Permute, RoundTripBitwise) {
    const DenseTensor t = oracle::random_tensor({4, 2, 5, 3}, 9);
    const std::vector<std::size_t> order{3, 1, 0, 2};
    std::vector<std::size_t> inverse(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) inverse[order[i]] = i;
    EXPECT_EQ(t.permute(order).permute(inverse).data(), t.data());
}

TEST(Permute, BadPermutationThrows) {
    const DenseTensor t({2, 2}, {1, 2, 3, 4});
    EXPECT_EQ(code_of([&] { (void)t.permute({0, 0}); }), ErrorCode::BadPermutation);
    EXPECT_EQ(code_of([&] { (void)t.permute({0}); }), ErrorCode::BadPermutation);
}

TEST(Permute, LabelsFollowModes) {
    const DenseTensor t({2, 3}, std::vector<double>(6, 0.0), {"row", "col"});
    const auto labels = t.permute({1, 0}).mode_labels();
    EXPECT_EQ(labels, (std::vector<std::string>{"col", "row"}));
}

TEST(Contract, IdentityMultiply) {
    const DenseTensor eye = ktnz::identity_matrix(2);
    const DenseTensor b({2, 2}, {5, -1, 2, 7});
    const DenseTensor r = contract({eye, b}, "ij,jk->ik");
    EXPECT_EQ(r.data(), b.data());
}

TEST(Contract, Trace) {
    const DenseTensor m({2, 2}, {1, 2, 3, 4});
    const DenseTensor tr = contract({m}, "ii->");
    EXPECT_EQ(tr.rank(), 0u);
    EXPECT_DOUBLE_EQ(tr.data()[0], 5.0);
}

TEST(Contract, ThreeTensorNetworkVsNaiveOracle) {
    const DenseTensor u = oracle::random_tensor({2, 3, 4}, 1); // u(i,g,a)
    const DenseTensor v = oracle::random_tensor({4, 5}, 2);    // v(a,b)
    const DenseTensor w = oracle::random_tensor({3, 2, 3, 5}, 3); // w(g,k,j,b)
    const ContractionSpec spec = ContractionSpec::parse("iga,ab,gkjb->ikj");
    const DenseTensor got = contract({u, v, w}, spec);
    const auto want = oracle::naive_contract({u, v, w}, spec);
    EXPECT_LT(oracle::max_abs_diff(got, want.tensor), 1e-12);
}

TEST(Contract, OrderParameterIsEquivalent) {
    const DenseTensor u = oracle::random_tensor({2, 3, 4}, 4);
    const DenseTensor v = oracle::random_tensor({4, 5}, 5);
    const DenseTensor w = oracle::random_tensor({3, 2, 3, 5}, 6);
    const ContractionSpec spec = ContractionSpec::parse("iga,ab,gkjb->ikj");
    const DenseTensor a = contract({u, v, w}, spec);
    const DenseTensor b = contract({u, v, w}, spec, {2, 0, 1});
    EXPECT_LT(oracle::max_abs_diff(a, b), 1e-12);
}

TEST(Contract, SpecMismatchErrors) {
    const DenseTensor a({2, 2}, {1, 2, 3, 4});
    const DenseTensor b({3, 2}, std::vector<double>(6, 1.0));
    // symbol count != rank
    EXPECT_EQ(code_of([&] { (void)contract({a}, "ijk->ijk"); }),
              ErrorCode::SpecMismatch);
    // conflicting sizes for j
    EXPECT_EQ(code_of([&] { (void)contract({a, b}, "ij,jk->ik"); }),
              ErrorCode::SpecMismatch);
    // output symbol absent from inputs
    EXPECT_EQ(code_of([&] { (void)contract({a}, "ij->iz"); }),
              ErrorCode::SpecMismatch);
}

TEST(Contract, IdentityFactorIsIdentityMap) {
    const DenseTensor t = oracle::random_tensor({3, 4, 2}, 11);
    const char* specs[3] = {"abc,ax->xbc", "abc,bx->axc", "abc,cx->abx"};
    const std::size_t dims[3] = {3, 4, 2};
    for (int mode = 0; mode < 3; ++mode) {
        const DenseTensor eye = ktnz::identity_matrix(dims[mode]);
        const DenseTensor r = contract({t, eye}, specs[mode]);
        EXPECT_EQ(oracle::max_abs_diff(r, t), 0.0) << "mode " << mode;
    }
}

TEST(Hadamard, BasicAndErrors) {
    const DenseTensor a({2, 2}, {1, 2, 3, 4});
    EXPECT_EQ(hadamard(a, ktnz::DenseTensor({2, 2}, {1, 1, 1, 1})).data(), a.data());
    const DenseTensor d({2, 2}, {2, 0, 0, 2});
    EXPECT_EQ(hadamard(a, d).data(), (std::vector<double>{2, 0, 0, 8}));
    const DenseTensor bad({4}, {1, 2, 3, 4});
    EXPECT_EQ(code_of([&] { (void)hadamard(a, bad); }), ErrorCode::SizeMismatch);
}

TEST(Hadamard, EqualsCopyTensorContraction) {
    // out(x,y) = sum_{a,b,c,d} delta(x,a,c) A(a,b) delta(y,b,d) B(c,d)
    const DenseTensor a = oracle::random_tensor({3, 3}, 21);
    const DenseTensor b = oracle::random_tensor({3, 3}, 22);
    const DenseTensor cx = ktnz::copy_tensor(3, 3);
    const DenseTensor direct = hadamard(a, b);
    const DenseTensor via =
        contract({cx, a, cx, b}, "xac,ab,ybd,cd->xy");
    EXPECT_EQ(oracle::max_abs_diff(direct, via), 0.0);
}

TEST(Hadamard, ContractionEquivalenceOn5x5) {
    const DenseTensor a = oracle::random_tensor({5, 5}, 31);
    const DenseTensor b = oracle::random_tensor({5, 5}, 32);
    const DenseTensor cx = ktnz::copy_tensor(3, 5);
    const DenseTensor via = contract({cx, a, cx, b}, "xac,ab,ybd,cd->xy");
    EXPECT_LT(oracle::max_abs_diff(hadamard(a, b), via), 1e-12);
}

TEST(FrobeniusNorm, Examples) {
    EXPECT_EQ(frobenius_norm(DenseTensor({4, 4})), 0.0);
    EXPECT_DOUBLE_EQ(frobenius_norm(DenseTensor({2}, {3, 4})), 5.0);
}

TEST(FrobeniusNorm, MatchesSingularValues) {
    const DenseTensor t = oracle::random_tensor({3, 4, 2, 5}, 77);
    const DenseTensor m = t.reshape({12, 10});
    const auto f = ktnz::svd(m);
    double sum_sq = 0.0;
    for (double s : f.s) sum_sq += s * s;
    const double norm = frobenius_norm(t);
    EXPECT_NEAR(std::sqrt(sum_sq), norm, 1e-9 * norm);
}

TEST(FrobeniusNorm, ReshapePreservesExactly) {
    const DenseTensor t = oracle::random_tensor({6, 4}, 13);
    EXPECT_EQ(frobenius_norm(t), frobenius_norm(t.reshape({2, 12})));
}

TEST(Contract, SumViaAllOnes) {
    const DenseTensor m = oracle::random_tensor({7, 5}, 55);
    const DenseTensor total =
        contract({m, ktnz::ones_vector(7), ktnz::ones_vector(5)}, "ij,i,j->");
    double direct = 0.0;
    for (double v : m.data()) direct += v;
    EXPECT_NEAR(total.data()[0], direct, 1e-12 * std::abs(direct));
}

TEST(CopyTensor, DeltaStructure) {
    const DenseTensor d = ktnz::copy_tensor(3, 2);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            for (std::size_t k = 0; k < 2; ++k) {
                EXPECT_EQ(d.at({i, j, k}), (i == j && j == k) ? 1.0 : 0.0);
            }
        }
    }
    // Fig.-style reduction: contracting one leg with all-ones drops to a
    // smaller copy tensor.
    const DenseTensor reduced =
        contract({d, ktnz::ones_vector(2)}, "ijk,k->ij");
    EXPECT_EQ(oracle::max_abs_diff(reduced, ktnz::identity_matrix(2)), 0.0);
}

TEST(DenseTensor, InvariantViolationsThrow) {
    EXPECT_EQ(code_of([] { DenseTensor({2, 0}, {}); }), ErrorCode::SizeMismatch);
    EXPECT_EQ(code_of([] { DenseTensor({2}, {1.0, 2.0, 3.0}); }),
              ErrorCode::SizeMismatch);
    EXPECT_EQ(code_of([] {
                  DenseTensor({2, 2}, std::vector<double>(4, 0.0), {"a", "a"});
              }),
              ErrorCode::SizeMismatch);
}

TEST(DenseTensor, ScalarAllowed) {
    const DenseTensor s;
    EXPECT_EQ(s.rank(), 0u);
    EXPECT_EQ(s.size(), 1u);
}
