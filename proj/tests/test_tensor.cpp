#include <gtest/gtest.h>

#include "mtgcn/tensor.hpp"
#include "oracles.hpp"

using mtgcn::Rng;
using mtgcn::Tensor;

TEST(Tensor, ShapeDataInvariant) {
  Tensor t({2, 3});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), std::invalid_argument);
  EXPECT_THROW(Tensor({0, 3}), std::invalid_argument);
  EXPECT_THROW(Tensor(mtgcn::Shape{}), std::invalid_argument);
  EXPECT_THROW(Tensor({1, 2, 3, 4}), std::invalid_argument);
}

TEST(Tensor, ReshapePreservesData) {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r.at(0, 1), 2.0);
  EXPECT_EQ(r.at(2, 1), 6.0);
  EXPECT_THROW(t.reshaped({4, 2}), std::invalid_argument);
}

TEST(Matmul, IdentityCase) {
  Tensor eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Rng rng(7);
  Tensor b = oracles::random_tensor({3, 4}, rng);
  Tensor c = mtgcn::matmul(eye, b);
  for (std::size_t i = 0; i < b.numel(); ++i) EXPECT_EQ(c[i], b[i]);
}

TEST(Matmul, ZeroCase) {
  Rng rng(8);
  Tensor a({2, 3});
  Tensor b = oracles::random_tensor({3, 4}, rng);
  Tensor c = mtgcn::matmul(a, b);
  for (std::size_t i = 0; i < c.numel(); ++i) EXPECT_EQ(c[i], 0.0);
}

TEST(Matmul, MatchesNaiveTripleLoop) {
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor a = oracles::random_tensor({3, 4}, rng);
    Tensor b = oracles::random_tensor({4, 2}, rng);
    Tensor got = mtgcn::matmul(a, b);
    Tensor want = oracles::matmul_naive(a, b);
    EXPECT_LE(oracles::max_abs_diff(got, want), 1e-12);
  }
}

TEST(Matmul, RejectsMismatchedInnerDims) {
  Tensor a({2, 3}), b({4, 2});
  EXPECT_THROW(mtgcn::matmul(a, b), std::invalid_argument);
}

TEST(Matmul, LinearInEachArgument) {
  Rng rng(10);
  Tensor a = oracles::random_tensor({3, 3}, rng);
  Tensor x = oracles::random_tensor({3, 2}, rng);
  Tensor y = oracles::random_tensor({3, 2}, rng);
  Tensor xy({3, 2});
  for (std::size_t i = 0; i < xy.numel(); ++i) xy[i] = x[i] + y[i];
  Tensor lhs = mtgcn::matmul(a, xy);
  Tensor ax = mtgcn::matmul(a, x);
  Tensor ay = mtgcn::matmul(a, y);
  for (std::size_t i = 0; i < lhs.numel(); ++i)
    EXPECT_NEAR(lhs[i], ax[i] + ay[i], 1e-12);
}

TEST(ConcatRows, StacksInOrder) {
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b({2, 3}, {7, 8, 9, 10, 11, 12});
  Tensor c = mtgcn::concat_rows({a, b});
  ASSERT_EQ(c.dim(0), 4u);
  EXPECT_EQ(c.at(0, 0), 1.0);
  EXPECT_EQ(c.at(2, 0), 7.0);
  EXPECT_EQ(c.at(3, 2), 12.0);
}

TEST(ConcatRows, SingleBlockUnchanged) {
  Rng rng(11);
  Tensor a = oracles::random_tensor({3, 2}, rng);
  Tensor c = mtgcn::concat_rows({a});
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_EQ(c[i], a[i]);
}

TEST(ConcatRows, RejectsColumnMismatch) {
  EXPECT_THROW(mtgcn::concat_rows({Tensor({2, 3}), Tensor({2, 4})}),
               std::invalid_argument);
}

TEST(Rng, DeterministicPerSeed) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.uniform(), vb = b.uniform(), vc = c.uniform();
    EXPECT_EQ(va, vb);
    if (va != vc) differs = true;
    EXPECT_GE(va, 0.0);
    EXPECT_LT(va, 1.0);
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, ShuffleDeterministic) {
  std::vector<int> v1{1, 2, 3, 4, 5, 6, 7}, v2 = v1;
  Rng a(5), b(5);
  mtgcn::shuffle(v1, a);
  mtgcn::shuffle(v2, b);
  EXPECT_EQ(v1, v2);
}
