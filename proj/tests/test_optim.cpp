#include <gtest/gtest.h>

#include "mtgcn/optim.hpp"
#include "oracles.hpp"

using mtgcn::AdamState;
using mtgcn::Rng;
using mtgcn::Tensor;

TEST(Clip, ScalesWhenNormExceedsMax) {
  // two gradients with global norm 2
  std::vector<Tensor> grads{Tensor({2}, {1.2, 1.6})};  // norm 2.0
  mtgcn::clip_gradients_l2(grads, 1.0);
  EXPECT_DOUBLE_EQ(grads[0][0], 0.6);
  EXPECT_DOUBLE_EQ(grads[0][1], 0.8);
}

TEST(Clip, UnchangedBelowMax) {
  std::vector<Tensor> grads{Tensor({2}, {0.3, 0.4})};  // norm 0.5
  std::vector<Tensor> before = grads;
  mtgcn::clip_gradients_l2(grads, 1.0);
  EXPECT_EQ(grads[0][0], before[0][0]);
  EXPECT_EQ(grads[0][1], before[0][1]);
}

TEST(Clip, PostNormIsMinOfPreNormAndMax) {
  Rng rng(20);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<Tensor> grads{oracles::random_tensor({3, 4}, rng, -2.0, 2.0),
                              oracles::random_tensor({5}, rng, -2.0, 2.0)};
    const double pre = mtgcn::global_l2_norm(grads);
    mtgcn::clip_gradients_l2(grads, 1.0);
    const double post = mtgcn::global_l2_norm(grads);
    EXPECT_NEAR(post, std::min(pre, 1.0), 1e-12);
  }
}

TEST(Clip, IdempotentBitwise) {
  Rng rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<Tensor> grads{oracles::random_tensor({7, 3}, rng, -2.0, 2.0)};
    mtgcn::clip_gradients_l2(grads, 1.0);
    std::vector<Tensor> once = grads;
    mtgcn::clip_gradients_l2(grads, 1.0);
    for (std::size_t i = 0; i < once[0].numel(); ++i)
      EXPECT_EQ(grads[0][i], once[0][i]);
  }
}

TEST(Clip, RejectsNonPositiveMax) {
  std::vector<Tensor> grads{Tensor({1}, {1.0})};
  EXPECT_THROW(mtgcn::clip_gradients_l2(grads, 0.0), std::invalid_argument);
}

TEST(Adam, FirstStepClosedForm) {
  Tensor p({1}, {0.5});
  AdamState st;
  mtgcn::adam_step({&p}, {Tensor({1}, {1.0})}, st, 0.001);
  // m_hat = g, v_hat = g^2 at t=1, so delta = -lr * 1/(1 + eps)
  const double want = 0.5 - 0.001 * (1.0 / (1.0 + 1e-8));
  EXPECT_NEAR(p[0], want, 1e-12);
  EXPECT_EQ(st.t, 1);
}

TEST(Adam, ZeroGradientFreshStateNoMove) {
  Tensor p({3}, {1.0, -2.0, 3.0});
  AdamState st;
  mtgcn::adam_step({&p}, {Tensor({3})}, st, 0.01);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], -2.0);
  EXPECT_EQ(p[2], 3.0);
}

TEST(Adam, TwoStepsMatchHandRecurrence) {
  const double g = 0.3, lr = 0.002;
  Tensor p({1}, {1.0});
  AdamState st;
  mtgcn::adam_step({&p}, {Tensor({1}, {g})}, st, lr);
  mtgcn::adam_step({&p}, {Tensor({1}, {g})}, st, lr);

  // direct recurrence evaluation
  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    theta -= lr * mhat / (std::sqrt(vhat) + 1e-8);
  }
  EXPECT_NEAR(p[0], theta, 1e-12);
  EXPECT_EQ(st.t, 2);
}

TEST(Adam, RejectsBadLrAndShapes) {
  Tensor p({2});
  AdamState st;
  EXPECT_THROW(mtgcn::adam_step({&p}, {Tensor({2})}, st, 0.0),
               std::invalid_argument);
  EXPECT_THROW(mtgcn::adam_step({&p}, {Tensor({3})}, st, 0.01),
               std::invalid_argument);
}
