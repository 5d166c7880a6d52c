#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradient_suite.hpp"
#include "oracles.hpp"
#include "qnn/error.hpp"
#include "qnn/ops.hpp"

using namespace qnn;

TEST(Conv3x3, IdentityKernelOnSinglePixel) {
  Tensor x({1, 1, 1, 1}, std::vector<double>{0.375});
  Tensor k({3, 3, 1, 1});
  k[4] = quantize_weight(1.0 - std::ldexp(1.0, -15), 16);
  Tensor b({1});
  const Tensor y = ops::conv3x3_forward(x, k, b);
  EXPECT_LE(std::abs(y[0] - 0.375), std::ldexp(1.0, -15));
}

TEST(Conv3x3, ZeroInputGivesBias) {
  std::mt19937_64 rng(3);
  Tensor x({2, 3, 3, 2});
  const Tensor k = oracle::random_tensor({3, 3, 2, 4}, rng);
  Tensor b({4}, std::vector<double>{0.1, -0.2, 0.3, 0.0});
  const Tensor y = ops::conv3x3_forward(x, k, b);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], b[i % 4]);
}

TEST(Conv3x3, MatchesLoopNest) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor x = oracle::random_tensor({1, 4, 4, 2}, rng);
    const Tensor k = oracle::random_tensor({3, 3, 2, 3}, rng);
    const Tensor b = oracle::random_tensor({3}, rng);
    const Tensor got = ops::conv3x3_forward(x, k, b);
    const Tensor want = oracle::conv3x3_loop_nest(x, k, b);
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Conv3x3, GridInputsMatchLoopNestExactly) {
  // Values on a coarse dyadic grid make every partial sum exact, so the two
  // summation orders must agree bit for bit.
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> code(-8, 7);
  auto grid = [&](Shape s) {
    Tensor t(std::move(s));
    for (double& v : t.values()) v = code(rng) / 8.0;
    return t;
  };
  const Tensor x = grid({1, 4, 4, 2}), k = grid({3, 3, 2, 3}), b = grid({3});
  EXPECT_EQ(ops::conv3x3_forward(x, k, b), oracle::conv3x3_loop_nest(x, k, b));
}

TEST(Conv3x3, ShapeErrors) {
  EXPECT_THROW(ops::conv3x3_forward(Tensor({1, 2, 2, 2}), Tensor({3, 3, 3, 1}), Tensor({1})),
               ShapeError);
  EXPECT_THROW(ops::conv3x3_forward(Tensor({1, 2, 2, 2}), Tensor({3, 3, 2, 1}), Tensor({2})),
               ShapeError);
}

TEST(MaxPool, SingleWindow) {
  Tensor x({1, 2, 2, 1}, std::vector<double>{1, 2, 3, 4});
  std::vector<std::size_t> am;
  const Tensor y = ops::maxpool2x2_forward(x, am);
  ASSERT_EQ(y.size(), 1u);
  EXPECT_EQ(y[0], 4.0);
  const Tensor g = ops::maxpool2x2_backward(Tensor({1, 1, 1, 1}, std::vector<double>{2.5}), am,
                                            x.shape());
  EXPECT_EQ(g, Tensor({1, 2, 2, 1}, std::vector<double>{0, 0, 0, 2.5}));
}

TEST(MaxPool, TiesGoToFirstElement) {
  Tensor x({1, 2, 2, 1}, std::vector<double>{5, 5, 5, 5});
  std::vector<std::size_t> am;
  ops::maxpool2x2_forward(x, am);
  const Tensor g = ops::maxpool2x2_backward(Tensor({1, 1, 1, 1}, std::vector<double>{1}), am,
                                            x.shape());
  EXPECT_EQ(g, Tensor({1, 2, 2, 1}, std::vector<double>{1, 0, 0, 0}));
}

TEST(MaxPool, OddExtentRejected) {
  std::vector<std::size_t> am;
  EXPECT_THROW(ops::maxpool2x2_forward(Tensor({1, 3, 2, 1}), am), ShapeError);
}

TEST(SoftmaxXent, UniformLogits) {
  for (int k : {2, 10}) {
    const Tensor logits({1, static_cast<std::size_t>(k)});
    EXPECT_NEAR(ops::softmax_xent_forward(logits, {k - 1}), std::log(k), 1e-15);
  }
}

TEST(SoftmaxXent, StableForLargeLogits) {
  Tensor logits({1, 3}, std::vector<double>{1000.0, 0.0, -1000.0});
  EXPECT_NEAR(ops::softmax_xent_forward(logits, {0}), 0.0, 1e-12);
  EXPECT_NEAR(ops::softmax_xent_forward(logits, {1}), 1000.0, 1e-9);
  EXPECT_THROW(ops::softmax_xent_forward(logits, {3}), ShapeError);
}

TEST(BatchNorm, NeedsTwoSamples) {
  ops::BatchNormCache cache;
  EXPECT_THROW(ops::batchnorm_forward_train(Tensor({1, 2, 2, 1}), Tensor({1}, 1.0), Tensor({1}),
                                            1e-5, cache),
               ShapeError);
}

TEST(BatchNorm, TrainOutputIsStandardised) {
  std::mt19937_64 rng(5);
  const Tensor x = oracle::random_tensor({8, 2, 2, 3}, rng, -4.0, 4.0);
  ops::BatchNormCache cache;
  const Tensor y = ops::batchnorm_forward_train(x, Tensor({3}, 1.0), Tensor({3}), 0.0, cache);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0, ss = 0;
    for (std::size_t i = c; i < y.size(); i += 3) s += y[i], ss += y[i] * y[i];
    EXPECT_NEAR(s / 32.0, 0.0, 1e-12);
    EXPECT_NEAR(ss / 32.0, 1.0, 1e-12);
  }
}

class GradientCheck : public ::testing::TestWithParam<int> {};

TEST_P(GradientCheck, CentralDifferences) {
  const auto kernel = gradcheck::kernels().at(static_cast<std::size_t>(GetParam()));
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
    EXPECT_LE(kernel.check(seed), 1e-4) << kernel.name << " seed " << seed;
}

INSTANTIATE_TEST_SUITE_P(Kernels, GradientCheck, ::testing::Range(0, 5),
                         [](const auto& info) {
                           return gradcheck::kernels().at(static_cast<std::size_t>(info.param)).name;
                         });
