#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gradcheck.hpp"
#include "lvr/error.hpp"
#include "lvr/nn/layers.hpp"
#include "lvr/nn/ops.hpp"
#include "lvr/nn/optim.hpp"

using namespace lvr;
using namespace lvr::nn;
using lvr::check::TapeD;
using lvr::check::TensorD;
using lvr::check::VarD;

namespace {

// Direct nested-loop "same" cross-correlation with stride.
TensorD conv_oracle(const TensorD& x, const TensorD& k, const TensorD& b, std::size_t stride) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t f = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t oh = (h + stride - 1) / stride, ow = (w + stride - 1) / stride;
  TensorD out({n, f, oh, ow});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < f; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = b[o];
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const auto y = static_cast<std::ptrdiff_t>(i * stride + u) - static_cast<std::ptrdiff_t>(kh / 2);
                const auto xx = static_cast<std::ptrdiff_t>(j * stride + v) - static_cast<std::ptrdiff_t>(kw / 2);
                if (y < 0 || xx < 0 || y >= static_cast<std::ptrdiff_t>(h) || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                acc += k[((o * c + ch) * kh + u) * kw + v] * x[((s * c + ch) * h + y) * w + xx];
              }
          out[((s * f + o) * oh + i) * ow + j] = acc;
        }
  return out;
}

VarD leaf(nn::Shape shape, std::vector<double> v, bool grad = false) {
  return make_leaf(TensorD(std::move(shape), std::move(v)), grad);
}

}  // namespace

TEST(Tensor, ShapeAndSizeAgree) {
  TensorD t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(shape_size(t.shape()), t.size());
  EXPECT_THROW(TensorD({2, 0}), ShapeError);
  EXPECT_THROW(TensorD({2, 2}, std::vector<double>(3)), ShapeError);
}

TEST(Autograd, SumGradientIsOnes) {
  TapeD tape;
  auto x = leaf({3}, {1, 2, 3}, true);
  tape.backward(sum(tape, x));
  for (double g : x->grad.data()) EXPECT_EQ(g, 1.0);
}

TEST(Autograd, SquareSumGradient) {
  TapeD tape;
  auto x = leaf({3}, {1, 2, 3}, true);
  tape.backward(sum(tape, mul(tape, x, x)));
  EXPECT_EQ(x->grad[0], 2.0);
  EXPECT_EQ(x->grad[1], 4.0);
  EXPECT_EQ(x->grad[2], 6.0);
}

TEST(Autograd, RejectsSecondBackwardUntilReset) {
  TapeD tape;
  auto x = leaf({2}, {1, 2}, true);
  auto loss = sum(tape, x);
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), Error);
  tape.reset();
  auto again = sum(tape, x);
  EXPECT_NO_THROW(tape.backward(again));
  EXPECT_EQ(x->grad[0], 2.0);  // leaves accumulate
}

TEST(Autograd, RejectsNonScalarLoss) {
  TapeD tape;
  auto x = leaf({2}, {1, 2}, true);
  auto y = relu(tape, x);
  EXPECT_THROW(tape.backward(y), ShapeError);
}

TEST(Autograd, EveryReachableRequiresGradNodeGetsGrad) {
  TapeD tape;
  auto x = leaf({2, 2}, {1, -1, 2, -2}, true);
  auto w = leaf({1, 2}, {0.5, 0.5}, true);
  auto b = leaf({1}, {0.0}, true);
  auto y = dense(tape, relu(tape, x), w, b);
  tape.backward(sum(tape, y));
  EXPECT_TRUE(x->has_grad());
  EXPECT_TRUE(w->has_grad());
  EXPECT_TRUE(b->has_grad());
  EXPECT_EQ(x->grad.shape(), x->value.shape());
}

TEST(Conv2d, IdentityKernel) {
  TapeD tape(TapeD::Mode::inference);
  auto x = leaf({1, 1, 2, 2}, {1, 2, 3, 4});
  auto y = conv2d(tape, x, leaf({1, 1, 1, 1}, {1}), leaf({1}, {0}));
  EXPECT_EQ(y->value.storage(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Conv2d, AllOnesThreeByThreeMatchesOracle) {
  TapeD tape(TapeD::Mode::inference);
  const TensorD x({1, 1, 2, 2}, {1, 2, 3, 4});
  const TensorD k({1, 1, 3, 3}, 1.0);
  const TensorD b({1}, 0.0);
  auto y = conv2d(tape, make_leaf(x), make_leaf(k), make_leaf(b));
  // Every window covers the whole 2x2 input.
  EXPECT_EQ(y->value.storage(), (std::vector<double>{10, 10, 10, 10}));
  EXPECT_EQ(y->value, conv_oracle(x, k, b, 1));
}

TEST(Conv2d, MatchesNestedLoopOracleOnRandomShapes) {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(2), c = 1 + rng.below(3), f = 1 + rng.below(4);
    const std::size_t h = 1 + rng.below(7), w = 1 + rng.below(7), k = 1 + 2 * rng.below(3), s = 1 + rng.below(2);
    const auto x = check::random_tensor(rng, {n, c, h, w});
    const auto kk = check::random_tensor(rng, {f, c, k, k});
    const auto b = check::random_tensor(rng, {f});
    TapeD tape(TapeD::Mode::inference);
    auto y = conv2d(tape, make_leaf(x), make_leaf(kk), make_leaf(b), s);
    const auto ref = conv_oracle(x, kk, b, s);
    ASSERT_EQ(y->value.shape(), ref.shape());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y->value[i], ref[i], 1e-12);
  }
}

TEST(Conv2d, IdentityKernelIsIdentityForAnyInput) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t c = 1 + rng.below(3), h = 1 + rng.below(6), w = 1 + rng.below(6);
    const auto x = check::random_tensor(rng, {1, c, h, w});
    TensorD k({c, c, 3, 3});
    for (std::size_t i = 0; i < c; ++i) k[((i * c + i) * 3 + 1) * 3 + 1] = 1.0;
    TapeD tape(TapeD::Mode::inference);
    auto y = conv2d(tape, make_leaf(x), make_leaf(k), make_leaf(TensorD({c})));
    EXPECT_EQ(y->value, x);
  }
}

TEST(Conv2d, ChannelMismatchNamesBothShapes) {
  TapeD tape;
  try {
    conv2d(tape, make_leaf(TensorD({1, 2, 3, 3})), make_leaf(TensorD({1, 3, 3, 3})), make_leaf(TensorD({1})));
    FAIL();
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[1,2,3,3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[1,3,3,3]"), std::string::npos) << msg;
  }
}

TEST(Dense, IdentityWeight) {
  TapeD tape(TapeD::Mode::inference);
  auto y = dense(tape, leaf({1, 2}, {5, -7}), leaf({2, 2}, {1, 0, 0, 1}), leaf({2}, {0, 0}));
  EXPECT_EQ(y->value.storage(), (std::vector<double>{5, -7}));
}

TEST(Dense, ByHandProduct) {
  TapeD tape(TapeD::Mode::inference);
  auto y = dense(tape, leaf({1, 2}, {1, 2}), leaf({2, 2}, {1, 1, 0, 1}), leaf({2}, {0, 0}));
  EXPECT_EQ(y->value.storage(), (std::vector<double>{3, 2}));
  EXPECT_THROW(dense(tape, leaf({1, 3}, {1, 2, 3}), leaf({2, 2}, {1, 1, 0, 1}), leaf({2}, {0, 0})), ShapeError);
}

TEST(Bce, Examples) {
  TapeD tape(TapeD::Mode::inference);
  auto ones = bce_loss(tape, leaf({4}, {1, 1, 1, 1}), TensorD({4}, 1.0));
  EXPECT_LE(ones->value[0], 1e-6);
  auto half = bce_loss(tape, leaf({3}, {0.5, 0.5, 0.5}), TensorD({3}, 0.5));
  EXPECT_NEAR(half->value[0], std::log(2.0), 1e-12);
  EXPECT_THROW(bce_loss(tape, leaf({2}, {0.5, 0.5}), TensorD({3}, 0.5)), ShapeError);
  EXPECT_THROW(bce_loss(tape, leaf({2}, {std::nan(""), 0.5}), TensorD({2}, 0.5)), NumericError);
}

TEST(Bce, NonNegativeAndMinimalAtTarget) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = check::random_tensor(rng, {8}, 0.0, 1.0);
    const auto p = check::random_tensor(rng, {8}, 0.01, 0.99);
    TapeD tape(TapeD::Mode::inference);
    const double at_p = bce_loss(tape, make_leaf(p), t)->value[0];
    const double at_t = bce_loss(tape, make_leaf(t), t)->value[0];
    EXPECT_GE(at_p, 0.0);
    EXPECT_LE(at_t, at_p + 1e-12);
  }
}

TEST(Kl, Examples) {
  TapeD tape(TapeD::Mode::inference);
  EXPECT_EQ(kl_unit_normal(tape, leaf({1, 3}, {0, 0, 0}), leaf({1, 3}, {0, 0, 0}))->value[0], 0.0);
  EXPECT_NEAR(kl_unit_normal(tape, leaf({1, 1}, {1}), leaf({1, 1}, {0}))->value[0], 0.5, 1e-15);
  EXPECT_THROW(kl_unit_normal(tape, leaf({1, 1}, {0}), leaf({1, 1}, {INFINITY})), NumericError);
}

TEST(Kl, NonNegative) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    TapeD tape(TapeD::Mode::inference);
    auto mu = make_leaf(check::random_tensor(rng, {2, 4}, -2, 2));
    auto lv = make_leaf(check::random_tensor(rng, {2, 4}, -2, 2));
    EXPECT_GE(kl_unit_normal(tape, mu, lv)->value[0], 0.0);
  }
}

TEST(Contrastive, Examples) {
  EXPECT_EQ(contrastive_loss(0.0, 0, 1.0), 0.0);
  EXPECT_EQ(contrastive_loss(1.0, 1, 1.0), 0.0);
  EXPECT_EQ(contrastive_loss(3.5, 1, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(contrastive_loss(0.5, 1, 1.0), 0.125);
  EXPECT_THROW(contrastive_loss(0.5, 2, 1.0), ConfigError);
  EXPECT_THROW(contrastive_loss(0.5, 0, 0.0), ConfigError);
}

TEST(Contrastive, ContinuousAtMargin) {
  const double m = 1.3;
  EXPECT_NEAR(contrastive_loss(m - 1e-9, 1, m), 0.0, 1e-17);
  EXPECT_EQ(contrastive_loss(m, 1, m), 0.0);
}

TEST(Contrastive, TensorFormMatchesScalarForm) {
  TapeD tape(TapeD::Mode::inference);
  const std::vector<std::uint8_t> y{0, 1, 1, 0};
  auto loss = contrastive_loss(tape, leaf({4}, {0.3, 0.5, 1.7, 2.0}), y, 1.0);
  const double expect =
      (contrastive_loss(0.3, 0, 1) + contrastive_loss(0.5, 1, 1) + contrastive_loss(1.7, 1, 1) + contrastive_loss(2.0, 0, 1)) / 4;
  EXPECT_NEAR(loss->value[0], expect, 1e-15);
}

TEST(Sampling, DownThenUpPreservesShape) {
  for (std::size_t h : {2, 3, 7, 8}) {
    TapeD tape(TapeD::Mode::inference);
    auto x = make_leaf(TensorD({1, 2, h, h + 1}));
    auto d = downsample2(tape, x);
    auto u = upsample2(tape, d, h, h + 1);
    EXPECT_EQ(u->value.shape(), x->value.shape());
  }
  TapeD tape(TapeD::Mode::inference);
  EXPECT_THROW(upsample2(tape, make_leaf(TensorD({1, 1, 3, 3})), 4, 6), ShapeError);
}

TEST(Gradients, EveryLayerMatchesFiniteDifferences) {
  for (const auto& c : check::gradient_suite(20, 2024)) {
    EXPECT_LE(c.worst, 1e-4) << c.name;
    EXPECT_GE(c.trials, 20) << c.name;
  }
}

TEST(Gradients, ContrastiveSaturatedHingeHasZeroGradient) {
  TapeD tape;
  auto d = leaf({3}, {1.0, 1.5, 4.0}, true);
  const std::vector<std::uint8_t> y{1, 1, 1};
  auto loss = contrastive_loss(tape, d, y, 1.0);
  tape.backward(loss);
  EXPECT_EQ(loss->value[0], 0.0);
  for (double g : d->grad.data()) EXPECT_EQ(g, 0.0);
}

TEST(Gradients, BceClampHasZeroGradient) {
  TapeD tape;
  auto p = leaf({2}, {0.0, 1.0}, true);
  tape.backward(bce_loss(tape, p, TensorD({2}, 0.5)));
  EXPECT_EQ(p->grad[0], 0.0);
  EXPECT_EQ(p->grad[1], 0.0);
}

// Scalar reference implementations of the optimizers.
TEST(Optimizer, AdamFirstStepMatchesScalarReference) {
  auto p = leaf({1}, {0.3}, true);
  auto opt = Optimizer<double>::adam({{"p", p}}, {.learning_rate = 0.005});
  p->ensure_grad()[0] = 1.0;
  opt.step();
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.005, g = 1.0;
  const double m = (1 - b1) * g, v = (1 - b2) * g * g;
  const double mhat = m / (1 - b1), vhat = v / (1 - b2);
  EXPECT_DOUBLE_EQ(p->value[0], 0.3 - lr * mhat / (std::sqrt(vhat) + eps));
  EXPECT_EQ(opt.step_count(), 1u);
}

TEST(Optimizer, AdamSeveralStepsMatchScalarReference) {
  auto p = leaf({1}, {1.0}, true);
  auto opt = Optimizer<double>::adam({{"p", p}}, {.learning_rate = 0.01});
  double x = 1.0, m = 0, v = 0;
  for (int t = 1; t <= 5; ++t) {
    const double g = 2 * x - 0.5;
    p->ensure_grad()[0] = g;
    opt.step();
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(p->value[0], x, 1e-15);
  }
}

TEST(Optimizer, AdadeltaMatchesScalarReference) {
  auto p = leaf({1}, {0.7}, true);
  auto opt = Optimizer<double>::adadelta({{"p", p}});
  double x = 0.7, eg = 0, edx = 0;
  for (int t = 0; t < 5; ++t) {
    const double g = std::sin(x) + 0.2;
    p->ensure_grad()[0] = g;
    opt.step();
    eg = 0.95 * eg + 0.05 * g * g;
    const double dx = -std::sqrt(edx + 1e-6) / std::sqrt(eg + 1e-6) * g;
    edx = 0.95 * edx + 0.05 * dx * dx;
    x += dx;
    EXPECT_NEAR(p->value[0], x, 1e-15);
  }
}

TEST(Optimizer, ZeroGradientLeavesParametersAndCountsStep) {
  for (bool adam : {false, true}) {
    auto p = leaf({3}, {0.1, -0.2, 0.3}, true);
    p->ensure_grad();
    auto opt = adam ? Optimizer<double>::adam({{"p", p}}) : Optimizer<double>::adadelta({{"p", p}});
    opt.step();
    EXPECT_EQ(p->value.storage(), (std::vector<double>{0.1, -0.2, 0.3}));
    EXPECT_EQ(opt.step_count(), 1u);
  }
}

TEST(Optimizer, NanGradientNamesParameterAndChangesNothing) {
  auto a = leaf({1}, {1.0}, true);
  auto b = leaf({1}, {2.0}, true);
  auto opt = Optimizer<double>::adam({{"enc0.weight", a}, {"enc0.bias", b}});
  a->ensure_grad()[0] = 1.0;
  b->ensure_grad()[0] = std::nan("");
  try {
    opt.step();
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("enc0.bias"), std::string::npos);
  }
  EXPECT_EQ(a->value[0], 1.0);
  EXPECT_EQ(opt.step_count(), 0u);
}

TEST(Optimizer, IdenticalParameterSetsEvolveIdentically) {
  auto a = leaf({2}, {0.5, -0.5}, true);
  auto b = leaf({2}, {0.5, -0.5}, true);
  auto oa = Optimizer<double>::adam({{"a", a}});
  auto ob = Optimizer<double>::adam({{"b", b}});
  for (int t = 0; t < 4; ++t) {
    a->ensure_grad()[0] = b->ensure_grad()[0] = 0.1 * t;
    a->grad[1] = b->grad[1] = -0.3;
    oa.step();
    ob.step();
  }
  EXPECT_EQ(a->value, b->value);
  EXPECT_EQ(oa.first_moments(), ob.first_moments());
  EXPECT_EQ(oa.second_moments(), ob.second_moments());
}

TEST(Optimizer, AccumulatorsMatchParameterShapes) {
  auto a = leaf({2, 3}, std::vector<double>(6, 0.0), true);
  auto b = leaf({4}, std::vector<double>(4, 0.0), true);
  auto opt = Optimizer<double>::adadelta({{"a", a}, {"b", b}});
  ASSERT_EQ(opt.first_moments().size(), 2u);
  EXPECT_EQ(opt.first_moments()[0].size(), 6u);
  EXPECT_EQ(opt.second_moments()[1].size(), 4u);
}

TEST(Layers, ParameterCounts) {
  EXPECT_EQ(LayerSpec::dense(2, 3).parameter_count(), 9u);
  EXPECT_EQ(LayerSpec::conv2d(3, 16, 3).parameter_count(), 448u);
  EXPECT_EQ(LayerSpec::relu().parameter_count(), 0u);
}

TEST(Layers, ValidateRejectsEvenKernels) {
  EXPECT_THROW(LayerSpec::conv2d(3, 4, 2).validate(), ConfigError);
  EXPECT_NO_THROW(LayerSpec::conv2d(3, 4, 1).validate());
}

TEST(Layers, SamplingLayersChangeExtentsByTwo) {
  EXPECT_EQ(LayerSpec::downsample2().output_shape({3, 8, 8}), (Shape{3, 4, 4}));
  EXPECT_EQ(LayerSpec::upsample2(8, 8).output_shape({3, 4, 4}), (Shape{3, 8, 8}));
  EXPECT_THROW(LayerSpec::upsample2(9, 8).output_shape({3, 4, 4}), ShapeError);
}

TEST(Layers, SequentialCopiesAreDeep) {
  Rng rng(1);
  Sequential<float> a({LayerSpec::dense(3, 2), LayerSpec::relu()}, {3}, rng);
  Sequential<float> b = a;
  a.parameters()[0].var->value[0] += 1.0f;
  EXPECT_NE(a.parameters()[0].var->value[0], b.parameters()[0].var->value[0]);
  EXPECT_EQ(b.parameters()[0].name, "0.weight");
}
