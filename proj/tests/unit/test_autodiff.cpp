#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "stegosplat/autodiff/adam.hpp"
#include "stegosplat/autodiff/ops.hpp"
#include "stegosplat/core/error.hpp"
#include "stegosplat/core/rng.hpp"
#include "fd_checks.hpp"

using namespace stegosplat;
using namespace stegosplat::autodiff;
using DTensor = BasicTensor<double>;

using testing_support::check_graph_fd;
using testing_support::random_tensor;
using Builder = testing_support::GraphBuilder;

TEST(Ops, SigmoidOfZeroIsHalf) {
  Tape<float> tape;
  const Var x = tape.leaf(Tensor({2, 3, 4}, 0.0f));
  for (float v : tape.value(sigmoid(tape, x)).data()) EXPECT_EQ(v, 0.5f);
}

TEST(Ops, IdentityOneByOneConvIsIdentity) {
  Tape<float> tape;
  Tensor in({3, 5, 6});
  Rng rng(1);
  for (float& v : in.data()) v = static_cast<float>(rng.uniform());
  Tensor w({3, 3, 1, 1}, 0.0f);
  for (std::size_t c = 0; c < 3; ++c) w[c * 3 + c] = 1.0f;
  const Var y = conv2d(tape, tape.leaf(in), tape.leaf(w), tape.leaf(Tensor({3}, 0.0f)), 1);
  EXPECT_EQ(tape.value(y), in);
}

TEST(Ops, ConvMatchesNaiveLoops) {
  for (int stride : {1, 2}) {
    const DTensor x = random_tensor({1, 8, 8}, 3);
    const DTensor w = random_tensor({2, 1, 3, 3}, 4);
    const DTensor b = random_tensor({2}, 5);
    Tape<double> tape;
    const DTensor& y = tape.value(conv2d(tape, tape.leaf(x), tape.leaf(w), tape.leaf(b), stride));
    const int out = stride == 1 ? 8 : 4;
    ASSERT_EQ(y.shape(), (Shape{2, static_cast<std::size_t>(out), static_cast<std::size_t>(out)}));
    for (int co = 0; co < 2; ++co)
      for (int oy = 0; oy < out; ++oy)
        for (int ox = 0; ox < out; ++ox) {
          double acc = b[co];
          for (int ci = 0; ci < 1; ++ci)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = oy * stride + ky - 1, ix = ox * stride + kx - 1;
                if (iy < 0 || iy >= 8 || ix < 0 || ix >= 8) continue;
                acc += w[((co * 1 + ci) * 3 + ky) * 3 + kx] * x[(ci * 8 + iy) * 8 + ix];
              }
          EXPECT_NEAR(y[(co * out + oy) * out + ox], acc, 1e-6);
        }
  }
}

TEST(Ops, FloatConvMatchesDouble) {
  const DTensor x = random_tensor({3, 8, 8}, 13);
  const DTensor w = random_tensor({4, 3, 3, 3}, 14);
  const DTensor b = random_tensor({4}, 15);
  auto to_float = [](const DTensor& t) {
    return Tensor(t.shape(), std::vector<float>(t.data().begin(), t.data().end()));
  };
  Tape<double> td;
  Tape<float> tf;
  const auto& yd = td.value(conv2d(td, td.leaf(x), td.leaf(w), td.leaf(b), 1));
  const auto& yf = tf.value(conv2d(tf, tf.leaf(to_float(x)), tf.leaf(to_float(w)), tf.leaf(to_float(b)), 1));
  for (std::size_t i = 0; i < yd.size(); ++i) EXPECT_NEAR(yf[i], yd[i], 1e-5);
}

TEST(Backward, SumGivesOnes) {
  Tape<float> tape;
  const Var x = tape.leaf(Tensor({2, 3, 5}, 0.3f), true);
  const auto g = tape.backward(sum(tape, x));
  for (float v : g.at(x).data()) EXPECT_EQ(v, 1.0f);
}

TEST(Backward, SigmoidRegressionMatchesFiniteDifferences) {
  // mean((sigmoid(W x) - y)^2) with W x as a 1x1 conv over a 4x4 grid.
  const Builder build = [](Tape<double>& t, const std::vector<Var>& v) {
    const Var z = sigmoid(t, conv2d(t, v[0], v[1], v[2], 1));
    const Var y = t.leaf(random_tensor({2, 4, 4}, 99, 0, 1));
    return mean(t, square(t, sub(t, z, y)));
  };
  const auto report = check_graph_fd(
      "regression", build, {random_tensor({3, 4, 4}, 1), random_tensor({2, 3, 1, 1}, 2), random_tensor({2}, 3)});
  EXPECT_TRUE(report.ok()) << report.first_failure;
}

TEST(Backward, EveryLayerPassesFiniteDifferences) {
  for (std::uint64_t seed : {1, 2, 3})
    for (const auto& [name, report] : testing_support::check_every_layer(seed))
      EXPECT_TRUE(report.ok()) << name << ": " << report.failed << "/" << report.checked << " off, first "
                               << report.first_failure;
}

TEST(Backward, ForwardLayerDispatchMatchesDirectCalls) {
  Tape<double> tape;
  const Var x = tape.leaf(random_tensor({2, 4, 4}, 1));
  const Var w = tape.leaf(random_tensor({3, 2, 3, 3}, 2));
  const Var b = tape.leaf(random_tensor({3}, 3));
  const Var in[] = {x};
  const Var params[] = {w, b};
  const Var a = forward_layer<double>(tape, Conv2d{2}, in, params, 0);
  EXPECT_EQ(tape.value(a), tape.value(conv2d(tape, x, w, b, 2)));
  const Var s = forward_layer<double>(tape, Sigmoid{}, in, {}, 1);
  EXPECT_EQ(tape.value(s), tape.value(sigmoid(tape, x)));
}

TEST(Backward, ShapeErrorsNameTheLayer) {
  Tape<float> tape;
  const Var x = tape.leaf(Tensor({2, 4, 4}));
  const Var w = tape.leaf(Tensor({3, 5, 3, 3}));
  const Var b = tape.leaf(Tensor({3}));
  const Var in[] = {x};
  const Var params[] = {w, b};
  try {
    forward_layer<float>(tape, Conv2d{1}, in, params, 4);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 4"), std::string::npos) << e.what();
  }
  const Var y = tape.leaf(Tensor({2, 3, 4}));
  const Var pair[] = {x, y};
  EXPECT_THROW(forward_layer<float>(tape, Concat{}, pair, {}, 2), ShapeError);
}

TEST(Backward, RejectsNonScalarAndForeignLoss) {
  Tape<float> tape;
  const Var x = tape.leaf(Tensor({2, 2}, 1.0f), true);
  EXPECT_THROW(tape.backward(x), ShapeError);
  Tape<float> other;
  EXPECT_THROW(other.backward(Var{5}), std::invalid_argument);
}

TEST(Backward, TapeIsConsumed) {
  Tape<float> tape;
  const Var x = tape.leaf(Tensor({2}, 1.0f), true);
  const Var l = sum(tape, x);
  tape.backward(l);
  EXPECT_THROW(tape.backward(l), std::logic_error);
}

TEST(Backward, DisjointSubgraphGetsNoGradient) {
  Tape<float> tape;
  const Var a = tape.leaf(Tensor({3}, 1.0f), true);
  const Var b = tape.leaf(Tensor({3}, 2.0f), true);
  const Var la = sum(tape, square(tape, a));
  sum(tape, square(tape, b));
  const auto g = tape.backward(la);
  EXPECT_NE(g.find(a), nullptr);
  EXPECT_EQ(g.find(b), nullptr);
}

TEST(Backward, SumOfLossesIsSumOfBackwards) {
  const DTensor xv = random_tensor({2, 4, 4}, 31);
  auto f1 = [](Tape<double>& t, Var x) { return mean(t, square(t, sigmoid(t, x))); };
  auto f2 = [](Tape<double>& t, Var x) { return sum(t, leaky_relu(t, x, 0.2)); };
  Tape<double> t1, t2, t3;
  const Var x1 = t1.leaf(xv, true), x2 = t2.leaf(xv, true), x3 = t3.leaf(xv, true);
  const auto g1 = t1.backward(f1(t1, x1));
  const auto g2 = t2.backward(f2(t2, x2));
  const auto g3 = t3.backward(add(t3, f1(t3, x3), f2(t3, x3)));
  for (std::size_t i = 0; i < xv.size(); ++i) EXPECT_NEAR(g3.at(x3)[i], g1.at(x1)[i] + g2.at(x2)[i], 1e-15);
}

TEST(Backward, RepeatedRunsAreBitIdentical) {
  auto run = [] {
    Tape<float> tape;
    Tensor x({3, 8, 8});
    Rng rng(3);
    for (float& v : x.data()) v = static_cast<float>(rng.uniform());
    Tensor w({4, 3, 3, 3});
    for (float& v : w.data()) v = static_cast<float>(rng.normal());
    const Var xv = tape.leaf(x, true), wv = tape.leaf(w, true), bv = tape.leaf(Tensor({4}, 0.1f), true);
    const Var y = sigmoid(tape, conv2d(tape, xv, wv, bv, 2));
    const auto g = tape.backward(mean(tape, y));
    return std::make_pair(g.at(xv), g.at(wv));
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<DTensor> p = {random_tensor({4}, 1)};
  const auto before = p;
  std::vector<DTensor> g = {DTensor({4}, 0.0)};
  AdamState s;
  for (int i = 0; i < 5; ++i) adam_step<double>(p, g, s, 0.1);
  EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepClosedForm) {
  for (double g : {0.37, -2.5, 1e-3}) {
    std::vector<DTensor> p = {DTensor({1}, 1.5)};
    std::vector<DTensor> gr = {DTensor({1}, g)};
    AdamState s;
    adam_step<double>(p, gr, s, 0.01);
    // m_hat = g, v_hat = g^2 after bias correction.
    const double expected = 1.5 - 0.01 * g / (std::abs(g) + 1e-8);
    EXPECT_NEAR(p[0][0], expected, 1e-10);
  }
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  std::vector<DTensor> p = {DTensor({1}, 0.0)};
  std::vector<DTensor> g = {DTensor({1}, 0.5)};
  AdamState s;
  double prev = 0.0;
  for (int i = 0; i < 10000; ++i) {
    prev = p[0][0];
    adam_step<double>(p, g, s, 1e-3);
  }
  EXPECT_NEAR(prev - p[0][0], 1e-3, 1e-5);
}

TEST(Adam, ShapeMismatchThrows) {
  std::vector<DTensor> p = {DTensor({2}, 0.0)};
  std::vector<DTensor> g = {DTensor({3}, 0.0)};
  AdamState s;
  EXPECT_THROW(adam_step<double>(p, g, s, 0.1), ShapeError);
}
