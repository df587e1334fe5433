#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "strl/grad_check.hpp"
#include "strl/tensor.hpp"

using namespace strl;

namespace {

Tensor random_param(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) v = rng.uniform(lo, hi);
  return Tensor::param(std::move(shape), std::move(data));
}

// Keeps entries away from 0 so kinked activations (relu/leaky/elu) are
// differentiable at every probe point.
Tensor random_param_off_zero(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) {
    const double mag = rng.uniform(0.1, 1.0);
    v = rng.next_double() < 0.5 ? -mag : mag;
  }
  return Tensor::param(std::move(shape), std::move(data));
}

}  // namespace

TEST(Tensor, MatmulMatchesHandComputation) {
  // [1 2 3; 4 5 6] * [7 8; 9 10; 11 12] = [58 64; 139 154]
  Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from({3, 2}, {7, 8, 9, 10, 11, 12});
  Tensor c = matmul(a, b);
  EXPECT_DOUBLE_EQ(c.at(0, 0), 58.0);
  EXPECT_DOUBLE_EQ(c.at(0, 1), 64.0);
  EXPECT_DOUBLE_EQ(c.at(1, 0), 139.0);
  EXPECT_DOUBLE_EQ(c.at(1, 1), 154.0);
}

TEST(Tensor, MatmulShapeMismatchThrows) {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 2});
  EXPECT_THROW(matmul(a, b), ShapeError);
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(hadamard(a, b), ShapeError);
}

TEST(Tensor, HadamardWithOnesIsIdentity) {
  Tensor x = random_param({3, 4}, 7);
  Tensor ones = Tensor::full({3, 4}, 1.0);
  Tensor y = hadamard(x, ones);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y.data()[i], x.data()[i]);
}

TEST(Tensor, SoftmaxUniformOverEqualLogits) {
  Tensor x = Tensor::from({1, 3}, {0, 0, 0});
  Tensor y = softmax_rows(x);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(y.data()[i], 1.0 / 3.0, 1e-15);
}

TEST(Tensor, SoftmaxRowsSumToOneAndRespectMask) {
  Tensor x = random_param({5, 6}, 11);
  std::vector<std::uint8_t> mask(30, 0);
  Rng rng(3);
  for (std::size_t i = 0; i < 5; ++i) {
    mask[i * 6 + i] = 1;  // guarantee one unmasked entry per row
    for (std::size_t j = 0; j < 6; ++j)
      if (rng.next_double() < 0.5) mask[i * 6 + j] = 1;
  }
  Tensor y = softmax_rows(x, &mask);
  for (std::size_t i = 0; i < 5; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      if (mask[i * 6 + j] == 0) {
        EXPECT_EQ(y.at(i, j), 0.0);
      } else {
        EXPECT_GT(y.at(i, j), 0.0);
      }
      row += y.at(i, j);
    }
    EXPECT_NEAR(row, 1.0, 1e-6);
  }
}

TEST(Tensor, SoftmaxAllMaskedRowThrows) {
  Tensor x = Tensor::zeros({2, 3});
  std::vector<std::uint8_t> mask(6, 1);
  mask[3] = mask[4] = mask[5] = 0;
  EXPECT_THROW(softmax_rows(x, &mask), ArgumentError);
}

TEST(Tensor, SumBackwardGivesOnes) {
  Tensor x = random_param({2, 3}, 5);
  Tape tape;
  Tensor loss = sum(x);
  tape.backward(loss);
  for (double g : x.grad_view()) EXPECT_DOUBLE_EQ(g, 1.0);
}

TEST(Tensor, BackwardRequiresScalarLoss) {
  Tensor x = random_param({2, 2}, 5);
  Tape tape;
  Tensor y = relu(x);
  EXPECT_THROW(tape.backward(y), ArgumentError);
}

TEST(Tensor, RepeatedBackwardAccumulates) {
  Tensor x = random_param({4}, 9);
  Tape tape;
  Tensor loss = sum(x);
  tape.backward(loss);
  tape.backward(loss);
  for (double g : x.grad_view()) EXPECT_DOUBLE_EQ(g, 2.0);
}

TEST(Tensor, LinearFunctionFiniteDifferenceIsExact) {
  Tensor w = random_param({3, 3}, 21);
  Tensor x = Tensor::from({3}, {0.3, -0.2, 0.9});
  const double err = finite_difference_check([&]() { return sum(matmul(w, x)); }, {w});
  EXPECT_LE(err, 1e-9);
}

TEST(Tensor, MseGradMatchesFiniteDifferences) {
  Tensor w = random_param({2, 2}, 33);
  Tensor x = Tensor::from({2}, {0.5, -1.2});
  Tensor target = Tensor::from({2}, {0.1, 0.4});
  const double err = finite_difference_check([&]() { return mse(matmul(w, x), target); }, {w});
  EXPECT_LE(err, 1e-4);
}

TEST(Tensor, TanhChainMatchesFiniteDifferences) {
  Tensor w = random_param({3, 2}, 41);
  Tensor x = random_param({2, 4}, 42);
  const double err =
      finite_difference_check([&]() { return mean(tanh(matmul(w, x))); }, {w, x});
  EXPECT_LE(err, 1e-4);
}

// Every differentiable primitive against central differences on randomized
// shapes (seeded), the module-level gradient-correctness property.
TEST(Tensor, AllPrimitivesPassFiniteDifferenceCheck) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng shape_rng(seed + 100);
    const std::size_t r = 2 + shape_rng.next_below(6);
    const std::size_t c = 2 + shape_rng.next_below(6);
    Tensor a = random_param_off_zero({r, c}, seed * 13 + 1);
    Tensor b = random_param_off_zero({r, c}, seed * 13 + 2);
    Tensor m = random_param({c, r}, seed * 13 + 3);
    Tensor v = random_param({c}, seed * 13 + 4);
    Tensor u = random_param({r}, seed * 13 + 5);

    const std::vector<std::pair<const char*, std::function<Tensor()>>> cases = {
        {"matmul", [&]() { return mean(matmul(a, m)); }},
        {"matmul_vec", [&]() { return mean(matmul(a, v)); }},
        {"matmul_nt", [&]() { return mean(matmul_nt(a, b)); }},
        {"add", [&]() { return mean(add(a, b)); }},
        {"add_broadcast", [&]() { return mean(add(a, v)); }},
        {"sub", [&]() { return mean(sub(a, b)); }},
        {"sub_from_scalar", [&]() { return mean(sub_from_scalar(1.0, a)); }},
        {"hadamard", [&]() { return mean(hadamard(a, b)); }},
        {"scale", [&]() { return mean(scale(a, -2.5)); }},
        {"outer_sum", [&]() { return mean(outer_sum(u, v)); }},
        {"reshape", [&]() { return mean(reshape(a, {r * c})); }},
        {"select_rows", [&]() { return mean(select_rows(a, {0, r - 1, 0})); }},
        {"concat_rows", [&]() { return mean(concat_rows({a, b})); }},
        {"concat_cols", [&]() { return mean(concat_cols(a, b)); }},
        {"sigmoid", [&]() { return mean(sigmoid(a)); }},
        {"tanh", [&]() { return mean(tanh(a)); }},
        {"relu", [&]() { return mean(relu(a)); }},
        {"leaky_relu", [&]() { return mean(leaky_relu(a, 0.2)); }},
        {"elu", [&]() { return mean(elu(a)); }},
        {"softmax", [&]() { return mean(softmax_rows(a)); }},
        {"layer_norm", [&]() { return mean(hadamard(layer_norm(a), b)); }},
        {"dropout", [&]() { return mean(dropout(a, 0.4, 1234, true)); }},
        {"mse", [&]() { return mse(a, b); }},
        {"sum", [&]() { return sum(a); }},
    };
    for (const auto& [name, f] : cases) {
      const double err = finite_difference_check(f, {a, b, m, v, u});
      EXPECT_LE(err, 1e-4) << name << " (seed " << seed << ")";
    }
  }
}

TEST(Tensor, LayerNormRowsAreStandardized) {
  Tensor x = random_param({4, 16}, 77);
  Tensor y = layer_norm(x);
  for (std::size_t i = 0; i < 4; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 16; ++j) mean += y.at(i, j);
    mean /= 16.0;
    for (std::size_t j = 0; j < 16; ++j) var += (y.at(i, j) - mean) * (y.at(i, j) - mean);
    var /= 16.0;
    EXPECT_LE(std::abs(mean), 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-3);
  }
}

TEST(Tensor, DropoutIdentityCases) {
  Tensor x = random_param({3, 5}, 88);
  Tensor eval_mode = dropout(x, 0.7, 42, false);
  Tensor zero_rate = dropout(x, 0.0, 42, true);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_DOUBLE_EQ(eval_mode.data()[i], x.data()[i]);
    EXPECT_DOUBLE_EQ(zero_rate.data()[i], x.data()[i]);
  }
}

TEST(Tensor, DropoutDeterministicGivenSeed) {
  Tensor x = Tensor::full({100}, 1.0);
  Tensor y1 = dropout(x, 0.5, 99, true);
  Tensor y2 = dropout(x, 0.5, 99, true);
  EXPECT_EQ(y1.data(), y2.data());
}

TEST(Tensor, GradCheckRejectsNonDeterministicFunction) {
  Tensor x = random_param({4}, 3);
  std::uint64_t counter = 0;
  auto f = [&]() { return mean(dropout(x, 0.5, ++counter, true)); };
  EXPECT_THROW(finite_difference_check(f, {x}), NumericalError);
}

TEST(Tensor, NoRecordingWithoutActiveTape) {
  Tensor x = random_param({2, 2}, 1);
  Tensor y = tanh(x);  // no tape in scope
  EXPECT_FALSE(y.has_grad());
  Tape tape;
  EXPECT_EQ(tape.size(), 0u);
  Tensor z = tanh(x);
  EXPECT_EQ(tape.size(), 1u);
  (void)y;
  (void)z;
}
