// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "odorgen/egnn.hpp"

namespace odorgen::egnn {
namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data()) v = n(rng);
  return t;
}

// Uniform random rotation from a normalised quaternion.
Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double q[4];
  double norm = 0;
  for (double& v : q) {
    v = n(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : q) v /= norm;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

Tensor transform(const Tensor& coords, const Mat3& r, const std::array<double, 3>& v) {
  Tensor out = coords;
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      double s = v[a];
      for (std::size_t b = 0; b < 3; ++b) s += r[a][b] * coords(i, b);
      out(i, a) = s;
    }
  }
  return out;
}

struct Fixture {
  ParamStore params;
  std::vector<EgnnLayerParams> layers;
};

Fixture make_layers(std::uint64_t seed, std::size_t d = 8) {
  Fixture f;
  std::mt19937_64 rng(seed);
  f.layers.push_back(init_layer(f.params, "egnn0", d, rng));
  f.layers.push_back(init_layer(f.params, "egnn1", d, rng));
  return f;
}

TEST(FullyConnected, AllOrderedPairs) {
  const EdgeList e = fully_connected(4);
  EXPECT_EQ(e.size(), 12u);
  for (std::size_t k = 0; k < e.size(); ++k) EXPECT_NE(e.dst[k], e.src[k]);
  EXPECT_EQ(fully_connected(1).size(), 0u);
}

TEST(Messages, TwinNodesUseZeroDistance) {
  Fixture f = make_layers(1);
  NodeState s{Tensor::matrix(2, 8, 0.4), Tensor::matrix(2, 3, 1.25)};
  const Tensor m = compute_messages(s, f.params, f.layers[0], fully_connected(2));
  Tensor in = Tensor::matrix(1, 17, 0.4);
  in[16] = 0.0;
  const Tensor expected = num::mlp_forward(f.params, f.layers[0].node_mlp, in);
  for (std::size_t c = 0; c < 8; ++c) {
    EXPECT_DOUBLE_EQ(m(0, c), expected(0, c));
    EXPECT_DOUBLE_EQ(m(1, c), expected(0, c));
  }
}

TEST(Messages, InvariantUnderRotation) {
  Fixture f = make_layers(2);
  std::mt19937_64 rng(3);
  const NodeState s{random_matrix(5, 8, rng), random_matrix(5, 3, rng)};
  const Tensor m = compute_messages(s, f.params, f.layers[0], fully_connected(5));
  for (int k = 0; k < 20; ++k) {
    const NodeState r{s.features, transform(s.coords, random_rotation(rng), {0, 0, 0})};
    EXPECT_LT(num::max_abs_diff(compute_messages(r, f.params, f.layers[0], fully_connected(5)), m),
              1e-12);
  }
}

TEST(Messages, ZeroWeightsGiveZero) {
  Fixture f = make_layers(4);
  f.params.fill_zero();
  std::mt19937_64 rng(5);
  const NodeState s{random_matrix(3, 8, rng), random_matrix(3, 3, rng)};
  const Tensor m = compute_messages(s, f.params, f.layers[0], fully_connected(3));
  for (double v : m.data()) EXPECT_EQ(v, 0.0);
}

TEST(Messages, BadEdgeIndex) {
  Fixture f = make_layers(6);
  const NodeState s{Tensor::matrix(2, 8), Tensor::matrix(2, 3)};
  EdgeList e{{0}, {2}};
  EXPECT_THROW(compute_messages(s, f.params, f.layers[0], e), IndexOutOfRange);
  EXPECT_THROW(update_coordinates(s, f.params, f.layers[0], e), IndexOutOfRange);
}

TEST(Coordinates, SingleNodeUnchanged) {
  Fixture f = make_layers(7);
  const NodeState s{Tensor::matrix(1, 8, 0.1), Tensor::from_rows({{1, 2, 3}})};
  EXPECT_EQ(update_coordinates(s, f.params, f.layers[0], fully_connected(1)), s.coords);
}

TEST(Coordinates, SymmetricPairMovesOppositely) {
  Fixture f = make_layers(8);
  const NodeState s{Tensor::matrix(2, 8, 0.3), Tensor::from_rows({{0.7, -0.2, 0.5}, {-0.7, 0.2, -0.5}})};
  const Tensor out = update_coordinates(s, f.params, f.layers[0], fully_connected(2));
  for (std::size_t a = 0; a < 3; ++a) {
    const double d0 = out(0, a) - s.coords(0, a);
    const double d1 = out(1, a) - s.coords(1, a);
    EXPECT_NEAR(d0, -d1, 1e-15);
  }
}

TEST(Coordinates, EquivariantUnderRotation) {
  Fixture f = make_layers(9);
  std::mt19937_64 rng(10);
  const NodeState s{random_matrix(6, 8, rng), random_matrix(6, 3, rng)};
  const Tensor base = update_coordinates(s, f.params, f.layers[0], fully_connected(6));
  for (int k = 0; k < 100; ++k) {
    const Mat3 r = random_rotation(rng);
    const NodeState rs{s.features, transform(s.coords, r, {0, 0, 0})};
    const Tensor rotated = update_coordinates(rs, f.params, f.layers[0], fully_connected(6));
    EXPECT_LT(num::max_abs_diff(rotated, transform(base, r, {0, 0, 0})), 1e-6);
  }
}

TEST(Forward, ZeroWeightLayersAreIdentity) {
  Fixture f = make_layers(11);
  f.params.fill_zero();
  std::mt19937_64 rng(12);
  const NodeState s{random_matrix(4, 8, rng), random_matrix(4, 3, rng)};
  const NodeState out = egnn_forward(s, f.params, f.layers, fully_connected(4));
  EXPECT_EQ(out.features, s.features);
  EXPECT_EQ(out.coords, s.coords);
}

TEST(Forward, EmptyEdgeSetIsIdentity) {
  Fixture f = make_layers(13);
  std::mt19937_64 rng(14);
  const NodeState s{random_matrix(4, 8, rng), random_matrix(4, 3, rng)};
  const NodeState out = egnn_forward(s, f.params, f.layers, EdgeList{});
  EXPECT_EQ(out.features, s.features);
  EXPECT_EQ(out.coords, s.coords);
}

TEST(Forward, RigidTransformEquivariance) {
  Fixture f = make_layers(15);
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng() % 8;
    const NodeState s{random_matrix(n, 8, rng), random_matrix(n, 3, rng)};
    const NodeState base = egnn_forward(s, f.params, f.layers, fully_connected(n));
    for (int k = 0; k < 20; ++k) {
      const Mat3 r = random_rotation(rng);
      const std::array<double, 3> v{u(rng), u(rng), u(rng)};
      const NodeState ts{s.features, transform(s.coords, r, v)};
      const NodeState out = egnn_forward(ts, f.params, f.layers, fully_connected(n));
      EXPECT_LT(num::max_abs_diff(out.features, base.features), 1e-6);
      EXPECT_LT(num::max_abs_diff(out.coords, transform(base.coords, r, v)), 1e-6);
    }
  }
}

TEST(Forward, TranslationOnlyShiftsCoordinates) {
  Fixture f = make_layers(17);
  std::mt19937_64 rng(18);
  const NodeState s{random_matrix(5, 8, rng), random_matrix(5, 3, rng)};
  const Mat3 id{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  const NodeState base = egnn_forward(s, f.params, f.layers, fully_connected(5));
  const NodeState moved = egnn_forward({s.features, transform(s.coords, id, {3, -1, 2})},
                                       f.params, f.layers, fully_connected(5));
  EXPECT_LT(num::max_abs_diff(moved.features, base.features), 1e-9);
  EXPECT_LT(num::max_abs_diff(moved.coords, transform(base.coords, id, {3, -1, 2})), 1e-9);
}

Tensor permute_rows(const Tensor& t, const std::vector<int>& order) {
  Tensor out = t;
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (std::size_t c = 0; c < t.cols(); ++c) out(k, c) = t(static_cast<std::size_t>(order[k]), c);
  }
  return out;
}

TEST(Forward, PermutationEquivariance) {
  Fixture f = make_layers(19);
  std::mt19937_64 rng(20);
  for (std::size_t n = 2; n <= 6; ++n) {
    const NodeState s{random_matrix(n, 8, rng), random_matrix(n, 3, rng)};
    const NodeState base = egnn_forward(s, f.params, f.layers, fully_connected(n));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int k = 0; k < 10; ++k) {
      std::shuffle(order.begin(), order.end(), rng);
      const NodeState ps{permute_rows(s.features, order), permute_rows(s.coords, order)};
      const NodeState out = egnn_forward(ps, f.params, f.layers, fully_connected(n));
      EXPECT_LT(num::max_abs_diff(out.features, permute_rows(base.features, order)), 1e-12);
      EXPECT_LT(num::max_abs_diff(out.coords, permute_rows(base.coords, order)), 1e-12);
    }
  }
}

TEST(Forward, ShapeMismatch) {
  Fixture f = make_layers(21);
  const NodeState s{Tensor::matrix(3, 8), Tensor::matrix(2, 3)};
  EXPECT_THROW(egnn_forward(s, f.params, f.layers, fully_connected(3)), num::ShapeMismatch);
}

TEST(Forward, TapeAndTensorPathsAgree) {
  Fixture f = make_layers(22);
  std::mt19937_64 rng(23);
  const NodeState s{random_matrix(4, 8, rng), random_matrix(4, 3, rng)};
  const NodeState plain = egnn_forward(s, f.params, f.layers, fully_connected(4));
  Tape tape;
  const VarState vs{tape.variable(s.features), tape.variable(s.coords)};
  const VarState out = egnn_forward(tape, f.params, f.layers, vs, fully_connected(4));
  EXPECT_EQ(out.features.value(), plain.features);
  EXPECT_EQ(out.coords.value(), plain.coords);
}

TEST(Gradients, BothLayersMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Fixture f = make_layers(100 + seed);
    std::mt19937_64 rng(seed);
    const NodeState s{random_matrix(4, 8, rng), random_matrix(4, 3, rng)};
    const EdgeList edges = fully_connected(4);
    auto loss_of = [&](Tape& tape, const ParamStore& p) {
      const VarState vs{tape.constant(s.features), tape.constant(s.coords)};
      const VarState out = egnn_forward(tape, p, f.layers, vs, edges);
      return num::add(num::mean(num::square(out.features)), num::mean(num::square(out.coords)));
    };
    Tape tape;
    tape.backward(loss_of(tape, f.params), f.params);
    double diff = 0;
    double norm = 0;
    for (const auto& name : f.params.names()) {
      const Tensor analytic = f.params.grad(name);
      for (std::size_t k = 0; k < analytic.size(); ++k) {
        const double orig = f.params.value(name)[k];
        f.params.mutable_value(name)[k] = orig + 1e-5;
        Tape tp(false);
        const double fp = loss_of(tp, f.params).value()[0];
        f.params.mutable_value(name)[k] = orig - 1e-5;
        Tape tm(false);
        const double fm = loss_of(tm, f.params).value()[0];
        f.params.mutable_value(name)[k] = orig;
        const double numeric = (fp - fm) / 2e-5;
        diff += (analytic[k] - numeric) * (analytic[k] - numeric);
        norm += numeric * numeric;
      }
    }
    EXPECT_LT(std::sqrt(diff), 1e-4 * std::sqrt(norm));
  }
}

}  // namespace
}  // namespace odorgen::egnn
