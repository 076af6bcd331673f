// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <vector>

#include "odorgen/dataio.hpp"

namespace odorgen::data {

namespace {

struct PairTerm {
  int i;
  int j;
  bool bonded;
};

double min_distance(const std::vector<Vec3>& x) {
  double best = INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
      best = std::min(best, std::sqrt(s));
    }
  }
  return best;
}

}  // namespace

MoleculeGraph embed_coordinates(const MoleculeGraph& g, std::uint64_t seed,
                                const EmbedOptions& opt) {
  const std::size_t n = g.num_atoms();
  std::vector<Vec3> x(n, Vec3{0.0, 0.0, 0.0});
  if (n <= 1) return g.with_positions(x);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double spread = opt.bond_length * std::cbrt(static_cast<double>(n));
  for (auto& p : x) {
    for (double& c : p) c = spread * normal(rng);
  }

  std::vector<PairTerm> pairs;
  for (int i = 0; i < static_cast<int>(n); ++i) {
    for (int j = i + 1; j < static_cast<int>(n); ++j) {
      pairs.push_back({i, j, g.bond_between(i, j).has_value()});
    }
  }

  constexpr double kBondWeight = 10.0;
  constexpr double kStep = 0.02;
  std::vector<Vec3> force(n);
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    for (auto& f : force) f = {0.0, 0.0, 0.0};
    double max_force = 0.0;
    for (const auto& p : pairs) {
      Vec3 d;
      double r2 = 0.0;
      for (int k = 0; k < 3; ++k) {
        d[k] = x[p.i][k] - x[p.j][k];
        r2 += d[k] * d[k];
      }
      double r = std::sqrt(r2);
      if (r < 1e-9) {
        // Coincident atoms: separate along a seeded random direction.
        for (int k = 0; k < 3; ++k) d[k] = normal(rng);
        r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        for (int k = 0; k < 3; ++k) d[k] *= 1e-3 / r;
        r = 1e-3;
      }
      double mag = 0.0;  // positive pushes the pair apart
      if (p.bonded) {
        mag = kBondWeight * (opt.bond_length - r);
      } else if (r < opt.clearance) {
        mag = opt.clearance - r;
      }
      if (mag == 0.0) continue;
      for (int k = 0; k < 3; ++k) {
        const double f = mag * d[k] / r;
        force[p.i][k] += f;
        force[p.j][k] -= f;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) {
        x[i][k] += kStep * force[i][k];
        max_force = std::max(max_force, std::abs(force[i][k]));
      }
    }
    if (max_force < 1e-6) break;
  }

  Vec3 centroid{0.0, 0.0, 0.0};
  for (const auto& p : x) {
    for (int k = 0; k < 3; ++k) centroid[k] += p[k];
  }
  for (auto& p : x) {
    for (int k = 0; k < 3; ++k) p[k] -= centroid[k] / static_cast<double>(n);
  }
  const double closest = min_distance(x);
  if (!(closest >= opt.min_separation)) {
    throw EmbeddingFailed("closest atom pair at " + std::to_string(closest) +
                          " after relaxation");
  }
  return g.with_positions(x);
}

}  // namespace odorgen::data
