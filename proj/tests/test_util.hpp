// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <random>
#include <utility>
#include <vector>

#include "ofo/graph.hpp"

namespace ofo::test {

// Random connected graph: a random tree plus a few extra edges.
inline CommGraph random_connected_graph(std::mt19937_64& gen, int max_nodes = 10) {
  std::uniform_int_distribution<int> size_dist(2, max_nodes);
  const int n = size_dist(gen);
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> parent(0, v - 1);
    edges.emplace_back(parent(gen), v);
  }
  std::uniform_int_distribution<int> extra_dist(0, n);
  const int extra = extra_dist(gen);
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int e = 0; e < extra; ++e) {
    const int a = node(gen), b = node(gen);
    if (a != b) edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  return CommGraph::build(n, std::move(edges));
}

inline Eigen::VectorXd random_vector(std::mt19937_64& gen, int n, double lo = -1.0,
                                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = dist(gen);
  return v;
}

inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& m, int p) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd base = m;
  int e = p;
  while (e > 0) {
    if (e & 1) out = out * base;
    base = base * base;
    e >>= 1;
  }
  return out;
}

}  // namespace ofo::test
