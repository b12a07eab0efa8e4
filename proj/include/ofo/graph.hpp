// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ofo {

/// Undirected connected communication graph on nodes 0..N-1.
/// Immutable after construction; safe to share across threads.
class CommGraph {
 public:
  /// Validates and builds a graph. Edges are stored with i < j; duplicates
  /// are removed (their count is recorded), self-loops and out-of-range
  /// endpoints are errors, and connectivity is verified by traversal.
  static CommGraph build(int node_count, std::vector<std::pair<int, int>> edges);

  static CommGraph path(int n);
  static CommGraph star(int n);
  static CommGraph complete(int n);
  /// Canonical 8-node benchmark tree: a 4-node backbone 0-1-2-3 with the
  /// pendant branches 1-4-5 and 2-6-7.
  static CommGraph tree8();
  static CommGraph standard(const std::string& kind, int n);

  /// Edge-list text format: one "i j" pair per line, '#' starts a comment.
  static CommGraph from_edge_list(std::istream& in);
  static CommGraph load_edge_list(const std::string& path);
  void save_edge_list(std::ostream& out) const;

  int node_count() const { return node_count_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return neighbors_.at(i); }
  int degree(int i) const { return static_cast<int>(neighbors_.at(i).size()); }
  bool is_tree() const;
  int duplicates_removed() const { return duplicates_removed_; }

 private:
  CommGraph() = default;
  int node_count_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> neighbors_;
  int duplicates_removed_ = 0;
};

/// Doubly stochastic consensus weight matrix with cached spectral data.
/// Entries follow the lazy Metropolis rule W_ij = 1/(1 + max(deg_i, deg_j)).
struct WeightMatrix {
  Eigen::MatrixXd w;
  int tau = 1;
  Eigen::VectorXd spectrum;  // eigenvalues, descending
  double lambda2 = 0.0;      // second largest eigenvalue by value
  double tr_w2tau = 1.0;     // tr[W^(2 tau)]
  double tr_dev2 = 0.0;      // tr[(W^tau - 11^T/N)^2]

  int node_count() const { return static_cast<int>(w.rows()); }

  /// Exact-averaging test double: W = 11^T/N.
  static WeightMatrix complete_averaging(int n, int tau);
  /// Wraps an externally supplied symmetric doubly stochastic matrix.
  static WeightMatrix from_matrix(Eigen::MatrixXd w, int tau);
};

WeightMatrix metropolis_weights(const CommGraph& graph, int tau);

/// tr[W^(2 tau)] and tr[(W^tau - 11^T/N)^2], from the cached spectrum.
std::pair<double, double> consensus_deviation(const WeightMatrix& weights, int tau);

}  // namespace ofo
