// SPDX-License-Identifier: Apache-2.0
#include "ofo/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ofo/errors.hpp"

namespace ofo {

CommGraph CommGraph::build(int node_count, std::vector<std::pair<int, int>> edges) {
  if (node_count < 2) {
    throw Error("graph needs at least 2 nodes, got " + std::to_string(node_count));
  }
  for (auto& [i, j] : edges) {
    if (i == j) {
      throw SelfLoop("self-loop at node " + std::to_string(i));
    }
    if (i < 0 || j < 0 || i >= node_count || j >= node_count) {
      throw IndexOutOfRange("edge (" + std::to_string(i) + "," + std::to_string(j) +
                            ") exceeds node range [0," + std::to_string(node_count - 1) + "]");
    }
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  const auto last = std::unique(edges.begin(), edges.end());
  const int duplicates = static_cast<int>(edges.end() - last);
  edges.erase(last, edges.end());

  CommGraph g;
  g.node_count_ = node_count;
  g.edges_ = std::move(edges);
  g.duplicates_removed_ = duplicates;
  g.neighbors_.assign(node_count, {});
  for (const auto& [i, j] : g.edges_) {
    g.neighbors_[i].push_back(j);
    g.neighbors_[j].push_back(i);
  }
  for (auto& nb : g.neighbors_) std::sort(nb.begin(), nb.end());

  // connectivity by traversal
  std::vector<char> seen(node_count, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int nb : g.neighbors_[v]) {
      if (!seen[nb]) {
        seen[nb] = 1;
        ++reached;
        stack.push_back(nb);
      }
    }
  }
  if (reached != node_count) {
    throw DisconnectedGraph("graph is disconnected: reached " + std::to_string(reached) +
                            " of " + std::to_string(node_count) + " nodes");
  }
  return g;
}

CommGraph CommGraph::path(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return build(n, std::move(edges));
}

CommGraph CommGraph::star(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
  return build(n, std::move(edges));
}

CommGraph CommGraph::complete(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return build(n, std::move(edges));
}

CommGraph CommGraph::tree8() {
  return build(8, {{0, 1}, {1, 2}, {2, 3}, {1, 4}, {4, 5}, {2, 6}, {6, 7}});
}

CommGraph CommGraph::standard(const std::string& kind, int n) {
  if (kind == "path") return path(n);
  if (kind == "star") return star(n);
  if (kind == "complete") return complete(n);
  if (kind == "tree8") return tree8();
  throw ConfigError("unknown graph kind '" + kind + "'");
}

CommGraph CommGraph::from_edge_list(std::istream& in) {
  std::vector<std::pair<int, int>> edges;
  int max_node = -1;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    int i = 0, j = 0;
    if (!(row >> i)) continue;  // blank or comment-only line
    if (!(row >> j)) throw ConfigError("edge-list line with a single endpoint: '" + line + "'");
    edges.emplace_back(i, j);
    max_node = std::max({max_node, i, j});
  }
  if (edges.empty()) throw EmptyInput("edge-list file contains no edges");
  return build(max_node + 1, std::move(edges));
}

CommGraph CommGraph::load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open edge-list file '" + path + "'");
  return from_edge_list(in);
}

void CommGraph::save_edge_list(std::ostream& out) const {
  out << "# " << node_count_ << " nodes, " << edges_.size() << " edges\n";
  for (const auto& [i, j] : edges_) out << i << " " << j << "\n";
}

bool CommGraph::is_tree() const {
  return static_cast<int>(edges_.size()) == node_count_ - 1;
}

namespace {

// Spectral caches for a symmetric doubly stochastic W.
void fill_spectral(WeightMatrix& wm) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(wm.w);
  // descending
  wm.spectrum = eig.eigenvalues().reverse();
  wm.lambda2 = wm.node_count() >= 2 ? wm.spectrum(1) : 0.0;
  const auto [tr1, tr2] = consensus_deviation(wm, wm.tau);
  wm.tr_w2tau = tr1;
  wm.tr_dev2 = tr2;
}

}  // namespace

WeightMatrix metropolis_weights(const CommGraph& graph, int tau) {
  if (tau < 1) throw Error("tau must be >= 1, got " + std::to_string(tau));
  const int n = graph.node_count();
  WeightMatrix wm;
  wm.tau = tau;
  wm.w = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : graph.edges()) {
    const double wij = 1.0 / (1.0 + std::max(graph.degree(i), graph.degree(j)));
    wm.w(i, j) = wij;
    wm.w(j, i) = wij;
  }
  for (int i = 0; i < n; ++i) {
    wm.w(i, i) = 1.0 - wm.w.row(i).sum();
  }
  fill_spectral(wm);
  return wm;
}

WeightMatrix WeightMatrix::complete_averaging(int n, int tau) {
  return from_matrix(Eigen::MatrixXd::Constant(n, n, 1.0 / n), tau);
}

WeightMatrix WeightMatrix::from_matrix(Eigen::MatrixXd w, int tau) {
  if (tau < 1) throw Error("tau must be >= 1, got " + std::to_string(tau));
  if (w.rows() != w.cols() || w.rows() < 2) throw Error("weight matrix must be square, N >= 2");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() != 0.0) throw Error("weight matrix must be symmetric");
  const int n = static_cast<int>(w.rows());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  if ((w * ones - ones).cwiseAbs().maxCoeff() > 1e-12) throw Error("weight matrix rows must sum to 1");
  if (w.minCoeff() < 0.0 || w.maxCoeff() > 1.0) throw Error("weight matrix entries must lie in [0,1]");
  WeightMatrix wm;
  wm.tau = tau;
  wm.w = std::move(w);
  fill_spectral(wm);
  return wm;
}

std::pair<double, double> consensus_deviation(const WeightMatrix& weights, int tau) {
  if (tau < 1) throw Error("tau must be >= 1, got " + std::to_string(tau));
  // W^tau - 11^T/N removes exactly the Perron eigenvalue, so both traces
  // come from the spectrum: tr[W^(2 tau)] = sum_i lambda_i^(2 tau) and
  // tr[(W^tau - 11^T/N)^2] = sum_{i>=2} lambda_i^(2 tau).
  double tr_w2tau = 0.0;
  double tr_dev2 = 0.0;
  for (int i = 0; i < weights.spectrum.size(); ++i) {
    const double term = std::pow(weights.spectrum(i), 2 * tau);
    tr_w2tau += term;
    if (i >= 1) tr_dev2 += term;
  }
  return {tr_w2tau, tr_dev2};
}

}  // namespace ofo
