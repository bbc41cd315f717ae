#pragma once

#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fincon {

/// Information-flow arc: agent `to` receives the state of agent `from`.
/// Indices are zero-based.
struct Arc {
  std::size_t from = 0;
  std::size_t to = 0;
  double weight = 1.0;
};

/// Interaction topology. Entry (i, j) of the weight matrix is a_ij, the
/// weight with which agent i listens to agent j, i.e. the arc j -> i.
class WeightedDigraph {
public:
  /// Throws InvalidGraph unless `weights` is square, nonempty, finite,
  /// nonnegative and has an exactly zero diagonal.
  explicit WeightedDigraph(Eigen::MatrixXd weights);

  /// Edgeless graph on n agents.
  static WeightedDigraph empty(std::size_t n);
  static WeightedDigraph from_arcs(std::size_t n, const std::vector<Arc>& arcs);

  std::size_t size() const { return static_cast<std::size_t>(weights_.rows()); }
  double weight(std::size_t i, std::size_t j) const { return weights_(i, j); }
  const Eigen::MatrixXd& weights() const { return weights_; }

  /// Agents j with a_ij > 0.
  std::vector<std::size_t> neighbors(std::size_t i) const;
  std::vector<Arc> arcs() const;

  /// Subgraph induced by `vertices`, relabelled 0..k-1 in the given order.
  WeightedDigraph induced(const std::vector<std::size_t>& vertices) const;

private:
  Eigen::MatrixXd weights_;
};

/// Graph Laplacian: l_ii = sum_{k != i} a_ik, l_ij = -a_ij.
class Laplacian {
public:
  explicit Laplacian(const WeightedDigraph& g);

  const Eigen::MatrixXd& matrix() const { return m_; }
  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }

private:
  Eigen::MatrixXd m_;
};

Laplacian laplacian(const WeightedDigraph& g);

/// Strongly connected components in a topological order of the
/// condensation DAG (every parent component precedes its children).
struct Condensation {
  std::vector<std::vector<std::size_t>> components;
  std::set<std::pair<std::size_t, std::size_t>> dag_edges;
  /// component index for each vertex
  std::vector<std::size_t> component_of;

  std::size_t size() const { return components.size(); }
  std::vector<std::size_t> parents(std::size_t c) const;
  std::vector<std::size_t> children(std::size_t c) const;
  /// Components with no incoming DAG edge.
  std::vector<std::size_t> sources() const;
  /// All components from which `c` is reachable, excluding `c`.
  std::vector<std::size_t> ancestors(std::size_t c) const;
};

Condensation condensation(const WeightedDigraph& g);

bool is_strongly_connected(const WeightedDigraph& g);

/// Some vertex reaches every other vertex along directed paths.
bool has_spanning_tree(const WeightedDigraph& g);

/// Cross-check of has_spanning_tree: L has exactly one eigenvalue of
/// modulus <= tol.
bool has_spanning_tree_spectral(const WeightedDigraph& g, double tol = 1e-8);

/// Positive left null vector of the Laplacian of a strongly connected graph,
/// normalized so the entries sum to 1.
struct LeftNullVector {
  Eigen::VectorXd omega;

  std::size_t size() const { return static_cast<std::size_t>(omega.size()); }
  double operator[](std::size_t i) const { return omega(static_cast<Eigen::Index>(i)); }
};

/// Throws NotStronglyConnected.
LeftNullVector left_null_vector(const WeightedDigraph& g);

/// B = (diag(w) L + L^T diag(w)) / 2. Exactly symmetric.
/// Throws NotStronglyConnected.
Eigen::MatrixXd mirror_laplacian(const WeightedDigraph& g, const LeftNullVector& omega);

/// Dense symmetric eigensolve. Throws NotSymmetric if |m - m^T| exceeds 1e-12
/// (scaled by max(1, max|m_ij|)).
double smallest_eigenvalue_symmetric(const Eigen::MatrixXd& m);
Eigen::VectorXd eigenvalues_symmetric(const Eigen::MatrixXd& m);

double induced_infinity_norm(const Eigen::MatrixXd& m);
double infinity_norm(const Eigen::VectorXd& v);

/// M = ||L||_inf * ||x0||_inf, the argument bound used by the (A2) check.
double infinity_norms(const Laplacian& l, const Eigen::VectorXd& x0);

}  // namespace fincon
