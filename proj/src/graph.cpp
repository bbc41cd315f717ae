#include "fincon/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <tuple>

#include "fincon/errors.hpp"

namespace fincon {

WeightedDigraph::WeightedDigraph(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  if (weights_.rows() == 0 || weights_.rows() != weights_.cols()) {
    throw InvalidGraph("weight matrix must be square and nonempty");
  }
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
      const double w = weights_(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        throw InvalidGraph("weight a_" + std::to_string(i + 1) + std::to_string(j + 1) +
                           " must be finite and nonnegative");
      }
    }
    if (weights_(i, i) != 0.0) {
      throw InvalidGraph("diagonal weight a_" + std::to_string(i + 1) + std::to_string(i + 1) +
                         " must be zero");
    }
  }
}

WeightedDigraph WeightedDigraph::empty(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return WeightedDigraph(Eigen::MatrixXd::Zero(k, k));
}

WeightedDigraph WeightedDigraph::from_arcs(std::size_t n, const std::vector<Arc>& arcs) {
  const auto k = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, k);
  for (const auto& arc : arcs) {
    if (arc.from >= n || arc.to >= n) {
      throw InvalidGraph("arc endpoint out of range");
    }
    if (arc.from == arc.to) {
      throw InvalidGraph("self-loop on agent " + std::to_string(arc.from + 1));
    }
    w(static_cast<Eigen::Index>(arc.to), static_cast<Eigen::Index>(arc.from)) = arc.weight;
  }
  return WeightedDigraph(std::move(w));
}

std::vector<std::size_t> WeightedDigraph::neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j) {
    if (weight(i, j) > 0.0) out.push_back(j);
  }
  return out;
}

std::vector<Arc> WeightedDigraph::arcs() const {
  std::vector<Arc> out;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < size(); ++j) {
      if (weight(i, j) > 0.0) out.push_back({j, i, weight(i, j)});
    }
  }
  std::sort(out.begin(), out.end(), [](const Arc& a, const Arc& b) {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  });
  return out;
}

WeightedDigraph WeightedDigraph::induced(const std::vector<std::size_t>& vertices) const {
  const auto k = static_cast<Eigen::Index>(vertices.size());
  Eigen::MatrixXd w(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) {
      w(r, c) = weights_(static_cast<Eigen::Index>(vertices[r]),
                         static_cast<Eigen::Index>(vertices[c]));
    }
  }
  return WeightedDigraph(std::move(w));
}

// The diagonal is the off-diagonal row sum (k != i). Since a_ii = 0 this is
// also the full row sum, so every row of L cancels.
Laplacian::Laplacian(const WeightedDigraph& g) : m_(-g.weights()) {
  for (Eigen::Index i = 0; i < m_.rows(); ++i) {
    double degree = 0.0;
    for (Eigen::Index k = 0; k < m_.cols(); ++k) {
      if (k != i) degree += g.weights()(i, k);
    }
    m_(i, i) = degree;
  }
}

Laplacian laplacian(const WeightedDigraph& g) { return Laplacian(g); }

std::vector<std::size_t> Condensation::parents(std::size_t c) const {
  std::vector<std::size_t> out;
  for (const auto& [from, to] : dag_edges) {
    if (to == c) out.push_back(from);
  }
  return out;
}

std::vector<std::size_t> Condensation::children(std::size_t c) const {
  std::vector<std::size_t> out;
  for (const auto& [from, to] : dag_edges) {
    if (from == c) out.push_back(to);
  }
  return out;
}

std::vector<std::size_t> Condensation::sources() const {
  std::vector<bool> has_parent(components.size(), false);
  for (const auto& edge : dag_edges) has_parent[edge.second] = true;
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (!has_parent[c]) out.push_back(c);
  }
  return out;
}

std::vector<std::size_t> Condensation::ancestors(std::size_t c) const {
  std::vector<bool> seen(components.size(), false);
  std::vector<std::size_t> stack{c};
  while (!stack.empty()) {
    const auto cur = stack.back();
    stack.pop_back();
    for (auto p : parents(cur)) {
      if (!seen[p]) {
        seen[p] = true;
        stack.push_back(p);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (seen[k] && k != c) out.push_back(k);
  }
  return out;
}

namespace {

// Successors along information flow: j -> i whenever a_ij > 0.
std::vector<std::vector<std::size_t>> successor_lists(const WeightedDigraph& g) {
  std::vector<std::vector<std::size_t>> succ(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (g.weight(i, j) > 0.0) succ[j].push_back(i);
    }
  }
  return succ;
}

}  // namespace

// Iterative Tarjan. Components come out sinks-first, so the list is reversed
// at the end to obtain a topological order.
Condensation condensation(const WeightedDigraph& g) {
  const std::size_t n = g.size();
  const auto succ = successor_lists(g);
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);

  std::vector<std::size_t> index(n, kUnvisited), lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> found;
  std::size_t counter = 0;

  struct Frame {
    std::size_t v;
    std::size_t next;
  };

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = lowlink[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;

    while (!call.empty()) {
      auto& frame = call.back();
      const auto v = frame.v;
      if (frame.next < succ[v].size()) {
        const auto w = succ[v][frame.next++];
        if (index[w] == kUnvisited) {
          index[w] = lowlink[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          lowlink[v] = std::min(lowlink[v], index[w]);
        }
        continue;
      }
      if (lowlink[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w = 0;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        found.push_back(std::move(comp));
      }
      call.pop_back();
      if (!call.empty()) {
        auto& parent = call.back();
        lowlink[parent.v] = std::min(lowlink[parent.v], lowlink[v]);
      }
    }
  }

  Condensation out;
  out.components.assign(found.rbegin(), found.rend());
  out.component_of.assign(n, 0);
  for (std::size_t c = 0; c < out.components.size(); ++c) {
    for (auto v : out.components[c]) out.component_of[v] = c;
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (auto i : succ[j]) {
      const auto cj = out.component_of[j];
      const auto ci = out.component_of[i];
      if (cj != ci) out.dag_edges.insert({cj, ci});
    }
  }
  return out;
}

bool is_strongly_connected(const WeightedDigraph& g) { return condensation(g).size() == 1; }

bool has_spanning_tree(const WeightedDigraph& g) { return condensation(g).sources().size() == 1; }

bool has_spanning_tree_spectral(const WeightedDigraph& g, double tol) {
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(laplacian(g).matrix(), false);
  const auto& ev = solver.eigenvalues();
  const auto zeros = std::count_if(ev.begin(), ev.end(),
                                   [tol](const auto& lambda) { return std::abs(lambda) <= tol; });
  return zeros == 1;
}

LeftNullVector left_null_vector(const WeightedDigraph& g) {
  if (!is_strongly_connected(g)) {
    throw NotStronglyConnected("left null vector requires a strongly connected graph");
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  if (n == 1) return {Eigen::VectorXd::Ones(1)};

  // Right singular vector of L^T for the smallest singular value.
  const Eigen::MatrixXd lt = laplacian(g).matrix().transpose();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(lt, Eigen::ComputeFullV);
  Eigen::VectorXd omega = svd.matrixV().col(n - 1);
  if (omega.sum() < 0.0) omega = -omega;
  omega /= omega.sum();
  if (omega.minCoeff() <= 0.0) {
    throw DegenerateInput("left null vector is not strictly positive");
  }
  return {std::move(omega)};
}

Eigen::MatrixXd mirror_laplacian(const WeightedDigraph& g, const LeftNullVector& omega) {
  if (!is_strongly_connected(g)) {
    throw NotStronglyConnected("mirror Laplacian requires a strongly connected graph");
  }
  if (omega.size() != g.size()) throw InvalidGraph("omega has the wrong dimension");
  const Eigen::MatrixXd weighted = omega.omega.asDiagonal() * laplacian(g).matrix();
  return 0.5 * (weighted + weighted.transpose());
}

namespace {

void require_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw NotSymmetric("matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw NotSymmetric("matrix is not symmetric");
  }
}

}  // namespace

Eigen::VectorXd eigenvalues_symmetric(const Eigen::MatrixXd& m) {
  require_symmetric(m);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double smallest_eigenvalue_symmetric(const Eigen::MatrixXd& m) {
  return eigenvalues_symmetric(m)(0);
}

double induced_infinity_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double infinity_norm(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  return v.cwiseAbs().maxCoeff();
}

double infinity_norms(const Laplacian& l, const Eigen::VectorXd& x0) {
  if (static_cast<std::size_t>(x0.size()) != l.size()) {
    throw InvalidGraph("state dimension does not match the Laplacian");
  }
  return induced_infinity_norm(l.matrix()) * infinity_norm(x0);
}

}  // namespace fincon
