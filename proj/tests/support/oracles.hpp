#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

inline constexpr double kInvE = 0.36787944117144233;

/// Weights a(i, j) of arcs j -> i with the given density, zero diagonal.
inline Eigen::MatrixXd random_weights(std::mt19937_64& rng, int n, double density, double wmin = 0.2,
                                      double wmax = 2.0) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> w(wmin, wmax);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && u01(rng) < density) a(i, j) = w(rng);
    }
  }
  return a;
}

/// Random weights plus a Hamiltonian cycle through a random permutation.
inline Eigen::MatrixXd random_strongly_connected(std::mt19937_64& rng, int n, double density) {
  Eigen::MatrixXd a = random_weights(rng, n, density);
  if (n < 2) return a;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_real_distribution<double> w(0.2, 2.0);
  for (int k = 0; k < n; ++k) {
    const int from = perm[k];
    const int to = perm[(k + 1) % n];
    if (a(to, from) == 0.0) a(to, from) = w(rng);
  }
  return a;
}

/// Vertices reachable from r along arcs j -> i (a(i, j) > 0), by BFS.
inline std::vector<bool> reachable_from(const Eigen::MatrixXd& a, int r) {
  const int n = static_cast<int>(a.rows());
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  seen[r] = true;
  q.push(r);
  while (!q.empty()) {
    const int j = q.front();
    q.pop();
    for (int i = 0; i < n; ++i) {
      if (a(i, j) > 0.0 && !seen[i]) {
        seen[i] = true;
        q.push(i);
      }
    }
  }
  return seen;
}

inline bool has_root(const Eigen::MatrixXd& a) {
  for (int r = 0; r < a.rows(); ++r) {
    const auto seen = reachable_from(a, r);
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return true;
  }
  return false;
}

/// SCCs by pairwise mutual reachability, each sorted, as a set of sets.
inline std::set<std::vector<std::size_t>> scc_partition(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<std::vector<bool>> reach;
  for (int r = 0; r < n; ++r) reach.push_back(reachable_from(a, r));
  std::set<std::vector<std::size_t>> out;
  for (int i = 0; i < n; ++i) {
    std::vector<std::size_t> comp;
    for (int j = 0; j < n; ++j) {
      if (reach[i][j] && reach[j][i]) comp.push_back(static_cast<std::size_t>(j));
    }
    out.insert(comp);
  }
  return out;
}

/// L entry by entry from the definition.
inline Eigen::MatrixXd laplacian_by_definition(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  Eigen::MatrixXd l(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        double s = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k != i) s += a(i, k);
        }
        l(i, j) = s;
      } else {
        l(i, j) = -a(i, j);
      }
    }
  }
  return l;
}

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

/// Adaptive Simpson quadrature of f over [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 50);
}

/// Solution of x' = -L x at time t.
inline Eigen::VectorXd linear_flow(const Eigen::MatrixXd& l, const Eigen::VectorXd& x0, double t) {
  const Eigen::MatrixXd m = -l * t;
  return m.exp() * x0;
}

/// Minimum of xi^T B xi over the mixed-sign part of the unit circle (2x2 B).
inline double angular_sweep_2x2(const Eigen::Matrix2d& b, int steps = 1000000) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < steps; ++k) {
    const double th = 2.0 * M_PI * (k + 0.5) / steps;
    const Eigen::Vector2d xi(std::cos(th), std::sin(th));
    if (xi(0) * xi(1) >= 0.0) continue;
    best = std::min(best, xi.dot(b * xi));
  }
  return best;
}

/// The printed closed-form beta for one power-linear agent.
inline double claim1_beta_term(double a, double b, double ci, double c, double m) {
  const double p = 2.0 * c / (1.0 + c);
  const double num = a * a * std::min(std::pow(m, 2.0 * ci - 2.0 * c * (1.0 + ci) / (1.0 + c)),
                                      std::pow(m, 2.0 * ci - 4.0 * c / (1.0 + c)));
  const double den = 2.0 * std::max(std::pow(a / (1.0 + ci), p), std::pow(b / 2.0, p));
  return num / den;
}

inline double claim2_beta1_term(double a, double ci, double c, double m) {
  const double p = 4.0 * c / (2.0 + c);
  return a * a * std::pow(m, 2.0 * ci - 4.0 * c * (1.0 + ci) / (2.0 + c)) /
         (2.0 * std::pow(a / (1.0 + ci), p));
}

inline double claim2_beta2_term(double a, double ci, double c, double m) {
  const double p = 4.0 * c / (2.0 + c);
  return a * a * std::pow(m, 2.0 * ci - 2.0 * c * (2.0 + ci) / (2.0 + c)) /
         (2.0 * std::pow(2.0 * a / (2.0 + ci), p));
}

/// Coefficient of determination of the least-squares line through (x, y).
inline double affine_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  const double slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (my + slope * (x[k] - mx));
    ss_res += r * r;
  }
  return 1.0 - ss_res / syy;
}

}  // namespace oracle
