#include "fincon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fincon/errors.hpp"

namespace fincon {

namespace {

void require_psd(const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  double lambda_min = 0.0;
  try {
    lambda_min = smallest_eigenvalue_symmetric(b);
  } catch (const NotSymmetric& e) {
    throw DegenerateInput(e.what());
  }
  if (lambda_min < -1e-9 * scale) throw DegenerateInput("matrix is not positive semidefinite");
}

bool mixed_signs(const Eigen::VectorXd& xi) {
  return xi.maxCoeff() > 0.0 && xi.minCoeff() < 0.0;
}

void require_constants(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidConstants("alpha must lie in (0, 1)");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidConstants("beta must be positive");
}

double comparison_time(double v0, double rate, double alpha) {
  return std::pow(v0, 1.0 - alpha) / (rate * (1.0 - alpha));
}

}  // namespace

double c2_constant(const LeftNullVector& omega, double alpha) {
  return 1.0 / std::pow(omega.omega.maxCoeff(), alpha);
}

C1Estimate estimate_c1_a_priori(const Eigen::MatrixXd& b, std::size_t samples, std::uint64_t seed) {
  if (b.rows() < 2) throw DegenerateInput("C1 needs at least two agents");
  require_psd(b);
  const auto n = b.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto random_unit = [&] {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    return Eigen::VectorXd(v.normalized());
  };
  const auto quad = [&](const Eigen::VectorXd& v) { return v.dot(b * v); };

  constexpr std::size_t kKeep = 8;
  std::vector<std::pair<double, Eigen::VectorXd>> best;
  std::size_t accepted = 0;
  while (accepted < samples) {
    auto xi = random_unit();
    if (!mixed_signs(xi)) continue;
    ++accepted;
    const double q = quad(xi);
    if (best.size() < kKeep || q < best.back().first) {
      best.emplace_back(q, std::move(xi));
      std::sort(best.begin(), best.end(),
                [](const auto& l, const auto& r) { return l.first < r.first; });
      if (best.size() > kKeep) best.pop_back();
    }
  }

  // Random-perturbation descent that never leaves the mixed-sign set.
  double result = best.front().first;
  for (auto& [q, xi] : best) {
    double sigma = 0.1;
    int failures = 0;
    while (sigma > 1e-9) {
      Eigen::VectorXd step(n);
      for (Eigen::Index i = 0; i < n; ++i) step(i) = normal(rng);
      const Eigen::VectorXd cand = (xi + sigma * step).normalized();
      const double qc = quad(cand);
      if (mixed_signs(cand) && qc < q) {
        xi = cand;
        q = qc;
        failures = 0;
      } else if (++failures >= 30) {
        sigma *= 0.5;
        failures = 0;
      }
    }
    result = std::min(result, q);
  }
  return {result, C1Provenance::APrioriSampled, samples};
}

std::optional<C1Estimate> estimate_c1_a_posteriori(const Eigen::MatrixXd& b,
                                                   const std::vector<Eigen::VectorXd>& feedback) {
  require_psd(b);
  double best = std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  for (const auto& f : feedback) {
    if (f.size() != b.rows()) throw DegenerateInput("feedback vector has the wrong dimension");
    const double ff = f.squaredNorm();
    if (ff == 0.0) continue;
    best = std::min(best, f.dot(b * f) / ff);
    ++used;
  }
  if (used == 0) return std::nullopt;
  return C1Estimate{best, C1Provenance::APosterioriTrajectory, used};
}

ConvergenceCertificate settling_bound_strongly_connected(const WeightedDigraph& g,
                                                         const LeftNullVector& omega,
                                                         const ProtocolBank& bank,
                                                         const Eigen::VectorXd& x0, double alpha,
                                                         double beta, std::optional<double> c1) {
  require_constants(alpha, beta);
  ConvergenceCertificate cert;
  cert.kind = StageKind::StronglyConnected;
  cert.alpha = alpha;
  cert.beta = beta;
  cert.c1 = c1;
  cert.c2 = c2_constant(omega, alpha);
  cert.v0 = lyapunov_value(g, omega, bank, x0);
  if (cert.v0 == 0.0) return cert;
  if (!c1 || !(*c1 > 0.0)) throw InvalidConstants("C1 must be positive when V(0) > 0");
  cert.t_star = comparison_time(cert.v0, *c1 * cert.c2 * beta, alpha);
  return cert;
}

Eigen::MatrixXd coupled_mirror_matrix(const WeightedDigraph& g_sub, const LeftNullVector& omega_sub,
                                      const Eigen::VectorXd& coupling) {
  const Eigen::MatrixXd weighted = omega_sub.omega.asDiagonal() * laplacian(g_sub).matrix();
  Eigen::MatrixXd out = 0.5 * (weighted + weighted.transpose());
  out.diagonal() += omega_sub.omega.cwiseProduct(coupling);
  return out;
}

ConvergenceCertificate settling_bound_rooted(const WeightedDigraph& g_sub,
                                             const Eigen::VectorXd& coupling,
                                             const LeftNullVector& omega_sub,
                                             const ProtocolBank& bank_sub,
                                             const Eigen::VectorXd& z0, double alpha, double beta) {
  require_constants(alpha, beta);
  if (!is_strongly_connected(g_sub)) {
    throw NotStronglyConnected("follower block must be strongly connected");
  }
  const auto n = static_cast<Eigen::Index>(g_sub.size());
  if (coupling.size() != n || z0.size() != n || omega_sub.size() != g_sub.size() ||
      bank_sub.size() != g_sub.size()) {
    throw InvalidConstants("follower block inputs have inconsistent dimensions");
  }
  if (coupling.minCoeff() < 0.0) throw ZeroCoupling("coupling weights must be nonnegative");
  if (coupling.maxCoeff() <= 0.0) throw ZeroCoupling("follower block has no upstream coupling");

  ConvergenceCertificate cert;
  cert.kind = StageKind::Rooted;
  cert.alpha = alpha;
  cert.beta = beta;
  cert.c2 = c2_constant(omega_sub, alpha);

  const Eigen::MatrixXd b_tilde = coupled_mirror_matrix(g_sub, omega_sub, coupling);
  const double lambda1 = smallest_eigenvalue_symmetric(b_tilde);
  if (!(lambda1 > 0.0)) throw DegenerateInput("coupled mirror matrix is not positive definite");
  cert.lambda1 = lambda1;

  Eigen::MatrixXd grounded = laplacian(g_sub).matrix();
  grounded.diagonal() += coupling;
  const Eigen::VectorXd y0 = -(grounded * z0);
  double v0 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    v0 += omega_sub.omega(i) * bank_sub[static_cast<std::size_t>(i)].antiderivative(y0(i));
  }
  cert.v0 = v0;
  if (v0 > 0.0) cert.t_star = comparison_time(v0, lambda1 * cert.c2 * beta, alpha);
  return cert;
}

namespace {

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = x(static_cast<Eigen::Index>(idx[k]));
  }
  return out;
}

// Stage energy using the full-graph arguments y; for a stage whose upstream
// agrees exactly these equal the block's own arguments.
double stage_energy(const WeightedDigraph& g, const ProtocolBank& bank,
                    const std::vector<std::size_t>& agents, const LeftNullVector& omega,
                    const Eigen::VectorXd& x) {
  const auto y = protocol_arguments(g, x);
  double v = 0.0;
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const auto i = agents[k];
    v += omega[k] * bank[i].antiderivative(y(static_cast<Eigen::Index>(i)));
  }
  return v;
}

std::size_t index_of_time(const Trajectory& traj, double t) {
  const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t);
  return static_cast<std::size_t>(it - traj.times.begin());
}

}  // namespace

CertificationReport certify(const WeightedDigraph& g, const ProtocolBank& bank,
                            const Eigen::VectorXd& x0, const SimulationConfig& sim_cfg) {
  CertificationReport report;
  report.condensation = condensation(g);
  report.spanning_tree = report.condensation.sources().size() == 1;
  report.bound_M = infinity_norms(laplacian(g), x0);

  SimulationConfig cfg = sim_cfg;
  cfg.record_stride = 1;
  const auto traj = integrate(cfg, g, bank, x0);
  report.settled_at = traj.settled_at;
  report.final_state = traj.final_state();
  report.final_disagreement = traj.disagreement.back();

  if (!report.spanning_tree) {
    report.notes.emplace_back(
        "no spanning tree: the finite-time consensus theorem does not apply, no bound issued");
    return report;
  }

  if (report.bound_M > 0.0) {
    report.constants = select_constants(bank, report.bound_M);
    if (!report.constants->a2_pass) {
      report.notes.emplace_back(
          "assumption (A2) fails for this protocol bank: no finite settling bound exists");
    }
    if (report.constants->source == BetaSource::Empirical && report.constants->beta_closed_form) {
      report.notes.emplace_back(
          "closed-form beta exceeds the grid minimum of the ratio; the empirical value is used");
    }
  }
  const bool bounded = !report.constants || report.constants->a2_pass;
  const double alpha = report.constants ? report.constants->alpha : 0.5;
  const double beta = report.constants ? report.constants->beta : 1.0;

  const auto& cond = report.condensation;
  std::vector<double> path_bound(cond.size(), 0.0);
  bool all_certified = bounded;

  for (std::size_t c = 0; c < cond.size(); ++c) {
    StageReport stage;
    stage.agents = cond.components[c];
    stage.parents = cond.parents(c);
    const auto sub = g.induced(stage.agents);
    const auto bank_sub = bank.subset(stage.agents);
    const auto omega = left_null_vector(sub);

    std::vector<std::size_t> upstream;
    for (auto a : cond.ancestors(c)) {
      upstream.insert(upstream.end(), cond.components[a].begin(), cond.components[a].end());
    }

    std::size_t k0 = 0;
    if (upstream.empty()) {
      stage.stage_start = 0.0;
    } else {
      stage.stage_start = settling_time(traj, upstream, cfg.eps_consensus);
      if (!stage.stage_start) {
        stage.note = "upstream agents never settled within the simulated horizon";
        all_certified = false;
        report.stages.push_back(std::move(stage));
        continue;
      }
      k0 = index_of_time(traj, *stage.stage_start);
      stage.upstream_value = gather(traj.states[k0], upstream).mean();
    }

    for (std::size_t k = k0; k < traj.size(); ++k) {
      if (stage_energy(g, bank, stage.agents, omega, traj.states[k]) <= kExtinctionThreshold) {
        stage.empirical_extinction = traj.times[k];
        break;
      }
    }

    if (bounded) {
      ConvergenceCertificate cert;
      if (upstream.empty() && stage.agents.size() == 1) {
        cert.kind = StageKind::SingletonRoot;
        cert.alpha = alpha;
        cert.beta = beta;
        stage.note = "singleton root: its state never changes";
      } else if (upstream.empty()) {
        std::vector<Eigen::VectorXd> feedback;
        feedback.reserve(traj.size());
        for (const auto& x : traj.states) {
          const auto y = protocol_arguments(g, x);
          Eigen::VectorXd f(static_cast<Eigen::Index>(stage.agents.size()));
          for (std::size_t k = 0; k < stage.agents.size(); ++k) {
            const auto i = stage.agents[k];
            f(static_cast<Eigen::Index>(k)) = bank[i].eval(y(static_cast<Eigen::Index>(i)));
          }
          feedback.push_back(std::move(f));
        }
        const auto c1 = estimate_c1_a_posteriori(mirror_laplacian(sub, omega), feedback);
        cert = settling_bound_strongly_connected(sub, omega, bank_sub, gather(x0, stage.agents),
                                                 alpha, beta,
                                                 c1 ? std::optional(c1->value) : std::nullopt);
        if (c1) cert.c1_provenance = c1->provenance;
      } else {
        Eigen::VectorXd coupling = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(stage.agents.size()));
        for (std::size_t k = 0; k < stage.agents.size(); ++k) {
          const auto i = stage.agents[k];
          for (std::size_t j = 0; j < g.size(); ++j) {
            if (cond.component_of[j] != c) coupling(static_cast<Eigen::Index>(k)) += g.weight(i, j);
          }
        }
        const Eigen::VectorXd z0 =
            gather(traj.states[k0], stage.agents).array() - *stage.upstream_value;
        cert = settling_bound_rooted(sub, coupling, omega, bank_sub, z0, alpha, beta);
      }
      cert.component_id = c;
      if (report.constants) cert.beta_source = report.constants->source;

      double longest_parent = 0.0;
      for (auto p : stage.parents) longest_parent = std::max(longest_parent, path_bound[p]);
      path_bound[c] = longest_parent + cert.t_star;
      if (stage.empirical_extinction) {
        stage.bound_respected = *stage.empirical_extinction <= *stage.stage_start + cert.t_star;
      }
      stage.certificate = cert;
    }
    report.stages.push_back(std::move(stage));
  }

  if (all_certified) {
    report.overall_bound = *std::max_element(path_bound.begin(), path_bound.end());
  }
  return report;
}

}  // namespace fincon
