#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fincon/dynamics.hpp"
#include "fincon/graph.hpp"
#include "fincon/protocols.hpp"

namespace fincon {

/// Which way a C1 estimate can be wrong.
enum class C1Provenance {
  /// smallest value found by sampling; an upper estimate of the true minimum
  APrioriSampled,
  /// minimum Rayleigh quotient along one simulated run; exact for that run
  APosterioriTrajectory,
};

struct C1Estimate {
  double value = 0.0;
  C1Provenance provenance = C1Provenance::APrioriSampled;
  std::size_t samples = 0;
};

/// 1 / max_i w_i^alpha
double c2_constant(const LeftNullVector& omega, double alpha);

/// Minimum of xi^T B xi over unit vectors whose nonzero entries do not all
/// share a sign, by Monte Carlo plus local refinement of the best samples.
/// Throws DegenerateInput if B is not PSD or has fewer than two rows.
C1Estimate estimate_c1_a_priori(const Eigen::MatrixXd& b, std::size_t samples = 100000,
                                std::uint64_t seed = 0x2545F4914F6CDD1DULL);

/// Minimum of f^T B f / f^T f over the given feedback vectors, skipping zero
/// ones. Empty when every vector is zero. Throws DegenerateInput if B is not PSD.
std::optional<C1Estimate> estimate_c1_a_posteriori(const Eigen::MatrixXd& b,
                                                   const std::vector<Eigen::VectorXd>& feedback);

enum class StageKind { StronglyConnected, Rooted, SingletonRoot };

struct ConvergenceCertificate {
  std::size_t component_id = 0;
  StageKind kind = StageKind::StronglyConnected;
  double alpha = 0.0;
  double beta = 0.0;
  BetaSource beta_source = BetaSource::ClosedForm;
  /// strongly connected stages only
  std::optional<double> c1;
  std::optional<C1Provenance> c1_provenance;
  double c2 = 1.0;
  double v0 = 0.0;
  double t_star = 0.0;
  /// rooted stages only: smallest eigenvalue of the coupled mirror matrix
  std::optional<double> lambda1;
};

/// t* = V(0)^{1-alpha} / (c1 c2 beta (1-alpha)); zero when V(0) = 0.
/// Throws NotStronglyConnected, InvalidConstants.
ConvergenceCertificate settling_bound_strongly_connected(const WeightedDigraph& g,
                                                         const LeftNullVector& omega,
                                                         const ProtocolBank& bank,
                                                         const Eigen::VectorXd& x0, double alpha,
                                                         double beta, std::optional<double> c1);

/// (diag(w) L + L^T diag(w)) / 2 + diag(w) diag(b) for a strongly connected
/// follower block coupled to a settled upstream through b.
Eigen::MatrixXd coupled_mirror_matrix(const WeightedDigraph& g_sub, const LeftNullVector& omega_sub,
                                      const Eigen::VectorXd& coupling);

/// Follower-block bound with lambda1 of the coupled mirror matrix in place of
/// c1. z0 holds the block's states relative to the upstream consensus value.
/// Throws NotStronglyConnected, ZeroCoupling, InvalidConstants, DegenerateInput.
ConvergenceCertificate settling_bound_rooted(const WeightedDigraph& g_sub,
                                             const Eigen::VectorXd& coupling,
                                             const LeftNullVector& omega_sub,
                                             const ProtocolBank& bank_sub,
                                             const Eigen::VectorXd& z0, double alpha, double beta);

struct StageReport {
  std::vector<std::size_t> agents;
  std::vector<std::size_t> parents;
  std::optional<ConvergenceCertificate> certificate;
  /// time at which all upstream agents had settled (0 for the root)
  std::optional<double> stage_start;
  /// upstream consensus value at stage start (followers only)
  std::optional<double> upstream_value;
  /// first recorded time at or after stage_start with stage energy <= 1e-12
  std::optional<double> empirical_extinction;
  /// empirical_extinction <= stage_start + t*
  std::optional<bool> bound_respected;
  std::string note;
};

struct CertificationReport {
  bool spanning_tree = false;
  Condensation condensation;
  double bound_M = 0.0;
  std::optional<ConstantsChoice> constants;
  /// components in topological order
  std::vector<StageReport> stages;
  /// longest root-to-leaf sum of stage bounds; a hybrid quantity, since each
  /// follower bound starts from simulated states
  std::optional<double> overall_bound;
  std::optional<double> settled_at;
  double final_disagreement = 0.0;
  Eigen::VectorXd final_state;
  std::vector<std::string> notes;
};

/// Stage energy below which a stage counts as extinct.
inline constexpr double kExtinctionThreshold = 1e-12;

/// Simulates (recording every step) and certifies each condensation stage in
/// topological order.
CertificationReport certify(const WeightedDigraph& g, const ProtocolBank& bank,
                            const Eigen::VectorXd& x0, const SimulationConfig& sim_cfg);

}  // namespace fincon
