#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fincon/graph.hpp"
#include "fincon/protocols.hpp"

namespace fincon {

struct SimulationConfig {
  double dt = 1e-3;
  double t_max = 20.0;
  double eps_consensus = 1e-9;
  std::size_t record_stride = 10;
  /// Snap to the common mean and hold once disagreement <= eps_consensus.
  bool freeze_on_consensus = true;
  /// A base step is split in halves (adaptively, up to max_refinements
  /// levels) while one RK4 step and two half steps differ by more than
  /// refine_tol + refine_rel_tol * (max x - min x), or the step leaves
  /// [min x, max x].
  double refine_tol = 1e-12;
  double refine_rel_tol = 1e-6;
  /// 0 gives plain fixed-step RK4.
  std::size_t max_refinements = 30;
  /// Refined RK4 substeps allowed per base step; the remainder of a step
  /// that needs more is taken by backward Euler.
  std::size_t max_substeps = 256;

  /// Throws ValidationError.
  void validate() const;

  bool operator==(const SimulationConfig&) const = default;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> disagreement;
  /// V(t); present iff the topology is strongly connected
  std::optional<std::vector<double>> lyapunov;
  std::optional<double> settled_at;
  /// time at which the freeze rule fired, if it did
  std::optional<double> frozen_at;
  std::size_t base_steps = 0;
  std::size_t refined_substeps = 0;
  /// backward Euler substeps used where RK4 would need too many
  std::size_t implicit_substeps = 0;

  std::size_t size() const { return times.size(); }
  const Eigen::VectorXd& final_state() const { return states.back(); }
};

/// y_i = sum_j a_ij (x_j - x_i), i.e. -L x, formed so that a constant x gives
/// exactly zero.
Eigen::VectorXd protocol_arguments(const WeightedDigraph& g, const Eigen::VectorXd& x);

/// u_i = f_i(y_i)
Eigen::VectorXd rhs(const WeightedDigraph& g, const ProtocolBank& bank, const Eigen::VectorXd& x);

/// max_i x_i - min_i x_i
double disagreement(const Eigen::VectorXd& x);

/// V = sum_i w_i F_i(y_i). Throws NotStronglyConnected.
double lyapunov_value(const WeightedDigraph& g, const LeftNullVector& omega,
                      const ProtocolBank& bank, const Eigen::VectorXd& x);

/// Fixed base step RK4 on [0, t_max] with the local refinement guard and the
/// freeze rule from the config. Throws NonFiniteState.
Trajectory integrate(const SimulationConfig& cfg, const WeightedDigraph& g,
                     const ProtocolBank& bank, const Eigen::VectorXd& x0);

/// Earliest recorded time after which disagreement stays <= eps.
std::optional<double> settling_time(const Trajectory& traj, double eps);

/// Same, restricted to the agents in `agents`.
std::optional<double> settling_time(const Trajectory& traj, const std::vector<std::size_t>& agents,
                                    double eps);

}  // namespace fincon
