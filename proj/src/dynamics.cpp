#include "fincon/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "fincon/errors.hpp"

namespace fincon {

void SimulationConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("sim.dt must be positive");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ValidationError("sim.t_max must be positive");
  if (dt > t_max) throw ValidationError("sim.dt must not exceed sim.t_max");
  if (!(eps_consensus > 0.0)) throw ValidationError("sim.eps_consensus must be positive");
  if (record_stride == 0) throw ValidationError("sim.record_stride must be at least 1");
  if (!(refine_tol > 0.0)) throw ValidationError("sim.refine_tol must be positive");
  if (!(refine_rel_tol >= 0.0)) throw ValidationError("sim.refine_rel_tol must be nonnegative");
  if (max_refinements > 60) throw ValidationError("sim.max_refinements must be at most 60");
}

Eigen::VectorXd protocol_arguments(const WeightedDigraph& g, const Eigen::VectorXd& x) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  const auto& a = g.weights();
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (a(i, j) != 0.0) acc += a(i, j) * (x(j) - x(i));
    }
    y(i) = acc;
  }
  return y;
}

Eigen::VectorXd rhs(const WeightedDigraph& g, const ProtocolBank& bank, const Eigen::VectorXd& x) {
  if (bank.size() != g.size() || static_cast<std::size_t>(x.size()) != g.size()) {
    throw ValidationError("graph, protocol bank and state dimensions differ");
  }
  Eigen::VectorXd u = protocol_arguments(g, x);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    u(i) = bank[static_cast<std::size_t>(i)].eval(u(i));
  }
  return u;
}

double disagreement(const Eigen::VectorXd& x) {
  if (x.size() == 0) return 0.0;
  return x.maxCoeff() - x.minCoeff();
}

namespace {

double weighted_energy(const WeightedDigraph& g, const LeftNullVector& omega,
                       const ProtocolBank& bank, const Eigen::VectorXd& x) {
  const auto y = protocol_arguments(g, x);
  double v = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    v += omega[i] * bank[i].antiderivative(y(static_cast<Eigen::Index>(i)));
  }
  return v;
}

}  // namespace

double lyapunov_value(const WeightedDigraph& g, const LeftNullVector& omega,
                      const ProtocolBank& bank, const Eigen::VectorXd& x) {
  if (!is_strongly_connected(g)) {
    throw NotStronglyConnected("the Lyapunov function needs a strongly connected graph");
  }
  if (omega.size() != g.size() || bank.size() != g.size() ||
      static_cast<std::size_t>(x.size()) != g.size()) {
    throw ValidationError("omega, protocol bank or state has the wrong dimension");
  }
  return weighted_energy(g, omega, bank, x);
}

namespace {

// Freezing works component by component along the condensation: once a
// component and all of its ancestors agree to within eps, nothing upstream can
// move them again, so they are snapped to a common value and held.
class FreezeTracker {
public:
  FreezeTracker(const WeightedDigraph& g, double eps) : eps_(eps), frozen_agent_(g.size(), false) {
    const auto cond = condensation(g);
    for (std::size_t c = 0; c < cond.size(); ++c) {
      Component comp;
      comp.agents = cond.components[c];
      comp.parents = cond.parents(c);
      comp.closure = comp.agents;
      for (auto a : cond.ancestors(c)) {
        comp.closure.insert(comp.closure.end(), cond.components[a].begin(),
                            cond.components[a].end());
      }
      components_.push_back(std::move(comp));
    }
  }

  // Snaps every component that became freezable; true if anything changed.
  bool update(Eigen::VectorXd& x) {
    bool changed = false;
    for (auto& comp : components_) {
      if (comp.frozen) continue;
      const bool parents_frozen = std::all_of(comp.parents.begin(), comp.parents.end(),
                                              [&](std::size_t p) { return components_[p].frozen; });
      if (!parents_frozen || spread(x, comp.closure) > eps_) continue;
      double value = 0.0;
      if (comp.parents.empty()) {
        double lo = x(static_cast<Eigen::Index>(comp.agents.front()));
        double hi = lo;
        for (auto i : comp.agents) {
          const double xi = x(static_cast<Eigen::Index>(i));
          value += xi;
          lo = std::min(lo, xi);
          hi = std::max(hi, xi);
        }
        value = std::clamp(value / static_cast<double>(comp.agents.size()), lo, hi);
      } else {
        value = components_[comp.parents.front()].value;
      }
      for (auto i : comp.agents) {
        x(static_cast<Eigen::Index>(i)) = value;
        frozen_agent_[i] = true;
      }
      comp.value = value;
      comp.frozen = true;
      changed = true;
    }
    return changed;
  }

  bool all_frozen() const {
    return std::all_of(components_.begin(), components_.end(),
                       [](const Component& c) { return c.frozen; });
  }
  const std::vector<bool>& frozen_agents() const { return frozen_agent_; }

private:
  struct Component {
    std::vector<std::size_t> agents;
    std::vector<std::size_t> parents;
    std::vector<std::size_t> closure;
    bool frozen = false;
    double value = 0.0;
  };

  static double spread(const Eigen::VectorXd& x, const std::vector<std::size_t>& agents) {
    double lo = x(static_cast<Eigen::Index>(agents.front()));
    double hi = lo;
    for (auto i : agents) {
      lo = std::min(lo, x(static_cast<Eigen::Index>(i)));
      hi = std::max(hi, x(static_cast<Eigen::Index>(i)));
    }
    return hi - lo;
  }

  double eps_;
  std::vector<Component> components_;
  std::vector<bool> frozen_agent_;
};

class Stepper {
public:
  Stepper(const SimulationConfig& cfg, const WeightedDigraph& g, const ProtocolBank& bank,
          FreezeTracker* freezer)
      : cfg_(cfg), g_(g), bank_(bank), freezer_(freezer), lap_(laplacian(g).matrix()) {}

  Eigen::VectorXd velocity(const Eigen::VectorXd& x) const {
    Eigen::VectorXd u = rhs(g_, bank_, x);
    if (freezer_ != nullptr) {
      const auto& held = freezer_->frozen_agents();
      for (std::size_t i = 0; i < held.size(); ++i) {
        if (held[i]) u(static_cast<Eigen::Index>(i)) = 0.0;
      }
    }
    return u;
  }

  Eigen::VectorXd rk4(const Eigen::VectorXd& x, double h) const {
    const auto k1 = velocity(x);
    const auto k2 = velocity(x + 0.5 * h * k1);
    const auto k3 = velocity(x + 0.5 * h * k2);
    const auto k4 = velocity(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  // Backward Euler step z = x + s u(z) by damped Newton. Its solution never
  // leaves [min x, max x] whatever s is, which is what the stiff sliding
  // regime near consensus needs. The solve runs in coordinates centred on x
  // so that differences between nearly agreeing agents keep their digits.
  std::optional<Eigen::VectorXd> backward_euler(const Eigen::VectorXd& x, double s) const {
    const auto n = x.size();
    const double centre = 0.5 * (x.maxCoeff() + x.minCoeff());
    const Eigen::VectorXd w0 = x.array() - centre;
    const double spread = x.maxCoeff() - x.minCoeff();
    const double x_tol = std::max(8.0 * std::numeric_limits<double>::epsilon() * spread,
                                  1e-3 * cfg_.refine_tol);
    const double noise_tol = cfg_.refine_tol + cfg_.refine_rel_tol * spread;
    const auto residual = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
      return w - w0 - s * velocity(w);
    };
    const auto done = [&](const Eigen::VectorXd& w) { return Eigen::VectorXd(w.array() + centre); };

    Eigen::VectorXd w = w0;
    Eigen::VectorXd r = residual(w);
    for (int it = 0; it < 60; ++it) {
      const Eigen::VectorXd y = protocol_arguments(g_, w);
      Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (freezer_ != nullptr && freezer_->frozen_agents()[static_cast<std::size_t>(i)]) continue;
        const auto& f = bank_[static_cast<std::size_t>(i)];
        const double d = std::max(1e-7 * std::abs(y(i)), 1e-300);
        const double slope = (f.eval(y(i) + d) - f.eval(y(i) - d)) / (2.0 * d);
        jac.row(i) += s * slope * lap_.row(i);
      }
      const auto lu = jac.partialPivLu();
      const Eigen::VectorXd delta = lu.solve(-r);
      if (!delta.allFinite()) return std::nullopt;
      const double dnorm = delta.cwiseAbs().maxCoeff();
      if (dnorm <= x_tol) return done(w + delta);
      // Natural monotonicity test: the raw residual is swamped by roundoff
      // in y pushed through the non-Lipschitz f, the Newton-scaled one is not.
      double lambda = 1.0;
      while (true) {
        const Eigen::VectorXd trial = w + lambda * delta;
        const Eigen::VectorXd rt = residual(trial);
        const Eigen::VectorXd scaled = lu.solve(-rt);
        if (scaled.allFinite() && scaled.cwiseAbs().maxCoeff() <= (1.0 - 0.5 * lambda) * dnorm) {
          w = trial;
          r = rt;
          break;
        }
        lambda *= 0.5;
        if (lambda < 1e-10) {
          if (dnorm <= noise_tol) return done(w);
          return std::nullopt;
        }
      }
    }
    return std::nullopt;
  }

  bool bounded(const Eigen::VectorXd& x, const Eigen::VectorXd& next) const {
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, x.cwiseAbs().maxCoeff());
    return next.maxCoeff() <= x.maxCoeff() + slack && next.minCoeff() >= x.minCoeff() - slack;
  }

  // One base step of length h. Near the non-Lipschitz consensus set a full
  // RK4 step can overshoot or land on a spurious fixed point of the discrete
  // map. A substep is accepted only if it agrees with two half steps and
  // keeps the state inside [min x, max x], which the exact flow never leaves;
  // otherwise it is halved. Once max_substeps refined substeps are spent the
  // rest of the base step is taken by backward Euler.
  Eigen::VectorXd advance(Eigen::VectorXd x, double h) {
    if (cfg_.max_refinements == 0) return rk4(x, h);
    // Positions are counted in units of h / 2^depth so the substeps tile
    // the base step exactly.
    const auto depth = static_cast<int>(cfg_.max_refinements);
    const std::uint64_t total = std::uint64_t{1} << depth;
    std::uint64_t pos = 0;
    std::size_t budget = cfg_.max_substeps;
    int level = 0;
    while (pos < total) {
      const std::uint64_t units = total >> level;
      const double sub = std::ldexp(h, -level);
      std::optional<Eigen::VectorXd> next;
      if (budget > 0) {
        auto full = rk4(x, sub);
        bool accept = level == depth;
        if (!accept && bounded(x, full)) {
          const auto halves = rk4(rk4(x, 0.5 * sub), 0.5 * sub);
          const double err = (full - halves).cwiseAbs().maxCoeff();
          accept = err <= cfg_.refine_tol + cfg_.refine_rel_tol * (x.maxCoeff() - x.minCoeff());
        }
        if (accept) next = std::move(full);
      } else {
        next = backward_euler(x, sub);
        if (next && !bounded(x, *next)) next.reset();
        if (!next && level == depth) next = rk4(x, sub);
        if (next) ++implicit_;
      }
      if (!next) {
        ++level;
        continue;
      }
      x = std::move(*next);
      pos += units;
      if (level > 0) {
        ++refined_;
        if (budget > 0) --budget;
      }
      if (freezer_ != nullptr && freezer_->update(x) && freezer_->all_frozen()) return x;
      // Coarsen once aligned to the next level up; implicit steps coarsen as
      // far as alignment allows.
      do {
        if (level == 0 || pos % (total >> (level - 1)) != 0) break;
        --level;
      } while (budget == 0);
    }
    return x;
  }

  std::size_t refined() const { return refined_; }
  std::size_t implicit() const { return implicit_; }

private:
  const SimulationConfig& cfg_;
  const WeightedDigraph& g_;
  const ProtocolBank& bank_;
  FreezeTracker* freezer_;
  Eigen::MatrixXd lap_;
  std::size_t refined_ = 0;
  std::size_t implicit_ = 0;
};

}  // namespace

Trajectory integrate(const SimulationConfig& cfg, const WeightedDigraph& g,
                     const ProtocolBank& bank, const Eigen::VectorXd& x0) {
  cfg.validate();
  if (bank.size() != g.size() || static_cast<std::size_t>(x0.size()) != g.size()) {
    throw ValidationError("graph, protocol bank and initial state dimensions differ");
  }
  if (!x0.allFinite()) throw NonFiniteState("initial state is not finite");

  std::optional<LeftNullVector> omega;
  if (is_strongly_connected(g)) omega = left_null_vector(g);

  Trajectory traj;
  if (omega) traj.lyapunov.emplace();
  const auto record = [&](double t, const Eigen::VectorXd& x) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.disagreement.push_back(disagreement(x));
    if (omega) traj.lyapunov->push_back(weighted_energy(g, *omega, bank, x));
  };

  Eigen::VectorXd x = x0;
  std::optional<FreezeTracker> freezer;
  if (cfg.freeze_on_consensus) {
    freezer.emplace(g, cfg.eps_consensus);
    freezer->update(x);
    if (freezer->all_frozen()) traj.frozen_at = 0.0;
  }
  record(0.0, x);

  const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
  Stepper stepper(cfg, g, bank, freezer ? &*freezer : nullptr);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * cfg.dt;
    const double t = k == steps ? cfg.t_max : static_cast<double>(k) * cfg.dt;
    if (!traj.frozen_at) {
      x = stepper.advance(std::move(x), t - t_prev);
      if (!x.allFinite()) {
        throw NonFiniteState("state became non-finite at t = " + std::to_string(t) +
                             "; reduce dt");
      }
      if (freezer) {
        freezer->update(x);
        if (freezer->all_frozen()) traj.frozen_at = t;
      }
    }
    if (k % cfg.record_stride == 0 || k == steps) record(t, x);
  }
  traj.base_steps = steps;
  traj.refined_substeps = stepper.refined();
  traj.implicit_substeps = stepper.implicit();
  traj.settled_at = settling_time(traj, cfg.eps_consensus);
  return traj;
}

std::optional<double> settling_time(const Trajectory& traj, double eps) {
  if (traj.times.empty()) return std::nullopt;
  std::size_t k = traj.size();
  while (k > 0 && traj.disagreement[k - 1] <= eps) --k;
  if (k == traj.size()) return std::nullopt;
  return traj.times[k];
}

std::optional<double> settling_time(const Trajectory& traj, const std::vector<std::size_t>& agents,
                                    double eps) {
  if (traj.times.empty()) return std::nullopt;
  const auto spread = [&](const Eigen::VectorXd& x) {
    double lo = x(static_cast<Eigen::Index>(agents.front()));
    double hi = lo;
    for (auto i : agents) {
      lo = std::min(lo, x(static_cast<Eigen::Index>(i)));
      hi = std::max(hi, x(static_cast<Eigen::Index>(i)));
    }
    return hi - lo;
  };
  if (agents.empty()) return traj.times.front();
  std::size_t k = traj.size();
  while (k > 0 && spread(traj.states[k - 1]) <= eps) --k;
  if (k == traj.size()) return std::nullopt;
  return traj.times[k];
}

}  // namespace fincon
