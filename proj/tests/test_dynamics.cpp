#include <doctest.h>

#include <random>

#include "fincon/dynamics.hpp"
#include "fincon/errors.hpp"
#include "support/oracles.hpp"

using namespace fincon;

namespace {

WeightedDigraph fig1() {
  return WeightedDigraph::from_arcs(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}, {0, 3, 1.0}});
}

WeightedDigraph cycle3() { return WeightedDigraph::from_arcs(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}}); }

const Eigen::Vector4d kFig1X0(2, -1, 3, -2);

}  // namespace

TEST_CASE("protocol arguments and right-hand side") {
  const Eigen::VectorXd y = protocol_arguments(fig1(), kFig1X0);
  const Eigen::VectorXd by_matrix = -laplacian(fig1()).matrix() * Eigen::VectorXd(kFig1X0);
  CHECK(y == by_matrix);
  CHECK(y == Eigen::Vector4d(1, 3, -4, 4));

  const auto bank = ProtocolBank::uniform(ProtocolFunction::power_linear(1, 1, 0.75), 4);
  const auto u = rhs(fig1(), bank, kFig1X0);
  const double p4 = std::pow(4.0, 0.75) + 4.0;
  CHECK(u(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(u(1) == doctest::Approx(std::pow(3.0, 0.75) + 3.0).epsilon(1e-15));
  CHECK(u(2) == doctest::Approx(-p4).epsilon(1e-15));
  CHECK(u(3) == doctest::Approx(p4).epsilon(1e-15));

  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const WeightedDigraph g(oracle::random_weights(rng, 5, 0.5));
    const double c = std::uniform_real_distribution<double>(-1e3, 1e3)(rng);
    const auto lp = ProtocolBank::uniform(ProtocolFunction::log_power(1, 0.5), 5);
    CHECK(rhs(g, lp, Eigen::VectorXd::Constant(5, c)) == Eigen::VectorXd::Zero(5));
  }
}

TEST_CASE("disagreement") {
  CHECK(disagreement(kFig1X0) == 5.0);
  CHECK(disagreement(Eigen::VectorXd::Constant(3, 1.5)) == 0.0);
  CHECK(disagreement(Eigen::Vector2d(0, 1)) == 1.0);
}

TEST_CASE("lyapunov value") {
  const auto bank = ProtocolBank::uniform(ProtocolFunction::linear(1.0), 3);
  const auto w = left_null_vector(cycle3());
  CHECK(lyapunov_value(cycle3(), w, bank, Eigen::Vector3d(1, 0, 0)) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(lyapunov_value(cycle3(), w, bank, Eigen::Vector3d::Constant(4.0)) == 0.0);
  CHECK_THROWS_AS(
      lyapunov_value(fig1(), LeftNullVector{Eigen::Vector4d::Constant(0.25)},
                     ProtocolBank::uniform(ProtocolFunction::linear(1.0), 4), kFig1X0),
      NotStronglyConnected);
}

TEST_CASE("config validation") {
  SimulationConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.dt = 2.0;
  cfg.t_max = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.eps_consensus = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.record_stride = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("integrate") {
  SUBCASE("consensus start stays put") {
    const auto bank = ProtocolBank::uniform(ProtocolFunction::power_linear(1, 1, 0.75), 4);
    const auto traj = integrate({}, fig1(), bank, Eigen::Vector4d::Constant(0.7));
    REQUIRE(traj.settled_at.has_value());
    CHECK(*traj.settled_at == 0.0);
    for (const auto& x : traj.states) CHECK(x == Eigen::Vector4d::Constant(0.7));
  }
  SUBCASE("recording grid") {
    SimulationConfig cfg;
    cfg.t_max = 1.0;
    cfg.record_stride = 7;
    const auto traj = integrate(cfg, cycle3(), ProtocolBank::uniform(ProtocolFunction::linear(1), 3),
                                Eigen::Vector3d(1, 0, 0));
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(traj.size() == 1000 / 7 + 2);
    CHECK(traj.states.size() == traj.size());
    CHECK(traj.disagreement.size() == traj.size());
    CHECK(traj.lyapunov.has_value());
    for (std::size_t k = 1; k < traj.size(); ++k) CHECK(traj.times[k] > traj.times[k - 1]);
  }
  SUBCASE("four-agent example reaches exact consensus") {
    for (const auto& f : {ProtocolFunction::power_linear(1, 1, 0.75), ProtocolFunction::log_power(1, 0.5)}) {
      const auto traj = integrate({}, fig1(), ProtocolBank::uniform(f, 4), kFig1X0);
      REQUIRE(traj.settled_at.has_value());
      CHECK(*traj.settled_at < 20.0);
      CHECK(traj.disagreement.back() <= 1e-12);
      CHECK_FALSE(traj.lyapunov.has_value());
      for (std::size_t k = 1; k < traj.size(); ++k) {
        CHECK(traj.states[k].cwiseAbs().maxCoeff() <= traj.states[k - 1].cwiseAbs().maxCoeff() + 1e-9);
      }
    }
  }
  SUBCASE("linear protocol decays exponentially at the spectral rate") {
    SimulationConfig cfg;
    cfg.freeze_on_consensus = false;
    const auto traj = integrate(cfg, fig1(), ProtocolBank::uniform(ProtocolFunction::linear(1), 4), kFig1X0);
    CHECK(traj.disagreement.back() > 0.0);
    // nonzero eigenvalues of L here are 1, 1.5 +- i sqrt(3)/2; the slowest rate is 1
    std::vector<double> t, logd;
    for (std::size_t k = traj.size() / 2; k < traj.size(); ++k) {
      t.push_back(traj.times[k]);
      logd.push_back(std::log(traj.disagreement[k]));
    }
    CHECK(oracle::affine_r2(t, logd) >= 0.999);
    const double slope = (logd.back() - logd.front()) / (t.back() - t.front());
    CHECK(slope == doctest::Approx(-1.0).epsilon(1e-3));
    const auto s = settling_time(traj, 1e-6);
    CHECK(s.has_value());
  }
  SUBCASE("RK4 order against the matrix exponential") {
    const auto g = WeightedDigraph::from_arcs(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}});
    const Eigen::Vector4d x0(2, -1, 3, -2);
    const auto exact = oracle::linear_flow(laplacian(g).matrix(), x0, 1.0);
    const auto end_error = [&](double dt, std::size_t refinements) {
      SimulationConfig cfg;
      cfg.dt = dt;
      cfg.t_max = 1.0;
      cfg.freeze_on_consensus = false;
      cfg.max_refinements = refinements;
      const auto traj = integrate(cfg, g, ProtocolBank::uniform(ProtocolFunction::linear(1), 4), x0);
      return (traj.final_state() - exact).cwiseAbs().maxCoeff();
    };
    const double p1 = end_error(0.1, 0);
    const double p2 = end_error(0.05, 0);
    CHECK(p1 / p2 >= 12.0);
    CHECK(p1 / p2 <= 20.0);
    const double e1 = end_error(1e-3, 30);
    const double e2 = end_error(5e-4, 30);
    CHECK(e1 <= 1e-10);
    CHECK(e1 / e2 >= 12.0);
    CHECK(e1 / e2 <= 20.0);
  }
  SUBCASE("root value is the decision value") {
    // 0 -> 1 -> 2 -> 1, 0 -> 3 -> 4
    const auto g = WeightedDigraph::from_arcs(
        5, {{0, 1, 1.0}, {1, 2, 1.5}, {2, 1, 0.5}, {0, 3, 2.0}, {3, 4, 1.0}});
    const Eigen::VectorXd x0 = (Eigen::VectorXd(5) << 0.8, -2, 3, 1, -1).finished();
    const auto traj = integrate({}, g, ProtocolBank::uniform(ProtocolFunction::power_linear(1, 0.5, 0.5), 5), x0);
    for (const auto& x : traj.states) CHECK(x(0) == 0.8);
    CHECK((traj.final_state().array() - 0.8).abs().maxCoeff() <= 1e-9);
  }
  SUBCASE("stiff sliding near consensus") {
    const auto g =
        WeightedDigraph::from_arcs(4, {{0, 1, 1.0}, {1, 2, 3.0}, {2, 0, 0.5}, {1, 3, 2.0}, {3, 0, 1.0}});
    SimulationConfig cfg;
    cfg.record_stride = 1;
    const auto traj = integrate(cfg, g, ProtocolBank::uniform(ProtocolFunction::power_linear(1, 0.5, 0.1), 4),
                                Eigen::Vector4d(1, -2, 0.5, 2));
    REQUIRE(traj.frozen_at.has_value());
    CHECK(*traj.frozen_at < 2.0);
    CHECK(traj.implicit_substeps > 0);
    for (std::size_t k = 1; k < traj.size(); ++k) {
      CHECK(traj.states[k].maxCoeff() <= traj.states[k - 1].maxCoeff());
      CHECK(traj.states[k].minCoeff() >= traj.states[k - 1].minCoeff());
      CHECK((*traj.lyapunov)[k] <= (*traj.lyapunov)[k - 1] + 1e-9);
    }
  }
  SUBCASE("non-finite states are reported") {
    SimulationConfig cfg;
    cfg.dt = 10.0;
    cfg.t_max = 1000.0;
    cfg.max_refinements = 0;
    cfg.freeze_on_consensus = false;
    const auto g = WeightedDigraph::from_arcs(2, {{0, 1, 1.0}, {1, 0, 1.0}});
    CHECK_THROWS_AS(integrate(cfg, g, ProtocolBank::uniform(ProtocolFunction::linear(100), 2), Eigen::Vector2d(1, -1)),
                    NonFiniteState);
  }
}

TEST_CASE("settling time") {
  Trajectory traj;
  const auto push = [&](double t, double d) {
    traj.times.push_back(t);
    traj.states.push_back(Eigen::VectorXd::Constant(1, 0.0));
    traj.disagreement.push_back(d);
  };
  push(0.0, 0.0);
  push(1.0, 0.0);
  CHECK(settling_time(traj, 1e-9) == 0.0);

  traj = {};
  push(0.0, 1.0);
  push(1.0, 1e-3);
  push(2.0, 1e-10);
  push(3.0, 1e-11);
  CHECK(settling_time(traj, 1e-9) == 2.0);

  traj = {};
  push(0.0, 1.0);
  push(1.0, 1e-10);
  push(2.0, 1e-8);
  push(3.0, 1e-10);
  push(4.0, 0.0);
  CHECK(settling_time(traj, 1e-9) == 3.0);

  traj = {};
  push(0.0, 1.0);
  push(1.0, 0.5);
  CHECK_FALSE(settling_time(traj, 1e-9).has_value());
}
