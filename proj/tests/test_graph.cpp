#include <doctest.h>

#include <random>

#include "fincon/errors.hpp"
#include "fincon/graph.hpp"
#include "support/oracles.hpp"

using namespace fincon;

namespace {

WeightedDigraph fig1() {
  return WeightedDigraph::from_arcs(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}, {0, 3, 1.0}});
}

WeightedDigraph cycle3() { return WeightedDigraph::from_arcs(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}}); }

}  // namespace

TEST_CASE("digraph validation") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  CHECK_THROWS_AS(WeightedDigraph{a}, InvalidGraph);
  a(0, 0) = 0.0;
  a(0, 1) = -1.0;
  CHECK_THROWS_AS(WeightedDigraph{a}, InvalidGraph);
  CHECK_THROWS_AS(WeightedDigraph{Eigen::MatrixXd::Zero(2, 3)}, InvalidGraph);
  CHECK_THROWS_AS(WeightedDigraph{Eigen::MatrixXd(0, 0)}, InvalidGraph);
}

TEST_CASE("arcs set a(to, from)") {
  const auto g = WeightedDigraph::from_arcs(2, {{0, 1, 2.0}});
  CHECK(g.weight(1, 0) == 2.0);
  CHECK(g.weight(0, 1) == 0.0);
  CHECK(g.neighbors(1) == std::vector<std::size_t>{0});
  CHECK(g.neighbors(0).empty());
}

TEST_CASE("laplacian") {
  SUBCASE("single agent") {
    CHECK(laplacian(WeightedDigraph::empty(1)).matrix() == Eigen::MatrixXd::Zero(1, 1));
  }
  SUBCASE("four-agent example") {
    Eigen::MatrixXd expected(4, 4);
    expected << 1, 0, -1, 0, -1, 1, 0, 0, 0, -1, 1, 0, -1, 0, 0, 1;
    const auto l = laplacian(fig1()).matrix();
    CHECK(l == oracle::laplacian_by_definition(fig1().weights()));
    CHECK(l == expected);
  }
  SUBCASE("two agents, weight 2") {
    Eigen::MatrixXd expected(2, 2);
    expected << 0, 0, -2, 2;
    const auto g = WeightedDigraph::from_arcs(2, {{0, 1, 2.0}});
    CHECK(laplacian(g).matrix() == oracle::laplacian_by_definition(g.weights()));
    CHECK(laplacian(g).matrix() == expected);
  }
  SUBCASE("rows sum to exactly zero") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
      const WeightedDigraph g(oracle::random_weights(rng, 1 + t % 7, 0.5));
      const auto l = laplacian(g).matrix();
      for (Eigen::Index i = 0; i < l.rows(); ++i) {
        double s = l(i, i);
        for (Eigen::Index j = 0; j < l.cols(); ++j) {
          if (j != i) s += l(i, j);
        }
        CHECK(std::abs(s) <= 1e-15 * std::max(1.0, l(i, i)));
        for (Eigen::Index j = 0; j < l.cols(); ++j) {
          if (j != i) CHECK(l(i, j) <= 0.0);
        }
      }
    }
  }
}

TEST_CASE("condensation") {
  SUBCASE("3-cycle") {
    const auto c = condensation(cycle3());
    REQUIRE(c.size() == 1);
    CHECK(c.components[0] == std::vector<std::size_t>{0, 1, 2});
    CHECK(c.dag_edges.empty());
  }
  SUBCASE("four-agent example") {
    const auto c = condensation(fig1());
    REQUIRE(c.size() == 2);
    CHECK(c.components[0] == std::vector<std::size_t>{0, 1, 2});
    CHECK(c.components[1] == std::vector<std::size_t>{3});
    CHECK(c.dag_edges == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}});
    CHECK(oracle::scc_partition(fig1().weights()) ==
          std::set<std::vector<std::size_t>>{{0, 1, 2}, {3}});
  }
  SUBCASE("edgeless") {
    const auto c = condensation(WeightedDigraph::empty(3));
    CHECK(c.size() == 3);
    CHECK(c.dag_edges.empty());
  }
  SUBCASE("random graphs match the reachability partition in topological order") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
      const auto a = oracle::random_weights(rng, 1 + t % 7, 0.3);
      const auto c = condensation(WeightedDigraph(a));
      std::set<std::vector<std::size_t>> got(c.components.begin(), c.components.end());
      CHECK(got == oracle::scc_partition(a));
      std::size_t covered = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        covered += c.components[k].size();
        for (auto v : c.components[k]) CHECK(c.component_of[v] == k);
      }
      CHECK(covered == static_cast<std::size_t>(a.rows()));
      for (const auto& [u, v] : c.dag_edges) CHECK(u < v);
    }
  }
}

TEST_CASE("spanning tree") {
  CHECK(has_spanning_tree(fig1()));
  CHECK_FALSE(has_spanning_tree(WeightedDigraph::empty(2)));
  CHECK(has_spanning_tree(WeightedDigraph::empty(1)));
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto a = oracle::random_weights(rng, 1 + t % 7, 0.25 + 0.005 * t);
    const WeightedDigraph g(a);
    CHECK(has_spanning_tree(g) == oracle::has_root(a));
    CHECK(has_spanning_tree_spectral(g) == has_spanning_tree(g));
  }
}

TEST_CASE("left null vector") {
  SUBCASE("3-cycle is uniform") {
    const auto w = left_null_vector(cycle3());
    for (std::size_t i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
  SUBCASE("symmetric graph is uniform") {
    const auto g = WeightedDigraph::from_arcs(
        3, {{0, 1, 2.0}, {1, 0, 2.0}, {1, 2, 0.5}, {2, 1, 0.5}});
    const auto w = left_null_vector(g);
    for (std::size_t i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("single agent") {
    const auto w = left_null_vector(WeightedDigraph::empty(1));
    REQUIRE(w.size() == 1);
    CHECK(w[0] == 1.0);
  }
  SUBCASE("not strongly connected") {
    CHECK_THROWS_AS(left_null_vector(fig1()), NotStronglyConnected);
  }
  SUBCASE("random strongly connected graphs") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
      const WeightedDigraph g(oracle::random_strongly_connected(rng, 2 + t % 5, 0.3));
      const auto w = left_null_vector(g);
      const Eigen::RowVectorXd res = w.omega.transpose() * laplacian(g).matrix();
      CHECK(res.cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(w.omega.minCoeff() > 0.0);
      CHECK(w.omega.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("mirror laplacian") {
  SUBCASE("symmetric graph gives L / n") {
    const auto g = WeightedDigraph::from_arcs(
        3, {{0, 1, 2.0}, {1, 0, 2.0}, {1, 2, 0.5}, {2, 1, 0.5}});
    const auto b = mirror_laplacian(g, left_null_vector(g));
    CHECK((b - laplacian(g).matrix() / 3.0).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("3-cycle") {
    // undirected triangle, edge weight 1/2, scaled by 1/3
    Eigen::MatrixXd tri(3, 3);
    tri << 1.0, -0.5, -0.5, -0.5, 1.0, -0.5, -0.5, -0.5, 1.0;
    const auto b = mirror_laplacian(cycle3(), left_null_vector(cycle3()));
    CHECK((b - tri / 3.0).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("random strongly connected graphs") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
      const WeightedDigraph g(oracle::random_strongly_connected(rng, 2 + t % 5, 0.3));
      const auto b = mirror_laplacian(g, left_null_vector(g));
      CHECK((b - b.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((b * Eigen::VectorXd::Ones(b.rows())).cwiseAbs().maxCoeff() <= 1e-10);
      const auto ev = eigenvalues_symmetric(b);
      CHECK(ev(0) >= -1e-10);
      CHECK(ev(1) > 0.0);
    }
  }
}

TEST_CASE("smallest symmetric eigenvalue") {
  CHECK(smallest_eigenvalue_symmetric(Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(1.0));
  CHECK(smallest_eigenvalue_symmetric(Eigen::Vector3d(2, 5, -1).asDiagonal().toDenseMatrix()) ==
        doctest::Approx(-1.0));
  const auto b = mirror_laplacian(cycle3(), left_null_vector(cycle3()));
  CHECK(std::abs(smallest_eigenvalue_symmetric(b)) <= 1e-9);
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  CHECK_THROWS_AS(smallest_eigenvalue_symmetric(m), NotSymmetric);
}

TEST_CASE("infinity norms") {
  Eigen::Vector4d x0(2, -1, 3, -2);
  CHECK(infinity_norms(laplacian(fig1()), x0) == 6.0);
  const Laplacian zero(WeightedDigraph::empty(4));
  CHECK(infinity_norms(zero, x0) == 0.0);
  const auto pair = WeightedDigraph::from_arcs(2, {{0, 1, 1.0}, {1, 0, 1.0}});
  CHECK(infinity_norms(laplacian(pair), Eigen::Vector2d(1, 0)) == 2.0);
}

TEST_CASE("induced subgraph keeps internal arcs only") {
  const auto sub = fig1().induced({0, 3});
  CHECK(sub.size() == 2);
  CHECK(sub.weight(1, 0) == 1.0);
  CHECK(sub.weight(0, 1) == 0.0);
}
