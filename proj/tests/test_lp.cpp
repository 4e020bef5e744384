#include "catch_amalgamated.hpp"

#include "mfd/lp.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

using namespace mfd;
using Catch::Approx;

namespace {

// Minimum of sum(w) over all feasible basic solutions, by enumerating column subsets of size m.
double vertex_oracle(const Eigen::MatrixXd& c, const Eigen::VectorXd& b) {
  const long m = c.rows(), n = c.cols();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(n, 0);
  std::fill(pick.end() - m, pick.end(), 1);
  do {
    Eigen::MatrixXd basis(m, m);
    std::vector<long> cols;
    for (long j = 0; j < n; ++j)
      if (pick[j]) cols.push_back(j);
    for (long k = 0; k < m; ++k) basis.col(k) = c.col(cols[k]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (lu.rank() < m) continue;
    const Eigen::VectorXd w = lu.solve(b);
    if (w.minCoeff() < -1e-12) continue;
    best = std::min(best, w.sum());
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace

TEST_CASE("simplex examples", "[lp]") {
  {
    const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(2, 2);
    const auto r = simplex_min_sum(c, Eigen::Vector2d(1, 2));
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.weights(0) == Approx(1.0));
    CHECK(r.weights(1) == Approx(2.0));
    CHECK(r.objective == Approx(3.0));
  }
  {
    Eigen::MatrixXd c(1, 2);
    c << 1, 1;
    CHECK(simplex_min_sum(c, Eigen::VectorXd::Constant(1, -1.0)).status == LpStatus::Infeasible);
  }
  {
    Eigen::MatrixXd c(2, 3);
    c << 1, 0, 1, 0, 1, 1;
    const auto r = simplex_min_sum(c, Eigen::Vector2d(1, 1));
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.weights(0) == Approx(0.0).margin(1e-14));
    CHECK(r.weights(1) == Approx(0.0).margin(1e-14));
    CHECK(r.weights(2) == Approx(1.0));
    CHECK(r.objective == Approx(1.0));
  }
}

TEST_CASE("zero right-hand side and redundant rows", "[lp]") {
  Eigen::MatrixXd c(3, 3);
  c << 1, 2, 3, 2, 4, 6, 0, 0, 0;
  const auto zero = simplex_min_sum(c, Eigen::Vector3d::Zero());
  REQUIRE(zero.status == LpStatus::Optimal);
  CHECK(zero.weights.isZero());
  const auto r = simplex_min_sum(c, Eigen::Vector3d(3, 6, 0));
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == Approx(1.0));
  CHECK(simplex_min_sum(c, Eigen::Vector3d(3, 6, 1)).status == LpStatus::Infeasible);
}

TEST_CASE("simplex matches vertex enumeration", "[lp][oracle]") {
  std::mt19937 rng(17);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const long m = 2 + trial % 3, n = m + 3 + trial % 4;
    Eigen::MatrixXd c(m, n);
    for (long i = 0; i < m; ++i)
      for (long j = 0; j < n; ++j) c(i, j) = g(rng);
    Eigen::VectorXd b(m);
    if (trial % 2 == 0) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
      for (long j = 0; j < n; ++j)
        if (u(rng) < 0.5) w(j) = u(rng);
      b = c * w;
    } else {
      for (long i = 0; i < m; ++i) b(i) = g(rng);
    }
    const double oracle = vertex_oracle(c, b);
    const auto r = simplex_min_sum(c, b);
    if (std::isinf(oracle)) {
      CHECK(r.status == LpStatus::Infeasible);
      continue;
    }
    ++feasible;
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == Approx(oracle).epsilon(1e-9).margin(1e-12));
    CHECK(r.weights.minCoeff() >= 0.0);
    CHECK((r.weights.array() != 0.0).count() <= m);
    CHECK((c * r.weights - b).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + b.cwiseAbs().maxCoeff()));
  }
  CHECK(feasible > 150);
}

TEST_CASE("objective is invariant under column permutation", "[lp][property]") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    // moment-like system: rows y1, y2, y1^2, y1 y2, y2^2 with 2I on the right
    const long n = 12 + trial % 20;
    Eigen::MatrixXd c(5, n);
    for (long j = 0; j < n; ++j) {
      const double y1 = u(rng), y2 = u(rng);
      c.col(j) << y1, y2, y1 * y1, y1 * y2, y2 * y2;
    }
    const Eigen::VectorXd b = (Eigen::VectorXd(5) << 0, 0, 2, 0, 2).finished();
    const auto r = simplex_min_sum(c, b);
    std::vector<long> perm(n);
    std::iota(perm.begin(), perm.end(), 0L);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd cp(5, n);
    for (long j = 0; j < n; ++j) cp.col(j) = c.col(perm[j]);
    const auto rp = simplex_min_sum(cp, b);
    REQUIRE(r.status == rp.status);
    if (r.status == LpStatus::Optimal) CHECK(r.objective == Approx(rp.objective).epsilon(1e-9));
  }
}

TEST_CASE("badly scaled rows", "[lp]") {
  // rows spanning many orders of magnitude, as raw kernel weights produce
  Eigen::MatrixXd c(2, 4);
  c << 1e-8, 2e-8, 0, 1e-8, 0, 1e6, 3e6, 1e6;
  const Eigen::Vector2d b(1e-8, 2e6);
  const auto r = simplex_min_sum(c, b);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == Approx(vertex_oracle(c, b)));
  CHECK(r.residual <= 1e-10);
}
