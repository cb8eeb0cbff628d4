#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "ard/rng.hpp"
#include "ard/simplex.hpp"

using namespace ard;

namespace {

LpProblem make_problem(const Eigen::VectorXd& c, const Eigen::MatrixXd& a,
                       const Eigen::VectorXd& b) {
  return LpProblem{c, a, b};
}

// Brute-force oracle: the optimum of a feasible bounded LP sits at a vertex,
// i.e. at the intersection of n constraints drawn from the rows of
// [a; -I] <= [b; 0]. Returns the best feasible vertex value, if any.
std::optional<double> best_vertex(const LpProblem& p) {
  const int n = static_cast<int>(p.c.size());
  const int m = static_cast<int>(p.a.rows());
  Eigen::MatrixXd g(m + n, n);
  Eigen::VectorXd h(m + n);
  g.topRows(m) = p.a;
  h.head(m) = p.b;
  g.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
  h.tail(n).setZero();

  std::optional<double> best;
  std::vector<int> pick(static_cast<size_t>(n));
  const int rows = m + n;
  const auto recurse = [&](auto&& self, int depth, int from) -> void {
    if (depth == n) {
      Eigen::MatrixXd sys(n, n);
      Eigen::VectorXd rhs(n);
      for (int k = 0; k < n; ++k) {
        sys.row(k) = g.row(pick[static_cast<size_t>(k)]);
        rhs(k) = h(pick[static_cast<size_t>(k)]);
      }
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
      if (!lu.isInvertible()) return;
      const Eigen::VectorXd x = lu.solve(rhs);
      if (((g * x - h).array() <= 1e-9).all()) {
        const double value = p.c.dot(x);
        if (!best || value > *best) best = value;
      }
      return;
    }
    for (int r = from; r < rows; ++r) {
      pick[static_cast<size_t>(depth)] = r;
      self(self, depth + 1, r + 1);
    }
  };
  recurse(recurse, 0, 0);
  return best;
}

}  // namespace

TEST_CASE("simplex: two-variable box problem") {
  Eigen::VectorXd c(2);
  c << 1.0, 1.0;
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, 1;
  Eigen::VectorXd b(2);
  b << 2.0, 3.0;
  const LpOutcome out = solve_lp(make_problem(c, a, b));
  REQUIRE(out.status == LpStatus::kOptimal);
  CHECK(out.objective == doctest::Approx(5.0));
  CHECK(out.x(0) == doctest::Approx(2.0));
  CHECK(out.x(1) == doctest::Approx(3.0));
  CHECK(out.active == std::vector<int>{0, 1});
}

TEST_CASE("simplex: negative rhs drives the phase-1 path") {
  Eigen::VectorXd c(2);
  c << -1.0, -1.0;
  Eigen::MatrixXd a(3, 2);
  a << -1, -1,  // x + y >= 1
      1, 0, 0, 1;
  Eigen::VectorXd b(3);
  b << -1.0, 2.0, 2.0;
  const LpOutcome out = solve_lp(make_problem(c, a, b));
  REQUIRE(out.status == LpStatus::kOptimal);
  CHECK(out.objective == doctest::Approx(-1.0));
  CHECK(((a * out.x - b).array() <= 1e-9).all());
}

TEST_CASE("simplex: infeasible and unbounded statuses") {
  Eigen::VectorXd c(1);
  c << 1.0;
  Eigen::MatrixXd a(2, 1);
  a << -1, 1;  // x >= 2 and x <= 1
  Eigen::VectorXd b(2);
  b << -2.0, 1.0;
  CHECK(solve_lp(make_problem(c, a, b)).status == LpStatus::kInfeasible);

  Eigen::VectorXd c2(2);
  c2 << 1.0, 0.0;
  Eigen::MatrixXd a2(1, 2);
  a2 << 0, 1;  // only y is bounded
  Eigen::VectorXd b2(1);
  b2 << 1.0;
  CHECK(solve_lp(make_problem(c2, a2, b2)).status == LpStatus::kUnbounded);

  // no constraints at all
  LpProblem free;
  free.c = c2;
  free.a = Eigen::MatrixXd::Zero(0, 2);
  free.b = Eigen::VectorXd::Zero(0);
  CHECK(solve_lp(free).status == LpStatus::kUnbounded);
  free.c = -c2;
  const LpOutcome origin = solve_lp(free);
  REQUIRE(origin.status == LpStatus::kOptimal);
  CHECK(origin.x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simplex: Beale's degenerate instance terminates at the optimum") {
  Eigen::VectorXd c(4);
  c << 0.75, -150.0, 0.02, -6.0;
  Eigen::MatrixXd a(3, 4);
  a << 0.25, -60.0, -0.04, 9.0,
       0.5, -90.0, -0.02, 3.0,
       0.0, 0.0, 1.0, 0.0;
  Eigen::VectorXd b(3);
  b << 0.0, 0.0, 1.0;
  const LpOutcome out = solve_lp(make_problem(c, a, b));
  REQUIRE(out.status == LpStatus::kOptimal);
  CHECK(out.objective == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("simplex: random instances match vertex enumeration") {
  Rng rng(401);
  int feasible_count = 0, infeasible_count = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + rng.uniform_int(3);
    const int m = 2 + rng.uniform_int(5);
    LpProblem p;
    p.c.resize(n);
    for (int j = 0; j < n; ++j) p.c(j) = rng.uniform(-1.0, 1.0);
    p.a.resize(m + n, n);
    p.b.resize(m + n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) p.a(i, j) = rng.uniform(-1.0, 1.0);
      p.b(i) = rng.uniform(-0.5, 1.0);
    }
    // box rows keep every instance bounded
    p.a.bottomRows(n) = Eigen::MatrixXd::Identity(n, n);
    for (int j = 0; j < n; ++j) p.b(m + j) = rng.uniform(0.5, 2.0);

    const std::optional<double> oracle = best_vertex(p);
    const LpOutcome out = solve_lp(p);
    if (oracle) {
      ++feasible_count;
      REQUIRE(out.status == LpStatus::kOptimal);
      CHECK(out.objective == doctest::Approx(*oracle).epsilon(1e-7));
      CHECK(((p.a * out.x - p.b).array() <= 1e-7).all());
      CHECK((out.x.array() >= -1e-9).all());
    } else {
      ++infeasible_count;
      CHECK(out.status == LpStatus::kInfeasible);
    }
  }
  CHECK(feasible_count > 20);  // the sweep exercises both outcomes
  CHECK(infeasible_count > 5);
}

TEST_CASE("simplex: bit-identical outcomes on repeated solves") {
  Rng rng(402);
  LpProblem p;
  p.c.resize(4);
  p.a.resize(6, 4);
  p.b.resize(6);
  for (int j = 0; j < 4; ++j) p.c(j) = rng.uniform(-1.0, 1.0);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 4; ++j) p.a(i, j) = rng.uniform(-1.0, 1.0);
    p.b(i) = rng.uniform(-0.2, 1.0);
  }
  const LpOutcome first = solve_lp(p);
  const LpOutcome second = solve_lp(p);
  CHECK(first.status == second.status);
  if (first.status == LpStatus::kOptimal) {
    for (int j = 0; j < 4; ++j) CHECK(first.x(j) == second.x(j));
    CHECK(first.objective == second.objective);
    CHECK(first.iterations == second.iterations);
  }
}

TEST_CASE("simplex: lexicographic refinement canonicalizes flat objectives") {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd a(1, 2);
  a << 1, 1;
  Eigen::VectorXd b(1);
  b << 3.0;
  const LpOutcome corner = solve_lp_lexmin(make_problem(c, a, b));
  REQUIRE(corner.status == LpStatus::kOptimal);
  CHECK(corner.x.cwiseAbs().maxCoeff() <= 1e-9);  // origin is lex-min

  Eigen::MatrixXd a2(1, 2);
  a2 << -1, -1;  // x + y >= 1
  Eigen::VectorXd b2(1);
  b2 << -1.0;
  const LpOutcome edge = solve_lp_lexmin(make_problem(c, a2, b2));
  REQUIRE(edge.status == LpStatus::kOptimal);
  CHECK(edge.x(0) <= 1e-8);  // x minimized first
  CHECK(edge.x(1) == doctest::Approx(1.0).epsilon(1e-7));

  // a sloped objective keeps its optimum while ties resolve lexicographically
  Eigen::VectorXd c3(2);
  c3 << 1.0, 1.0;
  const LpOutcome sloped = solve_lp_lexmin(make_problem(c3, a, b));
  REQUIRE(sloped.status == LpStatus::kOptimal);
  CHECK(sloped.objective == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(sloped.x(0) <= 1e-7);
  CHECK(sloped.x(1) == doctest::Approx(3.0).epsilon(1e-6));
}
