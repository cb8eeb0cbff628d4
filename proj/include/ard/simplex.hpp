#pragma once

#include <vector>

#include <Eigen/Dense>

namespace ard {

// Dense linear program in the form
//   maximize    c . x
//   subject to  a x <= b,  x >= 0.
// Upper bounds and equalities are encoded as extra rows by the caller.
struct LpProblem {
  Eigen::VectorXd c;
  Eigen::MatrixXd a;  // m x n, m may be 0
  Eigen::VectorXd b;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* to_string(LpStatus status);

struct LpOutcome {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  std::vector<int> active;  // rows tight at the vertex (within tolerance)
  int iterations = 0;
};

// Two-phase primal simplex. Dantzig pricing with smallest-index ties;
// after a long run of degenerate pivots it switches to Bland's rule, which
// guarantees termination. Deterministic: identical problems produce
// bit-identical outcomes.
LpOutcome solve_lp(const LpProblem& problem);

// solve_lp, then sequentially minimizes x_0, x_1, ... over the optimal face,
// returning the lexicographically smallest optimal vertex. Canonicalizes
// problems with flat (e.g. all-zero) objectives.
LpOutcome solve_lp_lexmin(const LpProblem& problem);

}  // namespace ard
