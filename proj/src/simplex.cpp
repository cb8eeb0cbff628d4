#include "ard/simplex.hpp"

#include <cmath>
#include <stdexcept>

namespace ard {

namespace {

constexpr double kCostTol = 1e-9;    // reduced-cost optimality threshold
constexpr double kPivotTol = 1e-11;  // minimum usable pivot magnitude
constexpr double kFeasTol = 1e-7;
constexpr int kDegenerateLimit = 100;  // pivots without progress until Bland
constexpr int kIterationCap = 100000;

// Full tableau: structural variables first, then one slack per row, then
// any phase-1 artificials; basis[i] is the column basic in row i.
// Performs one pivot: normalizes `row` so column `col` is 1 there, then
// eliminates the column from every other row and from the cost row.
void apply_pivot(Eigen::MatrixXd& body, Eigen::VectorXd& rhs,
                 Eigen::VectorXd& cost, std::vector<int>& basis, int row,
                 int col) {
  const double pivot = body(row, col);
  body.row(row) /= pivot;
  rhs(row) /= pivot;
  for (Eigen::Index i = 0; i < body.rows(); ++i) {
    if (i == row) continue;
    const double factor = body(i, col);
    if (factor == 0.0) continue;
    body.row(i) -= factor * body.row(row);
    body(i, col) = 0.0;  // cancel exactly
    rhs(i) -= factor * rhs(row);
    if (rhs(i) < 0.0 && rhs(i) > -1e-12) rhs(i) = 0.0;
  }
  const double cost_factor = cost(col);
  if (cost_factor != 0.0) {
    cost -= cost_factor * body.row(row).transpose();
    cost(col) = 0.0;
  }
  basis[static_cast<size_t>(row)] = col;
}

enum class LoopResult { kOptimalReached, kUnboundedColumn };

// Pivots until no reduced cost exceeds kCostTol. `allowed` bounds the
// entering columns (used to exclude artificials in phase 2).
LoopResult pivot_loop(Eigen::MatrixXd& body, Eigen::VectorXd& rhs,
                      Eigen::VectorXd& cost, std::vector<int>& basis,
                      int allowed, int& iterations) {
  int degenerate_streak = 0;
  bool bland = false;
  while (true) {
    if (++iterations > kIterationCap)
      throw std::runtime_error("simplex: iteration cap exceeded");

    int entering = -1;
    if (bland) {
      for (int j = 0; j < allowed; ++j)
        if (cost(j) > kCostTol) {
          entering = j;
          break;
        }
    } else {
      double best = kCostTol;
      for (int j = 0; j < allowed; ++j)
        if (cost(j) > best) {  // strict: ties keep the smallest index
          best = cost(j);
          entering = j;
        }
    }
    if (entering < 0) return LoopResult::kOptimalReached;

    int leaving = -1;
    double best_ratio = 0.0;
    for (Eigen::Index i = 0; i < body.rows(); ++i) {
      if (body(i, entering) <= kPivotTol) continue;
      const double ratio = rhs(i) / body(i, entering);
      if (leaving < 0 || ratio < best_ratio - 1e-12 ||
          (ratio <= best_ratio + 1e-12 &&
           basis[static_cast<size_t>(i)] <
               basis[static_cast<size_t>(leaving)])) {
        leaving = static_cast<int>(i);
        best_ratio = ratio;
      }
    }
    if (leaving < 0) return LoopResult::kUnboundedColumn;

    if (best_ratio <= 1e-12) {
      if (++degenerate_streak >= kDegenerateLimit) bland = true;
    } else {
      degenerate_streak = 0;
    }
    apply_pivot(body, rhs, cost, basis, leaving, entering);
  }
}

}  // namespace

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    default:
      return "unbounded";
  }
}

LpOutcome solve_lp(const LpProblem& problem) {
  const int n = static_cast<int>(problem.c.size());
  const int m = static_cast<int>(problem.a.rows());
  if (problem.a.cols() != n && m > 0)
    throw std::invalid_argument("solve_lp: matrix width must match c");
  if (problem.b.size() != m)
    throw std::invalid_argument("solve_lp: rhs length must match rows");

  LpOutcome out;
  out.x = Eigen::VectorXd::Zero(n);

  // Build [A | I] with slack basis; rows with negative rhs are negated and
  // given a phase-1 artificial instead.
  std::vector<int> artificial_rows;
  for (int i = 0; i < m; ++i)
    if (problem.b(i) < 0.0) artificial_rows.push_back(i);
  const int n_art = static_cast<int>(artificial_rows.size());
  const int cols = n + m + n_art;

  Eigen::MatrixXd body = Eigen::MatrixXd::Zero(m, cols);
  Eigen::VectorXd rhs(m);
  std::vector<int> basis(static_cast<size_t>(m));
  if (m > 0) {
    body.leftCols(n) = problem.a;
    rhs = problem.b;
  }
  for (int i = 0; i < m; ++i) {
    body(i, n + i) = 1.0;
    basis[static_cast<size_t>(i)] = n + i;
  }
  for (int k = 0; k < n_art; ++k) {
    const int i = artificial_rows[static_cast<size_t>(k)];
    body.row(i) = -body.row(i);
    rhs(i) = -rhs(i);
    body(i, n + m + k) = 1.0;
    basis[static_cast<size_t>(i)] = n + m + k;
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  if (n_art > 0) {
    // phase 1: maximize -sum(artificials); express through the basis by
    // adding each artificial row into the cost row
    for (int k = 0; k < n_art; ++k) cost(n + m + k) = -1.0;
    for (int k = 0; k < n_art; ++k) {
      const int i = artificial_rows[static_cast<size_t>(k)];
      cost += body.row(i).transpose();
      cost(n + m + k) = 0.0;
    }
    if (pivot_loop(body, rhs, cost, basis, n + m, out.iterations) ==
        LoopResult::kUnboundedColumn)
      throw std::runtime_error("simplex: phase 1 cannot be unbounded");

    double infeasibility = 0.0;
    for (int i = 0; i < m; ++i)
      if (basis[static_cast<size_t>(i)] >= n + m) infeasibility += rhs(i);
    if (infeasibility > kFeasTol) {
      out.status = LpStatus::kInfeasible;
      return out;
    }
    // drive remaining zero-level artificials out of the basis; rows with no
    // real coefficients are redundant and harmless since the artificial is
    // pinned at zero and never re-enters
    for (int i = 0; i < m; ++i) {
      if (basis[static_cast<size_t>(i)] < n + m) continue;
      for (int j = 0; j < n + m; ++j) {
        if (std::abs(body(i, j)) > kPivotTol) {
          apply_pivot(body, rhs, cost, basis, i, j);
          break;
        }
      }
    }
  }

  // phase 2: original objective expressed through the current basis
  cost.setZero();
  cost.head(n) = problem.c;
  for (int i = 0; i < m; ++i) {
    const int j = basis[static_cast<size_t>(i)];
    const double factor = cost(j);
    if (factor != 0.0) {
      cost -= factor * body.row(i).transpose();
      cost(j) = 0.0;
    }
  }
  if (pivot_loop(body, rhs, cost, basis, n + m, out.iterations) ==
      LoopResult::kUnboundedColumn) {
    out.status = LpStatus::kUnbounded;
    return out;
  }

  for (int i = 0; i < m; ++i)
    if (basis[static_cast<size_t>(i)] < n)
      out.x(basis[static_cast<size_t>(i)]) = std::max(0.0, rhs(i));
  out.objective = problem.c.dot(out.x);
  out.status = LpStatus::kOptimal;
  for (int i = 0; i < m; ++i) {
    const double gap = problem.b(i) - problem.a.row(i).dot(out.x);
    if (std::abs(gap) <= kFeasTol * std::max(1.0, std::abs(problem.b(i))))
      out.active.push_back(i);
  }
  return out;
}

LpOutcome solve_lp_lexmin(const LpProblem& problem) {
  LpOutcome out = solve_lp(problem);
  if (out.status != LpStatus::kOptimal) return out;
  const int n = static_cast<int>(problem.c.size());
  const int m = static_cast<int>(problem.a.rows());

  // Constrain to the optimal face, then fix coordinates one at a time.
  Eigen::MatrixXd a(m + 1 + 2 * n, n);
  Eigen::VectorXd b(m + 1 + 2 * n);
  a.topRows(m) = problem.a;
  b.head(m) = problem.b;
  a.row(m) = -problem.c.transpose();
  b(m) = -out.objective + 1e-9;
  int rows = m + 1;

  Eigen::VectorXd fixed = out.x;
  for (int j = 0; j < n; ++j) {
    LpProblem stage;
    stage.c = Eigen::VectorXd::Zero(n);
    stage.c(j) = -1.0;  // minimize x_j
    stage.a = a.topRows(rows);
    stage.b = b.head(rows);
    const LpOutcome stage_out = solve_lp(stage);
    if (stage_out.status != LpStatus::kOptimal) break;  // keep previous point
    fixed(j) = stage_out.x(j);
    a.row(rows).setZero();
    a(rows, j) = 1.0;
    b(rows) = fixed(j) + 1e-9;
    a.row(rows + 1).setZero();
    a(rows + 1, j) = -1.0;
    b(rows + 1) = -fixed(j) + 1e-9;
    rows += 2;
  }

  out.x = fixed;
  out.objective = problem.c.dot(fixed);
  out.active.clear();
  for (int i = 0; i < m; ++i) {
    const double gap = problem.b(i) - problem.a.row(i).dot(fixed);
    if (std::abs(gap) <= kFeasTol * std::max(1.0, std::abs(problem.b(i))))
      out.active.push_back(i);
  }
  return out;
}

}  // namespace ard
