#include "ard/designer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ard/io.hpp"

namespace ard {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// Rows of an inequality system that involve no free variable are either
// vacuous or unsatisfiable; below this coefficient magnitude a row counts
// as free of a variable.
constexpr double kZeroRowTol = 1e-14;
// Slack below which a constraint is reported active, after row scaling.
constexpr double kActiveTol = 1e-7;

std::vector<int> free_coefficients(const DesignProblem& problem) {
  const int d = problem.features.dim;
  if (!problem.support) {
    std::vector<int> all(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) all[static_cast<size_t>(j)] = j;
    return all;
  }
  std::vector<int> out = *problem.support;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (const int j : out)
    require(j >= 0 && j < d,
            "support: coefficient index " + std::to_string(j) + " out of range");
  return out;
}

void validate_problem(const InformativenessContext& ctx,
                      const DesignProblem& problem) {
  problem.features.validate();
  require(problem.features.n_states == ctx.mdp.n_states &&
              problem.features.n_actions == ctx.mdp.n_actions,
          "design: feature map does not match the mdp shape");
  require(problem.r_max > 0.0, "design: r_max must be positive");
  require(problem.strict_epsilon >= 0.0,
          "design: strict_epsilon must be non-negative");
  if (problem.objective == DesignObjective::kExternal)
    require(problem.external_coeffs.size() == problem.features.dim,
            "design: external objective needs one coefficient per feature");
}

double effective_rhs(const InformativenessContext& ctx,
                     const DesignProblem& problem,
                     const InvarianceConstraints& inv, int row) {
  if (problem.strict_epsilon > 0.0) {
    const int s = row / ctx.mdp.n_actions;
    const int a = row % ctx.mdp.n_actions;
    if (ctx.target(s, a) == 0.0) return -problem.strict_epsilon;
  }
  return inv.rhs(row);
}

struct Assembly {
  LpProblem lp;           // over x = phi_free + r_max, so x in [0, 2 r_max]
  std::vector<int> free;  // coefficient index behind each LP variable
};

Assembly assemble(const InformativenessContext& ctx,
                  const DesignProblem& problem,
                  const InvarianceConstraints* prebuilt,
                  const Eigen::VectorXd& objective) {
  Assembly out;
  out.free = free_coefficients(problem);
  const int n = static_cast<int>(out.free.size());
  const double r_max = problem.r_max;

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  if (problem.include_invariance) {
    InvarianceConstraints built;
    if (prebuilt == nullptr) {
      built = build_invariance_constraints(ctx.mdp, ctx.base_reward, ctx.target,
                                           problem.features);
      prebuilt = &built;
    }
    const int pairs = ctx.mdp.n_states * ctx.mdp.n_actions;
    require(prebuilt->coeffs.rows() == pairs &&
                prebuilt->coeffs.cols() == problem.features.dim &&
                prebuilt->rhs.size() == pairs,
            "design: invariance system shape does not match mdp/features");
    for (int i = 0; i < pairs; ++i) {
      Eigen::VectorXd g(n);
      for (int k = 0; k < n; ++k)
        g(k) = prebuilt->coeffs(i, out.free[static_cast<size_t>(k)]);
      // shifted variables: g.phi <= b becomes g.x <= b + r_max * sum(g)
      double b = effective_rhs(ctx, problem, *prebuilt, i) + r_max * g.sum();
      const double norm = n > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
      if (norm <= kZeroRowTol) {
        // No free variable appears: vacuous when satisfied, otherwise kept
        // verbatim so the solver reports infeasibility.
        if (b >= -1e-9) continue;
        rows.push_back(Eigen::VectorXd::Zero(n));
        rhs.push_back(b);
        continue;
      }
      rows.push_back(g / norm);
      rhs.push_back(b / norm);
    }
  }
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd box = Eigen::VectorXd::Zero(n);
    box(k) = 1.0;
    rows.push_back(box);
    rhs.push_back(2.0 * r_max);
  }

  const int m = static_cast<int>(rows.size());
  out.lp.a.resize(m, n);
  out.lp.b.resize(m);
  for (int i = 0; i < m; ++i) {
    out.lp.a.row(i) = rows[static_cast<size_t>(i)].transpose();
    out.lp.b(i) = rhs[static_cast<size_t>(i)];
  }
  out.lp.c.resize(n);
  for (int k = 0; k < n; ++k)
    out.lp.c(k) = objective(out.free[static_cast<size_t>(k)]);
  // unit objective scale for conditioning; the argmax is unchanged
  const double scale = n > 0 ? out.lp.c.cwiseAbs().maxCoeff() : 0.0;
  if (scale > 0.0) out.lp.c /= scale;
  return out;
}

const char* status_name(LpStatus status) { return to_string(status); }

LpStatus status_from_name(const std::string& name) {
  if (name == "optimal") return LpStatus::kOptimal;
  if (name == "infeasible") return LpStatus::kInfeasible;
  if (name == "unbounded") return LpStatus::kUnbounded;
  throw std::runtime_error("unknown LP status '" + name + "'");
}

void write_vector_line(std::ostream& out, const Eigen::VectorXd& values) {
  for (int i = 0; i < values.size(); ++i) {
    if (i > 0) out << ' ';
    out << format_double(values(i));
  }
  out << '\n';
}

}  // namespace

Eigen::VectorXd flatten_table(const Eigen::MatrixXd& table) {
  Eigen::VectorXd flat(table.rows() * table.cols());
  for (int r = 0; r < table.rows(); ++r)
    for (int c = 0; c < table.cols(); ++c) flat(r * table.cols() + c) = table(r, c);
  return flat;
}

Eigen::MatrixXd unflatten_table(const Eigen::VectorXd& flat, int rows, int cols) {
  require(flat.size() == static_cast<Eigen::Index>(rows) * cols,
          "unflatten_table: size mismatch");
  Eigen::MatrixXd table(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) table(r, c) = flat(r * cols + c);
  return table;
}

Eigen::MatrixXd LinearRewardOperator::q_of(const RewardTable& reward) const {
  return unflatten_table(q_map * flatten_table(reward), n_states, n_actions);
}

Eigen::MatrixXd LinearRewardOperator::advantage_of(const RewardTable& reward) const {
  return unflatten_table(adv_map * flatten_table(reward), n_states, n_actions);
}

LinearRewardOperator make_reward_operator(const TabularMdp& mdp,
                                          const StochasticPolicy& pi_t) {
  validate_policy(mdp, pi_t);
  const int s_count = mdp.n_states;
  const int a_count = mdp.n_actions;
  const int pairs = s_count * a_count;

  // State chain under pi_t; terminal pairs contribute no continuation,
  // matching policy_eval.
  Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(s_count, s_count);
  Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(s_count, pairs);
  for (int s = 0; s < s_count; ++s) {
    for (int a = 0; a < a_count; ++a) {
      const int sa = mdp.sa_index(s, a);
      mix(s, sa) = pi_t(s, a);
      if (pi_t(s, a) > 0.0 && !mdp.is_terminal(s, a))
        chain.row(s) += pi_t(s, a) * mdp.transition.row(sa);
    }
  }

  LinearRewardOperator op;
  op.n_states = s_count;
  op.n_actions = a_count;
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(s_count, s_count) - mdp.gamma * chain;
  op.v_map = system.partialPivLu().solve(mix);

  op.q_map = Eigen::MatrixXd::Identity(pairs, pairs);
  for (int s = 0; s < s_count; ++s) {
    for (int a = 0; a < a_count; ++a) {
      const int sa = mdp.sa_index(s, a);
      if (!mdp.is_terminal(s, a))
        op.q_map.row(sa) += mdp.gamma * (mdp.transition.row(sa) * op.v_map);
    }
  }

  op.adv_map = op.q_map;
  for (int s = 0; s < s_count; ++s) {
    Eigen::RowVectorXd on_policy = Eigen::RowVectorXd::Zero(pairs);
    for (int a = 0; a < a_count; ++a)
      on_policy += pi_t(s, a) * op.q_map.row(mdp.sa_index(s, a));
    for (int a = 0; a < a_count; ++a)
      op.adv_map.row(mdp.sa_index(s, a)) -= on_policy;
  }
  return op;
}

InvarianceConstraints build_invariance_constraints(const TabularMdp& mdp,
                                                   const RewardTable& base_reward,
                                                   const StochasticPolicy& pi_t,
                                                   const FeatureMap& features) {
  features.validate();
  require(features.n_states == mdp.n_states &&
              features.n_actions == mdp.n_actions,
          "invariance: feature map does not match the mdp shape");
  validate_reward(mdp, base_reward);
  const LinearRewardOperator op = make_reward_operator(mdp, pi_t);
  InvarianceConstraints out;
  out.coeffs = op.adv_map * features.features;
  out.rhs = op.adv_map * flatten_table(base_reward);
  return out;
}

Eigen::VectorXd design_objective_coeffs(const InformativenessContext& ctx,
                                        const DesignProblem& problem) {
  validate_problem(ctx, problem);
  const int d = problem.features.dim;
  switch (problem.objective) {
    case DesignObjective::kConstant:
      return Eigen::VectorXd::Zero(d);
    case DesignObjective::kExternal:
      return problem.external_coeffs;
    default:
      break;
  }
  Eigen::VectorXd coeffs(d);
  ParametricReward basis{Eigen::VectorXd::Zero(d), problem.features};
  for (int j = 0; j < d; ++j) {
    basis.phi(j) = 1.0;
    const RewardTable column = reward_from_phi(basis);
    basis.phi(j) = 0.0;
    coeffs(j) = problem.objective == DesignObjective::kInformativenessH1
                    ? informativeness_h1(column, ctx)
                    : informativeness_h(column, ctx);
  }
  return coeffs;
}

LpProblem assemble_design_lp(const InformativenessContext& ctx,
                             const DesignProblem& problem,
                             const InvarianceConstraints* prebuilt) {
  const Eigen::VectorXd objective = design_objective_coeffs(ctx, problem);
  return assemble(ctx, problem, prebuilt, objective).lp;
}

DesignSolution solve_design(const InformativenessContext& ctx,
                            const DesignProblem& problem,
                            const InvarianceConstraints* prebuilt) {
  const Eigen::VectorXd objective = design_objective_coeffs(ctx, problem);
  const Assembly assembly = assemble(ctx, problem, prebuilt, objective);
  const int d = problem.features.dim;
  const int n = static_cast<int>(assembly.free.size());

  DesignSolution out;
  out.phi = Eigen::VectorXd::Zero(d);
  if (n == 0) {
    // Nothing to optimize; assembly kept only violated rows, if any.
    out.status = assembly.lp.b.size() == 0 ? LpStatus::kOptimal
                                           : LpStatus::kInfeasible;
  } else {
    const bool flat = (assembly.lp.c.array() == 0.0).all();
    const LpOutcome lp =
        flat ? solve_lp_lexmin(assembly.lp) : solve_lp(assembly.lp);
    out.status = lp.status;
    if (lp.status == LpStatus::kOptimal) {
      for (int k = 0; k < n; ++k) {
        const double phi = lp.x(k) - problem.r_max;
        out.phi(assembly.free[static_cast<size_t>(k)]) =
            std::clamp(phi, -problem.r_max, problem.r_max);
      }
    }
  }
  if (out.status != LpStatus::kOptimal) return out;
  out.objective_value = objective.dot(out.phi);

  if (problem.include_invariance) {
    InvarianceConstraints built;
    if (prebuilt == nullptr) {
      built = build_invariance_constraints(ctx.mdp, ctx.base_reward, ctx.target,
                                           problem.features);
      prebuilt = &built;
    }
    const int pairs = ctx.mdp.n_states * ctx.mdp.n_actions;
    for (int i = 0; i < pairs; ++i) {
      const double norm =
          std::max(1.0, prebuilt->coeffs.row(i).cwiseAbs().maxCoeff());
      const double slack =
          effective_rhs(ctx, problem, *prebuilt, i) -
          prebuilt->coeffs.row(i).dot(out.phi);
      if (std::abs(slack) <= kActiveTol * norm) out.active.push_back(i);
    }
  }
  const int pairs = ctx.mdp.n_states * ctx.mdp.n_actions;
  for (const int j : assembly.free) {
    if (out.phi(j) >= problem.r_max - 1e-9) out.active.push_back(pairs + j);
    if (out.phi(j) <= -problem.r_max + 1e-9)
      out.active.push_back(pairs + d + j);
  }
  return out;
}

InvarianceReport verify_policy_invariance(const TabularMdp& mdp,
                                          const RewardTable& base_reward,
                                          const StochasticPolicy& pi_t,
                                          const RewardTable& designed) {
  validate_policy(mdp, pi_t);
  validate_reward(mdp, base_reward);
  validate_reward(mdp, designed);
  const ValueBundle base_opt = optimal_values(mdp, base_reward);
  const ValueBundle design_opt = optimal_values(mdp, designed);
  const ValueBundle target_run = policy_eval(mdp, designed, pi_t);

  InvarianceReport report;
  report.state_ok.assign(static_cast<size_t>(mdp.n_states), true);
  report.pass = true;
  for (int s = 0; s < mdp.n_states; ++s) {
    bool ok = true;
    // every greedy action under the designed reward must already be optimal
    // under the base reward
    for (int a = 0; a < mdp.n_actions; ++a) {
      const bool greedy_new = design_opt.q(s, a) >= design_opt.v(s) - 1e-9;
      const bool optimal_base =
          base_opt.q(s, a) >=
          base_opt.v(s) - 1e-6 * std::max(1.0, std::abs(base_opt.v(s)));
      if (greedy_new && !optimal_base) ok = false;
    }
    // the target policy must stay optimal under the designed reward
    if (target_run.v(s) <
        design_opt.v(s) - 1e-6 * std::max(1.0, std::abs(design_opt.v(s))))
      ok = false;
    report.state_ok[static_cast<size_t>(s)] = ok;
    if (!ok) report.pass = false;
  }
  return report;
}

void write_lp(std::ostream& out, const LpProblem& problem) {
  out << "ard-lp v1\n";
  out << "vars " << problem.c.size() << '\n';
  out << "rows " << problem.a.rows() << '\n';
  out << "objective\n";
  write_vector_line(out, problem.c);
  out << "matrix\n";
  for (int i = 0; i < problem.a.rows(); ++i)
    write_vector_line(out, problem.a.row(i).transpose());
  out << "rhs\n";
  write_vector_line(out, problem.b);
  out << "end\n";
}

LpProblem read_lp(std::istream& in) {
  TokenReader reader(in);
  reader.expect("ard-lp");
  reader.expect("v1");
  reader.expect("vars");
  const long vars = reader.next_int("vars");
  reader.expect("rows");
  const long rows = reader.next_int("rows");
  if (vars < 0 || rows < 0) throw std::runtime_error("ard-lp: negative size");
  LpProblem p;
  p.c.resize(vars);
  p.a.resize(rows, vars);
  p.b.resize(rows);
  reader.expect("objective");
  for (long j = 0; j < vars; ++j) p.c(j) = reader.next_double("objective");
  reader.expect("matrix");
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < vars; ++j) p.a(i, j) = reader.next_double("matrix");
  reader.expect("rhs");
  for (long i = 0; i < rows; ++i) p.b(i) = reader.next_double("rhs");
  reader.expect("end");
  return p;
}

void write_design_solution(std::ostream& out, const DesignSolution& solution) {
  out << "ard-design v1\n";
  out << "status " << status_name(solution.status) << '\n';
  out << "objective " << format_double(solution.objective_value) << '\n';
  out << "phi " << solution.phi.size() << '\n';
  write_vector_line(out, solution.phi);
  out << "active " << solution.active.size() << '\n';
  for (size_t i = 0; i < solution.active.size(); ++i) {
    if (i > 0) out << ' ';
    out << solution.active[i];
  }
  out << (solution.active.empty() ? "" : "\n") << "end\n";
}

DesignSolution read_design_solution(std::istream& in) {
  TokenReader reader(in);
  reader.expect("ard-design");
  reader.expect("v1");
  reader.expect("status");
  DesignSolution s;
  s.status = status_from_name(reader.next("status"));
  reader.expect("objective");
  s.objective_value = reader.next_double("objective");
  reader.expect("phi");
  const long d = reader.next_int("phi size");
  if (d < 0) throw std::runtime_error("ard-design: negative phi size");
  s.phi.resize(d);
  for (long j = 0; j < d; ++j) s.phi(j) = reader.next_double("phi");
  reader.expect("active");
  const long k = reader.next_int("active count");
  if (k < 0) throw std::runtime_error("ard-design: negative active count");
  s.active.resize(static_cast<size_t>(k));
  for (long i = 0; i < k; ++i)
    s.active[static_cast<size_t>(i)] = static_cast<int>(reader.next_int("active"));
  reader.expect("end");
  return s;
}

}  // namespace ard
