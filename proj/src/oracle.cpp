#include "nbp/oracle.hpp"

#include <cmath>
#include <ostream>
#include <thread>

#include "nbp/errors.hpp"
#include "nbp/milp.hpp"
#include "nbp/sampler.hpp"

namespace nbp {

namespace {

// Optimistic follower pick: min d1'y over lower-level optima at x.
double follower_selection(const BilevelInstance& inst, const Eigen::VectorXd& x, double phi,
                          Eigen::VectorXd* y_out) {
  MilpModel model(Direction::Minimize);
  std::vector<VarId> y(static_cast<size_t>(inst.m));
  const bool integral = inst.lower_kind == LowerKind::Integer;
  for (int j = 0; j < inst.m; ++j)
    y[static_cast<size_t>(j)] = model.add_variable(0.0, inst.y_upper(j), integral);
  const Eigen::VectorXd rhs = inst.b2 - inst.A2 * x;
  for (int i = 0; i < inst.m; ++i) {
    LinExpr terms;
    for (int j = 0; j < inst.m; ++j)
      if (inst.B2(i, j) != 0.0) terms.push_back({y[static_cast<size_t>(j)], inst.B2(i, j)});
    model.add_constraint(std::move(terms), Sense::Le, rhs(i));
  }
  LinExpr level;
  for (int j = 0; j < inst.m; ++j)
    if (inst.d2(j) != 0.0) level.push_back({y[static_cast<size_t>(j)], inst.d2(j)});
  model.add_constraint(std::move(level), Sense::Ge, phi - 1e-9);
  LinExpr obj;
  for (int j = 0; j < inst.m; ++j)
    if (inst.d1(j) != 0.0) obj.push_back({y[static_cast<size_t>(j)], inst.d1(j)});
  model.set_objective(std::move(obj));
  const MipSolution sol = integral ? solve_mip(model) : solve_lp(model);
  if (sol.status != SolveStatus::Optimal)
    throw ModelError("follower selection solve failed: " + to_string(sol.status));
  if (y_out) {
    y_out->resize(inst.m);
    for (int j = 0; j < inst.m; ++j) {
      double v = sol.value(y[static_cast<size_t>(j)]);
      if (integral) v = std::round(v);
      (*y_out)(j) = v;
    }
  }
  return sol.objective;
}

}  // namespace

OracleResult brute_force_bilevel(const BilevelInstance& inst, int threads) {
  if (inst.n > 20)
    throw GuardError("brute_force_bilevel supports n <= 20, got n = " + std::to_string(inst.n));
  const std::uint64_t total = 1ULL << inst.n;
  if (threads <= 0)
    threads = static_cast<int>(std::min<unsigned>(std::thread::hardware_concurrency(), 8));
  threads = std::max(threads, 1);
  const std::uint64_t chunk =
      (total + static_cast<std::uint64_t>(threads) - 1) / static_cast<std::uint64_t>(threads);
  // d1 == d2 makes the follower tie-break vacuous: f(x) = c'x + phi(x)
  const bool tied_objectives = inst.d1 == inst.d2;

  std::vector<std::vector<OracleRow>> audit(static_cast<size_t>(threads));
  std::vector<std::vector<Eigen::VectorXd>> ys(static_cast<size_t>(threads));
  auto work = [&](int t) {
    const std::uint64_t begin = chunk * static_cast<std::uint64_t>(t);
    const std::uint64_t end = std::min(total, begin + chunk);
    for (std::uint64_t mask = begin; mask < end; ++mask) {
      OracleRow row;
      row.mask = mask;
      Eigen::VectorXd x(inst.n);
      for (int j = 0; j < inst.n; ++j) x(j) = (mask >> j) & 1ULL ? 1.0 : 0.0;
      Eigen::VectorXd y;
      if (((inst.A1 * x - inst.b1).array() <= kFeasTol).all()) {
        const auto lower = lower_level_value(inst, x);
        if (lower) {
          row.feasible = true;
          row.phi = lower->phi;
          if (tied_objectives) {
            y = lower->y_star;
            row.best_f = inst.c.dot(x) + lower->phi;
          } else {
            row.best_f = inst.c.dot(x) + follower_selection(inst, x, lower->phi, &y);
          }
        }
      }
      audit[static_cast<size_t>(t)].push_back(row);
      ys[static_cast<size_t>(t)].push_back(std::move(y));
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();

  OracleResult result;
  bool found = false;
  std::uint64_t best_mask = 0;
  Eigen::VectorXd best_y;
  for (int t = 0; t < threads; ++t)
    for (size_t i = 0; i < audit[static_cast<size_t>(t)].size(); ++i) {
      const OracleRow& row = audit[static_cast<size_t>(t)][i];
      if (row.feasible && (!found || row.best_f < result.f_star)) {
        found = true;
        result.f_star = row.best_f;
        best_mask = row.mask;
        best_y = ys[static_cast<size_t>(t)][i];
      }
      result.audit.push_back(row);
    }
  if (!found) throw InfeasibleError("bilevel program has no feasible tender");
  result.x_star.resize(inst.n);
  for (int j = 0; j < inst.n; ++j) result.x_star(j) = (best_mask >> j) & 1ULL ? 1.0 : 0.0;
  result.y_star = best_y;
  return result;
}

double objective_difference(double candidate_f, double oracle_f) {
  if (!std::isfinite(oracle_f)) throw ModelError("objective_difference needs a finite benchmark");
  return (candidate_f - oracle_f) / std::max(std::abs(oracle_f), 1e-9);
}

void write_oracle_audit_csv(const OracleResult& result, int n, std::ostream& out) {
  out << "x_bits,feasible,phi,best_f\n";
  for (const OracleRow& row : result.audit) {
    std::string bits(static_cast<size_t>(n), '0');
    for (int j = 0; j < n; ++j)
      if ((row.mask >> j) & 1ULL) bits[static_cast<size_t>(j)] = '1';
    out << bits << "," << (row.feasible ? 1 : 0) << ",";
    if (row.feasible) {
      out.precision(17);
      out << row.phi << "," << row.best_f << "\n";
    } else {
      out << ",\n";
    }
  }
}

}  // namespace nbp
