#include "nbp/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "nbp/errors.hpp"
#include "simplex_engine.hpp"

namespace nbp {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

namespace {

// Sort by variable and merge duplicates so rows are canonical.
LinExpr canonical(LinExpr terms) {
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  LinExpr out;
  out.reserve(terms.size());
  for (const auto& [var, coef] : terms) {
    if (!out.empty() && out.back().first == var)
      out.back().second += coef;
    else
      out.push_back({var, coef});
  }
  return out;
}

}  // namespace

VarId MilpModel::add_variable(double lower, double upper, bool integral, std::string name) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper)
    throw ModelError("variable bounds must satisfy lower <= upper");
  variables_.push_back({lower, upper, integral, std::move(name)});
  return static_cast<VarId>(variables_.size()) - 1;
}

void MilpModel::check_terms(const LinExpr& terms) const {
  for (const auto& [var, coef] : terms) {
    if (var < 0 || var >= num_variables())
      throw ModelError("coefficient references undeclared variable " + std::to_string(var));
    if (std::isnan(coef)) throw ModelError("coefficient is NaN");
  }
}

int MilpModel::add_constraint(LinExpr terms, Sense sense, double rhs) {
  check_terms(terms);
  constraints_.push_back({canonical(std::move(terms)), sense, rhs});
  return static_cast<int>(constraints_.size()) - 1;
}

void MilpModel::set_objective(LinExpr terms, double constant) {
  check_terms(terms);
  objective_terms_ = canonical(std::move(terms));
  objective_constant_ = constant;
}

void MilpModel::set_variable_bounds(VarId var, double lower, double upper) {
  if (var < 0 || var >= num_variables()) throw ModelError("unknown variable");
  if (lower > upper) throw ModelError("variable bounds must satisfy lower <= upper");
  variables_[static_cast<size_t>(var)].lower = lower;
  variables_[static_cast<size_t>(var)].upper = upper;
}

const Variable& MilpModel::variable(VarId var) const {
  if (var < 0 || var >= num_variables()) throw ModelError("unknown variable");
  return variables_[static_cast<size_t>(var)];
}

MipSolution solve_lp(const MilpModel& model) {
  const auto t0 = std::chrono::steady_clock::now();
  const bool maximize = model.direction() == Direction::Maximize;
  detail::SimplexEngine engine;
  engine.load(model, maximize);
  const SolveStatus status = engine.solve();

  MipSolution sol;
  sol.status = status;
  sol.values.assign(engine.values().begin(), engine.values().begin() + model.num_variables());
  sol.node_count = 0;
  if (status == SolveStatus::Optimal || status == SolveStatus::IterationLimit) {
    sol.has_point = status == SolveStatus::Optimal;
    double obj = engine.objective();
    if (maximize) obj = -obj;
    sol.objective = obj + model.objective_constant();
    sol.bound = sol.objective;
    if (status == SolveStatus::IterationLimit) sol.has_point = true;
  } else if (status == SolveStatus::Unbounded) {
    sol.bound = maximize ? kInfinity : -kInfinity;
    sol.objective = sol.bound;
  }
  sol.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

std::map<std::pair<VarId, VarId>, VarId> linearize_binary_products(
    MilpModel& model, const std::vector<std::pair<VarId, VarId>>& pairs) {
  auto require_binary = [&](VarId v) {
    const Variable& var = model.variable(v);
    if (!var.integral || var.lower != 0.0 || var.upper != 1.0)
      throw ModelError("linearize_binary_products requires binary variables; variable " +
                       std::to_string(v) + " is not binary");
  };
  std::map<std::pair<VarId, VarId>, VarId> aux;
  for (const auto& [xi, xj] : pairs) {
    require_binary(xi);
    require_binary(xj);
    const VarId w = model.add_variable(
        0.0, 1.0, false, "w_" + std::to_string(xi) + "_" + std::to_string(xj));
    model.add_constraint({{w, 1.0}, {xi, -1.0}}, Sense::Le, 0.0);
    model.add_constraint({{w, 1.0}, {xj, -1.0}}, Sense::Le, 0.0);
    model.add_constraint({{w, 1.0}, {xi, -1.0}, {xj, -1.0}}, Sense::Ge, -1.0);
    aux[{xi, xj}] = w;
  }
  return aux;
}

namespace {

void write_expr(const LinExpr& terms, const MilpModel& model, std::ostream& out) {
  bool first = true;
  for (const auto& [var, coef] : terms) {
    if (coef == 0.0) continue;
    if (!first) out << (coef >= 0.0 ? " + " : " - ");
    else if (coef < 0.0) out << "-";
    const double mag = std::abs(coef);
    const std::string& name = model.variables()[var].name;
    out << mag << " " << (name.empty() ? "x" + std::to_string(var) : name);
    first = false;
  }
  if (first) out << "0";
}

}  // namespace

void write_lp_format(const MilpModel& model, std::ostream& out) {
  out << (model.direction() == Direction::Maximize ? "maximize\n" : "minimize\n");
  out << "objective: ";
  write_expr(model.objective_terms(), model, out);
  if (model.objective_constant() != 0.0) out << " + " << model.objective_constant();
  out << "\nsubject to\n";
  for (int i = 0; i < model.num_constraints(); ++i) {
    const Constraint& row = model.constraints()[i];
    out << "c" << i << ": ";
    write_expr(row.terms, model, out);
    switch (row.sense) {
      case Sense::Le: out << " <= "; break;
      case Sense::Eq: out << " = "; break;
      case Sense::Ge: out << " >= "; break;
    }
    out << row.rhs << "\n";
  }
  out << "bounds\n";
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variables()[j];
    out << v.lower << " <= " << (v.name.empty() ? "x" + std::to_string(j) : v.name) << " <= "
        << v.upper << "\n";
  }
  bool any_int = false;
  for (const Variable& v : model.variables()) any_int |= v.integral;
  if (any_int) {
    out << "integer\n";
    for (int j = 0; j < model.num_variables(); ++j)
      if (model.variables()[j].integral)
        out << (model.variables()[j].name.empty() ? "x" + std::to_string(j)
                                                  : model.variables()[j].name)
            << "\n";
  }
  out << "end\n";
}

namespace {

class KernelBackend : public MilpBackend {
 public:
  MipSolution solve_lp(const MilpModel& model) override { return nbp::solve_lp(model); }
  MipSolution solve_mip(const MilpModel& model, const MipParams& params) override {
    return nbp::solve_mip(model, params);
  }
};

}  // namespace

std::unique_ptr<MilpBackend> make_kernel_backend() { return std::make_unique<KernelBackend>(); }

}  // namespace nbp
