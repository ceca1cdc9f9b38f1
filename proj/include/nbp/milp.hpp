#pragma once

#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace nbp {

enum class Sense { Le, Eq, Ge };
enum class Direction { Minimize, Maximize };
enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(SolveStatus status);

using VarId = int;
using LinExpr = std::vector<std::pair<VarId, double>>;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Solver tolerances shared by the LP and MIP paths.
constexpr double kFeasTol = 1e-7;
constexpr double kIntTol = 1e-6;

struct Variable {
  double lower = 0.0;
  double upper = kInfinity;
  bool integral = false;
  std::string name;
};

struct Constraint {
  LinExpr terms;
  Sense sense = Sense::Le;
  double rhs = 0.0;
};

/// Generic mixed-integer linear model. Rows and variables keep insertion
/// order; the solvers are deterministic functions of that order.
class MilpModel {
 public:
  explicit MilpModel(Direction direction = Direction::Minimize) : direction_(direction) {}

  VarId add_variable(double lower, double upper, bool integral, std::string name = {});
  int add_constraint(LinExpr terms, Sense sense, double rhs);
  void set_objective(LinExpr terms, double constant = 0.0);

  Direction direction() const { return direction_; }
  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const LinExpr& objective_terms() const { return objective_terms_; }
  double objective_constant() const { return objective_constant_; }

  void set_variable_bounds(VarId var, double lower, double upper);
  const Variable& variable(VarId var) const;

 private:
  void check_terms(const LinExpr& terms) const;

  Direction direction_;
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  LinExpr objective_terms_;
  double objective_constant_ = 0.0;
};

struct MipParams {
  double gap_tol = 1e-6;          // relative optimality gap
  long node_limit = -1;           // < 0 means unlimited
  double time_limit_s = -1.0;     // < 0 means unlimited
};

struct MipSolution {
  SolveStatus status = SolveStatus::Infeasible;
  bool has_point = false;
  double objective = 0.0;          // objective of `values` in model direction
  double bound = 0.0;              // best proven bound in model direction
  std::vector<double> values;      // indexed by VarId
  long node_count = 0;
  double wall_time_s = 0.0;

  double value(VarId var) const { return values.at(static_cast<size_t>(var)); }
};

/// Pluggable solve interface. The in-repo kernel below is the reference
/// backend; an external solver can be swapped in behind the same contract.
class MilpBackend {
 public:
  virtual ~MilpBackend() = default;
  virtual MipSolution solve_lp(const MilpModel& model) = 0;
  virtual MipSolution solve_mip(const MilpModel& model, const MipParams& params) = 0;
};

/// The built-in backend: bounded-variable primal simplex plus
/// branch-and-bound with most-fractional branching.
std::unique_ptr<MilpBackend> make_kernel_backend();

/// Convenience entry points on the built-in backend.
MipSolution solve_lp(const MilpModel& model);
MipSolution solve_mip(const MilpModel& model, const MipParams& params = {});

/// McCormick linearization of products of binary variables: for each pair
/// (xi, xj) adds w in [0,1] with w <= xi, w <= xj, w >= xi + xj - 1, so
/// w = xi*xj at every feasible binary point.
std::map<std::pair<VarId, VarId>, VarId> linearize_binary_products(
    MilpModel& model, const std::vector<std::pair<VarId, VarId>>& pairs);

/// Debugging dump in LP-style text; write-only.
///
/// Grammar:  <direction> NL objective: <expr> [+ const] NL subject to NL
///           (c<i>: <expr> <=|=|>= rhs NL)*  bounds NL
///           (<lo> <= x<i> <= <hi> NL)*  (integer NL (x<i> NL)*)?  end NL
void write_lp_format(const MilpModel& model, std::ostream& out);

}  // namespace nbp
