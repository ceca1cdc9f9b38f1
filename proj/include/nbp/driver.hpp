#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nbp/encoder.hpp"
#include "nbp/instance.hpp"
#include "nbp/sampler.hpp"
#include "nbp/valuenet.hpp"

namespace nbp {

enum class RefMode { BigM, Cuts };
std::string to_string(RefMode mode);
RefMode ref_mode_from_string(const std::string& name);

struct RelaxationResult {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double bound = 0.0;  // valid lower bound on the bilevel optimum
};

/// Single-level relaxation: drop the follower's optimality, keep only
/// feasibility. Throws InfeasibleError when the joint region is empty.
RelaxationResult solve_relaxation(const BilevelInstance& inst);

struct ReformulationResult {
  bool feasible = false;
  SolveStatus status = SolveStatus::Infeasible;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double objective = 0.0;
  int cut_rounds = 0;
};

/// Single-level solve with the learned value function enforcing lower-level
/// optimality: min c'x + d1'y over the joint region plus d2'y >= phi~(x~),
/// with the net embedded via big-M rows or enforced by lazy supermodular
/// cuts (ISNN only).
ReformulationResult solve_reformulation(const BilevelInstance& inst, const ValueNet& net,
                                        RefMode mode);

struct StageTimes {
  double sample_s = 0.0;
  double train_s = 0.0;
  double solve_s = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  long pool_size = 0;
  long new_samples = 0;
  double train_mse = 0.0;
  std::string ref_status;
  double ref_objective = 0.0;  // meaningful only when the reformulation solved
  double f_ub = 0.0;           // after this iteration's update
  StageTimes times;
  double lipschitz = 0.0;
  double hausdorff = -1.0;  // -1 when the diagnostic is off
};

struct SolverSettings {
  NetKind kind = NetKind::GNN;
  RefMode mode = RefMode::BigM;
  long n_samples = 1000;
  long n_ub_updates = 5;
  int n_iterations = 1;
  TrainHyper hyper;
  bool exact_fit = false;   // enumerate + interpolate instead of sample + train
  bool reset_pool = false;  // drop accumulated samples between iterations
  bool diagnostics = false;  // Hausdorff distance of unsampled tenders (n <= 16)
  bool record_times = false;  // keep wall-clock stage times in the report
  std::uint64_t seed = 0;
};

struct RunReport {
  SolverSettings settings;
  double relaxation_bound = 0.0;
  Eigen::VectorXd relaxation_x;
  double initial_f_ub = 0.0;
  std::vector<IterationRecord> iterations;
  Eigen::VectorXd best_x;
  Eigen::VectorXd best_y;
  double final_f_ub = 0.0;
};

/// The full iterative pipeline: relaxation, then rounds of sampling (with
/// the current upper bound), sizing, training, reformulation solve, and
/// upper-bound bookkeeping. Deterministic for a fixed settings.seed.
RunReport neural_bilevel(const BilevelInstance& inst, const SolverSettings& settings);

/// Largest distance from an unsampled feasible tender to the pool
/// (Euclidean); 0 when the pool covers the feasible set. n <= 16.
double hausdorff_unsampled(const BilevelInstance& inst, const SamplePool& pool);

/// Structural equality that ignores recorded wall-clock times.
bool reports_equivalent(const RunReport& a, const RunReport& b);

void write_report_json(const RunReport& report, std::ostream& out);
void write_iterations_csv(const RunReport& report, std::ostream& out);

}  // namespace nbp
