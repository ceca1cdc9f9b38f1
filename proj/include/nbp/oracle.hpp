#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nbp/instance.hpp"

namespace nbp {

struct OracleRow {
  std::uint64_t mask = 0;  // tender bits
  bool feasible = false;   // upper-feasible and lower level nonempty
  double phi = 0.0;
  double best_f = 0.0;  // optimistic upper objective at this tender
};

struct OracleResult {
  Eigen::VectorXd x_star;
  Eigen::VectorXd y_star;
  double f_star = 0.0;
  std::vector<OracleRow> audit;  // one row per enumerated tender
};

/// Exact optimistic bilevel solve by tender enumeration (n <= 20): for each
/// feasible tender compute phi(x), then pick the follower solution most
/// favorable to the leader among lower-level optima (d2'y >= phi(x) - 1e-9).
/// Ties across tenders break toward the lowest mask. Throws InfeasibleError
/// when no tender is feasible.
OracleResult brute_force_bilevel(const BilevelInstance& inst, int threads = 0);

/// Relative gap of a candidate value against the oracle optimum:
/// (candidate - oracle) / max(|oracle|, 1e-9).
double objective_difference(double candidate_f, double oracle_f);

void write_oracle_audit_csv(const OracleResult& result, int n, std::ostream& out);

}  // namespace nbp
