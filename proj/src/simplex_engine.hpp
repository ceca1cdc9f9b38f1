#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nbp/milp.hpp"

namespace nbp::detail {

// Bounded-variable primal simplex on the equality form  A x + s = b  with
// one slack per row (slack bounds encode the row sense). Keeps an explicit
// dense basis inverse, so a solve can restart from the current basis after
// bound changes; branch-and-bound relies on that warm start.
//
// The engine always minimizes. Variable order: structural variables first,
// then one slack per row.
class SimplexEngine {
 public:
  void load(const MilpModel& model, bool negate_objective);

  // Structural variable bound update; takes effect at the next solve().
  void set_bounds(int var, double lower, double upper);

  SolveStatus solve();

  // Objective of the current point, excluding any model constant and in the
  // internal (minimization) orientation.
  double objective() const;

  const std::vector<double>& values() const { return xval_; }
  int num_structural() const { return nstruct_; }
  long iterations() const { return total_iters_; }

 private:
  enum class VStat : unsigned char { Basic, AtLower, AtUpper, FreeNB };

  struct RatioHit {
    double step = kInfinity;
    int row = -1;        // -1 means bound flip of the entering variable
    bool to_upper = false;  // leaving variable lands at its upper bound
  };

  int total_vars() const { return nstruct_ + nrows_; }
  const std::vector<std::pair<int, double>>& column(int var) const { return cols_[var]; }

  void reset_to_slack_basis();
  bool refactorize();                 // rebuild binv_ from basis_; false if singular
  void compute_basic_values();
  void snap_nonbasic();
  double infeasibility() const;

  Eigen::VectorXd ftran(int var) const;                   // B^-1 * column(var)
  Eigen::VectorXd btran(const Eigen::VectorXd& v) const;  // B^-T * v
  double dot_column(const Eigen::VectorXd& y, int var) const;

  // Entering choice; returns var index or -1, sets dir to +-1.
  int price_phase1(const Eigen::VectorXd& y1, bool bland, int* dir) const;
  int price_phase2(const Eigen::VectorXd& y, bool bland, int* dir) const;

  RatioHit ratio_phase1(const Eigen::VectorXd& w, int entering, int dir) const;
  RatioHit ratio_phase2(const Eigen::VectorXd& w, int entering, int dir) const;

  void apply_step(int entering, int dir, const Eigen::VectorXd& w, const RatioHit& hit);

  SolveStatus run_phase1();
  SolveStatus run_phase2();

  int nstruct_ = 0;
  int nrows_ = 0;
  std::vector<std::vector<std::pair<int, double>>> cols_;  // structural + slack columns
  std::vector<double> lo_, up_, cost_;
  Eigen::VectorXd rhs_;

  std::vector<int> basis_;      // basic variable per row
  std::vector<VStat> vstat_;
  std::vector<double> xval_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> binv_;

  long pivots_since_refactor_ = 0;
  long total_iters_ = 0;
  long iter_limit_ = 0;
};

}  // namespace nbp::detail
