#include "simplex_engine.hpp"

#include <algorithm>
#include <cmath>

namespace nbp::detail {

namespace {
constexpr double kZeroTol = 1e-11;    // treat tableau entries below this as zero
constexpr double kPivotTol = 1e-9;    // minimum acceptable pivot magnitude
constexpr double kDualTol = 1e-9;
constexpr double kFixedSpan = 1e-12;  // variables with tighter span never enter
constexpr long kResidualCheckEvery = 100;
constexpr long kRefactorEvery = 1000;
constexpr int kStallWindow = 300;
}  // namespace

void SimplexEngine::load(const MilpModel& model, bool negate_objective) {
  nstruct_ = model.num_variables();
  nrows_ = model.num_constraints();
  const int ntot = total_vars();

  cols_.assign(ntot, {});
  lo_.assign(ntot, 0.0);
  up_.assign(ntot, 0.0);
  cost_.assign(ntot, 0.0);
  rhs_.resize(nrows_);

  for (int j = 0; j < nstruct_; ++j) {
    lo_[j] = model.variables()[j].lower;
    up_[j] = model.variables()[j].upper;
  }
  for (const auto& [var, coef] : model.objective_terms())
    cost_[var] += negate_objective ? -coef : coef;

  for (int i = 0; i < nrows_; ++i) {
    const Constraint& row = model.constraints()[i];
    for (const auto& [var, coef] : row.terms)
      if (coef != 0.0) cols_[var].push_back({i, coef});
    rhs_(i) = row.rhs;
    const int slack = nstruct_ + i;
    cols_[slack].push_back({i, 1.0});
    switch (row.sense) {
      case Sense::Le: lo_[slack] = 0.0; up_[slack] = kInfinity; break;
      case Sense::Ge: lo_[slack] = -kInfinity; up_[slack] = 0.0; break;
      case Sense::Eq: lo_[slack] = 0.0; up_[slack] = 0.0; break;
    }
  }

  total_iters_ = 0;
  iter_limit_ = 20000 + 50L * (nrows_ + nstruct_);
  reset_to_slack_basis();
}

void SimplexEngine::set_bounds(int var, double lower, double upper) {
  lo_[var] = lower;
  up_[var] = upper;
}

void SimplexEngine::reset_to_slack_basis() {
  const int ntot = total_vars();
  basis_.resize(nrows_);
  vstat_.assign(ntot, VStat::AtLower);
  xval_.assign(ntot, 0.0);
  for (int j = 0; j < ntot; ++j) {
    const bool lo_fin = std::isfinite(lo_[j]);
    const bool up_fin = std::isfinite(up_[j]);
    if (lo_fin && (!up_fin || std::abs(lo_[j]) <= std::abs(up_[j]))) {
      vstat_[j] = VStat::AtLower;
      xval_[j] = lo_[j];
    } else if (up_fin) {
      vstat_[j] = VStat::AtUpper;
      xval_[j] = up_[j];
    } else {
      vstat_[j] = VStat::FreeNB;
      xval_[j] = 0.0;
    }
  }
  for (int i = 0; i < nrows_; ++i) {
    basis_[i] = nstruct_ + i;
    vstat_[nstruct_ + i] = VStat::Basic;
  }
  binv_ = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Identity(nrows_,
                                                                                           nrows_);
  pivots_since_refactor_ = 0;
}

bool SimplexEngine::refactorize() {
  if (nrows_ == 0) {
    pivots_since_refactor_ = 0;
    return true;
  }
  Eigen::MatrixXd bmat = Eigen::MatrixXd::Zero(nrows_, nrows_);
  for (int r = 0; r < nrows_; ++r)
    for (const auto& [row, coef] : cols_[basis_[r]]) bmat(row, r) = coef;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
  const Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
  if (!(diag.minCoeff() > 1e-10 * std::max(1.0, diag.maxCoeff()))) return false;
  binv_ = lu.inverse();
  if (!binv_.allFinite()) return false;
  pivots_since_refactor_ = 0;
  return true;
}

void SimplexEngine::compute_basic_values() {
  Eigen::VectorXd rhs_eff = rhs_;
  for (int j = 0; j < total_vars(); ++j) {
    if (vstat_[j] == VStat::Basic || xval_[j] == 0.0) continue;
    for (const auto& [row, coef] : cols_[j]) rhs_eff(row) -= coef * xval_[j];
  }
  if (nrows_ == 0) return;
  const Eigen::VectorXd xb = binv_ * rhs_eff;
  for (int r = 0; r < nrows_; ++r) xval_[basis_[r]] = xb(r);
}

void SimplexEngine::snap_nonbasic() {
  for (int j = 0; j < total_vars(); ++j) {
    if (vstat_[j] == VStat::Basic) continue;
    const bool lo_fin = std::isfinite(lo_[j]);
    const bool up_fin = std::isfinite(up_[j]);
    if (!lo_fin && !up_fin) {
      vstat_[j] = VStat::FreeNB;
      continue;
    }
    if (vstat_[j] == VStat::FreeNB) {
      // bounds appeared; park at the nearest one
      if (lo_fin && (!up_fin || std::abs(xval_[j] - lo_[j]) <= std::abs(xval_[j] - up_[j])))
        vstat_[j] = VStat::AtLower;
      else
        vstat_[j] = VStat::AtUpper;
    }
    if (vstat_[j] == VStat::AtLower && !lo_fin) vstat_[j] = VStat::AtUpper;
    if (vstat_[j] == VStat::AtUpper && !up_fin) vstat_[j] = VStat::AtLower;
    xval_[j] = vstat_[j] == VStat::AtLower ? lo_[j] : up_[j];
  }
}

double SimplexEngine::infeasibility() const {
  double sum = 0.0;
  for (int r = 0; r < nrows_; ++r) {
    const int bi = basis_[r];
    if (xval_[bi] < lo_[bi]) sum += lo_[bi] - xval_[bi];
    if (xval_[bi] > up_[bi]) sum += xval_[bi] - up_[bi];
  }
  return sum;
}

Eigen::VectorXd SimplexEngine::ftran(int var) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nrows_);
  for (const auto& [row, coef] : cols_[var]) w.noalias() += coef * binv_.col(row);
  return w;
}

Eigen::VectorXd SimplexEngine::btran(const Eigen::VectorXd& v) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(nrows_);
  for (int r = 0; r < nrows_; ++r)
    if (v(r) != 0.0) y.noalias() += v(r) * binv_.row(r).transpose();
  return y;
}

double SimplexEngine::dot_column(const Eigen::VectorXd& y, int var) const {
  double acc = 0.0;
  for (const auto& [row, coef] : cols_[var]) acc += y(row) * coef;
  return acc;
}

int SimplexEngine::price_phase1(const Eigen::VectorXd& y1, bool bland, int* dir) const {
  int best = -1;
  int best_dir = 0;
  double best_score = kDualTol;
  for (int j = 0; j < total_vars(); ++j) {
    const VStat st = vstat_[j];
    if (st == VStat::Basic) continue;
    if (up_[j] - lo_[j] <= kFixedSpan) continue;
    const double dc = dot_column(y1, j);
    double score = 0.0;
    int d = 0;
    if (st == VStat::AtLower) {
      if (dc > kDualTol) { score = dc; d = 1; }
    } else if (st == VStat::AtUpper) {
      if (dc < -kDualTol) { score = -dc; d = -1; }
    } else {  // free
      if (std::abs(dc) > kDualTol) { score = std::abs(dc); d = dc > 0.0 ? 1 : -1; }
    }
    if (d == 0) continue;
    if (bland) { *dir = d; return j; }
    if (score > best_score) {
      best_score = score;
      best = j;
      best_dir = d;
    }
  }
  *dir = best_dir;
  return best;
}

int SimplexEngine::price_phase2(const Eigen::VectorXd& y, bool bland, int* dir) const {
  int best = -1;
  int best_dir = 0;
  double best_score = kDualTol;
  for (int j = 0; j < total_vars(); ++j) {
    const VStat st = vstat_[j];
    if (st == VStat::Basic) continue;
    if (up_[j] - lo_[j] <= kFixedSpan) continue;
    const double d = cost_[j] - dot_column(y, j);
    double score = 0.0;
    int dd = 0;
    if (st == VStat::AtLower) {
      if (d < -kDualTol) { score = -d; dd = 1; }
    } else if (st == VStat::AtUpper) {
      if (d > kDualTol) { score = d; dd = -1; }
    } else {
      if (std::abs(d) > kDualTol) { score = std::abs(d); dd = d < 0.0 ? 1 : -1; }
    }
    if (dd == 0) continue;
    if (bland) { *dir = dd; return j; }
    if (score > best_score) {
      best_score = score;
      best = j;
      best_dir = dd;
    }
  }
  *dir = best_dir;
  return best;
}

SimplexEngine::RatioHit SimplexEngine::ratio_phase1(const Eigen::VectorXd& w, int entering,
                                                    int dir) const {
  double min_t = kInfinity;
  const double span = up_[entering] - lo_[entering];
  if (std::isfinite(span)) min_t = span;
  // first pass: smallest breakpoint
  for (int r = 0; r < nrows_; ++r) {
    const double wr = w(r);
    if (std::abs(wr) <= kZeroTol) continue;
    const double delta = dir * wr;
    const int bi = basis_[r];
    const double v = xval_[bi];
    double t = kInfinity;
    if (delta > 0.0) {
      if (v > up_[bi] + kFeasTol) t = (v - up_[bi]) / delta;
      else if (std::isfinite(lo_[bi]) && v >= lo_[bi] - kFeasTol) t = (v - lo_[bi]) / delta;
      // moving further below the lower bound: no breakpoint
    } else {
      if (v < lo_[bi] - kFeasTol) t = (lo_[bi] - v) / (-delta);
      else if (std::isfinite(up_[bi]) && v <= up_[bi] + kFeasTol) t = (up_[bi] - v) / (-delta);
    }
    if (t < 0.0) t = 0.0;
    min_t = std::min(min_t, t);
  }
  RatioHit hit;
  if (!std::isfinite(min_t)) return hit;  // no breakpoint: numerical trouble upstream
  // second pass: among ties pick the stablest pivot
  double best_absw = 0.0;
  for (int r = 0; r < nrows_; ++r) {
    const double wr = w(r);
    if (std::abs(wr) <= kPivotTol) continue;
    const double delta = dir * wr;
    const int bi = basis_[r];
    const double v = xval_[bi];
    double t = kInfinity;
    bool to_upper = false;
    if (delta > 0.0) {
      if (v > up_[bi] + kFeasTol) { t = (v - up_[bi]) / delta; to_upper = true; }
      else if (std::isfinite(lo_[bi]) && v >= lo_[bi] - kFeasTol) { t = (v - lo_[bi]) / delta; }
      else { continue; }
    } else {
      if (v < lo_[bi] - kFeasTol) { t = (lo_[bi] - v) / (-delta); to_upper = false; }
      else if (std::isfinite(up_[bi]) && v <= up_[bi] + kFeasTol) { t = (up_[bi] - v) / (-delta); to_upper = true; }
      else { continue; }
    }
    if (t < 0.0) t = 0.0;
    if (t <= min_t + 1e-9 && std::abs(wr) > best_absw) {
      best_absw = std::abs(wr);
      hit.step = t;
      hit.row = r;
      hit.to_upper = to_upper;
    }
  }
  if (hit.row < 0 && std::isfinite(span) && span <= min_t + 1e-9) {
    hit.step = span;
    hit.row = -1;
    hit.to_upper = dir > 0;
  }
  return hit;
}

SimplexEngine::RatioHit SimplexEngine::ratio_phase2(const Eigen::VectorXd& w, int entering,
                                                    int dir) const {
  double min_t = kInfinity;
  const double span = up_[entering] - lo_[entering];
  if (std::isfinite(span)) min_t = span;
  for (int r = 0; r < nrows_; ++r) {
    const double wr = w(r);
    if (std::abs(wr) <= kZeroTol) continue;
    const double delta = dir * wr;
    const int bi = basis_[r];
    const double v = xval_[bi];
    double t = kInfinity;
    if (delta > 0.0) {
      if (std::isfinite(lo_[bi])) t = (v - lo_[bi]) / delta;
    } else {
      if (std::isfinite(up_[bi])) t = (up_[bi] - v) / (-delta);
    }
    if (t < 0.0) t = 0.0;
    min_t = std::min(min_t, t);
  }
  RatioHit hit;
  if (!std::isfinite(min_t)) return hit;  // genuinely unbounded direction
  double best_absw = 0.0;
  for (int r = 0; r < nrows_; ++r) {
    const double wr = w(r);
    if (std::abs(wr) <= kPivotTol) continue;
    const double delta = dir * wr;
    const int bi = basis_[r];
    const double v = xval_[bi];
    double t = kInfinity;
    bool to_upper = false;
    if (delta > 0.0) {
      if (std::isfinite(lo_[bi])) { t = (v - lo_[bi]) / delta; to_upper = false; }
    } else {
      if (std::isfinite(up_[bi])) { t = (up_[bi] - v) / (-delta); to_upper = true; }
    }
    if (t < 0.0) t = 0.0;
    if (t <= min_t + 1e-9 && std::abs(wr) > best_absw) {
      best_absw = std::abs(wr);
      hit.step = t;
      hit.row = r;
      hit.to_upper = to_upper;
    }
  }
  if (hit.row < 0 && std::isfinite(span) && span <= min_t + 1e-9) {
    hit.step = span;
    hit.row = -1;
    hit.to_upper = dir > 0;
  }
  return hit;
}

void SimplexEngine::apply_step(int entering, int dir, const Eigen::VectorXd& w,
                               const RatioHit& hit) {
  const double t = hit.step;
  if (hit.row < 0) {  // bound flip, basis unchanged
    for (int r = 0; r < nrows_; ++r)
      if (std::abs(w(r)) > kZeroTol) xval_[basis_[r]] -= t * dir * w(r);
    xval_[entering] = dir > 0 ? up_[entering] : lo_[entering];
    vstat_[entering] = dir > 0 ? VStat::AtUpper : VStat::AtLower;
  } else {
    const int r = hit.row;
    const int leaving = basis_[r];
    const double xnew = xval_[entering] + dir * t;
    for (int rr = 0; rr < nrows_; ++rr)
      if (std::abs(w(rr)) > kZeroTol) xval_[basis_[rr]] -= t * dir * w(rr);
    xval_[leaving] = hit.to_upper ? up_[leaving] : lo_[leaving];
    vstat_[leaving] = hit.to_upper ? VStat::AtUpper : VStat::AtLower;
    basis_[r] = entering;
    vstat_[entering] = VStat::Basic;
    xval_[entering] = xnew;

    const double pivot = w(r);
    binv_.row(r) /= pivot;
    for (int rr = 0; rr < nrows_; ++rr) {
      if (rr == r) continue;
      const double f = w(rr);
      if (std::abs(f) > 1e-14) binv_.row(rr) -= f * binv_.row(r);
    }
    ++pivots_since_refactor_;
  }
  ++total_iters_;
}

SolveStatus SimplexEngine::run_phase1() {
  double last_inf = kInfinity;
  long since_progress = 0;
  bool bland = false;
  while (true) {
    if (total_iters_ > iter_limit_) return SolveStatus::IterationLimit;
    if (pivots_since_refactor_ >= kRefactorEvery) {
      if (!refactorize()) reset_to_slack_basis();
      compute_basic_values();
    }
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nrows_);
    double inf_sum = 0.0;
    for (int r = 0; r < nrows_; ++r) {
      const int bi = basis_[r];
      if (xval_[bi] < lo_[bi] - kFeasTol) {
        g(r) = -1.0;
        inf_sum += lo_[bi] - xval_[bi];
      } else if (xval_[bi] > up_[bi] + kFeasTol) {
        g(r) = 1.0;
        inf_sum += xval_[bi] - up_[bi];
      }
    }
    if (inf_sum == 0.0) return SolveStatus::Optimal;

    if (inf_sum < last_inf - 1e-12) {
      last_inf = inf_sum;
      since_progress = 0;
      bland = false;
    } else if (++since_progress > kStallWindow) {
      bland = true;
    }

    const Eigen::VectorXd y1 = btran(g);
    int dir = 0;
    const int entering = price_phase1(y1, bland, &dir);
    if (entering < 0) return SolveStatus::Infeasible;
    const Eigen::VectorXd w = ftran(entering);
    const RatioHit hit = ratio_phase1(w, entering, dir);
    if (!std::isfinite(hit.step) || hit.step == kInfinity) {
      // should not happen; refactor once and retry, then give up
      if (!refactorize()) reset_to_slack_basis();
      compute_basic_values();
      if (++since_progress > kStallWindow + 4) return SolveStatus::IterationLimit;
      continue;
    }
    apply_step(entering, dir, w, hit);
    if (total_iters_ % kResidualCheckEvery == 0) compute_basic_values();
  }
}

SolveStatus SimplexEngine::run_phase2() {
  double last_obj = kInfinity;
  long since_progress = 0;
  bool bland = false;
  while (true) {
    if (total_iters_ > iter_limit_) return SolveStatus::IterationLimit;
    if (pivots_since_refactor_ >= kRefactorEvery) {
      if (!refactorize()) reset_to_slack_basis();
      compute_basic_values();
      if (infeasibility() > kFeasTol) {
        const SolveStatus s = run_phase1();
        if (s != SolveStatus::Optimal) return s;
      }
    }
    Eigen::VectorXd cb(nrows_);
    for (int r = 0; r < nrows_; ++r) cb(r) = cost_[basis_[r]];
    const Eigen::VectorXd y = btran(cb);
    int dir = 0;
    const int entering = price_phase2(y, bland, &dir);
    if (entering < 0) return SolveStatus::Optimal;

    const double obj = objective();
    if (obj < last_obj - 1e-12) {
      last_obj = obj;
      since_progress = 0;
      bland = false;
    } else if (++since_progress > kStallWindow) {
      bland = true;
    }

    const Eigen::VectorXd w = ftran(entering);
    const RatioHit hit = ratio_phase2(w, entering, dir);
    if (!std::isfinite(hit.step) || hit.step == kInfinity) return SolveStatus::Unbounded;
    apply_step(entering, dir, w, hit);
    if (total_iters_ % kResidualCheckEvery == 0) compute_basic_values();
  }
}

double SimplexEngine::objective() const {
  double acc = 0.0;
  for (int j = 0; j < nstruct_; ++j)
    if (cost_[j] != 0.0) acc += cost_[j] * xval_[j];
  return acc;
}

SolveStatus SimplexEngine::solve() {
  for (int j = 0; j < total_vars(); ++j)
    if (lo_[j] > up_[j] + 1e-12) return SolveStatus::Infeasible;
  snap_nonbasic();
  compute_basic_values();
  for (int round = 0; round < 4; ++round) {
    SolveStatus s = run_phase1();
    if (s != SolveStatus::Optimal) return s;
    s = run_phase2();
    if (s != SolveStatus::Optimal) return s;
    // guard against drift: certify primal feasibility before reporting
    compute_basic_values();
    if (infeasibility() <= 10.0 * kFeasTol) return SolveStatus::Optimal;
    if (!refactorize()) reset_to_slack_basis();
    compute_basic_values();
  }
  return SolveStatus::IterationLimit;
}

}  // namespace nbp::detail
