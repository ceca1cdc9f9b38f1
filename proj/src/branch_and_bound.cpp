#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "nbp/errors.hpp"
#include "nbp/milp.hpp"
#include "simplex_engine.hpp"

namespace nbp {

namespace {

struct BoundChange {
  VarId var;
  double lower;
  double upper;
};

struct Node {
  std::vector<BoundChange> decisions;  // full path from the root
  double bound;                        // parent LP objective, internal (min) form
  long id;
};

class BranchAndBound {
 public:
  BranchAndBound(const MilpModel& model, const MipParams& params)
      : model_(model), params_(params), maximize_(model.direction() == Direction::Maximize) {}

  MipSolution run() {
    start_ = std::chrono::steady_clock::now();
    for (int j = 0; j < model_.num_variables(); ++j) {
      const Variable& v = model_.variables()[j];
      if (v.integral && (!std::isfinite(v.lower) || !std::isfinite(v.upper)))
        throw ModelError("integer variable " + std::to_string(j) +
                         " needs finite bounds for branching");
    }
    engine_.load(model_, maximize_);
    root_lo_.resize(model_.num_variables());
    root_up_.resize(model_.num_variables());
    cur_lo_.resize(model_.num_variables());
    cur_up_.resize(model_.num_variables());
    for (int j = 0; j < model_.num_variables(); ++j) {
      root_lo_[j] = cur_lo_[j] = model_.variables()[j].lower;
      root_up_[j] = cur_up_[j] = model_.variables()[j].upper;
    }

    Node current{{}, -kInfinity, 0};
    long next_id = 1;
    bool exhausted = false;

    while (true) {
      if (limits_hit()) break;
      ++nodes_;
      const SolveStatus status = engine_.solve();
      bool dead = true;
      if (status == SolveStatus::Unbounded) {
        unbounded_ = true;
        break;
      }
      if (status == SolveStatus::IterationLimit) {
        proof_complete_ = false;
        stalled_bound_ = std::min(stalled_bound_, current.bound);
      } else if (status == SolveStatus::Optimal) {
        const double lpobj = engine_.objective();
        if (lpobj < incumbent_obj_ - gap_slack()) {
          const int q = most_fractional();
          if (q < 0) {
            take_incumbent();
          } else {
            const double v = engine_.values()[q];
            Node up = current;
            up.decisions.push_back({q, std::ceil(v), cur_up_[q]});
            up.bound = lpobj;
            up.id = next_id++;
            open_.push_back(std::move(up));
            // dive on the floor side
            current.decisions.push_back({q, cur_lo_[q], std::floor(v)});
            current.bound = lpobj;
            apply_change(current.decisions.back());
            dead = false;
          }
        } else {
          pruned_bound_ = std::min(pruned_bound_, lpobj);
        }
      }
      if (dead) {
        if (open_.empty()) {
          exhausted = true;
          break;
        }
        const size_t pick = select_best_open();
        if (incumbent_ && open_[pick].bound >= incumbent_obj_ - gap_slack()) {
          // everything left is within the gap
          for (const Node& node : open_) pruned_bound_ = std::min(pruned_bound_, node.bound);
          open_.clear();
          exhausted = true;
          break;
        }
        Node next = std::move(open_[pick]);
        open_.erase(open_.begin() + static_cast<long>(pick));
        switch_to(next);
        current = std::move(next);
      }
    }
    return finalize(exhausted);
  }

 private:
  bool limits_hit() {
    if (params_.node_limit >= 0 && nodes_ >= params_.node_limit) return true;
    if (params_.time_limit_s >= 0.0 && elapsed() > params_.time_limit_s) return true;
    return false;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  double gap_slack() const {
    if (!incumbent_) return 0.0;
    return params_.gap_tol * std::max(1.0, std::abs(incumbent_obj_));
  }

  int most_fractional() const {
    int best = -1;
    double best_score = kIntTol;
    for (int j = 0; j < model_.num_variables(); ++j) {
      if (!model_.variables()[j].integral) continue;
      const double v = engine_.values()[j];
      const double frac = v - std::floor(v);
      const double score = std::min(frac, 1.0 - frac);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  void take_incumbent() {
    std::vector<double> vals(engine_.values().begin(),
                             engine_.values().begin() + model_.num_variables());
    for (int j = 0; j < model_.num_variables(); ++j)
      if (model_.variables()[j].integral) vals[j] = std::round(vals[j]);
    double obj = 0.0;
    for (const auto& [var, coef] : model_.objective_terms())
      obj += (maximize_ ? -coef : coef) * vals[var];
    if (!incumbent_ || obj < incumbent_obj_) {
      incumbent_ = true;
      incumbent_obj_ = obj;
      incumbent_vals_ = std::move(vals);
    }
  }

  size_t select_best_open() const {
    size_t best = 0;
    for (size_t i = 1; i < open_.size(); ++i) {
      if (open_[i].bound < open_[best].bound - 1e-12 ||
          (open_[i].bound < open_[best].bound + 1e-12 && open_[i].id < open_[best].id))
        best = i;
    }
    return best;
  }

  void apply_change(const BoundChange& ch) {
    cur_lo_[ch.var] = ch.lower;
    cur_up_[ch.var] = ch.upper;
    engine_.set_bounds(ch.var, ch.lower, ch.upper);
  }

  void switch_to(const Node& node) {
    for (int j = 0; j < model_.num_variables(); ++j) {
      if (cur_lo_[j] != root_lo_[j] || cur_up_[j] != root_up_[j]) {
        cur_lo_[j] = root_lo_[j];
        cur_up_[j] = root_up_[j];
        engine_.set_bounds(j, root_lo_[j], root_up_[j]);
      }
    }
    for (const BoundChange& ch : node.decisions) apply_change(ch);
  }

  MipSolution finalize(bool exhausted) {
    MipSolution sol;
    sol.node_count = nodes_;
    sol.values.assign(static_cast<size_t>(model_.num_variables()), 0.0);
    double lb = kInfinity;  // proven lower bound, internal form
    for (const Node& node : open_) lb = std::min(lb, node.bound);
    lb = std::min(lb, pruned_bound_);
    lb = std::min(lb, stalled_bound_);
    if (incumbent_) lb = std::min(lb, incumbent_obj_);

    if (unbounded_) {
      sol.status = SolveStatus::Unbounded;
      sol.bound = maximize_ ? kInfinity : -kInfinity;
      sol.objective = sol.bound;
    } else if (incumbent_) {
      const bool proven = exhausted && proof_complete_;
      sol.status = proven ? SolveStatus::Optimal : SolveStatus::IterationLimit;
      sol.has_point = true;
      sol.values = incumbent_vals_;
      sol.objective = (maximize_ ? -incumbent_obj_ : incumbent_obj_) + model_.objective_constant();
      sol.bound = (maximize_ ? -lb : lb) + model_.objective_constant();
    } else if (exhausted && proof_complete_) {
      sol.status = SolveStatus::Infeasible;
    } else {
      sol.status = SolveStatus::IterationLimit;
      sol.bound = std::isfinite(lb) ? (maximize_ ? -lb : lb) + model_.objective_constant()
                                    : (maximize_ ? kInfinity : -kInfinity);
    }
    sol.wall_time_s = elapsed();
    return sol;
  }

  const MilpModel& model_;
  MipParams params_;
  bool maximize_;
  detail::SimplexEngine engine_;
  std::vector<double> root_lo_, root_up_, cur_lo_, cur_up_;
  std::vector<Node> open_;
  bool incumbent_ = false;
  double incumbent_obj_ = kInfinity;
  std::vector<double> incumbent_vals_;
  double pruned_bound_ = kInfinity;
  double stalled_bound_ = kInfinity;
  bool unbounded_ = false;
  bool proof_complete_ = true;
  long nodes_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

MipSolution solve_mip(const MilpModel& model, const MipParams& params) {
  BranchAndBound bnb(model, params);
  return bnb.run();
}

}  // namespace nbp
