#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nbp/instance.hpp"
#include "nbp/rng.hpp"

namespace nbp {

struct SampleRecord {
  Eigen::VectorXd x;       // binary tender, length n
  double phi = 0.0;        // exact lower-level optimum at x
  Eigen::VectorXd y_star;  // a lower-level argmax
  double upper_value = 0.0;  // f(x, y_star) = c'x + d1'y_star
};

/// Labeled tender samples. All x are distinct and feasible for both levels.
struct SamplePool {
  std::vector<SampleRecord> records;
  double final_f_ub = std::numeric_limits<double>::infinity();
  std::string strategy;
  std::uint64_t seed = 0;
  bool stalled = false;  // stopped before reaching the requested size

  long size() const { return static_cast<long>(records.size()); }
};

struct LowerLevelValue {
  double phi;
  Eigen::VectorXd y_star;
};

/// Exact lower-level solve at a fixed tender:
///   max d2'y  s.t.  B2 y <= b2 - A2 x, 0 <= y <= y_upper
/// (y integer when the instance is mixed-integer). nullopt when the lower
/// level is infeasible at x, i.e. x is not BP-feasible.
std::optional<LowerLevelValue> lower_level_value(const BilevelInstance& inst,
                                                 const Eigen::VectorXd& x);

/// Random PSD objective for sampling via optimization: Q = A'A with A and h
/// i.i.d. uniform on [-1,1]. Q is exactly symmetric.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> random_psd(int n, Rng& rng);

/// Sampling via optimization with upper-bound strengthening: repeatedly draw
/// (Q, h), minimize x'Qx + h'x over the joint feasible set (with f(x,y) <=
/// f_ub while one is known), label fresh tenders, and let improving labels
/// tighten f_ub at most n_ub_updates times. Stops at n_samples distinct
/// records or after 50*n_samples consecutive draws without a new one.
SamplePool enhanced_sampling(const BilevelInstance& inst, long n_samples, long n_ub_updates,
                             double f_ub, std::uint64_t seed);

/// Baseline: uniform draws over {0,1}^n, keeping distinct feasible tenders.
SamplePool random_sampling(const BilevelInstance& inst, long n_samples, long attempt_limit,
                           std::uint64_t seed);

/// Every feasible tender, labeled; requires n <= 22.
SamplePool enumerate_all(const BilevelInstance& inst, int threads = 0);

/// Distinct-union; records of `extra` with unseen x are appended to `base`.
/// f_ub and stall flags follow base except that final_f_ub takes the min.
SamplePool merge_pools(SamplePool base, const SamplePool& extra);

void write_pool(const SamplePool& pool, std::ostream& out);
SamplePool read_pool(std::istream& in);
void save_pool(const SamplePool& pool, const std::string& path);
SamplePool load_pool(const std::string& path);

/// Key helper shared by dedup logic and tests.
std::string tender_key(const Eigen::VectorXd& x);

}  // namespace nbp
