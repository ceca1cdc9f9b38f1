#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nbp {

enum class LowerKind { Continuous, Integer };

std::string to_string(LowerKind kind);
LowerKind lower_kind_from_string(const std::string& name);

/// A bilevel program with binary tender:
///
///   min  c'x + d1'y
///   s.t. A1 x <= b1,  x in {0,1}^n
///        y in argmax { d2'y : A2 x + B2 y <= b2, 0 <= y <= y_upper },
///
/// where the follower's y is continuous or integer per `lower_kind`.
/// Instances are immutable once built; treat fields as read-only.
struct BilevelInstance {
  int n = 0;  // upper-level binary variables
  int m = 0;  // lower-level variables
  Eigen::VectorXd c;        // length n
  Eigen::VectorXd d1;       // length m, upper objective on y
  Eigen::VectorXd d2;       // length m, lower objective (maximized)
  Eigen::MatrixXd A1;       // n x n
  Eigen::VectorXd b1;       // length n
  Eigen::MatrixXd A2;       // m x n
  Eigen::MatrixXd B2;       // m x m
  Eigen::VectorXd b2;       // length m
  Eigen::VectorXd y_upper;  // length m, nonnegative
  LowerKind lower_kind = LowerKind::Continuous;
};

/// Random instance family. Coefficients are drawn uniformly from fixed
/// ranges with delta = 200/(m+n):
///   c, d1, d2 in [-50, 50] with d1 = d2;  A1 in [-2d, 2d];  b1 in [30, 130];
///   A2 in [-10d, 10d];  B2 in [-d, d];  b2 in [10, 110];  y_upper = 1.
/// Deterministic for a fixed seed.
BilevelInstance generate_instance(int n, int m, LowerKind kind, std::uint64_t seed);

/// Every dimension/bound inconsistency, each naming the offending field.
/// Empty result means the instance invariants hold.
std::vector<std::string> validate_instance(const BilevelInstance& inst);

/// JSON document with explicit dimension fields; matrices are row-major
/// nested arrays. Numbers round-trip exactly.
void save_instance(const BilevelInstance& inst, const std::string& path);
BilevelInstance load_instance(const std::string& path);
void write_instance(const BilevelInstance& inst, std::ostream& out);
BilevelInstance read_instance(std::istream& in);

}  // namespace nbp
