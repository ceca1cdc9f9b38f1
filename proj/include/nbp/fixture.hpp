#pragma once

#include <array>
#include <functional>

#include "nbp/valuenet.hpp"

namespace nbp {

/// The two-variable toy bilevel program used as a golden fixture:
///
///   min 2 x1 + x2 - 3 y   s.t. x1, x2 in {0,1}
///   where y solves: max -(y-2)^2  s.t. 0 <= y <= 1 + 2|x1 - x2|.
///
/// The follower picks y* = min(1 + 2|x1-x2|, 2), so the value function is
/// phi(x1,x2) = -(y* - 2)^2, and the leader's optimum is x = (0,1), f = -5.
struct IllustrativeFixture {
  std::array<double, 4> phi_table;  // mask-indexed: mask = x1 | (x2 << 1)
  std::array<int, 2> known_optimum_x;
  double known_optimum_f;
  ValueNet gnn_closed_form;   // x1 + x2 - 1 - 2 relu(x1 + x2 - 1)
  ValueNet isnn_closed_form;  // x1 + (1-x2) - 2 + 2 relu((1-x1) + x2 - 1)
};

IllustrativeFixture illustrative_fixture();

double fixture_phi(int x1, int x2);
double fixture_y_upper(int x1, int x2);

struct FixtureSolution {
  bool feasible = false;
  std::array<int, 2> x{0, 0};
  double y = 0.0;
  double f = 0.0;
};

/// Single-level solve of the fixture with the follower's optimality replaced
/// by -(y-2)^2 >= vbar(x1,x2); the tender space is enumerated and each
/// per-tender problem is closed-form interval arithmetic. Feeding exact phi
/// (or any per-tender approximation such as a net's forward pass) reproduces
/// the pipeline on this nonlinear-lower-level example.
FixtureSolution fixture_pipeline_solve(const std::function<double(int, int)>& vbar);

}  // namespace nbp
