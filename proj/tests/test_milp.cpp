#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "nbp/errors.hpp"
#include "nbp/milp.hpp"
#include "test_helpers.hpp"

using namespace nbp;

TEST_SUITE_BEGIN("milp");

TEST_CASE("model building basics") {
  MilpModel model(Direction::Minimize);
  const VarId x = model.add_variable(0.0, 1.0, true, "x");
  model.add_constraint({{x, 1.0}}, Sense::Le, 0.0);
  model.set_objective({{x, -1.0}});
  CHECK(model.num_variables() == 1);
  CHECK(model.num_constraints() == 1);

  SUBCASE("duplicate rows are kept") {
    model.add_constraint({{x, 1.0}}, Sense::Le, 0.0);
    CHECK(model.num_constraints() == 2);
    CHECK(model.constraints()[0].terms == model.constraints()[1].terms);
  }
  SUBCASE("undeclared variable is a modeling error") {
    CHECK_THROWS_AS(model.add_constraint({{7, 1.0}}, Sense::Le, 0.0), ModelError);
    CHECK_THROWS_AS(model.set_objective({{-1, 1.0}}), ModelError);
  }
  SUBCASE("solves to the forced point") {
    const MipSolution sol = solve_mip(model);
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(sol.value(x) == doctest::Approx(0.0));
  }
}

TEST_CASE("lp: bounded single variable") {
  MilpModel model(Direction::Maximize);
  const VarId y = model.add_variable(0.0, 3.0, false, "y");
  model.set_objective({{y, 1.0}});
  const MipSolution sol = solve_lp(model);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(3.0));
  CHECK(sol.value(y) == doctest::Approx(3.0));
}

TEST_CASE("lp: conflicting rows are infeasible") {
  MilpModel model(Direction::Minimize);
  const VarId x = model.add_variable(-kInfinity, kInfinity, false);
  model.add_constraint({{x, 1.0}}, Sense::Ge, 2.0);
  model.add_constraint({{x, 1.0}}, Sense::Le, 1.0);
  model.set_objective({{x, 1.0}});
  CHECK(solve_lp(model).status == SolveStatus::Infeasible);
}

TEST_CASE("lp: unbounded ray detected") {
  MilpModel model(Direction::Minimize);
  const VarId x = model.add_variable(0.0, kInfinity, false);
  model.set_objective({{x, -1.0}});
  CHECK(solve_lp(model).status == SolveStatus::Unbounded);
}

TEST_CASE("lp: equality rows and free variables") {
  // min x + y  s.t. x + y = 2, x - y >= -4, free x, y
  MilpModel model(Direction::Minimize);
  const VarId x = model.add_variable(-kInfinity, kInfinity, false);
  const VarId y = model.add_variable(-kInfinity, kInfinity, false);
  model.add_constraint({{x, 1.0}, {y, 1.0}}, Sense::Eq, 2.0);
  model.add_constraint({{x, 1.0}, {y, -1.0}}, Sense::Ge, -4.0);
  model.set_objective({{x, 1.0}, {y, 1.0}});
  const MipSolution sol = solve_lp(model);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(2.0));
}

namespace {

// 20-var LP whose optimum splits into a 3-var block checked by vertex
// enumeration plus box-separable variables with a closed-form optimum.
void check_random_structured_lp(std::uint64_t seed) {
  Rng rng(seed);
  MilpModel model(Direction::Minimize);
  testing::DenseLp block;
  block.lo = Eigen::VectorXd(3);
  block.up = Eigen::VectorXd(3);
  block.cost = Eigen::VectorXd(3);
  std::vector<VarId> bvars;
  for (int j = 0; j < 3; ++j) {
    block.lo(j) = rng.uniform(-2.0, 0.0);
    block.up(j) = block.lo(j) + rng.uniform(0.5, 3.0);
    block.cost(j) = rng.uniform(-5.0, 5.0);
    bvars.push_back(model.add_variable(block.lo(j), block.up(j), false));
  }
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd a(3);
    LinExpr terms;
    for (int j = 0; j < 3; ++j) {
      a(j) = rng.uniform(-3.0, 3.0);
      terms.push_back({bvars[static_cast<size_t>(j)], a(j)});
    }
    const double rhs = rng.uniform(0.5, 4.0);
    block.rows.push_back(a);
    block.senses.push_back(Sense::Le);
    block.rhs.push_back(rhs);
    model.add_constraint(std::move(terms), Sense::Le, rhs);
  }
  double separable = 0.0;
  LinExpr obj;
  for (int j = 0; j < 3; ++j) obj.push_back({bvars[static_cast<size_t>(j)], block.cost(j)});
  for (int j = 0; j < 17; ++j) {
    const double lo = rng.uniform(-3.0, 0.0);
    const double up = lo + rng.uniform(0.1, 2.0);
    const double c = rng.uniform(-4.0, 4.0);
    const VarId v = model.add_variable(lo, up, false);
    obj.push_back({v, c});
    separable += c >= 0.0 ? c * lo : c * up;
  }
  model.set_objective(std::move(obj));

  const auto expect_block = testing::vertex_enumeration_min(block);
  const MipSolution sol = solve_lp(model);
  if (!expect_block) {
    CHECK(sol.status == SolveStatus::Infeasible);
    return;
  }
  REQUIRE(sol.status == SolveStatus::Optimal);
  const double expected = *expect_block + separable;
  CHECK(sol.objective == doctest::Approx(expected).epsilon(1e-7));
}

}  // namespace

TEST_CASE("lp: random 20-var problems match vertex enumeration") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) check_random_structured_lp(seed);
}

TEST_CASE("lp: objective invariant under row permutation") {
  Rng rng(99);
  for (int round = 0; round < 10; ++round) {
    MilpModel base(Direction::Minimize);
    std::vector<VarId> vars;
    for (int j = 0; j < 6; ++j) vars.push_back(base.add_variable(0.0, 2.0, false));
    std::vector<Constraint> rows;
    for (int i = 0; i < 7; ++i) {
      LinExpr terms;
      for (int j = 0; j < 6; ++j)
        if (rng.unit() < 0.6) terms.push_back({vars[static_cast<size_t>(j)], rng.uniform(-3, 3)});
      rows.push_back({terms, Sense::Le, rng.uniform(1.0, 5.0)});
    }
    LinExpr obj;
    for (int j = 0; j < 6; ++j) obj.push_back({vars[static_cast<size_t>(j)], rng.uniform(-3, 3)});

    MilpModel forward(Direction::Minimize);
    MilpModel backward(Direction::Minimize);
    for (int j = 0; j < 6; ++j) {
      forward.add_variable(0.0, 2.0, false);
      backward.add_variable(0.0, 2.0, false);
    }
    for (const auto& row : rows) forward.add_constraint(row.terms, row.sense, row.rhs);
    for (auto it = rows.rbegin(); it != rows.rend(); ++it)
      backward.add_constraint(it->terms, it->sense, it->rhs);
    forward.set_objective(obj);
    backward.set_objective(obj);

    const MipSolution a = solve_lp(forward);
    const MipSolution b = solve_lp(backward);
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(b.status == SolveStatus::Optimal);
    CHECK(std::abs(a.objective - b.objective) <= 1e-7 * (1.0 + std::abs(a.objective)));
  }
}

TEST_CASE("mip: knapsack toy") {
  MilpModel model(Direction::Maximize);
  const VarId a = model.add_variable(0.0, 1.0, true, "a");
  const VarId b = model.add_variable(0.0, 1.0, true, "b");
  model.add_constraint({{a, 1.0}, {b, 1.0}}, Sense::Le, 1.0);
  model.set_objective({{a, 3.0}, {b, 2.0}});
  const MipSolution sol = solve_mip(model);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(3.0));
  CHECK(sol.value(a) == doctest::Approx(1.0));
  CHECK(sol.value(b) == doctest::Approx(0.0));
}

TEST_CASE("mip: infeasible binary model") {
  MilpModel model(Direction::Minimize);
  const VarId a = model.add_variable(0.0, 1.0, true);
  const VarId b = model.add_variable(0.0, 1.0, true);
  model.add_constraint({{a, 1.0}, {b, 1.0}}, Sense::Ge, 3.0);
  model.set_objective({{a, 1.0}});
  CHECK(solve_mip(model).status == SolveStatus::Infeasible);
}

TEST_CASE("mip: integer variables need finite bounds") {
  MilpModel model(Direction::Minimize);
  model.add_variable(0.0, kInfinity, true);
  model.set_objective({{0, 1.0}});
  CHECK_THROWS_AS(solve_mip(model), ModelError);
}

TEST_CASE("mip: random binary models match exhaustive enumeration") {
  Rng rng(2024);
  int solved = 0;
  for (int round = 0; round < 60; ++round) {
    const int nv = 3 + static_cast<int>(rng.below(8));  // up to 10 vars in the unit suite
    const int nr = 2 + static_cast<int>(rng.below(6));
    const MilpModel model = testing::random_binary_model(rng, nv, nr);
    const auto expected = testing::enumerate_binary_model(model);
    MipParams params;
    params.gap_tol = 0.0;
    const MipSolution sol = solve_mip(model, params);
    if (!expected) {
      CHECK(sol.status == SolveStatus::Infeasible);
    } else {
      REQUIRE(sol.status == SolveStatus::Optimal);
      CHECK(sol.objective == doctest::Approx(*expected).epsilon(1e-9));
      ++solved;
    }
  }
  CHECK(solved > 10);  // the generator must not be degenerate
}

TEST_CASE("mip: identical inputs give identical runs") {
  Rng rng(7);
  const MilpModel model = testing::random_binary_model(rng, 9, 5);
  const MipSolution a = solve_mip(model);
  const MipSolution b = solve_mip(model);
  CHECK(a.status == b.status);
  CHECK(a.node_count == b.node_count);
  CHECK(a.values == b.values);
}

TEST_CASE("mip: node limit reports incumbent and bound") {
  Rng rng(11);
  const MilpModel model = testing::random_binary_model(rng, 12, 6);
  MipParams params;
  params.node_limit = 1;
  const MipSolution sol = solve_mip(model, params);
  if (sol.status != SolveStatus::Infeasible) {
    CHECK(sol.status == SolveStatus::IterationLimit);
    CHECK(sol.node_count <= 1);
  }
}

TEST_CASE("mccormick: forced products") {
  MilpModel model(Direction::Minimize);
  const VarId xi = model.add_variable(0.0, 1.0, true);
  const VarId xj = model.add_variable(0.0, 1.0, true);
  auto aux = linearize_binary_products(model, {{xi, xj}});
  const VarId w = aux.at({xi, xj});

  SUBCASE("both one forces w = 1") {
    model.set_variable_bounds(xi, 1.0, 1.0);
    model.set_variable_bounds(xj, 1.0, 1.0);
    model.set_objective({{w, 1.0}});
    const MipSolution lo = solve_mip(model);
    REQUIRE(lo.status == SolveStatus::Optimal);
    CHECK(lo.value(w) == doctest::Approx(1.0));
  }
  SUBCASE("mixed forces w = 0") {
    model.set_variable_bounds(xi, 1.0, 1.0);
    model.set_variable_bounds(xj, 0.0, 0.0);
    MilpModel minw = model;
    minw.set_objective({{w, 1.0}});
    const MipSolution lo = solve_mip(minw);
    REQUIRE(lo.status == SolveStatus::Optimal);
    CHECK(lo.value(w) == doctest::Approx(0.0));
    // maximize w under the same rows to show it is pinned from above too
    MilpModel maxw(Direction::Maximize);
    for (const auto& v : model.variables()) maxw.add_variable(v.lower, v.upper, v.integral);
    for (const auto& row : model.constraints()) maxw.add_constraint(row.terms, row.sense, row.rhs);
    maxw.set_objective({{w, 1.0}});
    const MipSolution hi = solve_mip(maxw);
    REQUIRE(hi.status == SolveStatus::Optimal);
    CHECK(hi.value(w) == doctest::Approx(0.0));
  }
  SUBCASE("non-binary input rejected") {
    MilpModel bad(Direction::Minimize);
    const VarId p = bad.add_variable(0.0, 2.0, true);
    const VarId q = bad.add_variable(0.0, 1.0, true);
    CHECK_THROWS_AS(linearize_binary_products(bad, {{p, q}}), ModelError);
  }
}

TEST_CASE("mccormick: random binary quadratics match brute force") {
  Rng rng(31);
  for (int round = 0; round < 8; ++round) {
    const int n = 6;
    Eigen::MatrixXd q(n, n);
    Eigen::VectorXd h(n);
    for (int i = 0; i < n; ++i) {
      h(i) = rng.uniform(-2.0, 2.0);
      for (int j = 0; j < n; ++j) q(i, j) = rng.uniform(-2.0, 2.0);
    }
    // brute force over all binary points
    double expected = kInfinity;
    for (int mask = 0; mask < (1 << n); ++mask) {
      Eigen::VectorXd x(n);
      for (int j = 0; j < n; ++j) x(j) = (mask >> j) & 1;
      expected = std::min(expected, x.dot(q * x) + h.dot(x));
    }
    // linearized model: diagonal terms use x_i^2 = x_i, products use McCormick
    MilpModel model(Direction::Minimize);
    std::vector<VarId> xs;
    for (int j = 0; j < n; ++j) xs.push_back(model.add_variable(0.0, 1.0, true));
    std::vector<std::pair<VarId, VarId>> pairs;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        pairs.push_back({xs[static_cast<size_t>(i)], xs[static_cast<size_t>(j)]});
    auto aux = linearize_binary_products(model, pairs);
    LinExpr obj;
    for (int i = 0; i < n; ++i) obj.push_back({xs[static_cast<size_t>(i)], q(i, i) + h(i)});
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        obj.push_back({aux.at({xs[static_cast<size_t>(i)], xs[static_cast<size_t>(j)]}),
                       q(i, j) + q(j, i)});
    model.set_objective(std::move(obj));
    MipParams params;
    params.gap_tol = 0.0;
    const MipSolution sol = solve_mip(model, params);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("lp format dump is writable") {
  MilpModel model(Direction::Maximize);
  const VarId a = model.add_variable(0.0, 1.0, true, "a");
  const VarId b = model.add_variable(0.0, 2.5, false);
  model.add_constraint({{a, 1.0}, {b, -2.0}}, Sense::Ge, -1.0);
  model.set_objective({{a, 3.0}, {b, 2.0}}, 1.0);
  std::ostringstream out;
  write_lp_format(model, out);
  const std::string text = out.str();
  CHECK(text.find("maximize") != std::string::npos);
  CHECK(text.find("c0:") != std::string::npos);
  CHECK(text.find("integer") != std::string::npos);
  CHECK(text.find("end") != std::string::npos);
}

TEST_SUITE_END();
