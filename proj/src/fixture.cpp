#include "nbp/fixture.hpp"

#include <cmath>

namespace nbp {

double fixture_y_upper(int x1, int x2) { return 1.0 + 2.0 * std::abs(x1 - x2); }

double fixture_phi(int x1, int x2) {
  const double y_star = std::min(fixture_y_upper(x1, x2), 2.0);
  return -(y_star - 2.0) * (y_star - 2.0);
}

IllustrativeFixture illustrative_fixture() {
  IllustrativeFixture fx;
  for (int mask = 0; mask < 4; ++mask)
    fx.phi_table[static_cast<size_t>(mask)] = fixture_phi(mask & 1, (mask >> 1) & 1);
  fx.known_optimum_x = {0, 1};
  fx.known_optimum_f = -5.0;  // 2*0 + 1 - 3*2

  // phi_G(x) = x1 + x2 - 1 - 2 relu(x1 + x2 - 1)
  ValueNet& g = fx.gnn_closed_form;
  g.kind = NetKind::GNN;
  g.tender_dim = 2;
  g.input_dim = 2;
  NetLayer glayer;
  glayer.W = (Eigen::MatrixXd(1, 2) << 1.0, 1.0).finished();
  glayer.b = Eigen::VectorXd::Constant(1, -1.0);
  g.hidden.push_back(std::move(glayer));
  g.w_out = Eigen::RowVectorXd::Constant(1, -2.0);
  g.b_out = -1.0;
  g.d_out = (Eigen::RowVectorXd(2) << 1.0, 1.0).finished();

  // phi_IS(x) = x1 + (1-x2) - 2 + 2 relu((1-x1) + x2 - 1), xt = [x; 1-x]
  ValueNet& s = fx.isnn_closed_form;
  s.kind = NetKind::ISNN;
  s.tender_dim = 2;
  s.input_dim = 4;
  NetLayer slayer;
  slayer.W = (Eigen::MatrixXd(1, 4) << 0.0, 1.0, 1.0, 0.0).finished();
  slayer.b = Eigen::VectorXd::Constant(1, -1.0);
  s.hidden.push_back(std::move(slayer));
  s.w_out = Eigen::RowVectorXd::Constant(1, 2.0);
  s.b_out = -2.0;
  s.d_out = (Eigen::RowVectorXd(4) << 1.0, 0.0, 0.0, 1.0).finished();
  return fx;
}

FixtureSolution fixture_pipeline_solve(const std::function<double(int, int)>& vbar) {
  FixtureSolution best;
  for (int mask = 0; mask < 4; ++mask) {
    const int x1 = mask & 1;
    const int x2 = (mask >> 1) & 1;
    const double v = vbar(x1, x2);
    // -(y-2)^2 >= v needs v <= 0 and |y-2| <= sqrt(-v)
    if (v > 0.0) continue;
    const double radius = std::sqrt(-v);
    const double y_lo = std::max(0.0, 2.0 - radius);
    const double y_hi = std::min(fixture_y_upper(x1, x2), 2.0 + radius);
    if (y_lo > y_hi + 1e-12) continue;
    const double y = y_hi;  // objective -3y prefers the largest feasible y
    const double f = 2.0 * x1 + x2 - 3.0 * y;
    if (!best.feasible || f < best.f) {
      best.feasible = true;
      best.x = {x1, x2};
      best.y = y;
      best.f = f;
    }
  }
  return best;
}

}  // namespace nbp
