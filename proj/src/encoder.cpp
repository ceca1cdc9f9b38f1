#include "nbp/encoder.hpp"

#include <cmath>

#include "nbp/errors.hpp"

namespace nbp {

NeuronBounds activation_bounds(const ValueNet& net) {
  NeuronBounds bounds;
  Eigen::VectorXd in_lo = Eigen::VectorXd::Zero(net.input_dim);
  Eigen::VectorXd in_hi = Eigen::VectorXd::Ones(net.input_dim);
  Eigen::VectorXd z_lo, z_hi;  // post-activation interval of the previous layer

  auto interval_dot = [](const Eigen::MatrixXd& w, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi, Eigen::VectorXd& out_lo,
                         Eigen::VectorXd& out_hi) {
    out_lo = w.cwiseMin(0.0) * hi + w.cwiseMax(0.0) * lo;
    out_hi = w.cwiseMin(0.0) * lo + w.cwiseMax(0.0) * hi;
  };

  for (size_t k = 0; k < net.hidden.size(); ++k) {
    const NetLayer& layer = net.hidden[k];
    Eigen::VectorXd lo, hi;
    if (k == 0) {
      interval_dot(layer.W, in_lo, in_hi, lo, hi);
    } else {
      interval_dot(layer.W, z_lo, z_hi, lo, hi);
      Eigen::VectorXd dlo, dhi;
      interval_dot(layer.D, in_lo, in_hi, dlo, dhi);
      lo += dlo;
      hi += dhi;
    }
    lo += layer.b;
    hi += layer.b;
    bounds.lower.push_back(lo);
    bounds.upper.push_back(hi);
    z_lo = lo.cwiseMax(0.0);
    z_hi = hi.cwiseMax(0.0);
  }
  double out_lo = net.b_out, out_hi = net.b_out;
  for (Eigen::Index j = 0; j < net.d_out.size(); ++j) {
    out_lo += std::min(0.0, net.d_out(j));
    out_hi += std::max(0.0, net.d_out(j));
  }
  if (!net.hidden.empty()) {
    for (Eigen::Index j = 0; j < net.w_out.size(); ++j) {
      const double w = net.w_out(j);
      out_lo += w >= 0.0 ? w * z_lo(j) : w * z_hi(j);
      out_hi += w >= 0.0 ? w * z_hi(j) : w * z_lo(j);
    }
  }
  bounds.out_lower = out_lo;
  bounds.out_upper = out_hi;
  return bounds;
}

EmbeddedNet embed_bigm(MilpModel& model, const ValueNet& net, const std::vector<VarId>& x_vars) {
  if (static_cast<int>(x_vars.size()) != net.tender_dim)
    throw ModelError("embed_bigm: x_vars must match the net's tender dimension");
  for (VarId v : x_vars) {
    const Variable& var = model.variable(v);
    if (!var.integral || var.lower < 0.0 || var.upper > 1.0)
      throw ModelError("embed_bigm: tender variables must be binary");
  }
  const NeuronBounds bounds = activation_bounds(net);

  EmbeddedNet emb;
  emb.xt = x_vars;
  if (net.kind == NetKind::ISNN) {
    for (int i = 0; i < net.tender_dim; ++i) {
      const VarId comp = model.add_variable(0.0, 1.0, false, "xc" + std::to_string(i));
      model.add_constraint({{x_vars[static_cast<size_t>(i)], 1.0}, {comp, 1.0}}, Sense::Eq, 1.0);
      emb.xt.push_back(comp);
    }
  }

  std::vector<VarId> prev;  // post-activations of the previous layer
  for (size_t k = 0; k < net.hidden.size(); ++k) {
    const NetLayer& layer = net.hidden[k];
    const int width = static_cast<int>(layer.b.size());
    std::vector<VarId> zpre(static_cast<size_t>(width)), zpost(static_cast<size_t>(width)),
        gate(static_cast<size_t>(width));
    for (int i = 0; i < width; ++i) {
      const double lo = bounds.lower[k](i);
      const double hi = bounds.upper[k](i);
      const double big_m = bounds.big_m(static_cast<int>(k), i);
      const std::string tag = std::to_string(k + 1) + "_" + std::to_string(i);
      zpre[static_cast<size_t>(i)] = model.add_variable(-kInfinity, kInfinity, false, "zp" + tag);
      zpost[static_cast<size_t>(i)] =
          model.add_variable(0.0, std::max(0.0, hi), false, "z" + tag);
      // neurons whose sign is decided by the interval need no live gate
      double glo = 0.0, ghi = 1.0;
      if (hi <= 0.0) ghi = 0.0;
      if (lo >= 0.0) glo = 1.0;
      gate[static_cast<size_t>(i)] = model.add_variable(glo, ghi, true, "g" + tag);

      // z' = W z_prev + b + D x~
      LinExpr def{{zpre[static_cast<size_t>(i)], 1.0}};
      if (k == 0) {
        for (int j = 0; j < net.input_dim; ++j)
          if (layer.W(i, j) != 0.0)
            def.push_back({emb.xt[static_cast<size_t>(j)], -layer.W(i, j)});
      } else {
        for (size_t j = 0; j < prev.size(); ++j)
          if (layer.W(i, static_cast<Eigen::Index>(j)) != 0.0)
            def.push_back({prev[j], -layer.W(i, static_cast<Eigen::Index>(j))});
        for (int j = 0; j < net.input_dim; ++j)
          if (layer.D(i, j) != 0.0)
            def.push_back({emb.xt[static_cast<size_t>(j)], -layer.D(i, j)});
      }
      model.add_constraint(std::move(def), Sense::Eq, layer.b(i));
      // z <= M g;  z >= z';  z <= z' + M (1 - g)
      model.add_constraint(
          {{zpost[static_cast<size_t>(i)], 1.0}, {gate[static_cast<size_t>(i)], -big_m}},
          Sense::Le, 0.0);
      model.add_constraint({{zpost[static_cast<size_t>(i)], 1.0}, {zpre[static_cast<size_t>(i)], -1.0}},
                           Sense::Ge, 0.0);
      model.add_constraint({{zpost[static_cast<size_t>(i)], 1.0},
                            {zpre[static_cast<size_t>(i)], -1.0},
                            {gate[static_cast<size_t>(i)], big_m}},
                           Sense::Le, big_m);
    }
    emb.z_pre.push_back(zpre);
    emb.z_post.push_back(zpost);
    emb.gate.push_back(gate);
    prev = std::move(zpost);
  }

  // phi = scale * (w_out z_K + b_out + d_out x~) + shift, as one equality row
  const double scale = net.label_affine.scale;
  emb.phi_var = model.add_variable(-kInfinity, kInfinity, false, "phi");
  LinExpr out{{emb.phi_var, 1.0}};
  for (int j = 0; j < net.input_dim; ++j)
    if (net.d_out(j) != 0.0) out.push_back({emb.xt[static_cast<size_t>(j)], -scale * net.d_out(j)});
  if (!prev.empty())
    for (size_t j = 0; j < prev.size(); ++j)
      if (net.w_out(static_cast<Eigen::Index>(j)) != 0.0)
        out.push_back({prev[j], -scale * net.w_out(static_cast<Eigen::Index>(j))});
  model.add_constraint(std::move(out), Sense::Eq, scale * net.b_out + net.label_affine.shift);
  return emb;
}

namespace {

Eigen::VectorXd indicator(std::uint64_t mask, int dim) {
  Eigen::VectorXd xt = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < dim; ++i)
    if ((mask >> i) & 1ULL) xt(i) = 1.0;
  return xt;
}

void require_isnn(const ValueNet& net, const char* op) {
  if (net.kind != NetKind::ISNN)
    throw ModelError(std::string(op) + " is defined for ISNN value functions only");
  if (net.input_dim > 62) throw GuardError(std::string(op) + ": input dimension over mask guard");
}

}  // namespace

double set_function_eval(const ValueNet& net, std::uint64_t s_mask) {
  require_isnn(net, "set_function_eval");
  return forward_raw_input(net, indicator(s_mask, net.input_dim));
}

double set_function_rho(const ValueNet& net, std::uint64_t s_mask, int k) {
  require_isnn(net, "set_function_rho");
  if ((s_mask >> k) & 1ULL) throw ModelError("set_function_rho requires k not in S");
  return set_function_eval(net, s_mask | (1ULL << k)) - set_function_eval(net, s_mask);
}

std::optional<SupermodularCut> separate_cut(const ValueNet& net, const Eigen::VectorXd& x_hat,
                                            double lhs_value) {
  require_isnn(net, "separate_cut");
  const int dim = net.input_dim;
  const int n = net.tender_dim;
  if (x_hat.size() != n) throw ModelError("separate_cut: tender has wrong dimension");

  std::uint64_t base = 0;
  for (int i = 0; i < n; ++i) {
    if (x_hat(i) > 0.5) base |= 1ULL << i;         // x_i = 1
    else base |= 1ULL << (n + i);                  // complement half
  }
  const double scale = net.label_affine.scale;
  const double shift = net.label_affine.shift;

  SupermodularCut cut;
  cut.base_mask = base;
  cut.phi_s = set_function_eval(net, base);
  cut.rho_in = Eigen::VectorXd::Zero(dim);
  cut.rho_out = Eigen::VectorXd::Zero(dim);
  cut.xt_coefs = Eigen::VectorXd::Zero(dim);
  const std::uint64_t full = dim == 62 ? ~0ULL >> 2 : (1ULL << dim) - 1;
  double rhs0_raw = cut.phi_s;
  for (int k = 0; k < dim; ++k) {
    if ((base >> k) & 1ULL) {
      const double r = set_function_rho(net, full & ~(1ULL << k), k);
      cut.rho_in(k) = r;
      rhs0_raw -= r;
      cut.xt_coefs(k) = scale * r;
    } else {
      const double r = set_function_rho(net, base, k);
      cut.rho_out(k) = r;
      cut.xt_coefs(k) = scale * r;
    }
  }
  cut.rhs0 = shift + scale * rhs0_raw;

  // at the base point the inequality is tight at forward(net, x)
  cut.violation = (shift + scale * cut.phi_s) - lhs_value;
  if (cut.violation <= 1e-6) return std::nullopt;
  return cut;
}

LazyCutResult lazy_cut_solve(MilpModel model, const ValueNet& net,
                             const std::vector<VarId>& x_vars, const LinExpr& g_expr,
                             const MipParams& params) {
  require_isnn(net, "lazy_cut_solve");
  const int n = net.tender_dim;
  if (static_cast<int>(x_vars.size()) != n)
    throw ModelError("lazy_cut_solve: x_vars must match the net's tender dimension");

  // x~ variables: the tender itself plus its linked complement
  std::vector<VarId> xt = x_vars;
  for (int i = 0; i < n; ++i) {
    const VarId comp = model.add_variable(0.0, 1.0, false, "xc" + std::to_string(i));
    model.add_constraint({{x_vars[static_cast<size_t>(i)], 1.0}, {comp, 1.0}}, Sense::Eq, 1.0);
    xt.push_back(comp);
  }

  LazyCutResult result;
  constexpr int kMaxRounds = 200;
  while (true) {
    MipSolution sol = solve_mip(model, params);
    if (sol.status == SolveStatus::Infeasible || !sol.has_point) {
      result.solution = std::move(sol);
      return result;
    }
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = std::round(sol.value(x_vars[static_cast<size_t>(i)]));
    double lhs = 0.0;
    for (const auto& [var, coef] : g_expr) lhs += coef * sol.value(var);
    const auto cut = separate_cut(net, x, lhs);
    if (!cut) {
      result.solution = std::move(sol);
      return result;
    }
    if (result.cut_rounds >= kMaxRounds) {
      // could not certify g >= phi~ within the round budget
      sol.status = SolveStatus::IterationLimit;
      result.solution = std::move(sol);
      result.round_limit_hit = true;
      return result;
    }
    LinExpr row = g_expr;
    for (int k = 0; k < 2 * n; ++k)
      if (cut->xt_coefs(k) != 0.0) row.push_back({xt[static_cast<size_t>(k)], -cut->xt_coefs(k)});
    model.add_constraint(std::move(row), Sense::Ge, cut->rhs0);
    ++result.cut_rounds;
  }
}

}  // namespace nbp
