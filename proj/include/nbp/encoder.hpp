#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nbp/milp.hpp"
#include "nbp/valuenet.hpp"

namespace nbp {

/// Sound pre-activation intervals per neuron over the binary input box,
/// from layer-by-layer interval arithmetic, and the big-M each row gets:
/// M = max(upper, -lower, 1).
struct NeuronBounds {
  std::vector<Eigen::VectorXd> lower, upper;  // one vector per hidden layer
  double out_lower = 0.0, out_upper = 0.0;    // raw output range

  double big_m(int layer, int neuron) const {
    const double lo = lower[static_cast<size_t>(layer)](neuron);
    const double hi = upper[static_cast<size_t>(layer)](neuron);
    return std::max({hi, -lo, 1.0});
  }
};

NeuronBounds activation_bounds(const ValueNet& net);

/// Handles created by embed_bigm.
struct EmbeddedNet {
  VarId phi_var = -1;                      // network output in label units
  std::vector<VarId> xt;                   // x~ variables (first n are x_vars)
  std::vector<std::vector<VarId>> z_pre;   // per layer: pre-activation vars
  std::vector<std::vector<VarId>> z_post;  // per layer: ReLU outputs
  std::vector<std::vector<VarId>> gate;    // per layer: on/off binaries
};

/// Exact mixed-integer encoding of the network on top of binary x_vars:
/// per neuron one binary gate and the four rows
///   z' = W z_prev + b + D x~,   z <= M gate,
///   z >= z',                    z <= z' + M (1 - gate),
/// with z >= 0 as a variable bound and per-neuron M from activation_bounds.
/// For ISNN inputs the complement half of x~ is linked by x_i + x~_{n+i} = 1.
/// For every binary assignment of x_vars the unique feasible phi_var equals
/// forward(net, x).
EmbeddedNet embed_bigm(MilpModel& model, const ValueNet& net, const std::vector<VarId>& x_vars);

/// Set function over the doubled ground set [2n]: phi(S) is the raw network
/// output at the indicator vector of S (ISNN only).
double set_function_eval(const ValueNet& net, std::uint64_t s_mask);
/// rho(S, k) = phi(Su{k}) - phi(S); requires k not in S.
double set_function_rho(const ValueNet& net, std::uint64_t s_mask, int k);

/// One linear inequality of the supermodular family, realized in label
/// units over (g, x~):
///   g >= rhs0 + sum_k xt_coefs[k] * x~_k.
/// At the base point (S = S(x~)) the right side equals forward(net, x).
struct SupermodularCut {
  std::uint64_t base_mask = 0;  // S as a mask over [2n]
  double phi_s = 0.0;           // raw phi(S)
  Eigen::VectorXd rho_in;       // rho([2n]\{k}, k) for k in S (0 elsewhere)
  Eigen::VectorXd rho_out;      // rho(S, k) for k not in S (0 elsewhere)
  double rhs0 = 0.0;
  Eigen::VectorXd xt_coefs;
  double violation = 0.0;
};

/// Closed-form separation at a binary tender: the most violated member of
/// the family is the one based at S(x~). Returns it iff violated by more
/// than 1e-6, i.e. iff lhs_value < forward(net, x) - 1e-6.
std::optional<SupermodularCut> separate_cut(const ValueNet& net, const Eigen::VectorXd& x_hat,
                                            double lhs_value);

struct LazyCutResult {
  MipSolution solution;
  int cut_rounds = 0;
  bool round_limit_hit = false;
};

/// Cutting-plane loop enforcing g >= phi~ lazily: solve, separate at the
/// incumbent tender, add the violated inequality, repeat (at most 200
/// rounds). Requires a supermodularity-certified ISNN.
LazyCutResult lazy_cut_solve(MilpModel model, const ValueNet& net,
                             const std::vector<VarId>& x_vars, const LinExpr& g_expr,
                             const MipParams& params = {});

}  // namespace nbp
