#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nbp/sampler.hpp"

namespace nbp {

enum class NetKind { GNN, ISNN };

std::string to_string(NetKind kind);
NetKind net_kind_from_string(const std::string& name);

struct NetLayer {
  Eigen::MatrixXd W;  // width x prev (prev = input_dim for the first layer)
  Eigen::VectorXd b;  // width
  Eigen::MatrixXd D;  // width x input_dim; 0x0 on the first layer
};

/// Positive-scale map from raw network output to label units.
struct LabelAffine {
  double scale = 1.0;
  double shift = 0.0;
};

/// ReLU network with passthrough:
///   z_1 = relu(W_1 xt + b_1)
///   z_k = relu(W_k z_{k-1} + b_k + D_k xt),  k = 2..K
///   out = w_out z_K + b_out + d_out xt,
/// where xt = x for GNN and xt = [x; 1-x] for ISNN. `tied_hidden` marks the
/// trained ISNN form whose W_2..W_K and w_out are frozen all-ones (they do
/// not count as trainable parameters).
struct ValueNet {
  NetKind kind = NetKind::GNN;
  int tender_dim = 0;  // n
  int input_dim = 0;   // n (GNN) or 2n (ISNN)
  std::vector<NetLayer> hidden;
  Eigen::RowVectorXd w_out;  // 1 x width_K (zero-length when no hidden layer)
  double b_out = 0.0;
  Eigen::RowVectorXd d_out;  // 1 x input_dim
  LabelAffine label_affine;
  bool tied_hidden = false;

  int num_hidden_layers() const { return static_cast<int>(hidden.size()); }
  long num_neurons() const;
};

/// Input transform xt(x): identity for GNN, [x; 1-x] for ISNN.
Eigen::VectorXd net_input(const ValueNet& net, const Eigen::VectorXd& x);

/// Raw network output at an arbitrary xt in [0,1]^input_dim.
double forward_raw_input(const ValueNet& net, const Eigen::VectorXd& xt);
/// Raw output at the linked input xt(x).
double forward_raw(const ValueNet& net, const Eigen::VectorXd& x);
/// Label-unit output at x: label_affine applied to forward_raw.
double forward(const ValueNet& net, const Eigen::VectorXd& x);

/// Sign conditions that certify supermodularity of the raw output
/// (nonnegative W_1..W_{K+1} and D_2..D_K; d_out free).
bool isnn_sign_valid(const ValueNet& net);

struct Architecture {
  std::vector<int> widths;  // hidden layer widths (empty = passthrough only)
  long n_neurons = 0;       // sum of widths
  long n_params = 0;        // trainable parameter count
};

/// Smallest even neuron budget whose two-layer split can interpolate
/// n_samples labels, plus the implied parameter count.
Architecture size_gnn(long n_samples, int n);
Architecture size_isnn(long n_samples, int n);

long count_trainable_parameters(const ValueNet& net);

/// Fresh net for training: uniform [-r, r] weights with r = 1/sqrt(fan_in),
/// zero biases; ISNN gets |value| on sign-constrained blocks and all-ones
/// tied hidden/output weights.
ValueNet init_net(const Architecture& arch, NetKind kind, int n, std::uint64_t seed);

struct TrainHyper {
  int epochs = 1000;
  double lr = 1e-3;
  double decay = 1e-3;  // inverse-time decay: lr_t = lr / (1 + decay * t)
  std::uint64_t seed = 0;
};

struct TrainResult {
  ValueNet net;
  double mse = 0.0;               // final training MSE in label units
  double mse_standardized = 0.0;  // same in standardized label units
};

/// Full-batch Adam on mean squared error over z-score standardized labels.
/// ISNN projects the sign-constrained blocks onto the nonnegative orthant
/// after every step. Deterministic for a fixed seed.
TrainResult train(const Architecture& arch, NetKind kind, const SamplePool& pool,
                  const TrainHyper& hyper);

/// Complete truth tables over {0,1}^n, mask-indexed (bit i of the mask is
/// x_i). Missing entries are reported by mask in the thrown error.
using PhiTable = std::vector<std::optional<double>>;
PhiTable table_from_pool(const SamplePool& pool, int n);
void fill_missing(PhiTable& table, double value);

/// Single-hidden-layer interpolations that reproduce a complete table
/// exactly: the GNN form uses one neuron per monomial of degree >= 2 with
/// multilinear coefficients; the ISNN form uses one indicator neuron per
/// point with nonnegative coefficients only.
ValueNet exact_fit_gnn(const PhiTable& table, int n);   // n <= 12
ValueNet exact_fit_isnn(const PhiTable& table, int n);  // n <= 11

struct SupermodularWitness {
  std::uint64_t a = 0, b = 0;  // masks over the input lattice
  double gap = 0.0;            // f(a)+f(b) - f(a|b) - f(a&b) > 0
};

/// Exhaustive supermodularity check of the raw output over the full binary
/// input lattice; input_dim <= 14. nullopt means the function is
/// supermodular; otherwise the first violating pair is returned.
std::optional<SupermodularWitness> check_supermodular(const ValueNet& net);

/// Upper bound on the Lipschitz constant of the raw output,
///   prod_k |W_k|_2 + sum_k |D_k|_2 * prod_{l>k} |W_l|_2,
/// with spectral norms from power iteration (tol 1e-8, <= 10000 iters).
double lipschitz_bound(const ValueNet& net);

/// Spectral norm helper (exposed for tests).
double spectral_norm(const Eigen::MatrixXd& a);

void write_net(const ValueNet& net, std::ostream& out);
ValueNet read_net(std::istream& in);
void save_net(const ValueNet& net, const std::string& path);
ValueNet load_net(const std::string& path);

}  // namespace nbp
