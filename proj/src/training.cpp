#include <cmath>

#include "nbp/errors.hpp"
#include "nbp/valuenet.hpp"

namespace nbp {

namespace {

// Adam moments for one parameter block.
struct Moments {
  Eigen::MatrixXd m, v;
  void init(Eigen::Index rows, Eigen::Index cols) {
    m = Eigen::MatrixXd::Zero(rows, cols);
    v = Eigen::MatrixXd::Zero(rows, cols);
  }
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

void adam_update(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad, Moments& mom,
                 double lr, double bias1, double bias2) {
  mom.m = kBeta1 * mom.m + (1.0 - kBeta1) * grad;
  mom.v = kBeta2 * mom.v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
  const Eigen::ArrayXXd mhat = mom.m.array() / bias1;
  const Eigen::ArrayXXd vhat = mom.v.array() / bias2;
  param.array() -= lr * mhat / (vhat.sqrt() + kEps);
}

}  // namespace

TrainResult train(const Architecture& arch, NetKind kind, const SamplePool& pool,
                  const TrainHyper& hyper) {
  const long count = pool.size();
  if (count < 2) throw ModelError("train requires at least 2 samples to standardize labels");
  const int n = static_cast<int>(pool.records.front().x.size());

  ValueNet net = init_net(arch, kind, n, hyper.seed);
  const int layers = net.num_hidden_layers();

  // standardized labels keep Adam step sizes in a sane range
  Eigen::VectorXd labels(count);
  for (long i = 0; i < count; ++i) labels(i) = pool.records[static_cast<size_t>(i)].phi;
  const double mean = labels.mean();
  double sd = std::sqrt((labels.array() - mean).square().mean());
  if (sd < 1e-12) sd = 1.0;
  const Eigen::VectorXd targets = (labels.array() - mean) / sd;
  net.label_affine = {sd, mean};

  Eigen::MatrixXd inputs(net.input_dim, count);  // columns are samples
  for (long i = 0; i < count; ++i)
    inputs.col(i) = net_input(net, pool.records[static_cast<size_t>(i)].x);

  std::vector<Moments> mom_w(static_cast<size_t>(layers)), mom_b(static_cast<size_t>(layers)),
      mom_d(static_cast<size_t>(layers));
  for (int k = 0; k < layers; ++k) {
    const NetLayer& layer = net.hidden[static_cast<size_t>(k)];
    mom_w[static_cast<size_t>(k)].init(layer.W.rows(), layer.W.cols());
    mom_b[static_cast<size_t>(k)].init(layer.b.size(), 1);
    if (k > 0) mom_d[static_cast<size_t>(k)].init(layer.D.rows(), layer.D.cols());
  }
  Moments mom_wout, mom_bout, mom_dout;
  mom_wout.init(1, net.w_out.size());
  mom_bout.init(1, 1);
  mom_dout.init(1, net.d_out.size());

  const bool project = kind == NetKind::ISNN;
  std::vector<Eigen::MatrixXd> acts(static_cast<size_t>(layers));  // post-ReLU per layer
  double last_mse_std = 0.0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    // forward pass over the whole batch
    Eigen::MatrixXd z = inputs;
    for (int k = 0; k < layers; ++k) {
      NetLayer& layer = net.hidden[static_cast<size_t>(k)];
      Eigen::MatrixXd pre = layer.W * (k == 0 ? inputs : acts[static_cast<size_t>(k - 1)]);
      pre.colwise() += layer.b;
      if (k > 0) pre += layer.D * inputs;
      acts[static_cast<size_t>(k)] = pre.cwiseMax(0.0);
    }
    Eigen::RowVectorXd out = net.d_out * inputs;
    out.array() += net.b_out;
    if (layers > 0) out += net.w_out * acts[static_cast<size_t>(layers - 1)];

    const Eigen::RowVectorXd err = out - targets.transpose();
    last_mse_std = err.squaredNorm() / static_cast<double>(count);

    // backward pass
    const Eigen::RowVectorXd dout = 2.0 * err / static_cast<double>(count);
    const double lr = hyper.lr / (1.0 + hyper.decay * static_cast<double>(epoch));
    const double bias1 = 1.0 - std::pow(kBeta1, epoch + 1);
    const double bias2 = 1.0 - std::pow(kBeta2, epoch + 1);

    Eigen::MatrixXd grad_dout = dout * inputs.transpose();
    const double grad_bout = dout.sum();
    Eigen::MatrixXd gz;  // gradient wrt the activations of the top layer
    Eigen::MatrixXd grad_wout;
    if (layers > 0) {
      grad_wout = dout * acts[static_cast<size_t>(layers - 1)].transpose();
      gz = net.w_out.transpose() * dout;
    }
    // update output blocks
    {
      Eigen::Map<Eigen::MatrixXd> dmap(net.d_out.data(), 1, net.d_out.size());
      adam_update(dmap, grad_dout, mom_dout, lr, bias1, bias2);
      Eigen::MatrixXd bmat(1, 1);
      bmat(0, 0) = net.b_out;
      adam_update(bmat, Eigen::MatrixXd::Constant(1, 1, grad_bout), mom_bout, lr, bias1, bias2);
      net.b_out = bmat(0, 0);
      if (layers > 0 && !net.tied_hidden) {
        Eigen::Map<Eigen::MatrixXd> wmap(net.w_out.data(), 1, net.w_out.size());
        adam_update(wmap, grad_wout, mom_wout, lr, bias1, bias2);
        if (project) wmap = wmap.cwiseMax(0.0);
      }
    }
    for (int k = layers - 1; k >= 0; --k) {
      NetLayer& layer = net.hidden[static_cast<size_t>(k)];
      const Eigen::MatrixXd mask =
          (acts[static_cast<size_t>(k)].array() > 0.0).cast<double>().matrix();
      const Eigen::MatrixXd ga = gz.cwiseProduct(mask);
      const Eigen::MatrixXd& below = k == 0 ? inputs : acts[static_cast<size_t>(k - 1)];
      if (k > 0) gz = layer.W.transpose() * ga;  // propagate before W changes
      const Eigen::MatrixXd grad_w = ga * below.transpose();
      const Eigen::VectorXd grad_b = ga.rowwise().sum();
      if (!(net.tied_hidden && k > 0)) {
        adam_update(layer.W, grad_w, mom_w[static_cast<size_t>(k)], lr, bias1, bias2);
        if (project) layer.W = layer.W.cwiseMax(0.0);
      }
      {
        Eigen::Map<Eigen::MatrixXd> bmap(layer.b.data(), layer.b.size(), 1);
        adam_update(bmap, grad_b, mom_b[static_cast<size_t>(k)], lr, bias1, bias2);
      }
      if (k > 0) {
        const Eigen::MatrixXd grad_d = ga * inputs.transpose();
        adam_update(layer.D, grad_d, mom_d[static_cast<size_t>(k)], lr, bias1, bias2);
        if (project) layer.D = layer.D.cwiseMax(0.0);
      }
    }
  }

  TrainResult result;
  result.net = std::move(net);
  result.mse_standardized = last_mse_std;
  result.mse = last_mse_std * sd * sd;
  return result;
}

}  // namespace nbp
