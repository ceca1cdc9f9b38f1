#include "nbp/valuenet.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "nbp/errors.hpp"
#include "nbp/rng.hpp"

namespace nbp {

using nlohmann::json;

std::string to_string(NetKind kind) { return kind == NetKind::GNN ? "GNN" : "ISNN"; }

NetKind net_kind_from_string(const std::string& name) {
  if (name == "GNN" || name == "gnn") return NetKind::GNN;
  if (name == "ISNN" || name == "isnn") return NetKind::ISNN;
  throw ParseError("unknown net kind \"" + name + "\"");
}

long ValueNet::num_neurons() const {
  long total = 0;
  for (const auto& layer : hidden) total += layer.b.size();
  return total;
}

Eigen::VectorXd net_input(const ValueNet& net, const Eigen::VectorXd& x) {
  if (x.size() != net.tender_dim) throw ModelError("tender has wrong dimension for this net");
  if (net.kind == NetKind::GNN) return x;
  Eigen::VectorXd xt(2 * net.tender_dim);
  xt.head(net.tender_dim) = x;
  xt.tail(net.tender_dim) = Eigen::VectorXd::Ones(net.tender_dim) - x;
  return xt;
}

double forward_raw_input(const ValueNet& net, const Eigen::VectorXd& xt) {
  if (xt.size() != net.input_dim) throw ModelError("input has wrong dimension for this net");
  Eigen::VectorXd z;
  for (size_t k = 0; k < net.hidden.size(); ++k) {
    const NetLayer& layer = net.hidden[k];
    Eigen::VectorXd pre = k == 0 ? Eigen::VectorXd(layer.W * xt) : Eigen::VectorXd(layer.W * z);
    pre += layer.b;
    if (k > 0) pre += layer.D * xt;
    z = pre.cwiseMax(0.0);
  }
  double out = net.b_out + net.d_out.dot(xt);
  if (!net.hidden.empty()) out += net.w_out.dot(z);
  return out;
}

double forward_raw(const ValueNet& net, const Eigen::VectorXd& x) {
  return forward_raw_input(net, net_input(net, x));
}

double forward(const ValueNet& net, const Eigen::VectorXd& x) {
  return net.label_affine.scale * forward_raw(net, x) + net.label_affine.shift;
}

bool isnn_sign_valid(const ValueNet& net) {
  if (net.kind != NetKind::ISNN) return false;
  for (size_t k = 0; k < net.hidden.size(); ++k) {
    if ((net.hidden[k].W.array() < 0.0).any()) return false;
    if (k > 0 && (net.hidden[k].D.array() < 0.0).any()) return false;
  }
  if (net.w_out.size() > 0 && (net.w_out.array() < 0.0).any()) return false;
  return true;  // d_out may carry any sign: a linear term is supermodular
}

namespace {

long isqrt_floor(long long v) {
  long long r = static_cast<long long>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return static_cast<long>(r);
}

int round_up_even(long v) {
  if (v <= 0) return 0;
  return static_cast<int>(v % 2 == 0 ? v : v + 1);
}

long gnn_param_count_even_split(int n_neurons, int n) {
  // two hidden layers of n_neurons/2 each plus passthrough everywhere
  const long s = n_neurons / 2;
  return s * s + s + static_cast<long>(n + 1) * (n_neurons + 1);
}

}  // namespace

Architecture size_gnn(long n_samples, int n) {
  if (n_samples < 1) throw ModelError("size_gnn requires n_samples >= 1");
  const long long t = static_cast<long long>(2 * n + 2) * (2 * n + 2) + 4LL * n_samples + 1;
  const long u = isqrt_floor(t);
  const long ceil_sqrt = static_cast<long long>(u) * u == t ? u : u + 1;
  const long bound = ceil_sqrt - (2L * n + 3);
  const int n_neurons = round_up_even(bound);
  Architecture arch;
  arch.n_neurons = n_neurons;
  if (n_neurons > 0) arch.widths = {n_neurons / 2, n_neurons / 2};
  arch.n_params = gnn_param_count_even_split(n_neurons, n);
  return arch;
}

Architecture size_isnn(long n_samples, int n) {
  if (n_samples < 1) throw ModelError("size_isnn requires n_samples >= 1");
  const long denom = 2L * n + 1;
  const long bound = (n_samples + denom - 1) / denom - 1;  // ceil(N_s/(2n+1)) - 1
  const int n_neurons = round_up_even(bound);
  Architecture arch;
  arch.n_neurons = n_neurons;
  if (n_neurons > 0) arch.widths = {n_neurons / 2, n_neurons / 2};
  arch.n_params = (n_neurons + 1) * denom;
  return arch;
}

long count_trainable_parameters(const ValueNet& net) {
  long total = 0;
  const int klast = net.num_hidden_layers();
  for (int k = 0; k < klast; ++k) {
    const NetLayer& layer = net.hidden[static_cast<size_t>(k)];
    total += layer.b.size();
    total += layer.D.size();
    if (!(net.tied_hidden && k > 0)) total += layer.W.size();
  }
  total += 1 + net.d_out.size();  // b_out, d_out
  if (!net.tied_hidden) total += net.w_out.size();
  return total;
}

ValueNet init_net(const Architecture& arch, NetKind kind, int n, std::uint64_t seed) {
  Rng rng(seed);
  ValueNet net;
  net.kind = kind;
  net.tender_dim = n;
  net.input_dim = kind == NetKind::GNN ? n : 2 * n;
  net.tied_hidden = kind == NetKind::ISNN;

  auto draw_matrix = [&](int rows, int cols, bool nonneg) {
    Eigen::MatrixXd w(rows, cols);
    const double r = cols > 0 ? 1.0 / std::sqrt(static_cast<double>(cols)) : 0.0;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        const double v = rng.uniform(-r, r);
        w(i, j) = nonneg ? std::abs(v) : v;
      }
    return w;
  };

  int prev = net.input_dim;
  for (size_t k = 0; k < arch.widths.size(); ++k) {
    const int width = arch.widths[k];
    NetLayer layer;
    if (net.tied_hidden && k > 0)
      layer.W = Eigen::MatrixXd::Ones(width, prev);
    else
      layer.W = draw_matrix(width, prev, kind == NetKind::ISNN);
    layer.b = Eigen::VectorXd::Zero(width);
    if (k > 0) layer.D = draw_matrix(width, net.input_dim, kind == NetKind::ISNN);
    net.hidden.push_back(std::move(layer));
    prev = width;
  }
  const int last = arch.widths.empty() ? 0 : arch.widths.back();
  if (net.tied_hidden)
    net.w_out = Eigen::RowVectorXd::Ones(last);
  else
    net.w_out = draw_matrix(1, last, kind == NetKind::ISNN).row(0);
  net.b_out = 0.0;
  net.d_out = draw_matrix(1, net.input_dim, false).row(0);
  return net;
}

std::optional<SupermodularWitness> check_supermodular(const ValueNet& net) {
  if (net.input_dim > 14)
    throw GuardError("check_supermodular enumerates the lattice; input_dim <= 14 required");
  const std::uint64_t total = 1ULL << net.input_dim;
  std::vector<double> value(total);
  Eigen::VectorXd xt(net.input_dim);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (int i = 0; i < net.input_dim; ++i) xt(i) = (mask >> i) & 1ULL ? 1.0 : 0.0;
    value[mask] = forward_raw_input(net, xt);
  }
  for (std::uint64_t a = 0; a < total; ++a)
    for (std::uint64_t b = a + 1; b < total; ++b) {
      const std::uint64_t meet = a & b;
      if (meet == a || meet == b) continue;  // comparable pair: identity
      const std::uint64_t join = a | b;
      const double gap = value[a] + value[b] - value[join] - value[meet];
      if (gap > 1e-9)
        return SupermodularWitness{a, b, gap};
    }
  return std::nullopt;
}

double spectral_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  const Eigen::MatrixXd ata = a.transpose() * a;
  Eigen::VectorXd v(a.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 1e-3 * static_cast<double>(i);
  v.normalize();
  double lambda = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::VectorXd next = ata * v;
    const double norm = next.norm();
    if (norm < 1e-300) return 0.0;
    next /= norm;
    const double delta = (next - v).norm();
    v = next;
    lambda = norm;
    if (delta < 1e-8) break;
  }
  return std::sqrt(lambda);
}

double lipschitz_bound(const ValueNet& net) {
  const int layers = net.num_hidden_layers();
  std::vector<double> wnorm(static_cast<size_t>(layers) + 1);
  for (int k = 0; k < layers; ++k) wnorm[static_cast<size_t>(k)] = spectral_norm(net.hidden[static_cast<size_t>(k)].W);
  wnorm[static_cast<size_t>(layers)] = net.w_out.size() > 0 ? spectral_norm(net.w_out) : 0.0;

  double product = 1.0;
  for (double w : wnorm) product *= w;
  double total = product;
  // passthrough terms: D_k followed by the W-chain above it; d_out last
  for (int k = 1; k < layers; ++k) {
    double tail = 1.0;
    for (int l = k + 1; l <= layers; ++l) tail *= wnorm[static_cast<size_t>(l)];
    total += spectral_norm(net.hidden[static_cast<size_t>(k)].D) * tail;
  }
  total += spectral_norm(net.d_out);
  return total;
}

namespace {

json matrix_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& rows, Eigen::Index cols_hint = 0) {
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  if (nr == 0) return Eigen::MatrixXd(0, cols_hint);
  const Eigen::Index nc = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd a(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 0; c < nc; ++c) a(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
  return a;
}

json vector_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}

}  // namespace

void write_net(const ValueNet& net, std::ostream& out) {
  json doc;
  doc["kind"] = to_string(net.kind);
  doc["tender_dim"] = net.tender_dim;
  doc["input_dim"] = net.input_dim;
  doc["tied_hidden"] = net.tied_hidden;
  json layers = json::array();
  for (const auto& layer : net.hidden) {
    json l;
    l["W"] = matrix_json(layer.W);
    l["b"] = vector_json(layer.b);
    l["D"] = matrix_json(layer.D);
    layers.push_back(std::move(l));
  }
  doc["hidden"] = std::move(layers);
  doc["w_out"] = vector_json(net.w_out.transpose());
  doc["b_out"] = net.b_out;
  doc["d_out"] = vector_json(net.d_out.transpose());
  doc["label_affine"] = {{"scale", net.label_affine.scale}, {"shift", net.label_affine.shift}};
  out << doc.dump(2) << "\n";
}

ValueNet read_net(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("net file is not valid JSON: ") + err.what());
  }
  ValueNet net;
  net.kind = net_kind_from_string(doc.at("kind").get<std::string>());
  net.tender_dim = doc.at("tender_dim").get<int>();
  net.input_dim = doc.at("input_dim").get<int>();
  net.tied_hidden = doc.at("tied_hidden").get<bool>();
  for (const auto& l : doc.at("hidden")) {
    NetLayer layer;
    layer.W = matrix_from(l.at("W"));
    layer.b = vector_from(l.at("b"));
    layer.D = matrix_from(l.at("D"), net.input_dim);
    net.hidden.push_back(std::move(layer));
  }
  net.w_out = vector_from(doc.at("w_out")).transpose();
  net.b_out = doc.at("b_out").get<double>();
  net.d_out = vector_from(doc.at("d_out")).transpose();
  net.label_affine.scale = doc.at("label_affine").at("scale").get<double>();
  net.label_affine.shift = doc.at("label_affine").at("shift").get<double>();
  return net;
}

void save_net(const ValueNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_net(net, out);
}

ValueNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return read_net(in);
}

}  // namespace nbp
