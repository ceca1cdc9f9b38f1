#include <bit>
#include <cmath>
#include <string>

#include "nbp/errors.hpp"
#include "nbp/valuenet.hpp"

namespace nbp {

PhiTable table_from_pool(const SamplePool& pool, int n) {
  PhiTable table(static_cast<size_t>(1) << n);
  for (const auto& rec : pool.records) {
    std::uint64_t mask = 0;
    for (int i = 0; i < n; ++i)
      if (rec.x(i) > 0.5) mask |= 1ULL << i;
    table[mask] = rec.phi;
  }
  return table;
}

void fill_missing(PhiTable& table, double value) {
  for (auto& cell : table)
    if (!cell) cell = value;
}

namespace {

std::vector<double> complete_or_throw(const PhiTable& table, int n, const char* op) {
  if (table.size() != (static_cast<size_t>(1) << n))
    throw ModelError(std::string(op) + ": table must have 2^n entries");
  std::vector<double> values(table.size());
  std::string missing;
  int count = 0;
  for (size_t mask = 0; mask < table.size(); ++mask) {
    if (!table[mask]) {
      if (count < 8) missing += (missing.empty() ? "" : ", ") + std::to_string(mask);
      ++count;
    } else {
      values[mask] = *table[mask];
    }
  }
  if (count > 0)
    throw ModelError(std::string(op) + ": table is missing " + std::to_string(count) +
                     " point(s): masks " + missing + (count > 8 ? ", ..." : ""));
  return values;
}

}  // namespace

ValueNet exact_fit_gnn(const PhiTable& table, int n) {
  if (n < 1 || n > 12) throw GuardError("exact_fit_gnn supports 1 <= n <= 12");
  std::vector<double> coef = complete_or_throw(table, n, "exact_fit_gnn");
  // Moebius transform: coef[T] becomes the multilinear coefficient of
  // prod_{i in T} x_i interpolating the table
  const size_t total = coef.size();
  for (int i = 0; i < n; ++i)
    for (size_t mask = 0; mask < total; ++mask)
      if (mask & (1ULL << i)) coef[mask] -= coef[mask ^ (1ULL << i)];

  ValueNet net;
  net.kind = NetKind::GNN;
  net.tender_dim = n;
  net.input_dim = n;
  net.d_out = Eigen::RowVectorXd::Zero(n);
  net.b_out = coef[0];
  for (int i = 0; i < n; ++i) net.d_out(i) = coef[1ULL << i];

  // one neuron per monomial of degree >= 2: relu(sum_{i in T} x_i - (|T|-1))
  std::vector<size_t> monomials;
  for (size_t mask = 0; mask < total; ++mask)
    if (std::popcount(mask) >= 2) monomials.push_back(mask);
  const int width = static_cast<int>(monomials.size());
  if (width > 0) {
    NetLayer layer;
    layer.W = Eigen::MatrixXd::Zero(width, n);
    layer.b = Eigen::VectorXd::Zero(width);
    net.w_out = Eigen::RowVectorXd::Zero(width);
    for (int r = 0; r < width; ++r) {
      const size_t mask = monomials[static_cast<size_t>(r)];
      for (int i = 0; i < n; ++i)
        if (mask & (1ULL << i)) layer.W(r, i) = 1.0;
      layer.b(r) = -(static_cast<double>(std::popcount(mask)) - 1.0);
      net.w_out(r) = coef[mask];
    }
    net.hidden.push_back(std::move(layer));
  } else {
    net.w_out = Eigen::RowVectorXd(0);
  }
  return net;
}

ValueNet exact_fit_isnn(const PhiTable& table, int n) {
  if (n < 1 || n > 11) throw GuardError("exact_fit_isnn supports 1 <= n <= 11");
  const std::vector<double> values = complete_or_throw(table, n, "exact_fit_isnn");
  double min_value = values[0];
  for (double v : values) min_value = std::min(min_value, v);

  ValueNet net;
  net.kind = NetKind::ISNN;
  net.tender_dim = n;
  net.input_dim = 2 * n;
  const size_t total = values.size();
  NetLayer layer;
  layer.W = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total), 2 * n);
  layer.b = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(total),
                                      -(static_cast<double>(n) - 1.0));
  net.w_out = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(total));
  // neuron per lattice point z: fires exactly when [x; 1-x] matches [z; 1-z]
  for (size_t mask = 0; mask < total; ++mask) {
    for (int i = 0; i < n; ++i) {
      if (mask & (1ULL << i))
        layer.W(static_cast<Eigen::Index>(mask), i) = 1.0;
      else
        layer.W(static_cast<Eigen::Index>(mask), n + i) = 1.0;
    }
    net.w_out(static_cast<Eigen::Index>(mask)) = values[mask] - min_value;
  }
  net.hidden.push_back(std::move(layer));
  net.b_out = min_value;
  net.d_out = Eigen::RowVectorXd::Zero(2 * n);
  return net;
}

}  // namespace nbp
