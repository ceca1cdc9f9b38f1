#include "nbp/instance.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "nbp/errors.hpp"
#include "nbp/rng.hpp"

namespace nbp {

using nlohmann::json;

std::string to_string(LowerKind kind) {
  return kind == LowerKind::Continuous ? "Continuous" : "Integer";
}

LowerKind lower_kind_from_string(const std::string& name) {
  if (name == "Continuous") return LowerKind::Continuous;
  if (name == "Integer") return LowerKind::Integer;
  throw ParseError("lower_kind must be \"Continuous\" or \"Integer\", got \"" + name + "\"");
}

namespace {

Eigen::VectorXd draw_vector(Rng& rng, int size, double lo, double hi) {
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

Eigen::MatrixXd draw_matrix(Rng& rng, int rows, int cols, double lo, double hi) {
  Eigen::MatrixXd a(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) a(r, c) = rng.uniform(lo, hi);
  return a;
}

}  // namespace

BilevelInstance generate_instance(int n, int m, LowerKind kind, std::uint64_t seed) {
  if (n < 1 || m < 1) throw ModelError("generate_instance requires n >= 1 and m >= 1");
  const double delta = 200.0 / static_cast<double>(m + n);
  Rng rng(seed);

  BilevelInstance inst;
  inst.n = n;
  inst.m = m;
  inst.lower_kind = kind;
  inst.c = draw_vector(rng, n, -50.0, 50.0);
  inst.d2 = draw_vector(rng, m, -50.0, 50.0);
  inst.d1 = inst.d2;  // the families always tie the two objectives on y
  inst.A1 = draw_matrix(rng, n, n, -2.0 * delta, 2.0 * delta);
  inst.b1 = draw_vector(rng, n, 30.0, 130.0);
  inst.A2 = draw_matrix(rng, m, n, -10.0 * delta, 10.0 * delta);
  inst.B2 = draw_matrix(rng, m, m, -delta, delta);
  inst.b2 = draw_vector(rng, m, 10.0, 110.0);
  inst.y_upper = Eigen::VectorXd::Ones(m);
  return inst;
}

std::vector<std::string> validate_instance(const BilevelInstance& inst) {
  std::vector<std::string> issues;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) issues.push_back(msg);
  };
  check(inst.n >= 1, "n must be >= 1");
  check(inst.m >= 1, "m must be >= 1");
  check(inst.c.size() == inst.n, "c must have length n");
  check(inst.d1.size() == inst.m, "d1 must have length m");
  check(inst.d2.size() == inst.m, "d2 must have length m");
  check(inst.A1.rows() == inst.n && inst.A1.cols() == inst.n, "A1 must be n x n");
  check(inst.b1.size() == inst.n, "b1 must have length n");
  check(inst.A2.rows() == inst.m && inst.A2.cols() == inst.n, "A2 must be m x n");
  check(inst.B2.rows() == inst.m && inst.B2.cols() == inst.m, "B2 must be m x m");
  check(inst.b2.size() == inst.m, "b2 must have length m");
  check(inst.y_upper.size() == inst.m, "y_upper must have length m");
  if (inst.y_upper.size() == inst.m && (inst.y_upper.array() < 0.0).any())
    issues.push_back("y_upper must be nonnegative elementwise");
  return issues;
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json matrix_to_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

const json& require_field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) throw ParseError(std::string("instance file is missing field '") + name + "'");
  return *it;
}

Eigen::VectorXd vector_from_json(const json& doc, const char* name, Eigen::Index size) {
  const json& arr = require_field(doc, name);
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != size)
    throw ParseError(std::string("field '") + name + "' must be an array of length " +
                     std::to_string(size));
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    if (!arr[i].is_number()) throw ParseError(std::string("field '") + name + "' has a non-numeric entry");
    v(i) = arr[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& doc, const char* name, Eigen::Index rows,
                                 Eigen::Index cols) {
  const json& arr = require_field(doc, name);
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows)
    throw ParseError(std::string("field '") + name + "' must have " + std::to_string(rows) + " rows");
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = arr[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ParseError(std::string("field '") + name + "' row " + std::to_string(r) + " must have " +
                       std::to_string(cols) + " columns");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw ParseError(std::string("field '") + name + "' has a non-numeric entry");
      a(r, c) = row[c].get<double>();
    }
  }
  return a;
}

}  // namespace

void write_instance(const BilevelInstance& inst, std::ostream& out) {
  json doc;
  doc["n"] = inst.n;
  doc["m"] = inst.m;
  doc["lower_kind"] = to_string(inst.lower_kind);
  doc["c"] = vector_to_json(inst.c);
  doc["d1"] = vector_to_json(inst.d1);
  doc["d2"] = vector_to_json(inst.d2);
  doc["A1"] = matrix_to_json(inst.A1);
  doc["b1"] = vector_to_json(inst.b1);
  doc["A2"] = matrix_to_json(inst.A2);
  doc["B2"] = matrix_to_json(inst.B2);
  doc["b2"] = vector_to_json(inst.b2);
  doc["y_upper"] = vector_to_json(inst.y_upper);
  out << doc.dump(2) << "\n";
}

BilevelInstance read_instance(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("instance file is not valid JSON: ") + err.what());
  }
  BilevelInstance inst;
  const json& jn = require_field(doc, "n");
  const json& jm = require_field(doc, "m");
  if (!jn.is_number_integer() || !jm.is_number_integer())
    throw ParseError("fields 'n' and 'm' must be integers");
  inst.n = jn.get<int>();
  inst.m = jm.get<int>();
  if (inst.n < 1 || inst.m < 1) throw ParseError("fields 'n' and 'm' must be >= 1");
  inst.lower_kind = lower_kind_from_string(require_field(doc, "lower_kind").get<std::string>());
  inst.c = vector_from_json(doc, "c", inst.n);
  inst.d1 = vector_from_json(doc, "d1", inst.m);
  inst.d2 = vector_from_json(doc, "d2", inst.m);
  inst.A1 = matrix_from_json(doc, "A1", inst.n, inst.n);
  inst.b1 = vector_from_json(doc, "b1", inst.n);
  inst.A2 = matrix_from_json(doc, "A2", inst.m, inst.n);
  inst.B2 = matrix_from_json(doc, "B2", inst.m, inst.m);
  inst.b2 = vector_from_json(doc, "b2", inst.m);
  inst.y_upper = vector_from_json(doc, "y_upper", inst.m);
  auto issues = validate_instance(inst);
  if (!issues.empty()) throw ParseError("instance file violates invariants: " + issues.front());
  return inst;
}

void save_instance(const BilevelInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_instance(inst, out);
}

BilevelInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return read_instance(in);
}

}  // namespace nbp
