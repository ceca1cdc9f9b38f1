#include "nbp/sampler.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <thread>

#include "nbp/errors.hpp"
#include "nbp/milp.hpp"

namespace nbp {

using nlohmann::json;

std::string tender_key(const Eigen::VectorXd& x) {
  std::string key(static_cast<size_t>(x.size()), '0');
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x(i) > 0.5) key[static_cast<size_t>(i)] = '1';
  return key;
}

std::optional<LowerLevelValue> lower_level_value(const BilevelInstance& inst,
                                                 const Eigen::VectorXd& x) {
  if (x.size() != inst.n) throw ModelError("tender has wrong dimension");
  MilpModel model(Direction::Maximize);
  std::vector<VarId> y(static_cast<size_t>(inst.m));
  const bool integral = inst.lower_kind == LowerKind::Integer;
  for (int j = 0; j < inst.m; ++j)
    y[static_cast<size_t>(j)] = model.add_variable(0.0, inst.y_upper(j), integral);
  const Eigen::VectorXd rhs = inst.b2 - inst.A2 * x;
  for (int i = 0; i < inst.m; ++i) {
    LinExpr terms;
    for (int j = 0; j < inst.m; ++j)
      if (inst.B2(i, j) != 0.0) terms.push_back({y[static_cast<size_t>(j)], inst.B2(i, j)});
    model.add_constraint(std::move(terms), Sense::Le, rhs(i));
  }
  LinExpr obj;
  for (int j = 0; j < inst.m; ++j)
    if (inst.d2(j) != 0.0) obj.push_back({y[static_cast<size_t>(j)], inst.d2(j)});
  model.set_objective(std::move(obj));

  const MipSolution sol = integral ? solve_mip(model) : solve_lp(model);
  if (sol.status == SolveStatus::Infeasible) return std::nullopt;
  if (sol.status != SolveStatus::Optimal)
    throw ModelError("lower-level solve did not finish: " + to_string(sol.status));
  LowerLevelValue out;
  out.phi = sol.objective;
  out.y_star.resize(inst.m);
  for (int j = 0; j < inst.m; ++j) {
    double v = sol.value(y[static_cast<size_t>(j)]);
    if (integral) v = std::round(v);
    out.y_star(j) = v;
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> random_psd(int n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  Eigen::VectorXd h(n);
  for (int i = 0; i < n; ++i) h(i) = rng.uniform(-1.0, 1.0);
  // build the Gram matrix entry by entry so Q is bitwise symmetric
  Eigen::MatrixXd q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = a.col(i).dot(a.col(j));
      q(i, j) = v;
      q(j, i) = v;
    }
  return {q, h};
}

namespace {

struct SamplingModel {
  MilpModel model{Direction::Minimize};
  std::vector<VarId> x;
};

SamplingModel build_sampling_model(const BilevelInstance& inst, const Eigen::MatrixXd& q,
                                   const Eigen::VectorXd& h, double f_ub) {
  SamplingModel sm;
  MilpModel& model = sm.model;
  for (int j = 0; j < inst.n; ++j)
    sm.x.push_back(model.add_variable(0.0, 1.0, true, "x" + std::to_string(j)));
  std::vector<VarId> y(static_cast<size_t>(inst.m));
  const bool integral = inst.lower_kind == LowerKind::Integer;
  for (int j = 0; j < inst.m; ++j)
    y[static_cast<size_t>(j)] = model.add_variable(0.0, inst.y_upper(j), integral);

  for (int i = 0; i < inst.n; ++i) {
    LinExpr terms;
    for (int j = 0; j < inst.n; ++j)
      if (inst.A1(i, j) != 0.0) terms.push_back({sm.x[static_cast<size_t>(j)], inst.A1(i, j)});
    model.add_constraint(std::move(terms), Sense::Le, inst.b1(i));
  }
  for (int i = 0; i < inst.m; ++i) {
    LinExpr terms;
    for (int j = 0; j < inst.n; ++j)
      if (inst.A2(i, j) != 0.0) terms.push_back({sm.x[static_cast<size_t>(j)], inst.A2(i, j)});
    for (int j = 0; j < inst.m; ++j)
      if (inst.B2(i, j) != 0.0) terms.push_back({y[static_cast<size_t>(j)], inst.B2(i, j)});
    model.add_constraint(std::move(terms), Sense::Le, inst.b2(i));
  }
  if (std::isfinite(f_ub)) {
    LinExpr terms;
    for (int j = 0; j < inst.n; ++j)
      if (inst.c(j) != 0.0) terms.push_back({sm.x[static_cast<size_t>(j)], inst.c(j)});
    for (int j = 0; j < inst.m; ++j)
      if (inst.d1(j) != 0.0) terms.push_back({y[static_cast<size_t>(j)], inst.d1(j)});
    model.add_constraint(std::move(terms), Sense::Le, f_ub);
  }

  // x'Qx + h'x: diagonal terms collapse to x_i, off-diagonal products get
  // McCormick variables
  std::vector<std::pair<VarId, VarId>> pairs;
  for (int i = 0; i < inst.n; ++i)
    for (int j = i + 1; j < inst.n; ++j)
      pairs.push_back({sm.x[static_cast<size_t>(i)], sm.x[static_cast<size_t>(j)]});
  auto aux = linearize_binary_products(model, pairs);
  LinExpr obj;
  for (int i = 0; i < inst.n; ++i) obj.push_back({sm.x[static_cast<size_t>(i)], q(i, i) + h(i)});
  for (int i = 0; i < inst.n; ++i)
    for (int j = i + 1; j < inst.n; ++j)
      obj.push_back({aux.at({sm.x[static_cast<size_t>(i)], sm.x[static_cast<size_t>(j)]}),
                     q(i, j) + q(j, i)});
  model.set_objective(std::move(obj));
  return sm;
}

Eigen::VectorXd extract_tender(const MipSolution& sol, const std::vector<VarId>& xvars) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(xvars.size()));
  for (size_t j = 0; j < xvars.size(); ++j) x(static_cast<Eigen::Index>(j)) = std::round(sol.value(xvars[j]));
  return x;
}

double upper_objective(const BilevelInstance& inst, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y) {
  return inst.c.dot(x) + inst.d1.dot(y);
}

bool upper_feasible(const BilevelInstance& inst, const Eigen::VectorXd& x) {
  return ((inst.A1 * x - inst.b1).array() <= kFeasTol).all();
}

}  // namespace

SamplePool enhanced_sampling(const BilevelInstance& inst, long n_samples, long n_ub_updates,
                             double f_ub, std::uint64_t seed) {
  if (n_samples < 1) throw ModelError("enhanced_sampling requires n_samples >= 1");
  Rng rng(seed);
  SamplePool pool;
  pool.strategy = "enhanced";
  pool.seed = seed;
  pool.final_f_ub = f_ub;

  std::map<std::string, size_t> seen;
  long ub_updates = 0;
  long no_progress = 0;
  const long stall_limit = 50 * n_samples;
  MipParams params;
  params.gap_tol = 0.05;  // any feasible tender will do; no need to prove optimality
  params.node_limit = 5000;

  while (pool.size() < n_samples) {
    if (no_progress >= stall_limit) {
      pool.stalled = true;
      break;
    }
    auto [q, h] = random_psd(inst.n, rng);
    SamplingModel sm = build_sampling_model(inst, q, h, pool.final_f_ub);
    MipSolution sol = solve_mip(sm.model, params);
    if (sol.status == SolveStatus::Infeasible && std::isfinite(pool.final_f_ub)) {
      // the bound cut (f <= f_ub) can be too tight; retry this draw without it
      SamplingModel relaxed = build_sampling_model(inst, q, h, kInfinity);
      sol = solve_mip(relaxed.model, params);
      sm = std::move(relaxed);
    }
    if (sol.status == SolveStatus::Infeasible)
      throw InfeasibleError("enhanced_sampling: the joint feasible set of the instance is empty");
    if (!sol.has_point) {
      ++no_progress;
      continue;
    }
    const Eigen::VectorXd x = extract_tender(sol, sm.x);
    const std::string key = tender_key(x);
    size_t rec_index;
    auto it = seen.find(key);
    if (it == seen.end()) {
      const auto label = lower_level_value(inst, x);
      if (!label) {
        // the sampling model guarantees a feasible y at x; reaching here means
        // a tolerance-level disagreement, so just skip the draw
        ++no_progress;
        continue;
      }
      SampleRecord rec;
      rec.x = x;
      rec.phi = label->phi;
      rec.y_star = label->y_star;
      rec.upper_value = upper_objective(inst, x, label->y_star);
      pool.records.push_back(std::move(rec));
      rec_index = pool.records.size() - 1;
      seen.emplace(key, rec_index);
      no_progress = 0;
    } else {
      rec_index = it->second;
      ++no_progress;
    }
    const double fval = pool.records[rec_index].upper_value;
    if (ub_updates < n_ub_updates && fval < pool.final_f_ub) {
      pool.final_f_ub = fval;
      ++ub_updates;
    }
  }
  return pool;
}

SamplePool random_sampling(const BilevelInstance& inst, long n_samples, long attempt_limit,
                           std::uint64_t seed) {
  Rng rng(seed);
  SamplePool pool;
  pool.strategy = "random";
  pool.seed = seed;
  std::set<std::string> seen;
  for (long attempt = 0; attempt < attempt_limit && pool.size() < n_samples; ++attempt) {
    Eigen::VectorXd x(inst.n);
    for (int j = 0; j < inst.n; ++j) x(j) = rng.coin() ? 1.0 : 0.0;
    const std::string key = tender_key(x);
    if (seen.count(key)) continue;
    if (!upper_feasible(inst, x)) continue;
    const auto label = lower_level_value(inst, x);
    if (!label) continue;
    seen.insert(key);
    SampleRecord rec;
    rec.x = x;
    rec.phi = label->phi;
    rec.y_star = label->y_star;
    rec.upper_value = upper_objective(inst, x, label->y_star);
    pool.final_f_ub = std::min(pool.final_f_ub, rec.upper_value);
    pool.records.push_back(std::move(rec));
  }
  pool.stalled = pool.size() < n_samples;
  return pool;
}

SamplePool enumerate_all(const BilevelInstance& inst, int threads) {
  if (inst.n > 22)
    throw GuardError("enumerate_all supports n <= 22, got n = " + std::to_string(inst.n));
  const std::uint64_t total = 1ULL << inst.n;
  if (threads <= 0)
    threads = static_cast<int>(std::min<unsigned>(std::thread::hardware_concurrency(), 8));
  threads = std::max(threads, 1);
  const std::uint64_t chunk = (total + static_cast<std::uint64_t>(threads) - 1) /
                              static_cast<std::uint64_t>(threads);

  std::vector<std::vector<SampleRecord>> partial(static_cast<size_t>(threads));
  auto work = [&](int t) {
    const std::uint64_t begin = chunk * static_cast<std::uint64_t>(t);
    const std::uint64_t end = std::min(total, begin + chunk);
    for (std::uint64_t mask = begin; mask < end; ++mask) {
      Eigen::VectorXd x(inst.n);
      for (int j = 0; j < inst.n; ++j) x(j) = (mask >> j) & 1ULL ? 1.0 : 0.0;
      if (!upper_feasible(inst, x)) continue;
      const auto label = lower_level_value(inst, x);
      if (!label) continue;
      SampleRecord rec;
      rec.x = x;
      rec.phi = label->phi;
      rec.y_star = label->y_star;
      rec.upper_value = inst.c.dot(x) + inst.d1.dot(label->y_star);
      partial[static_cast<size_t>(t)].push_back(std::move(rec));
    }
  };
  std::vector<std::thread> pool_threads;
  for (int t = 1; t < threads; ++t) pool_threads.emplace_back(work, t);
  work(0);
  for (auto& th : pool_threads) th.join();

  SamplePool pool;
  pool.strategy = "enumerate";
  for (auto& part : partial)
    for (auto& rec : part) {
      pool.final_f_ub = std::min(pool.final_f_ub, rec.upper_value);
      pool.records.push_back(std::move(rec));
    }
  return pool;
}

SamplePool merge_pools(SamplePool base, const SamplePool& extra) {
  std::set<std::string> seen;
  for (const auto& rec : base.records) seen.insert(tender_key(rec.x));
  for (const auto& rec : extra.records)
    if (seen.insert(tender_key(rec.x)).second) base.records.push_back(rec);
  base.final_f_ub = std::min(base.final_f_ub, extra.final_f_ub);
  return base;
}

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vec_from(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}

}  // namespace

void write_pool(const SamplePool& pool, std::ostream& out) {
  json doc;
  doc["strategy"] = pool.strategy;
  doc["seed"] = pool.seed;
  doc["final_f_ub"] = std::isfinite(pool.final_f_ub) ? json(pool.final_f_ub) : json();
  doc["stalled"] = pool.stalled;
  json recs = json::array();
  for (const auto& rec : pool.records) {
    json r;
    r["x"] = vec_json(rec.x);
    r["phi"] = rec.phi;
    r["y_star"] = vec_json(rec.y_star);
    r["upper_value"] = rec.upper_value;
    recs.push_back(std::move(r));
  }
  doc["records"] = std::move(recs);
  out << doc.dump(2) << "\n";
}

SamplePool read_pool(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("pool file is not valid JSON: ") + err.what());
  }
  SamplePool pool;
  pool.strategy = doc.at("strategy").get<std::string>();
  pool.seed = doc.at("seed").get<std::uint64_t>();
  pool.final_f_ub = doc.at("final_f_ub").is_null()
                        ? std::numeric_limits<double>::infinity()
                        : doc.at("final_f_ub").get<double>();
  pool.stalled = doc.at("stalled").get<bool>();
  for (const auto& r : doc.at("records")) {
    SampleRecord rec;
    rec.x = vec_from(r.at("x"));
    rec.phi = r.at("phi").get<double>();
    rec.y_star = vec_from(r.at("y_star"));
    rec.upper_value = r.at("upper_value").get<double>();
    pool.records.push_back(std::move(rec));
  }
  return pool;
}

void save_pool(const SamplePool& pool, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_pool(pool, out);
}

SamplePool load_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return read_pool(in);
}

}  // namespace nbp
