#include "nbp/driver.hpp"
#include <set>

#include <chrono>
#include <cmath>
#include <json.hpp>
#include <ostream>

#include "nbp/errors.hpp"
#include "nbp/milp.hpp"
#include "nbp/rng.hpp"

namespace nbp {

using nlohmann::json;

std::string to_string(RefMode mode) { return mode == RefMode::BigM ? "bigm" : "cuts"; }

RefMode ref_mode_from_string(const std::string& name) {
  if (name == "bigm") return RefMode::BigM;
  if (name == "cuts") return RefMode::Cuts;
  throw ParseError("unknown reformulation mode \"" + name + "\"");
}

namespace {

struct JointModel {
  MilpModel model{Direction::Minimize};
  std::vector<VarId> x;
  std::vector<VarId> y;
};

// min c'x + d1'y  s.t.  A1 x <= b1, A2 x + B2 y <= b2, 0 <= y <= y_upper
JointModel build_joint_model(const BilevelInstance& inst) {
  JointModel jm;
  MilpModel& model = jm.model;
  for (int j = 0; j < inst.n; ++j)
    jm.x.push_back(model.add_variable(0.0, 1.0, true, "x" + std::to_string(j)));
  const bool integral = inst.lower_kind == LowerKind::Integer;
  for (int j = 0; j < inst.m; ++j)
    jm.y.push_back(model.add_variable(0.0, inst.y_upper(j), integral, "y" + std::to_string(j)));
  for (int i = 0; i < inst.n; ++i) {
    LinExpr terms;
    for (int j = 0; j < inst.n; ++j)
      if (inst.A1(i, j) != 0.0) terms.push_back({jm.x[static_cast<size_t>(j)], inst.A1(i, j)});
    model.add_constraint(std::move(terms), Sense::Le, inst.b1(i));
  }
  for (int i = 0; i < inst.m; ++i) {
    LinExpr terms;
    for (int j = 0; j < inst.n; ++j)
      if (inst.A2(i, j) != 0.0) terms.push_back({jm.x[static_cast<size_t>(j)], inst.A2(i, j)});
    for (int j = 0; j < inst.m; ++j)
      if (inst.B2(i, j) != 0.0) terms.push_back({jm.y[static_cast<size_t>(j)], inst.B2(i, j)});
    model.add_constraint(std::move(terms), Sense::Le, inst.b2(i));
  }
  LinExpr obj;
  for (int j = 0; j < inst.n; ++j)
    if (inst.c(j) != 0.0) obj.push_back({jm.x[static_cast<size_t>(j)], inst.c(j)});
  for (int j = 0; j < inst.m; ++j)
    if (inst.d1(j) != 0.0) obj.push_back({jm.y[static_cast<size_t>(j)], inst.d1(j)});
  model.set_objective(std::move(obj));
  return jm;
}

void unpack_xy(const MipSolution& sol, const JointModel& jm, Eigen::VectorXd* x,
               Eigen::VectorXd* y, bool y_integral) {
  x->resize(static_cast<Eigen::Index>(jm.x.size()));
  for (size_t j = 0; j < jm.x.size(); ++j)
    (*x)(static_cast<Eigen::Index>(j)) = std::round(sol.value(jm.x[j]));
  y->resize(static_cast<Eigen::Index>(jm.y.size()));
  for (size_t j = 0; j < jm.y.size(); ++j) {
    double v = sol.value(jm.y[j]);
    if (y_integral) v = std::round(v);
    (*y)(static_cast<Eigen::Index>(j)) = v;
  }
}

double stage_seconds(const std::chrono::steady_clock::time_point& from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from).count();
}

}  // namespace

RelaxationResult solve_relaxation(const BilevelInstance& inst) {
  JointModel jm = build_joint_model(inst);
  MipParams params;
  params.gap_tol = 1e-9;
  const MipSolution sol = solve_mip(jm.model, params);
  if (sol.status == SolveStatus::Infeasible)
    throw InfeasibleError("bilevel program infeasible: joint region is empty");
  if (!sol.has_point)
    throw ModelError("relaxation solve did not produce a point: " + to_string(sol.status));
  RelaxationResult res;
  unpack_xy(sol, jm, &res.x, &res.y, inst.lower_kind == LowerKind::Integer);
  res.bound = sol.objective;
  return res;
}

ReformulationResult solve_reformulation(const BilevelInstance& inst, const ValueNet& net,
                                        RefMode mode) {
  if (net.tender_dim != inst.n)
    throw ModelError("solve_reformulation: net was built for a different tender dimension");
  if (mode == RefMode::Cuts && net.kind != NetKind::ISNN)
    throw ModelError("solve_reformulation: cut mode requires an ISNN");

  JointModel jm = build_joint_model(inst);
  LinExpr g_expr;
  for (int j = 0; j < inst.m; ++j)
    if (inst.d2(j) != 0.0) g_expr.push_back({jm.y[static_cast<size_t>(j)], inst.d2(j)});

  MipParams params;
  params.gap_tol = 1e-9;
  ReformulationResult res;
  MipSolution sol;
  if (mode == RefMode::BigM) {
    const EmbeddedNet emb = embed_bigm(jm.model, net, jm.x);
    LinExpr opt = g_expr;
    opt.push_back({emb.phi_var, -1.0});
    jm.model.add_constraint(std::move(opt), Sense::Ge, 0.0);
    sol = solve_mip(jm.model, params);
  } else {
    const LazyCutResult lazy = lazy_cut_solve(jm.model, net, jm.x, g_expr, params);
    sol = lazy.solution;
    res.cut_rounds = lazy.cut_rounds;
  }
  res.status = sol.status;
  if (sol.status == SolveStatus::Infeasible || !sol.has_point) return res;
  res.feasible = true;
  unpack_xy(sol, jm, &res.x, &res.y, inst.lower_kind == LowerKind::Integer);
  res.objective = inst.c.dot(res.x) + inst.d1.dot(res.y);
  return res;
}

RunReport neural_bilevel(const BilevelInstance& inst, const SolverSettings& settings) {
  RunReport report;
  report.settings = settings;

  const RelaxationResult relax = solve_relaxation(inst);
  report.relaxation_bound = relax.bound;
  report.relaxation_x = relax.x;

  // certify the relaxation tender with a fresh follower solve
  const auto relax_label = lower_level_value(inst, relax.x);
  if (!relax_label)
    throw ModelError("relaxation returned a tender without a feasible follower");
  double f_ub = inst.c.dot(relax.x) + inst.d1.dot(relax_label->y_star);
  report.initial_f_ub = f_ub;
  report.best_x = relax.x;
  report.best_y = relax_label->y_star;

  SamplePool pool;
  for (int iter = 1; iter <= settings.n_iterations; ++iter) {
    IterationRecord rec;
    rec.iteration = iter;

    const auto t_sample = std::chrono::steady_clock::now();
    SamplePool fresh;
    if (settings.exact_fit) {
      if (pool.records.empty()) fresh = enumerate_all(inst);
    } else {
      const std::uint64_t stage_seed = derive_seed(settings.seed, 1000 + iter);
      fresh = enhanced_sampling(inst, settings.n_samples, settings.n_ub_updates, f_ub, stage_seed);
      f_ub = std::min(f_ub, fresh.final_f_ub);
    }
    if (settings.reset_pool) pool = SamplePool{};
    const long before = pool.size();
    pool = merge_pools(std::move(pool), fresh);
    rec.pool_size = pool.size();
    rec.new_samples = pool.size() - before;
    rec.times.sample_s = stage_seconds(t_sample);
    if (pool.records.empty())
      throw ModelError("sampling produced no records; cannot train");

    const auto t_train = std::chrono::steady_clock::now();
    ValueNet net;
    if (settings.exact_fit) {
      PhiTable table = table_from_pool(pool, inst.n);
      double fill = pool.records.front().phi;
      for (const auto& r : pool.records) fill = std::min(fill, r.phi);
      fill_missing(table, fill);  // infeasible tenders are excluded by Y(x) anyway
      net = settings.kind == NetKind::GNN ? exact_fit_gnn(table, inst.n)
                                          : exact_fit_isnn(table, inst.n);
      rec.train_mse = 0.0;
    } else {
      const Architecture arch = settings.kind == NetKind::GNN
                                    ? size_gnn(pool.size(), inst.n)
                                    : size_isnn(pool.size(), inst.n);
      TrainHyper hyper = settings.hyper;
      hyper.seed = derive_seed(settings.seed, 2000 + iter);
      const TrainResult trained = train(arch, settings.kind, pool, hyper);
      net = trained.net;
      rec.train_mse = trained.mse;
    }
    rec.lipschitz = lipschitz_bound(net);
    rec.times.train_s = stage_seconds(t_train);

    const auto t_solve = std::chrono::steady_clock::now();
    const ReformulationResult ref = solve_reformulation(inst, net, settings.mode);
    rec.ref_status = to_string(ref.status);
    rec.times.solve_s = stage_seconds(t_solve);

    // upper-bound update: reformulation tender (re-certified by a fresh
    // follower solve) and the best labeled sample both compete
    if (ref.feasible) {
      rec.ref_objective = ref.objective;
      const auto label = lower_level_value(inst, ref.x);
      if (label) {
        const double candidate = inst.c.dot(ref.x) + inst.d1.dot(label->y_star);
        if (candidate < f_ub) {
          f_ub = candidate;
          report.best_x = ref.x;
          report.best_y = label->y_star;
        }
      }
    }
    for (const auto& sample : pool.records) {
      if (sample.upper_value < f_ub) {
        f_ub = sample.upper_value;
        report.best_x = sample.x;
        report.best_y = sample.y_star;
      }
    }
    rec.f_ub = f_ub;
    if (settings.diagnostics && inst.n <= 16) rec.hausdorff = hausdorff_unsampled(inst, pool);
    if (!settings.record_times) rec.times = StageTimes{};
    report.iterations.push_back(std::move(rec));
  }
  report.final_f_ub = f_ub;
  return report;
}

double hausdorff_unsampled(const BilevelInstance& inst, const SamplePool& pool) {
  if (inst.n > 16) throw GuardError("hausdorff_unsampled supports n <= 16");
  std::set<std::string> sampled;
  for (const auto& rec : pool.records) sampled.insert(tender_key(rec.x));
  double worst = 0.0;
  const std::uint64_t total = 1ULL << inst.n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    Eigen::VectorXd x(inst.n);
    for (int j = 0; j < inst.n; ++j) x(j) = (mask >> j) & 1ULL ? 1.0 : 0.0;
    if (sampled.count(tender_key(x))) continue;
    if (!((inst.A1 * x - inst.b1).array() <= kFeasTol).all()) continue;
    if (!lower_level_value(inst, x)) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& rec : pool.records) nearest = std::min(nearest, (x - rec.x).norm());
    if (std::isfinite(nearest)) worst = std::max(worst, nearest);
  }
  return worst;
}

bool reports_equivalent(const RunReport& a, const RunReport& b) {
  if (a.relaxation_bound != b.relaxation_bound) return false;
  if (a.initial_f_ub != b.initial_f_ub) return false;
  if (a.final_f_ub != b.final_f_ub) return false;
  if (a.best_x != b.best_x || a.best_y != b.best_y) return false;
  if (a.iterations.size() != b.iterations.size()) return false;
  for (size_t i = 0; i < a.iterations.size(); ++i) {
    const IterationRecord& ra = a.iterations[i];
    const IterationRecord& rb = b.iterations[i];
    if (ra.pool_size != rb.pool_size || ra.new_samples != rb.new_samples) return false;
    if (ra.train_mse != rb.train_mse || ra.f_ub != rb.f_ub) return false;
    if (ra.ref_status != rb.ref_status) return false;
  }
  return true;
}

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace

void write_report_json(const RunReport& report, std::ostream& out) {
  json doc;
  doc["settings"] = {{"kind", to_string(report.settings.kind)},
                     {"mode", to_string(report.settings.mode)},
                     {"n_samples", report.settings.n_samples},
                     {"n_ub_updates", report.settings.n_ub_updates},
                     {"n_iterations", report.settings.n_iterations},
                     {"exact_fit", report.settings.exact_fit},
                     {"reset_pool", report.settings.reset_pool},
                     {"epochs", report.settings.hyper.epochs},
                     {"lr", report.settings.hyper.lr},
                     {"decay", report.settings.hyper.decay},
                     {"seed", report.settings.seed}};
  doc["relaxation_bound"] = report.relaxation_bound;
  doc["relaxation_x"] = vec_json(report.relaxation_x);
  doc["initial_f_ub"] = report.initial_f_ub;
  json iters = json::array();
  for (const auto& rec : report.iterations) {
    json r;
    r["iteration"] = rec.iteration;
    r["pool_size"] = rec.pool_size;
    r["new_samples"] = rec.new_samples;
    r["train_mse"] = rec.train_mse;
    r["ref_status"] = rec.ref_status;
    r["ref_objective"] = rec.ref_objective;
    r["f_ub"] = rec.f_ub;
    r["lipschitz"] = rec.lipschitz;
    if (rec.hausdorff >= 0.0) r["hausdorff"] = rec.hausdorff;
    r["t_sample"] = rec.times.sample_s;
    r["t_train"] = rec.times.train_s;
    r["t_solve"] = rec.times.solve_s;
    iters.push_back(std::move(r));
  }
  doc["iterations"] = std::move(iters);
  doc["best_x"] = vec_json(report.best_x);
  doc["best_y"] = vec_json(report.best_y);
  doc["final_f_ub"] = report.final_f_ub;
  out << doc.dump(2) << "\n";
}

void write_iterations_csv(const RunReport& report, std::ostream& out) {
  out.precision(17);
  out << "iter,pool_size,train_mse,ref_obj,f_ub,t_sample,t_train,t_solve\n";
  for (const auto& rec : report.iterations) {
    out << rec.iteration << "," << rec.pool_size << "," << rec.train_mse << ","
        << rec.ref_objective << "," << rec.f_ub << "," << rec.times.sample_s << ","
        << rec.times.train_s << "," << rec.times.solve_s << "\n";
  }
}

}  // namespace nbp
