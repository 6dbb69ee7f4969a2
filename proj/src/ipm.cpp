#include "ipm.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <Eigen/Dense>

#include "gridopt/error.hpp"
#include "kkt.hpp"

namespace gridopt {

const char* status_name(TerminationStatus s) noexcept {
  switch (s) {
    case TerminationStatus::locally_optimal: return "LocallyOptimal";
    case TerminationStatus::globally_optimal: return "GloballyOptimal";
    case TerminationStatus::proven_infeasible: return "ProvenInfeasible";
    case TerminationStatus::locally_infeasible: return "LocallyInfeasible";
    case TerminationStatus::iteration_limit: return "IterationLimit";
    case TerminationStatus::time_limit: return "TimeLimit";
    case TerminationStatus::numerical_error: return "NumericalError";
  }
  return "NumericalError";
}

double KktResiduals::worst() const {
  return std::max(std::max(stationarity, primal_feasibility),
                  std::max(dual_feasibility, complementarity));
}

namespace detail {

namespace {

using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Row {
  LocalEvaluator eval;
  double lo = -kInf, up = kInf;
  int slack = -1;     // X index of the slack variable, -1 for equalities
  int sys = -1;       // position among system rows, -1 when skipped (free row)
  std::string tag;
};

// Internal NLP form: X = [x; slacks], all rows equalities g(X) = 0, bounds on
// X handled by the barrier.  Fixed variables lose their bounds and gain an
// equality row so the barrier never sees a zero-width interval.
struct Model {
  const MathProgram* prog = nullptr;
  int n = 0;      // program variables
  int nX = 0;     // n + slacks
  int m_user = 0; // user constraint rows (dual reporting)
  int m_sys = 0;  // rows in the Newton system
  std::vector<Row> rows;
  LocalEvaluator obj;
  double obj_scale = 1.0;
  VectorXd lower, upper;  // size nX, +-inf when absent

  // Lagrangian Hessian pattern over x (canonical row >= col), with per-source
  // scatter maps from local evaluator patterns into global slots.
  std::vector<std::pair<int, int>> hess_pattern;
  std::vector<int> obj_slots;
  std::vector<std::vector<int>> row_slots;

  // When set, replaces the program's variable starts (feasibility restarts).
  std::vector<double> start_override;

  bool dense_backend() const { return prog->num_vars() < 500; }
};

Model build_model(const MathProgram& prog, bool relax_binaries) {
  for (const auto& v : prog.variables()) {
    if (v.kind == VarKind::binary && !relax_binaries && v.lower != v.upper) {
      fail(Errc::option_error,
           "program has unfixed binary variable " + v.name + "; use solve_mixed");
    }
  }

  Model mod;
  mod.prog = &prog;
  mod.n = prog.num_vars();

  std::vector<double> lo(static_cast<size_t>(mod.n)), up(static_cast<size_t>(mod.n));
  std::vector<int> fixed;
  for (const auto& v : prog.variables()) {
    lo[static_cast<size_t>(v.index)] = v.lower;
    up[static_cast<size_t>(v.index)] = v.upper;
    if (v.lower == v.upper) {
      fixed.push_back(v.index);
      lo[static_cast<size_t>(v.index)] = -kInf;
      up[static_cast<size_t>(v.index)] = kInf;
    }
  }

  int n_slack = 0;
  std::vector<double> slack_lo, slack_up;
  auto add_row = [&](Expr body, double rlo, double rup, std::string tag) {
    Row row{LocalEvaluator(std::move(body)), rlo, rup, -1, -1, std::move(tag)};
    if (rlo == rup) {
      // equality, no slack
    } else if (std::isinf(rlo) && std::isinf(rup)) {
      // free row, stays out of the system
    } else {
      row.slack = mod.n + n_slack++;
      slack_lo.push_back(rlo);
      slack_up.push_back(rup);
    }
    mod.rows.push_back(std::move(row));
  };

  for (const auto& c : prog.constraints()) add_row(c.body, c.lower, c.upper, c.tag);
  mod.m_user = static_cast<int>(mod.rows.size());
  for (int j : fixed) {
    const VarRef& v = prog.variables()[static_cast<size_t>(j)];
    add_row(variable(j), v.lower, v.lower, "fix:" + v.name);
  }

  mod.nX = mod.n + n_slack;
  mod.lower.resize(mod.nX);
  mod.upper.resize(mod.nX);
  for (int j = 0; j < mod.n; ++j) {
    mod.lower[j] = lo[static_cast<size_t>(j)];
    mod.upper[j] = up[static_cast<size_t>(j)];
  }
  for (int k = 0; k < n_slack; ++k) {
    mod.lower[mod.n + k] = slack_lo[static_cast<size_t>(k)];
    mod.upper[mod.n + k] = slack_up[static_cast<size_t>(k)];
  }
  // Relax every finite bound by a sliver so solutions that sit exactly on a
  // bound remain reachable from the interior (reported bound violations stay
  // below the 1e-8 contract).
  for (int j = 0; j < mod.nX; ++j) {
    if (std::isfinite(mod.lower[j])) mod.lower[j] -= 1e-10 * std::max(1.0, std::abs(mod.lower[j]));
    if (std::isfinite(mod.upper[j])) mod.upper[j] += 1e-10 * std::max(1.0, std::abs(mod.upper[j]));
  }

  int sys = 0;
  for (auto& row : mod.rows) {
    if (std::isinf(row.lo) && std::isinf(row.up) && row.slack == -1) continue;
    row.sys = sys++;
  }
  mod.m_sys = sys;

  mod.obj = LocalEvaluator(prog.objective());

  // Global Hessian pattern: union of objective and per-row local patterns.
  std::unordered_map<long long, int> slot_of;
  auto key = [&](int i, int j) { return static_cast<long long>(i) * mod.n + j; };
  auto slots_for = [&](const LocalEvaluator& ev) {
    std::vector<int> slots;
    slots.reserve(ev.hess_pairs().size());
    for (auto [li, lj] : ev.hess_pairs()) {
      int gi = ev.vars()[static_cast<size_t>(li)];
      int gj = ev.vars()[static_cast<size_t>(lj)];
      if (gi < gj) std::swap(gi, gj);
      auto [it, inserted] = slot_of.try_emplace(key(gi, gj), static_cast<int>(mod.hess_pattern.size()));
      if (inserted) mod.hess_pattern.emplace_back(gi, gj);
      slots.push_back(it->second);
    }
    return slots;
  };
  mod.obj_slots = slots_for(mod.obj);
  mod.row_slots.reserve(mod.rows.size());
  for (const auto& row : mod.rows) mod.row_slots.push_back(slots_for(row.eval));

  return mod;
}

struct Iterate {
  VectorXd X;        // primal (variables + slacks)
  VectorXd lam;      // row duals (system rows)
  VectorXd zl, zu;   // bound duals over X, zero where no bound
};

class Ipm {
 public:
  Ipm(Model& mod, const SolveOptions& opts) : mod_(mod), opts_(opts) {}

  SolveResult run();

 private:
  static constexpr double kKappaEps = 10.0;
  static constexpr double kKappaMu = 0.2;
  static constexpr double kThetaMu = 1.5;
  static constexpr double kTauMin = 0.99;
  static constexpr double kArmijo = 1e-4;
  static constexpr double kKappaSigma = 1e10;
  static constexpr double kDeltaMax = 1e6;
  // filter constants
  static constexpr double kGammaTheta = 1e-5;
  static constexpr double kGammaPhi = 1e-5;
  static constexpr double kSTheta = 1.1;
  static constexpr double kSPhi = 2.3;

  struct Eval {
    double f = 0.0;                       // scaled objective
    VectorXd grad_f;                      // size nX (zero beyond n)
    VectorXd g;                           // residuals of system rows
    std::vector<std::vector<double>> jac; // per row, local gradient values
    bool finite = true;
  };

  void eval_point(const VectorXd& X, Eval& ev, bool derivatives);
  void assemble_hessian(const VectorXd& X, const VectorXd& lam, std::vector<double>& hvals);
  double barrier(const VectorXd& X, double f) const;
  VectorXd barrier_grad(const VectorXd& X, const Eval& ev) const;
  double kkt_error(const Eval& ev, const Iterate& it, double mu) const;
  void init_point(Iterate& it);
  double fraction_to_boundary(const VectorXd& v, const VectorXd& dv, const VectorXd& lo,
                              const VectorXd& up, double tau) const;

  Model& mod_;
  const SolveOptions& opts_;
  double mu_ = 0.1;
  double delta_last_ = 0.0;
  double delta_force_ = 0.0;
  std::vector<std::pair<double, double>> filter_;  // taboo (theta, phi) corners
  double theta_min_ = 1e-4;
  double theta_max_ = 1e4;
};

void Ipm::eval_point(const VectorXd& X, Eval& ev, bool derivatives) {
  std::span<const double> x(X.data(), static_cast<size_t>(mod_.nX));
  ev.finite = true;
  if (derivatives) {
    if (ev.grad_f.size() != mod_.nX) ev.grad_f.resize(mod_.nX);
    ev.grad_f.setZero();
    if (ev.jac.size() != mod_.rows.size()) ev.jac.resize(mod_.rows.size());
    std::vector<double> og(mod_.obj.vars().size());
    ev.f = mod_.obj_scale * mod_.obj.value_grad(x, og);
    for (size_t k = 0; k < og.size(); ++k) ev.grad_f[mod_.obj.vars()[k]] = mod_.obj_scale * og[k];
  } else {
    ev.f = mod_.obj_scale * mod_.obj.value(x);
  }
  if (!std::isfinite(ev.f)) ev.finite = false;

  if (ev.g.size() != mod_.m_sys) ev.g.resize(mod_.m_sys);
  for (size_t r = 0; r < mod_.rows.size(); ++r) {
    Row& row = mod_.rows[r];
    if (row.sys < 0) continue;
    double c;
    if (derivatives) {
      auto& jr = ev.jac[r];
      jr.resize(row.eval.vars().size());
      c = row.eval.value_grad(x, jr);
      for (double v : jr) {
        if (!std::isfinite(v)) ev.finite = false;
      }
    } else {
      c = row.eval.value(x);
    }
    double target = row.slack >= 0 ? X[row.slack] : row.lo;
    ev.g[row.sys] = c - target;
    if (!std::isfinite(c)) ev.finite = false;
  }
}

void Ipm::assemble_hessian(const VectorXd& X, const VectorXd& lam, std::vector<double>& hvals) {
  std::span<const double> x(X.data(), static_cast<size_t>(mod_.nX));
  hvals.assign(mod_.hess_pattern.size(), 0.0);
  std::vector<double> g(64), h(256);

  auto accumulate = [&](LocalEvaluator& ev, const std::vector<int>& slots, double weight) {
    if (weight == 0.0 || ev.hess_pairs().empty()) return;
    g.resize(ev.vars().size());
    h.resize(ev.hess_pairs().size());
    ev.value_grad_hess(x, g, h);
    for (size_t k = 0; k < slots.size(); ++k) {
      hvals[static_cast<size_t>(slots[k])] += weight * h[k];
    }
  };

  accumulate(mod_.obj, mod_.obj_slots, mod_.obj_scale);
  for (size_t r = 0; r < mod_.rows.size(); ++r) {
    Row& row = mod_.rows[r];
    if (row.sys < 0) continue;
    accumulate(row.eval, mod_.row_slots[r], lam[row.sys]);
  }
}

double Ipm::barrier(const VectorXd& X, double f) const {
  double phi = f;
  for (int j = 0; j < mod_.nX; ++j) {
    if (std::isfinite(mod_.lower[j])) {
      double d = X[j] - mod_.lower[j];
      if (d <= 0) return kInf;
      phi -= mu_ * std::log(d);
    }
    if (std::isfinite(mod_.upper[j])) {
      double d = mod_.upper[j] - X[j];
      if (d <= 0) return kInf;
      phi -= mu_ * std::log(d);
    }
  }
  return phi;
}

VectorXd Ipm::barrier_grad(const VectorXd& X, const Eval& ev) const {
  VectorXd g = ev.grad_f;
  for (int j = 0; j < mod_.nX; ++j) {
    if (std::isfinite(mod_.lower[j])) g[j] -= mu_ / (X[j] - mod_.lower[j]);
    if (std::isfinite(mod_.upper[j])) g[j] += mu_ / (mod_.upper[j] - X[j]);
  }
  return g;
}

double Ipm::kkt_error(const Eval& ev, const Iterate& it, double mu) const {
  // stationarity: grad_f + J^T lam - zl + zu over all X entries
  VectorXd stat = ev.grad_f - it.zl + it.zu;
  for (size_t r = 0; r < mod_.rows.size(); ++r) {
    const Row& row = mod_.rows[r];
    if (row.sys < 0) continue;
    double l = it.lam[row.sys];
    const auto& vars = row.eval.vars();
    for (size_t k = 0; k < vars.size(); ++k) stat[vars[k]] += l * ev.jac[r][k];
    if (row.slack >= 0) stat[row.slack] -= l;
  }

  double comp = 0.0;
  int n_bounded = 0;
  double z_norm1 = 0.0;
  for (int j = 0; j < mod_.nX; ++j) {
    if (std::isfinite(mod_.lower[j])) {
      comp = std::max(comp, std::abs(it.zl[j] * (it.X[j] - mod_.lower[j]) - mu));
      ++n_bounded;
      z_norm1 += it.zl[j];
    }
    if (std::isfinite(mod_.upper[j])) {
      comp = std::max(comp, std::abs(it.zu[j] * (mod_.upper[j] - it.X[j]) - mu));
      ++n_bounded;
      z_norm1 += it.zu[j];
    }
  }

  double lam_norm1 = it.lam.lpNorm<1>();
  double denom = std::max(1, mod_.m_sys + n_bounded);
  double s_d = std::max(100.0, (lam_norm1 + z_norm1) / denom) / 100.0;
  double s_c = std::max(100.0, n_bounded ? z_norm1 / n_bounded : 0.0) / 100.0;

  double feas = mod_.m_sys ? ev.g.lpNorm<Eigen::Infinity>() : 0.0;
  return std::max({stat.lpNorm<Eigen::Infinity>() / s_d, feas, comp / s_c});
}

void Ipm::init_point(Iterate& it) {
  it.X.resize(mod_.nX);
  std::vector<double> start =
      mod_.start_override.empty() ? mod_.prog->start_point() : mod_.start_override;
  for (int j = 0; j < mod_.n; ++j) it.X[j] = start[static_cast<size_t>(j)];

  // Push strictly inside the bounds (relative kappa push).
  auto push_interior = [&](double v, double lo, double up) {
    const double k1 = 1e-2, k2 = 1e-2;
    if (std::isfinite(lo) && std::isfinite(up)) {
      double pl = std::min(k1 * std::max(1.0, std::abs(lo)), k2 * (up - lo));
      double pu = std::min(k1 * std::max(1.0, std::abs(up)), k2 * (up - lo));
      return std::min(std::max(v, lo + pl), up - pu);
    }
    if (std::isfinite(lo)) return std::max(v, lo + k1 * std::max(1.0, std::abs(lo)));
    if (std::isfinite(up)) return std::min(v, up - k1 * std::max(1.0, std::abs(up)));
    return v;
  };
  for (int j = 0; j < mod_.n; ++j) it.X[j] = push_interior(it.X[j], mod_.lower[j], mod_.upper[j]);

  // Slacks start at the constraint value, pushed at least 0.1 into the
  // interior (capped for narrow ranges).
  std::span<const double> x(it.X.data(), static_cast<size_t>(mod_.nX));
  for (auto& row : mod_.rows) {
    if (row.slack < 0) continue;
    double c = row.eval.value(x);
    double lo = mod_.lower[row.slack], up = mod_.upper[row.slack];
    double margin = 0.1;
    if (std::isfinite(lo) && std::isfinite(up)) margin = std::min(0.1, 0.25 * (up - lo));
    double v = c;
    if (std::isfinite(lo)) v = std::max(v, lo + margin);
    if (std::isfinite(up)) v = std::min(v, up - margin);
    it.X[row.slack] = v;
  }

  it.lam = VectorXd::Zero(mod_.m_sys);
  it.zl = VectorXd::Zero(mod_.nX);
  it.zu = VectorXd::Zero(mod_.nX);
  for (int j = 0; j < mod_.nX; ++j) {
    if (std::isfinite(mod_.lower[j])) it.zl[j] = std::min(mu_ / (it.X[j] - mod_.lower[j]), 1e4);
    if (std::isfinite(mod_.upper[j])) it.zu[j] = std::min(mu_ / (mod_.upper[j] - it.X[j]), 1e4);
  }
}

double Ipm::fraction_to_boundary(const VectorXd& v, const VectorXd& dv, const VectorXd& lo,
                                 const VectorXd& up, double tau) const {
  double alpha = 1.0;
  for (int j = 0; j < v.size(); ++j) {
    if (dv[j] < 0 && std::isfinite(lo[j])) {
      alpha = std::min(alpha, -tau * (v[j] - lo[j]) / dv[j]);
    } else if (dv[j] > 0 && std::isfinite(up[j])) {
      alpha = std::min(alpha, tau * (up[j] - v[j]) / dv[j]);
    }
  }
  return alpha;
}

SolveResult Ipm::run() {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  SolveResult res;
  res.primal.resize(static_cast<size_t>(mod_.n));

  mu_ = opts_.mu_init;
  const double mu_min = opts_.tol / 20.0;

  Iterate it;
  init_point(it);
  {
    Eval ev0;
    eval_point(it.X, ev0, false);
    double theta0 = mod_.m_sys && ev0.finite ? ev0.g.lpNorm<1>() : 0.0;
    theta_min_ = 1e-4 * std::max(1.0, theta0);
    theta_max_ = 1e4 * std::max(1.0, theta0);
  }

  KktSolver kkt(mod_.nX + mod_.m_sys, mod_.dense_backend());
  Eval ev;
  std::vector<double> hvals;
  int ls_failures = 0;
  double best_infeas = kInf;
  int stall_count = 0;

  auto finish = [&](TerminationStatus status) {
    res.status = status;
    res.solve_seconds = elapsed();
    std::span<const double> xsp(it.X.data(), static_cast<size_t>(mod_.nX));
    res.objective = mod_.obj.value(xsp);
    for (int j = 0; j < mod_.n; ++j) res.primal[static_cast<size_t>(j)] = it.X[j];
    res.duals.assign(static_cast<size_t>(mod_.m_user), 0.0);
    for (int r = 0; r < mod_.m_user; ++r) {
      if (mod_.rows[static_cast<size_t>(r)].sys >= 0) {
        res.duals[static_cast<size_t>(r)] =
            it.lam[mod_.rows[static_cast<size_t>(r)].sys] / mod_.obj_scale;
      }
    }
    res.bound_duals_lower.assign(static_cast<size_t>(mod_.n), 0.0);
    res.bound_duals_upper.assign(static_cast<size_t>(mod_.n), 0.0);
    for (int j = 0; j < mod_.n; ++j) {
      res.bound_duals_lower[static_cast<size_t>(j)] = it.zl[j] / mod_.obj_scale;
      res.bound_duals_upper[static_cast<size_t>(j)] = it.zu[j] / mod_.obj_scale;
    }
    return res;
  };

  for (int iter = 0; iter < opts_.max_iter; ++iter) {
    res.iterations = iter;
    eval_point(it.X, ev, true);
    if (!ev.finite) return finish(TerminationStatus::numerical_error);

    double e0 = kkt_error(ev, it, 0.0);
    if (opts_.verbose) {
      std::fprintf(stderr, "it %3d  f %14.8g  inf %9.3g  E0 %9.3g  mu %9.3g\n", iter,
                   ev.f / mod_.obj_scale, mod_.m_sys ? ev.g.lpNorm<Eigen::Infinity>() : 0.0, e0,
                   mu_);
    }
    if (e0 <= opts_.tol) {
      res.iterations = iter;
      return finish(mod_.prog->is_convex() ? TerminationStatus::globally_optimal
                                           : TerminationStatus::locally_optimal);
    }

    // Infeasibility stall detection feeds the endgame classification.
    double infeas = mod_.m_sys ? ev.g.lpNorm<Eigen::Infinity>() : 0.0;
    if (infeas < best_infeas * 0.9) {
      best_infeas = std::min(best_infeas, infeas);
      stall_count = 0;
    } else if (infeas > 100.0 * opts_.tol && mu_ <= mu_min * 1.0001) {
      if (++stall_count > 25) return finish(TerminationStatus::iteration_limit);
    }

    bool mu_changed = false;
    while (mu_ > mu_min && kkt_error(ev, it, mu_) <= kKappaEps * mu_) {
      mu_ = std::max(mu_min, std::min(kKappaMu * mu_, std::pow(mu_, kThetaMu)));
      mu_changed = true;
    }
    if (mu_changed) filter_.clear();  // the filter belongs to one barrier problem
    double tau = std::max(kTauMin, 1.0 - mu_);

    assemble_hessian(it.X, it.lam, hvals);

    // KKT assembly with inertia correction: diag block W + Sigma + delta_w,
    // off-diagonal J, lower-right -delta_c.  delta_c tracks mu so the
    // infeasibility it leaks into the step (~ delta_c * |dlam|) stays far
    // below the convergence tolerance.
    const double delta_c = std::max(1e-12, 1e-8 * mu_);
    double delta_w = delta_force_;
    bool factored = false;
    for (int attempt = 0; attempt < 24 && !factored; ++attempt) {
      kkt.begin();
      for (int j = 0; j < mod_.nX; ++j) {
        double sigma = delta_w;
        if (std::isfinite(mod_.lower[j])) sigma += it.zl[j] / (it.X[j] - mod_.lower[j]);
        if (std::isfinite(mod_.upper[j])) sigma += it.zu[j] / (mod_.upper[j] - it.X[j]);
        kkt.add(j, j, sigma);
      }
      for (size_t k = 0; k < mod_.hess_pattern.size(); ++k) {
        auto [i, j] = mod_.hess_pattern[k];
        kkt.add(i, j, hvals[k]);
      }
      for (size_t r = 0; r < mod_.rows.size(); ++r) {
        const Row& row = mod_.rows[r];
        if (row.sys < 0) continue;
        int ri = mod_.nX + row.sys;
        const auto& vars = row.eval.vars();
        for (size_t k = 0; k < vars.size(); ++k) kkt.add(ri, vars[k], ev.jac[r][k]);
        if (row.slack >= 0) kkt.add(ri, row.slack, -1.0);
        kkt.add(ri, ri, -delta_c);
      }
      Inertia inertia = kkt.factorize();
      if (inertia.factor_ok && inertia.neg == mod_.m_sys && inertia.zero == 0) {
        factored = true;
        delta_last_ = delta_w;
      } else {
        delta_w = std::min(std::max(10.0 * delta_w, 1e-8), kDeltaMax);
        if (delta_w >= kDeltaMax && attempt > 18) {
          return finish(TerminationStatus::numerical_error);
        }
      }
    }
    if (!factored) return finish(TerminationStatus::numerical_error);

    // Right-hand side and Newton direction.
    VectorXd phi_grad = barrier_grad(it.X, ev);
    VectorXd rhs(mod_.nX + mod_.m_sys);
    VectorXd jt_lam = VectorXd::Zero(mod_.nX);
    for (size_t r = 0; r < mod_.rows.size(); ++r) {
      const Row& row = mod_.rows[r];
      if (row.sys < 0) continue;
      double l = it.lam[row.sys];
      const auto& vars = row.eval.vars();
      for (size_t k = 0; k < vars.size(); ++k) jt_lam[vars[k]] += l * ev.jac[r][k];
      if (row.slack >= 0) jt_lam[row.slack] -= l;
    }
    rhs.head(mod_.nX) = -(phi_grad + jt_lam);
    rhs.tail(mod_.m_sys) = -ev.g;

    VectorXd dir = kkt.solve(rhs);
    for (int refine = 0; refine < 2; ++refine) {
      VectorXd resid = rhs - kkt.apply(dir);
      if (resid.lpNorm<Eigen::Infinity>() <= 1e-10 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()))
        break;
      dir += kkt.solve(resid);
    }
    if (!dir.allFinite()) return finish(TerminationStatus::numerical_error);

    VectorXd dX = dir.head(mod_.nX);
    VectorXd dlam = dir.tail(mod_.m_sys);

    // Bound-dual directions from the eliminated complementarity rows.
    VectorXd dzl = VectorXd::Zero(mod_.nX), dzu = VectorXd::Zero(mod_.nX);
    for (int j = 0; j < mod_.nX; ++j) {
      if (std::isfinite(mod_.lower[j])) {
        double d = it.X[j] - mod_.lower[j];
        dzl[j] = mu_ / d - it.zl[j] - it.zl[j] / d * dX[j];
      }
      if (std::isfinite(mod_.upper[j])) {
        double d = mod_.upper[j] - it.X[j];
        dzu[j] = mu_ / d - it.zu[j] + it.zu[j] / d * dX[j];
      }
    }

    double alpha_max = fraction_to_boundary(it.X, dX, mod_.lower, mod_.upper, tau);
    VectorXd zero_lo = VectorXd::Zero(mod_.nX);
    VectorXd inf_up = VectorXd::Constant(mod_.nX, kInf);
    double alpha_z = std::min(fraction_to_boundary(it.zl, dzl, zero_lo, inf_up, tau),
                              fraction_to_boundary(it.zu, dzu, zero_lo, inf_up, tau));

    // Filter line search: feasibility theta = ||g||_1 and the barrier
    // objective phi are traded off separately, so steps that pay a sliver of
    // phi for constraint progress (or vice versa) are not blocked the way a
    // combined merit function would block them.
    double theta0 = mod_.m_sys ? ev.g.lpNorm<1>() : 0.0;
    double phi0 = barrier(it.X, ev.f);
    double dphi = phi_grad.dot(dX);

    if (opts_.verbose) {
      std::fprintf(stderr, "      dw %8.2g dphi %10.3g theta %9.3g phi0 %.10g\n", delta_w, dphi,
                   theta0, phi0);
    }
    Eval trial_ev;
    double alpha = alpha_max;
    bool accepted = false;
    bool f_type_step = false;
    VectorXd Xt;
    // A negligible primal step is a pure dual update; take it whole (the
    // dual-regularization term leaks O(delta_c*|dlam|) into dX).
    const double dual_step_floor =
        std::max(1e-10 * (1.0 + it.X.lpNorm<Eigen::Infinity>()),
                 100.0 * delta_c * (1.0 + (mod_.m_sys ? dlam.lpNorm<Eigen::Infinity>() : 0.0)));
    if (dX.lpNorm<Eigen::Infinity>() <= dual_step_floor) {
      Xt = it.X + alpha * dX;
      accepted = true;
    }
    for (int ls = 0; ls < 45 && !accepted; ++ls) {
      Xt = it.X + alpha * dX;
      eval_point(Xt, trial_ev, false);
      if (trial_ev.finite) {
        double theta_t = mod_.m_sys ? trial_ev.g.lpNorm<1>() : 0.0;
        double phi_t = barrier(Xt, trial_ev.f);
        bool in_taboo = theta_t > theta_max_;
        for (const auto& [tf, pf] : filter_) {
          if (theta_t >= tf && phi_t >= pf) {
            in_taboo = true;
            break;
          }
        }
        if (!in_taboo) {
          bool switching = dphi < 0.0 &&
                           alpha * std::pow(-dphi, kSPhi) > std::pow(theta0, kSTheta);
          if (theta0 <= theta_min_ && switching) {
            if (phi_t <= phi0 + kArmijo * alpha * dphi) {
              accepted = true;
              f_type_step = true;
            }
          } else if (theta_t <= (1.0 - kGammaTheta) * theta0 ||
                     phi_t <= phi0 - kGammaPhi * theta0) {
            accepted = true;
          }
        }
      }
      if (accepted) break;
      alpha *= 0.5;
      if (alpha < 1e-14) break;
    }

    if (!accepted) {
      // Dual-only fallback: with X unchanged the Jacobian is still valid, so
      // test whether the dual step alone reduces the optimality error.
      Iterate trial = it;
      trial.lam += alpha_z * dlam;
      trial.zl += alpha_z * dzl;
      trial.zu += alpha_z * dzu;
      if (kkt_error(ev, trial, mu_) < kkt_error(ev, it, mu_)) {
        it.lam = trial.lam;
        it.zl = trial.zl;
        it.zu = trial.zu;
        ls_failures = 0;
        continue;
      }
      if (++ls_failures >= 4) return finish(TerminationStatus::iteration_limit);
      delta_force_ = std::max(10.0 * std::max(delta_force_, delta_last_), 1e-4);
      continue;
    }
    if (!f_type_step && dX.lpNorm<Eigen::Infinity>() > dual_step_floor) {
      // theta-type step: block this (theta, phi) corner from recurring.
      filter_.emplace_back((1.0 - kGammaTheta) * theta0, phi0 - kGammaPhi * theta0);
    }
    ls_failures = 0;
    delta_force_ = 0.0;

    if (opts_.verbose) {
      int blocker = -1;
      double best = 2.0;
      for (int j = 0; j < mod_.nX; ++j) {
        double a = 2.0;
        if (dX[j] < 0 && std::isfinite(mod_.lower[j])) a = -(it.X[j] - mod_.lower[j]) / dX[j];
        else if (dX[j] > 0 && std::isfinite(mod_.upper[j])) a = (mod_.upper[j] - it.X[j]) / dX[j];
        if (a < best) { blocker = j; best = a; }
      }
      std::string bname = blocker < 0 ? "-" : (blocker < mod_.n
          ? mod_.prog->variables()[static_cast<size_t>(blocker)].name
          : "slack#" + std::to_string(blocker - mod_.n));
      std::fprintf(stderr,
                   "      alpha %9.3g (max %9.3g) alpha_z %9.3g |dX| %9.3g |dlam| %9.3g block %s@%.3g\n",
                   alpha, alpha_max, alpha_z, dX.lpNorm<Eigen::Infinity>(),
                   mod_.m_sys ? dlam.lpNorm<Eigen::Infinity>() : 0.0, bname.c_str(), best);
    }
    it.X = Xt;
    // Row duals move with the dual step length: stationarity is linear in
    // lam, and tying it to a boundary-throttled primal step stalls the dual
    // estimate on degenerate active sets.
    it.lam += alpha_z * dlam;
    it.zl += alpha_z * dzl;
    it.zu += alpha_z * dzu;

    // Keep bound duals inside the kappa_Sigma window around mu/(X-L).
    for (int j = 0; j < mod_.nX; ++j) {
      if (std::isfinite(mod_.lower[j])) {
        double d = it.X[j] - mod_.lower[j];
        it.zl[j] = std::min(std::max(it.zl[j], mu_ / (kKappaSigma * d)), kKappaSigma * mu_ / d);
      }
      if (std::isfinite(mod_.upper[j])) {
        double d = mod_.upper[j] - it.X[j];
        it.zu[j] = std::min(std::max(it.zu[j], mu_ / (kKappaSigma * d)), kKappaSigma * mu_ / d);
      }
    }

    if (opts_.time_limit && elapsed() > *opts_.time_limit) {
      return finish(TerminationStatus::time_limit);
    }
  }
  return finish(TerminationStatus::iteration_limit);
}

}  // namespace

double objective_gradient_scale(const MathProgram& prog) {
  std::vector<double> x0 = prog.start_point();
  LocalEvaluator obj(prog.objective());
  std::vector<double> g(obj.vars().size());
  obj.value_grad(x0, g);
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  return gmax > 100.0 ? 100.0 / gmax : 1.0;
}

SolveResult ipm_solve(const MathProgram& prog, const SolveOptions& opts, bool relax_binaries) {
  Model mod = build_model(prog, relax_binaries);
  mod.obj_scale = objective_gradient_scale(prog);

  SolveResult res = Ipm(mod, opts).run();

  // Endgame classification: a failed solve stranded at an infeasible point is
  // handed to phase-1, which either certifies infeasibility (a proof only for
  // convex-flagged programs) or recovers a feasible point to restart from.
  if (res.status == TerminationStatus::iteration_limit ||
      res.status == TerminationStatus::numerical_error) {
    double viol = std::max(max_constraint_violation(prog, res.primal),
                           max_bound_violation(prog, res.primal));
    if (viol > 10.0 * opts.tol) {
      CertifyResult cert = phase1_certify(prog, opts, relax_binaries);
      if (cert.verdict == Certificate::proven_infeasible) {
        res.status = prog.is_convex() ? TerminationStatus::proven_infeasible
                                      : TerminationStatus::locally_infeasible;
        res.violated_tags = cert.violated_tags;
      } else if (!cert.point.empty()) {
        Model warm = build_model(prog, relax_binaries);
        warm.obj_scale = mod.obj_scale;
        warm.start_override = cert.point;
        SolveResult retry = Ipm(warm, opts).run();
        retry.iterations += res.iterations;
        if (is_optimal(retry.status)) return retry;
      }
    }
  }
  return res;
}

CertifyResult phase1_certify(const MathProgram& prog, const SolveOptions& opts,
                             bool relax_binaries) {
  // Elastic program: minimize sum of violations u with
  // lo <= c(x) + u_lo - u_up <= up, u >= 0.
  (void)relax_binaries;
  MathProgram elastic;
  std::vector<double> x0 = prog.start_point();
  for (const auto& v : prog.variables()) {
    elastic.define_variable(v.name, v.lower, v.upper, VarKind::continuous, v.start);
  }
  std::vector<Expr> penalty;
  std::vector<std::pair<int, std::string>> elastic_vars;  // var index -> row tag
  for (const auto& c : prog.constraints()) {
    double at = evaluate(c.body, x0);
    Expr body = c.body;
    if (std::isfinite(c.lower)) {
      double viol = std::max(c.lower - at, 0.0);
      const VarRef& u =
          elastic.define_variable("elastic_lo[" + c.tag + "]", 0.0, kUnbounded,
                                  VarKind::continuous, viol + 0.1);
      body = add(body, variable(u.index));
      penalty.push_back(variable(u.index));
      elastic_vars.emplace_back(u.index, c.tag);
    }
    if (std::isfinite(c.upper)) {
      double viol = std::max(at - c.upper, 0.0);
      const VarRef& u =
          elastic.define_variable("elastic_up[" + c.tag + "]", 0.0, kUnbounded,
                                  VarKind::continuous, viol + 0.1);
      body = sub(body, variable(u.index));
      penalty.push_back(variable(u.index));
      elastic_vars.emplace_back(u.index, c.tag);
    }
    elastic.post_constraint(body, c.lower, c.upper, c.tag);
  }
  elastic.set_objective(sum_of(std::move(penalty)));
  elastic.set_convex(prog.is_convex());

  SolveResult r = ipm_solve(elastic, opts, true);

  CertifyResult out;
  out.total_violation = r.objective;
  if (!is_optimal(r.status)) {
    // Phase-1 itself failed; treat conservatively as no certificate.
    out.verdict = Certificate::feasible_point_found;
    out.point.assign(r.primal.begin(), r.primal.begin() + prog.num_vars());
    return out;
  }
  if (r.objective > 10.0 * opts.tol) {
    out.verdict = Certificate::proven_infeasible;
    std::vector<std::pair<std::string, double>> tags;
    for (auto& [idx, tag] : elastic_vars) {
      double u = r.primal[static_cast<size_t>(idx)];
      if (u > opts.tol) tags.emplace_back(tag, u);
    }
    std::sort(tags.begin(), tags.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
    out.violated_tags = std::move(tags);
  } else {
    out.verdict = Certificate::feasible_point_found;
    out.point.assign(r.primal.begin(), r.primal.begin() + prog.num_vars());
  }
  return out;
}

}  // namespace detail

SolveResult solve_continuous(const MathProgram& prog, const SolveOptions& opts) {
  return detail::ipm_solve(prog, opts, false);
}

CertifyResult certify_infeasibility(const MathProgram& prog, const SolveOptions& opts) {
  if (!prog.is_convex()) {
    fail(Errc::option_error, "infeasibility certification requires a convex-flagged program");
  }
  return detail::phase1_certify(prog, opts, true);
}

KktResiduals kkt_residuals(const MathProgram& prog, const SolveResult& result) {
  KktResiduals out;
  const auto& x = result.primal;
  // Dual-side residuals are measured exactly as the solver's convergence
  // test measures them: on the gradient-scaled objective, divided by the
  // dual-magnitude scalings s_d / s_c.
  const double scale = detail::objective_gradient_scale(prog);

  out.primal_feasibility =
      std::max(max_constraint_violation(prog, x), max_bound_violation(prog, x));

  // stationarity: grad f + sum lam_i grad c_i - zl + zu over the variables;
  // row duals at inactive rows double as a dual-feasibility check through the
  // reconstructed slack multipliers max(-lam,0)/max(lam,0).
  std::vector<double> stat(x.size(), 0.0);
  {
    SparseVec g;
    SparseSym h;
    differentiate(prog.objective(), x, g, h);
    for (size_t k = 0; k < g.index.size(); ++k) stat[static_cast<size_t>(g.index[k])] += g.value[k];
  }
  for (size_t i = 0; i < prog.constraints().size(); ++i) {
    const Constraint& c = prog.constraints()[i];
    double lam = i < result.duals.size() ? result.duals[i] : 0.0;
    if (lam == 0.0) continue;
    SparseVec g;
    SparseSym h;
    differentiate(c.body, x, g, h);
    for (size_t k = 0; k < g.index.size(); ++k) {
      stat[static_cast<size_t>(g.index[k])] += lam * g.value[k];
    }
  }
  for (size_t j = 0; j < x.size(); ++j) {
    double zl = j < result.bound_duals_lower.size() ? result.bound_duals_lower[j] : 0.0;
    double zu = j < result.bound_duals_upper.size() ? result.bound_duals_upper[j] : 0.0;
    stat[j] -= zl;
    stat[j] += zu;
    out.dual_feasibility = std::max(out.dual_feasibility, std::max(-zl, -zu));
    const VarRef& v = prog.variables()[j];
    if (std::isfinite(v.lower)) {
      out.complementarity = std::max(out.complementarity, std::abs(zl * (x[j] - v.lower)));
    }
    if (std::isfinite(v.upper)) {
      out.complementarity = std::max(out.complementarity, std::abs(zu * (v.upper - x[j])));
    }
  }
  for (double s : stat) out.stationarity = std::max(out.stationarity, std::abs(s));

  for (size_t i = 0; i < prog.constraints().size(); ++i) {
    const Constraint& c = prog.constraints()[i];
    if (c.lower == c.upper) continue;  // equality rows: any sign
    double lam = i < result.duals.size() ? result.duals[i] : 0.0;
    double cv = evaluate(c.body, x);
    // reconstructed slack bound duals
    double zl = std::max(-lam, 0.0), zu = std::max(lam, 0.0);
    if (std::isfinite(c.lower)) {
      out.complementarity = std::max(out.complementarity, std::abs(zl * (cv - c.lower)));
    } else {
      out.dual_feasibility = std::max(out.dual_feasibility, zl);
    }
    if (std::isfinite(c.upper)) {
      out.complementarity = std::max(out.complementarity, std::abs(zu * (c.upper - cv)));
    } else {
      out.dual_feasibility = std::max(out.dual_feasibility, zu);
    }
  }
  double lam_norm1 = 0.0, z_norm1 = 0.0;
  int n_bounded = 0;
  for (size_t i = 0; i < result.duals.size(); ++i) lam_norm1 += std::abs(result.duals[i]) * scale;
  for (size_t j = 0; j < x.size(); ++j) {
    const VarRef& v = prog.variables()[j];
    if (std::isfinite(v.lower) && j < result.bound_duals_lower.size()) {
      z_norm1 += std::abs(result.bound_duals_lower[j]) * scale;
      ++n_bounded;
    }
    if (std::isfinite(v.upper) && j < result.bound_duals_upper.size()) {
      z_norm1 += std::abs(result.bound_duals_upper[j]) * scale;
      ++n_bounded;
    }
  }
  double denom = std::max<size_t>(1, prog.constraints().size() + n_bounded);
  double s_d = std::max(100.0, (lam_norm1 + z_norm1) / denom) / 100.0;
  double s_c = std::max(100.0, n_bounded ? z_norm1 / n_bounded : 0.0) / 100.0;

  out.stationarity *= scale / s_d;
  out.dual_feasibility *= scale;
  out.complementarity *= scale / s_c;
  return out;
}

}  // namespace gridopt
