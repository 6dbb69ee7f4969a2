#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

#include "gridopt/error.hpp"
#include "gridopt/solve.hpp"
#include "ipm.hpp"

namespace gridopt {

namespace {

constexpr double kIntTol = 1e-6;

struct Node {
  double bound;                              // parent relaxation objective
  std::vector<std::pair<int, double>> fixes; // binary index -> 0/1
  std::vector<double> warm;                  // parent solution for starts

  bool operator>(const Node& other) const { return bound > other.bound; }
};

MathProgram with_fixes(const MathProgram& base, const std::vector<std::pair<int, double>>& fixes,
                       const std::vector<double>& warm) {
  MathProgram node = base;
  if (!warm.empty()) {
    for (int j = 0; j < node.num_vars(); ++j) node.set_start(j, warm[static_cast<size_t>(j)]);
  }
  for (auto [idx, val] : fixes) node.restrict_bounds(idx, val, val);
  return node;
}

}  // namespace

SolveResult solve_mixed(
    const MathProgram& prog, const SolveOptions& opts,
    const std::function<SolveResult(const MathProgram&, const SolveOptions&)>& relaxation_solver) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };
  auto out_of_time = [&] { return opts.time_limit && elapsed() > *opts.time_limit; };

  auto relax = relaxation_solver
                   ? relaxation_solver
                   : [](const MathProgram& p, const SolveOptions& o) {
                       return detail::ipm_solve(p, o, /*relax_binaries=*/true);
                     };

  std::vector<int> binaries;
  for (const auto& v : prog.variables()) {
    if (v.kind == VarKind::binary && v.lower < v.upper) binaries.push_back(v.index);
  }
  if (binaries.empty()) {
    return detail::ipm_solve(prog, opts, /*relax_binaries=*/true);
  }

  const bool convex = prog.is_convex();
  int total_iterations = 0;
  bool any_local_only = false;

  std::optional<SolveResult> incumbent;
  auto cutoff = [&] {
    if (!incumbent) return std::numeric_limits<double>::infinity();
    return incumbent->objective - opts.bnb_gap * std::max(1.0, std::abs(incumbent->objective));
  };

  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;
  open.push(Node{-std::numeric_limits<double>::infinity(), {}, {}});

  while (!open.empty()) {
    if (out_of_time()) break;
    Node node = open.top();
    open.pop();
    if (node.bound >= cutoff()) continue;  // valid pruning only for convex bounds

    MathProgram relaxed = with_fixes(prog, node.fixes, node.warm);
    SolveResult r = relax(relaxed, opts);
    total_iterations += r.iterations;
    if (!is_optimal(r.status)) {
      // infeasible or failed node: prune (a failed node is also pruned, which
      // for nonconvex programs keeps the search heuristic)
      if (r.status != TerminationStatus::proven_infeasible &&
          r.status != TerminationStatus::locally_infeasible) {
        any_local_only = true;
      }
      continue;
    }
    if (r.status == TerminationStatus::locally_optimal) any_local_only = true;
    if (convex && r.objective >= cutoff()) continue;

    // Find the most fractional unfixed binary.
    int branch_var = -1;
    double best_frac = kIntTol;
    for (int idx : binaries) {
      double v = r.primal[static_cast<size_t>(idx)];
      double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > best_frac) {
        best_frac = frac;
        branch_var = idx;
      }
    }

    if (branch_var < 0) {
      // Integer feasible: re-solve with every binary pinned to its rounded
      // value for a clean primal-dual point.
      std::vector<std::pair<int, double>> all_fixed = node.fixes;
      for (int idx : binaries) {
        bool already = std::any_of(all_fixed.begin(), all_fixed.end(),
                                   [&](const auto& f) { return f.first == idx; });
        if (!already) all_fixed.emplace_back(idx, std::round(r.primal[static_cast<size_t>(idx)]));
      }
      MathProgram fixed = with_fixes(prog, all_fixed, r.primal);
      SolveResult polished = relax(fixed, opts);
      total_iterations += polished.iterations;
      const SolveResult& cand = is_optimal(polished.status) ? polished : r;
      if (!incumbent || cand.objective < incumbent->objective) {
        incumbent = cand;
      }
      continue;
    }

    Node child0{r.objective, node.fixes, r.primal};
    child0.fixes.emplace_back(branch_var, 0.0);
    Node child1{r.objective, node.fixes, r.primal};
    child1.fixes.emplace_back(branch_var, 1.0);
    open.push(std::move(child0));
    open.push(std::move(child1));
  }

  SolveResult out;
  if (incumbent) {
    out = *incumbent;
    if (!open.empty() && out_of_time()) {
      out.status = TerminationStatus::time_limit;
    } else {
      out.status = (convex && !any_local_only) ? TerminationStatus::globally_optimal
                                               : TerminationStatus::locally_optimal;
    }
  } else if (out_of_time()) {
    out.status = TerminationStatus::time_limit;
    out.primal.assign(static_cast<size_t>(prog.num_vars()), 0.0);
  } else {
    out.status = convex ? TerminationStatus::proven_infeasible
                        : TerminationStatus::locally_infeasible;
    out.primal.assign(static_cast<size_t>(prog.num_vars()), 0.0);
  }
  out.iterations = total_iterations;
  out.solve_seconds = elapsed();
  return out;
}

}  // namespace gridopt
