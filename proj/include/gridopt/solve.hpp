#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridopt/program.hpp"

namespace gridopt {

struct SolveOptions {
  double tol = 1e-6;        // KKT tolerance
  int max_iter = 500;
  double mu_init = 0.1;     // initial barrier parameter
  std::optional<double> time_limit;  // seconds
  double bnb_gap = 1e-6;    // relative MIP gap
  unsigned seed = 0;        // reserved for randomized perturbations
  bool verbose = false;
};

enum class TerminationStatus {
  locally_optimal,
  globally_optimal,    // convex programs only
  proven_infeasible,   // convex programs only
  locally_infeasible,
  iteration_limit,
  time_limit,
  numerical_error,
};

const char* status_name(TerminationStatus s) noexcept;

inline bool is_optimal(TerminationStatus s) {
  return s == TerminationStatus::locally_optimal || s == TerminationStatus::globally_optimal;
}

struct SolveResult {
  TerminationStatus status = TerminationStatus::numerical_error;
  double objective = 0.0;
  std::vector<double> primal;  // one entry per program variable
  std::vector<double> duals;   // one multiplier per constraint row
  // Bound multipliers per variable; kept so optimality can be re-verified
  // from the result alone.
  std::vector<double> bound_duals_lower;
  std::vector<double> bound_duals_upper;
  int iterations = 0;
  double solve_seconds = 0.0;
  // For infeasible outcomes: constraint tags with their violation, largest first.
  std::vector<std::pair<std::string, double>> violated_tags;
};

/// Primal-dual interior-point solve of a smooth continuous program (any
/// binaries must be fixed).  Logarithmic barrier with slacked inequalities,
/// exact Newton steps on the regularized KKT system, fraction-to-boundary
/// rule, and a filter line search over (infeasibility, barrier objective).
SolveResult solve_continuous(const MathProgram& prog, const SolveOptions& opts = {});

/// Best-first branch-and-bound over the binary variables; node bounds come
/// from `relaxation_solver` (defaults to solve_continuous on the box
/// relaxation).  Incumbents are re-solved with binaries fixed.
SolveResult solve_mixed(
    const MathProgram& prog, const SolveOptions& opts = {},
    const std::function<SolveResult(const MathProgram&, const SolveOptions&)>& relaxation_solver =
        {});

enum class Certificate { proven_infeasible, feasible_point_found };

struct CertifyResult {
  Certificate verdict = Certificate::feasible_point_found;
  double total_violation = 0.0;      // phase-1 objective at its optimum
  std::vector<double> point;         // recovered point when feasible
  std::vector<std::pair<std::string, double>> violated_tags;
};

/// Phase-1 elastic program: minimize total constraint violation with unit
/// penalties.  For convex-flagged programs a positive minimum violation
/// (> 10*tol) is a certificate that no feasible point exists.
CertifyResult certify_infeasibility(const MathProgram& prog, const SolveOptions& opts = {});

struct KktResiduals {
  double stationarity = 0.0;
  double primal_feasibility = 0.0;
  double dual_feasibility = 0.0;
  double complementarity = 0.0;

  double worst() const;
};

/// Recomputes the first-order optimality residuals of a result from scratch
/// (independent of the solver's internal state).
KktResiduals kkt_residuals(const MathProgram& prog, const SolveResult& result);

}  // namespace gridopt
