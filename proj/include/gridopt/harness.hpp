#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridopt/problems.hpp"
#include "gridopt/solve.hpp"

namespace gridopt {

/// One solved (case, problem, formulation) pipeline outcome.  `solution`
/// follows the component-keyed schema: per-bus {vm, va}, per-gen {pg, qg},
/// per-branch {pf, qf, pt, qt, z under ots}, per-dcline {pf, pt, qf, qt};
/// quantities a formulation does not carry are omitted, never zero-filled.
struct ResultDocument {
  std::string case_name;
  ProblemId problem = ProblemId::opf;
  FormulationId formulation = FormulationId::acp;
  TerminationStatus status = TerminationStatus::numerical_error;
  double objective = 0.0;
  double solve_seconds = 0.0;
  int iterations = 0;
  nlohmann::json solution = nlohmann::json::object();
  std::vector<std::pair<std::string, double>> violated_tags;
};

/// JSON with top-level keys: case, problem, formulation, status, objective,
/// solve_seconds, solution.
nlohmann::json result_to_json(const ResultDocument& doc);

ResultDocument run(const std::string& case_path, ProblemId problem, FormulationId form,
                   const SolveOptions& opts = {});
/// Same pipeline from an already-built network (used by tests and batch).
ResultDocument run_network(const Network& net, std::string case_name, ProblemId problem,
                           FormulationId form, const SolveOptions& opts = {});

struct ComparisonRow {
  FormulationId form = FormulationId::acp;
  TerminationStatus status = TerminationStatus::numerical_error;
  std::optional<double> objective;
  double solve_seconds = 0.0;
  std::optional<double> delta_vs_base;  // exact forms: objective - objective(acp), $/h
  std::optional<double> gap_percent;    // relaxations: 100 (acp - relax)/acp
};

/// Formulation comparison with AC-polar as the base; rows ordered
/// acp, acr, act, qcwr, socwr (then anything else requested).
struct ComparisonReport {
  std::string case_name;
  FormulationId base = FormulationId::acp;
  std::vector<ComparisonRow> rows;
};

ComparisonReport compare(const std::string& case_path, const std::vector<FormulationId>& forms,
                         const SolveOptions& opts = {});
ComparisonReport compare_network(const Network& net, std::string case_name,
                                 const std::vector<FormulationId>& forms,
                                 const SolveOptions& opts = {});
nlohmann::json comparison_to_json(const ComparisonReport& report);
/// Table II style text table, objectives to 5 significant digits.
std::string comparison_to_table(const ComparisonReport& report);

struct ScreenReport {
  std::string case_name;
  FormulationId form = FormulationId::dcp;
  Certificate verdict = Certificate::feasible_point_found;
  double total_violation = 0.0;
  std::vector<std::pair<std::string, double>> violated_tags;
};

/// Convex-relaxation infeasibility screening of the OPF data: a proof of
/// relaxation infeasibility is a proof for the exact AC problem too.
ScreenReport screen_infeasible(const std::string& case_path, FormulationId form,
                               const SolveOptions& opts = {});
nlohmann::json screen_to_json(const ScreenReport& report);

/// One CSV row per case file in the directory, solved for every requested
/// formulation on a worker pool.  Objective cells follow the table legend:
/// `n.s.` for non-optimal outcomes, `inf.` for proven infeasibility.
/// Returns the CSV text (also written to out_path when non-empty).
std::string batch(const std::string& dir_path, ProblemId problem,
                  const std::vector<FormulationId>& forms, const std::string& out_path,
                  const SolveOptions& opts = {}, int workers = 0);

/// Parse + build + summarize a case file (throws on invalid data).
nlohmann::json validate(const std::string& case_path);

/// Checks a primal vector against a freshly built program; used for the
/// solution-import path of external solvers.
struct ImportReport {
  double objective = 0.0;
  double max_violation = 0.0;
  bool feasible = false;  // violation <= 1e-5
};
ImportReport import_solution(const Network& net, ProblemId problem, FormulationId form,
                             const std::vector<double>& primal);

Network load_network(const std::string& case_path);

}  // namespace gridopt
