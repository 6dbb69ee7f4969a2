#include "gridopt.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "gridopt/error.hpp"
#include "gridopt/harness.hpp"

namespace {

thread_local std::string g_last_error;

gridopt_status status_of(gridopt::Errc code) {
  using gridopt::Errc;
  switch (code) {
    case Errc::io_error: return GRIDOPT_ERR_IO;
    case Errc::missing_section:
    case Errc::ragged_matrix:
    case Errc::token_error: return GRIDOPT_ERR_PARSE;
    case Errc::no_reference_bus:
    case Errc::dangling_endpoint:
    case Errc::unsupported_cost_model:
    case Errc::invalid_impedance: return GRIDOPT_ERR_DATA;
    case Errc::bounds_crossed:
    case Errc::foreign_variable:
    case Errc::unsupported_on_off_form:
    case Errc::option_error: return GRIDOPT_ERR_OPTION;
    case Errc::internal_error: return GRIDOPT_ERR_INTERNAL;
  }
  return GRIDOPT_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
gridopt_status guarded(Fn&& fn) {
  try {
    fn();
    return GRIDOPT_OK;
  } catch (const gridopt::Error& e) {
    g_last_error = e.message();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GRIDOPT_ERR_INTERNAL;
  }
}

gridopt::SolveOptions parse_options(const char* options_json) {
  gridopt::SolveOptions opts;
  if (!options_json || !*options_json) return opts;
  auto doc = nlohmann::json::parse(options_json, nullptr, false);
  if (doc.is_discarded()) {
    gridopt::fail(gridopt::Errc::option_error, "options_json is not valid JSON");
  }
  if (doc.contains("tol")) opts.tol = doc["tol"].get<double>();
  if (doc.contains("max_iter")) opts.max_iter = doc["max_iter"].get<int>();
  if (doc.contains("mu_init")) opts.mu_init = doc["mu_init"].get<double>();
  if (doc.contains("time_limit")) opts.time_limit = doc["time_limit"].get<double>();
  if (doc.contains("bnb_gap")) opts.bnb_gap = doc["bnb_gap"].get<double>();
  if (doc.contains("seed")) opts.seed = doc["seed"].get<unsigned>();
  if (doc.contains("verbose")) opts.verbose = doc["verbose"].get<bool>();
  if (opts.tol <= 0 || opts.max_iter < 1) {
    gridopt::fail(gridopt::Errc::option_error, "tol must be > 0 and max_iter >= 1");
  }
  return opts;
}

std::vector<gridopt::FormulationId> parse_forms(const char* formulations) {
  if (!formulations || !*formulations) {
    gridopt::fail(gridopt::Errc::option_error, "no formulations given");
  }
  std::string text(formulations);
  for (char& c : text) {
    if (c == ',') c = ' ';
  }
  std::istringstream ss(text);
  std::vector<gridopt::FormulationId> forms;
  std::string tok;
  while (ss >> tok) forms.push_back(gridopt::formulation_from_string(tok));
  if (forms.empty()) gridopt::fail(gridopt::Errc::option_error, "no formulations given");
  return forms;
}

const gridopt::Network& as_network(const gridopt_network* net) {
  if (!net) gridopt::fail(gridopt::Errc::option_error, "null network handle");
  return *reinterpret_cast<const gridopt::Network*>(net);
}

}  // namespace

extern "C" {

const char* gridopt_version(void) { return "0.1.0"; }

const char* gridopt_last_error(void) { return g_last_error.c_str(); }

const char* gridopt_status_name(gridopt_status status) {
  switch (status) {
    case GRIDOPT_OK: return "ok";
    case GRIDOPT_ERR_IO: return "io_error";
    case GRIDOPT_ERR_PARSE: return "parse_error";
    case GRIDOPT_ERR_DATA: return "data_error";
    case GRIDOPT_ERR_OPTION: return "option_error";
    case GRIDOPT_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

void gridopt_string_free(char* text) { std::free(text); }

gridopt_status gridopt_network_load(const char* case_path, gridopt_network** out) {
  return guarded([&] {
    if (!case_path || !out) gridopt::fail(gridopt::Errc::option_error, "null argument");
    auto* net = new gridopt::Network(gridopt::load_network(case_path));
    *out = reinterpret_cast<gridopt_network*>(net);
  });
}

gridopt_status gridopt_network_parse(const char* case_text, gridopt_network** out) {
  return guarded([&] {
    if (!case_text || !out) gridopt::fail(gridopt::Errc::option_error, "null argument");
    auto* net = new gridopt::Network(gridopt::build_network(gridopt::parse_case(case_text)));
    *out = reinterpret_cast<gridopt_network*>(net);
  });
}

void gridopt_network_free(gridopt_network* net) {
  delete reinterpret_cast<gridopt::Network*>(net);
}

gridopt_status gridopt_network_counts(const gridopt_network* net, int* buses, int* gens,
                                      int* branches, int* dclines) {
  return guarded([&] {
    const gridopt::Network& n = as_network(net);
    if (buses) *buses = static_cast<int>(n.buses.size());
    if (gens) *gens = static_cast<int>(n.gens.size());
    if (branches) *branches = static_cast<int>(n.branches.size());
    if (dclines) *dclines = static_cast<int>(n.dclines.size());
  });
}

gridopt_status gridopt_case_to_json(const char* case_text, char** json_out) {
  return guarded([&] {
    if (!case_text || !json_out) gridopt::fail(gridopt::Errc::option_error, "null argument");
    *json_out = dup_string(gridopt::raw_case_to_json(gridopt::parse_case(case_text)).dump());
  });
}

gridopt_status gridopt_validate(const char* case_path, char** json_out) {
  return guarded([&] {
    if (!case_path || !json_out) gridopt::fail(gridopt::Errc::option_error, "null argument");
    *json_out = dup_string(gridopt::validate(case_path).dump());
  });
}

gridopt_status gridopt_solve(const gridopt_network* net, const char* problem,
                             const char* formulation, const char* options_json,
                             char** result_json_out) {
  return guarded([&] {
    if (!problem || !formulation || !result_json_out) {
      gridopt::fail(gridopt::Errc::option_error, "null argument");
    }
    gridopt::ResultDocument doc = gridopt::run_network(
        as_network(net), "network", gridopt::problem_from_string(problem),
        gridopt::formulation_from_string(formulation), parse_options(options_json));
    *result_json_out = dup_string(gridopt::result_to_json(doc).dump());
  });
}

gridopt_status gridopt_run(const char* case_path, const char* problem, const char* formulation,
                           const char* options_json, char** result_json_out) {
  return guarded([&] {
    if (!case_path || !problem || !formulation || !result_json_out) {
      gridopt::fail(gridopt::Errc::option_error, "null argument");
    }
    gridopt::ResultDocument doc =
        gridopt::run(case_path, gridopt::problem_from_string(problem),
                     gridopt::formulation_from_string(formulation), parse_options(options_json));
    *result_json_out = dup_string(gridopt::result_to_json(doc).dump());
  });
}

gridopt_status gridopt_compare(const char* case_path, const char* formulations,
                               const char* options_json, char** report_json_out) {
  return guarded([&] {
    if (!case_path || !report_json_out) gridopt::fail(gridopt::Errc::option_error, "null argument");
    auto report =
        gridopt::compare(case_path, parse_forms(formulations), parse_options(options_json));
    *report_json_out = dup_string(gridopt::comparison_to_json(report).dump());
  });
}

gridopt_status gridopt_compare_table(const char* case_path, const char* formulations,
                                     const char* options_json, char** table_out) {
  return guarded([&] {
    if (!case_path || !table_out) gridopt::fail(gridopt::Errc::option_error, "null argument");
    auto report =
        gridopt::compare(case_path, parse_forms(formulations), parse_options(options_json));
    *table_out = dup_string(gridopt::comparison_to_table(report));
  });
}

gridopt_status gridopt_screen(const char* case_path, const char* formulation,
                              const char* options_json, char** report_json_out) {
  return guarded([&] {
    if (!case_path || !formulation || !report_json_out) {
      gridopt::fail(gridopt::Errc::option_error, "null argument");
    }
    auto report = gridopt::screen_infeasible(
        case_path, gridopt::formulation_from_string(formulation), parse_options(options_json));
    *report_json_out = dup_string(gridopt::screen_to_json(report).dump());
  });
}

gridopt_status gridopt_batch(const char* dir_path, const char* problem,
                             const char* formulations, const char* options_json,
                             const char* out_csv_path, char** csv_out) {
  return guarded([&] {
    if (!dir_path || !problem || !csv_out) {
      gridopt::fail(gridopt::Errc::option_error, "null argument");
    }
    std::string csv = gridopt::batch(dir_path, gridopt::problem_from_string(problem),
                                     parse_forms(formulations),
                                     out_csv_path ? out_csv_path : "", parse_options(options_json));
    *csv_out = dup_string(csv);
  });
}

gridopt_status gridopt_export_program(const gridopt_network* net, const char* problem,
                                      const char* formulation, char** program_json_out) {
  return guarded([&] {
    if (!problem || !formulation || !program_json_out) {
      gridopt::fail(gridopt::Errc::option_error, "null argument");
    }
    gridopt::BuiltProblem bp =
        gridopt::build_problem(as_network(net), gridopt::problem_from_string(problem),
                               gridopt::formulation_from_string(formulation));
    *program_json_out = dup_string(gridopt::program_to_json(bp.prog).dump());
  });
}

gridopt_status gridopt_import_solution(const gridopt_network* net, const char* problem,
                                       const char* formulation, const char* solution_json,
                                       char** report_json_out) {
  return guarded([&] {
    if (!problem || !formulation || !solution_json || !report_json_out) {
      gridopt::fail(gridopt::Errc::option_error, "null argument");
    }
    auto doc = nlohmann::json::parse(solution_json, nullptr, false);
    if (doc.is_discarded() || !doc.contains("primal") || !doc["primal"].is_array()) {
      gridopt::fail(gridopt::Errc::option_error,
                    "solution document must be {\"primal\": [..]} ");
    }
    auto primal = doc["primal"].get<std::vector<double>>();
    gridopt::ImportReport rep = gridopt::import_solution(
        as_network(net), gridopt::problem_from_string(problem),
        gridopt::formulation_from_string(formulation), primal);
    nlohmann::json out;
    out["objective"] = rep.objective;
    out["max_violation"] = rep.max_violation;
    out["feasible"] = rep.feasible;
    *report_json_out = dup_string(out.dump());
  });
}

}  // extern "C"
