// gridopt command-line tool.  Talks to the core exclusively through the
// C API in gridopt.h; JSON is re-rendered locally for pretty printing.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridopt.h"

namespace {

struct CommonOpts {
  double tol = 1e-6;
  int max_iter = 500;
  double time_limit = 0.0;  // 0 = none
  unsigned seed = 0;
  std::string out_path;
  std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOpts& common) {
  cmd->add_option("--tol", common.tol, "KKT tolerance");
  cmd->add_option("--max-iter", common.max_iter, "iteration limit");
  cmd->add_option("--time-limit", common.time_limit, "solver time limit in seconds");
  cmd->add_option("--seed", common.seed, "seed for randomized perturbations");
  cmd->add_option("--out", common.out_path, "write the result to this file");
  cmd->add_option("--format", common.format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));
}

std::string options_json(const CommonOpts& common) {
  nlohmann::json doc;
  doc["tol"] = common.tol;
  doc["max_iter"] = common.max_iter;
  doc["seed"] = common.seed;
  if (common.time_limit > 0) doc["time_limit"] = common.time_limit;
  return doc.dump();
}

int emit(const CommonOpts& common, const std::string& text) {
  if (!common.out_path.empty()) {
    std::ofstream out(common.out_path);
    if (!out) {
      std::cerr << "error: cannot write " << common.out_path << "\n";
      return 1;
    }
    out << text;
    if (text.empty() || text.back() != '\n') out << "\n";
    return 0;
  }
  std::cout << text;
  if (text.empty() || text.back() != '\n') std::cout << "\n";
  return 0;
}

std::string pretty(const char* json_text) {
  auto doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) return json_text;
  return doc.dump(2);
}

int fail_with(gridopt_status status) {
  std::cerr << "error (" << gridopt_status_name(status) << "): " << gridopt_last_error() << "\n";
  return static_cast<int>(status);
}

std::string join_forms(const std::vector<std::string>& forms) {
  std::string out;
  for (const auto& f : forms) {
    if (!out.empty()) out += ",";
    out += f;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridopt: steady-state power-network optimization toolkit"};
  app.require_subcommand(1);

  std::string case_path, dir_path, problem = "opf";
  std::vector<std::string> forms;
  CommonOpts common;

  auto* run_cmd = app.add_subcommand("run", "solve one case / problem / formulation");
  run_cmd->add_option("--case", case_path, "Matpower case file")->required();
  run_cmd->add_option("--problem", problem, "opf | ots | pf");
  run_cmd->add_option("--form", forms, "formulation (acp|acr|act|dcp|socwr|qcwr)")->required();
  add_common(run_cmd, common);

  auto* compare_cmd = app.add_subcommand("compare", "compare formulations against acp");
  compare_cmd->add_option("--case", case_path, "Matpower case file")->required();
  compare_cmd->add_option("--form", forms, "formulations to compare (repeatable, must include acp)");
  add_common(compare_cmd, common);

  auto* screen_cmd = app.add_subcommand("screen", "certify OPF data infeasibility via a convex relaxation");
  screen_cmd->add_option("--case", case_path, "Matpower case file")->required();
  screen_cmd->add_option("--form", forms, "convex formulation (dcp|socwr|qcwr)");
  add_common(screen_cmd, common);

  auto* batch_cmd = app.add_subcommand("batch", "solve every case in a directory into a CSV");
  batch_cmd->add_option("--dir", dir_path, "directory of .m case files")->required();
  batch_cmd->add_option("--problem", problem, "opf | ots | pf");
  batch_cmd->add_option("--form", forms, "formulations (repeatable)");
  add_common(batch_cmd, common);

  auto* validate_cmd = app.add_subcommand("validate", "parse and summarize a case file");
  validate_cmd->add_option("--case", case_path, "Matpower case file")->required();
  add_common(validate_cmd, common);

  CLI11_PARSE(app, argc, argv);
  std::string opts = options_json(common);

  if (run_cmd->parsed()) {
    if (forms.size() != 1) {
      std::cerr << "error: run takes exactly one --form\n";
      return static_cast<int>(GRIDOPT_ERR_OPTION);
    }
    char* result = nullptr;
    gridopt_status st =
        gridopt_run(case_path.c_str(), problem.c_str(), forms[0].c_str(), opts.c_str(), &result);
    if (st != GRIDOPT_OK) return fail_with(st);
    int rc = emit(common, pretty(result));
    gridopt_string_free(result);
    return rc;
  }

  if (compare_cmd->parsed()) {
    if (forms.empty()) forms = {"acp", "acr", "act", "qcwr", "socwr"};
    char* result = nullptr;
    gridopt_status st;
    if (common.format == "csv") {
      st = gridopt_compare_table(case_path.c_str(), join_forms(forms).c_str(), opts.c_str(),
                                 &result);
    } else {
      st = gridopt_compare(case_path.c_str(), join_forms(forms).c_str(), opts.c_str(), &result);
    }
    if (st != GRIDOPT_OK) return fail_with(st);
    int rc = emit(common, common.format == "csv" ? std::string(result) : pretty(result));
    gridopt_string_free(result);
    return rc;
  }

  if (screen_cmd->parsed()) {
    std::string form = forms.empty() ? "socwr" : forms[0];
    char* result = nullptr;
    gridopt_status st =
        gridopt_screen(case_path.c_str(), form.c_str(), opts.c_str(), &result);
    if (st != GRIDOPT_OK) return fail_with(st);
    int rc = emit(common, pretty(result));
    gridopt_string_free(result);
    return rc;
  }

  if (batch_cmd->parsed()) {
    if (forms.empty()) forms = {"acp", "dcp"};
    char* csv = nullptr;
    gridopt_status st = gridopt_batch(dir_path.c_str(), problem.c_str(),
                                      join_forms(forms).c_str(), opts.c_str(),
                                      common.out_path.empty() ? nullptr : common.out_path.c_str(),
                                      &csv);
    if (st != GRIDOPT_OK) return fail_with(st);
    if (common.out_path.empty()) std::cout << csv;
    gridopt_string_free(csv);
    return 0;
  }

  if (validate_cmd->parsed()) {
    char* result = nullptr;
    gridopt_status st = gridopt_validate(case_path.c_str(), &result);
    if (st != GRIDOPT_OK) return fail_with(st);
    int rc = emit(common, pretty(result));
    gridopt_string_free(result);
    return rc;
  }

  return 0;
}
