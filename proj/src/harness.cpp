#include "gridopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "gridopt/error.hpp"

namespace gridopt {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

double at(const SolveResult& r, int idx) { return r.primal[static_cast<size_t>(idx)]; }

nlohmann::json extract_solution(const Network& net, const BuiltProblem& bp,
                                const SolveResult& r) {
  nlohmann::json sol;
  sol["bus"] = nlohmann::json::object();
  sol["gen"] = nlohmann::json::object();
  sol["branch"] = nlohmann::json::object();
  if (!net.dclines.empty()) sol["dcline"] = nlohmann::json::object();

  const FormulationId form = bp.form;
  for (const auto& [id, bus] : net.buses) {
    (void)bus;
    nlohmann::json b = nlohmann::json::object();
    switch (form) {
      case FormulationId::acp:
        b["vm"] = at(r, bp.volt.vm.at(id));
        b["va"] = at(r, bp.volt.va.at(id));
        break;
      case FormulationId::acr: {
        double vr = at(r, bp.volt.vr.at(id)), vi = at(r, bp.volt.vi.at(id));
        b["vm"] = std::hypot(vr, vi);
        b["va"] = std::atan2(vi, vr);
        break;
      }
      case FormulationId::act:
      case FormulationId::qcwr:
        b["vm"] = std::sqrt(std::max(0.0, at(r, bp.volt.w.at(id))));
        b["va"] = at(r, bp.volt.va.at(id));
        break;
      case FormulationId::socwr:
        b["vm"] = std::sqrt(std::max(0.0, at(r, bp.volt.w.at(id))));
        break;  // no angles to report
      case FormulationId::dcp:
        b["va"] = at(r, bp.volt.va.at(id));
        break;
    }
    sol["bus"][std::to_string(id)] = std::move(b);
  }

  for (const auto& [id, gen] : net.gens) {
    (void)gen;
    nlohmann::json g = nlohmann::json::object();
    g["pg"] = at(r, bp.gen.pg.at(id));
    if (bp.gen.qg.count(id)) g["qg"] = at(r, bp.gen.qg.at(id));
    sol["gen"][std::to_string(id)] = std::move(g);
  }

  for (const auto& [id, arr] : bp.flow.branch) {
    nlohmann::json br = nlohmann::json::object();
    br["pf"] = at(r, arr[kPf]);
    if (arr[kQf] >= 0) br["qf"] = at(r, arr[kQf]);
    br["pt"] = arr[kPt] >= 0 ? at(r, arr[kPt]) : -at(r, arr[kPf]);
    if (arr[kQt] >= 0) br["qt"] = at(r, arr[kQt]);
    if (bp.flow.indicator.count(id)) {
      br["z"] = std::round(at(r, bp.flow.indicator.at(id)));
    }
    sol["branch"][std::to_string(id)] = std::move(br);
  }

  for (const auto& [id, arr] : bp.flow.dcline) {
    nlohmann::json dc = nlohmann::json::object();
    dc["pf"] = at(r, arr[0]);
    dc["pt"] = at(r, arr[1]);
    if (arr[2] >= 0) dc["qf"] = at(r, arr[2]);
    if (arr[3] >= 0) dc["qt"] = at(r, arr[3]);
    sol["dcline"][std::to_string(id)] = std::move(dc);
  }
  return sol;
}

}  // namespace

Network load_network(const std::string& case_path) {
  return build_network(parse_case(slurp(case_path)));
}

ResultDocument run_network(const Network& net, std::string case_name, ProblemId problem,
                           FormulationId form, const SolveOptions& opts) {
  BuiltProblem bp = build_problem(net, problem, form);
  SolveResult r = bp.prog.has_binaries() ? solve_mixed(bp.prog, opts)
                                         : solve_continuous(bp.prog, opts);
  ResultDocument doc;
  doc.case_name = std::move(case_name);
  doc.problem = problem;
  doc.formulation = form;
  doc.status = r.status;
  doc.objective = r.objective;
  doc.solve_seconds = r.solve_seconds;
  doc.iterations = r.iterations;
  doc.violated_tags = r.violated_tags;
  if (is_optimal(r.status) && !r.primal.empty()) {
    doc.solution = extract_solution(net, bp, r);
  }
  return doc;
}

ResultDocument run(const std::string& case_path, ProblemId problem, FormulationId form,
                   const SolveOptions& opts) {
  return run_network(load_network(case_path), stem_of(case_path), problem, form, opts);
}

nlohmann::json result_to_json(const ResultDocument& doc) {
  nlohmann::json out;
  out["case"] = doc.case_name;
  out["problem"] = problem_name(doc.problem);
  out["formulation"] = formulation_name(doc.formulation);
  out["status"] = status_name(doc.status);
  out["objective"] = doc.objective;
  out["solve_seconds"] = doc.solve_seconds;
  out["solution"] = doc.solution;
  if (!doc.violated_tags.empty()) {
    auto tags = nlohmann::json::array();
    for (const auto& [tag, v] : doc.violated_tags) tags.push_back({{"tag", tag}, {"violation", v}});
    out["violated_tags"] = std::move(tags);
  }
  return out;
}

ComparisonReport compare_network(const Network& net, std::string case_name,
                                 const std::vector<FormulationId>& forms,
                                 const SolveOptions& opts) {
  if (std::find(forms.begin(), forms.end(), FormulationId::acp) == forms.end()) {
    fail(Errc::option_error, "comparison requires the acp base formulation");
  }
  // Table II row order, extras appended in request order.
  std::vector<FormulationId> ordered;
  for (FormulationId want : {FormulationId::acp, FormulationId::acr, FormulationId::act,
                             FormulationId::qcwr, FormulationId::socwr}) {
    if (std::find(forms.begin(), forms.end(), want) != forms.end()) ordered.push_back(want);
  }
  for (FormulationId f : forms) {
    if (std::find(ordered.begin(), ordered.end(), f) == ordered.end()) ordered.push_back(f);
  }

  ComparisonReport report;
  report.case_name = std::move(case_name);
  std::optional<double> base;
  for (FormulationId form : ordered) {
    ComparisonRow row;
    row.form = form;
    try {
      ResultDocument doc = run_network(net, report.case_name, ProblemId::opf, form, opts);
      row.status = doc.status;
      row.solve_seconds = doc.solve_seconds;
      if (is_optimal(doc.status)) row.objective = doc.objective;
    } catch (const Error&) {
      row.status = TerminationStatus::numerical_error;
    }
    if (form == FormulationId::acp && row.objective) base = row.objective;
    if (base && row.objective) {
      if (form == FormulationId::acr || form == FormulationId::act) {
        row.delta_vs_base = *row.objective - *base;
      } else if (form == FormulationId::socwr || form == FormulationId::qcwr) {
        row.gap_percent = 100.0 * (*base - *row.objective) / *base;
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

ComparisonReport compare(const std::string& case_path, const std::vector<FormulationId>& forms,
                         const SolveOptions& opts) {
  return compare_network(load_network(case_path), stem_of(case_path), forms, opts);
}

nlohmann::json comparison_to_json(const ComparisonReport& report) {
  nlohmann::json out;
  out["case"] = report.case_name;
  out["base"] = formulation_name(report.base);
  auto rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json j;
    j["formulation"] = formulation_name(row.form);
    j["status"] = status_name(row.status);
    j["solve_seconds"] = row.solve_seconds;
    if (row.objective) j["objective"] = *row.objective;
    if (row.delta_vs_base) j["delta_vs_base"] = *row.delta_vs_base;
    if (row.gap_percent) j["gap_percent"] = *row.gap_percent;
    rows.push_back(std::move(j));
  }
  out["rows"] = std::move(rows);
  return out;
}

namespace {

std::string sig5(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.5g", v);
  return buf;
}

// objective cell under the table legend
std::string objective_cell(TerminationStatus status, const std::optional<double>& objective) {
  if (status == TerminationStatus::proven_infeasible) return "inf.";
  if (!objective) return "n.s.";
  return sig5(*objective);
}

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// csv objective cell: full precision, same n.s./inf. legend
std::string csv_objective_cell(const ResultDocument& doc) {
  if (doc.status == TerminationStatus::proven_infeasible) return "inf.";
  if (!is_optimal(doc.status)) return "n.s.";
  return full(doc.objective);
}

}  // namespace

std::string comparison_to_table(const ComparisonReport& report) {
  std::string out = "case " + report.case_name + " (base acp, objectives in $/h)\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %-16s %14s %12s %10s %10s\n", "form", "status",
                "objective", "delta $/h", "gap %", "seconds");
  out += line;
  for (const auto& row : report.rows) {
    std::string delta = row.delta_vs_base ? sig5(*row.delta_vs_base) : "";
    std::string gap = row.gap_percent ? sig5(*row.gap_percent) : "";
    std::snprintf(line, sizeof(line), "%-8s %-16s %14s %12s %10s %10.2f\n",
                  formulation_name(row.form), status_name(row.status),
                  objective_cell(row.status, row.objective).c_str(), delta.c_str(), gap.c_str(),
                  row.solve_seconds);
    out += line;
  }
  return out;
}

ScreenReport screen_infeasible(const std::string& case_path, FormulationId form,
                               const SolveOptions& opts) {
  if (!formulation_is_convex(form)) {
    fail(Errc::option_error, "infeasibility screening requires a convex formulation "
                             "(dcp, socwr or qcwr)");
  }
  Network net = load_network(case_path);
  BuiltProblem bp = build_opf(net, form);
  CertifyResult cert = certify_infeasibility(bp.prog, opts);
  ScreenReport report;
  report.case_name = stem_of(case_path);
  report.form = form;
  report.verdict = cert.verdict;
  report.total_violation = cert.total_violation;
  report.violated_tags = std::move(cert.violated_tags);
  return report;
}

nlohmann::json screen_to_json(const ScreenReport& report) {
  nlohmann::json out;
  out["case"] = report.case_name;
  out["formulation"] = formulation_name(report.form);
  out["verdict"] = report.verdict == Certificate::proven_infeasible ? "ProvenInfeasible"
                                                                    : "FeasiblePointFound";
  out["total_violation"] = report.total_violation;
  auto tags = nlohmann::json::array();
  for (const auto& [tag, v] : report.violated_tags) {
    tags.push_back({{"tag", tag}, {"violation", v}});
  }
  out["violated_tags"] = std::move(tags);
  return out;
}

std::string batch(const std::string& dir_path, ProblemId problem,
                  const std::vector<FormulationId>& forms, const std::string& out_path,
                  const SolveOptions& opts, int workers) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir_path)) fail(Errc::io_error, dir_path + " is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir_path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".m") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());

  bool with_base = std::find(forms.begin(), forms.end(), FormulationId::acp) != forms.end();

  std::string header = "case,buses,branches";
  for (FormulationId f : forms) {
    std::string n = formulation_name(f);
    header += "," + n + "_objective," + n + "_status," + n + "_seconds";
  }
  for (FormulationId f : forms) {
    if (f == FormulationId::acr || f == FormulationId::act) {
      header += "," + std::string(formulation_name(f)) + "_delta";
    }
  }
  for (FormulationId f : forms) {
    if (f == FormulationId::socwr || f == FormulationId::qcwr) {
      header += "," + std::string(formulation_name(f)) + "_gap";
    }
  }

  std::vector<std::string> rows(files.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < files.size(); i = next.fetch_add(1)) {
      const std::string& path = files[i];
      std::string row = stem_of(path);
      try {
        Network net = load_network(path);
        row += "," + std::to_string(net.buses.size()) + "," + std::to_string(net.branches.size());
        std::map<FormulationId, ResultDocument> done;
        for (FormulationId f : forms) {
          ResultDocument doc = run_network(net, stem_of(path), problem, f, opts);
          done.emplace(f, doc);
          char cell[96];
          std::snprintf(cell, sizeof(cell), ",%s,%s,%.3f", csv_objective_cell(doc).c_str(),
                        status_name(doc.status), doc.solve_seconds);
          row += cell;
        }
        auto base_obj = [&]() -> std::optional<double> {
          if (!with_base) return std::nullopt;
          const ResultDocument& b = done.at(FormulationId::acp);
          if (!is_optimal(b.status)) return std::nullopt;
          return b.objective;
        }();
        for (FormulationId f : forms) {
          if (f != FormulationId::acr && f != FormulationId::act) continue;
          const ResultDocument& d = done.at(f);
          row += (base_obj && is_optimal(d.status)) ? "," + full(d.objective - *base_obj) : ",";
        }
        for (FormulationId f : forms) {
          if (f != FormulationId::socwr && f != FormulationId::qcwr) continue;
          const ResultDocument& d = done.at(f);
          row += (base_obj && is_optimal(d.status))
                     ? "," + full(100.0 * (*base_obj - d.objective) / *base_obj)
                     : ",";
        }
      } catch (const Error& e) {
        // keep the column count aligned: empty numerics, error code as status
        row += ",,";
        for (size_t k = 0; k < forms.size(); ++k) {
          row += std::string(",") + "," + errc_name(e.code()) + ",";
        }
        for (FormulationId f : forms) {
          if (f == FormulationId::acr || f == FormulationId::act ||
              f == FormulationId::socwr || f == FormulationId::qcwr) {
            row += ",";
          }
        }
      }
      rows[i] = std::move(row);
    }
  };

  int n_workers = workers > 0 ? workers
                              : std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  n_workers = std::min<int>(n_workers, std::max<size_t>(files.size(), 1));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::string csv = header + "\n";
  for (const auto& row : rows) csv += row + "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) fail(Errc::io_error, "cannot write " + out_path);
    out << csv;
  }
  return csv;
}

nlohmann::json validate(const std::string& case_path) {
  RawCase raw = parse_case(slurp(case_path));
  Network net = build_network(raw);
  double load_mw = 0.0;
  for (const auto& [id, bus] : net.buses) load_mw += bus.pd * net.base_mva;
  nlohmann::json out;
  out["case"] = stem_of(case_path);
  out["name"] = net.name;
  out["baseMVA"] = net.base_mva;
  out["buses"] = net.buses.size();
  out["gens"] = net.gens.size();
  out["branches"] = net.branches.size();
  out["dclines"] = net.dclines.size();
  out["ref_buses"] = net.ref_buses.size();
  out["total_load_mw"] = load_mw;
  out["gencost_rows"] = raw.gencost.size();
  out["status"] = "ok";
  return out;
}

ImportReport import_solution(const Network& net, ProblemId problem, FormulationId form,
                             const std::vector<double>& primal) {
  BuiltProblem bp = build_problem(net, problem, form);
  if (static_cast<int>(primal.size()) != bp.prog.num_vars()) {
    fail(Errc::option_error, "imported solution has " + std::to_string(primal.size()) +
                                 " entries; the program has " +
                                 std::to_string(bp.prog.num_vars()) + " variables");
  }
  ImportReport rep;
  rep.objective = objective_value(bp.prog, primal);
  rep.max_violation = std::max(max_constraint_violation(bp.prog, primal),
                               max_bound_violation(bp.prog, primal));
  rep.feasible = rep.max_violation <= 1e-5;
  return rep;
}

}  // namespace gridopt
