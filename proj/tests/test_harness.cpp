#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "gridopt/error.hpp"
#include "gridopt/harness.hpp"
#include "support/cases.hpp"

using namespace gridopt;

namespace {

std::vector<double> solution_to_primal(const Network& net, const BuiltProblem& bp,
                                       const nlohmann::json& sol) {
  std::vector<double> x(static_cast<size_t>(bp.prog.num_vars()), 0.0);
  auto put = [&](const std::map<int, int>& vars, int id, const nlohmann::json& obj,
                 const char* key) {
    if (vars.count(id) && obj.contains(key)) {
      x[static_cast<size_t>(vars.at(id))] = obj[key].get<double>();
    }
  };
  for (const auto& [id, bus] : net.buses) {
    (void)bus;
    const auto& b = sol["bus"][std::to_string(id)];
    put(bp.volt.vm, id, b, "vm");
    put(bp.volt.va, id, b, "va");
  }
  for (const auto& [id, gen] : net.gens) {
    (void)gen;
    const auto& g = sol["gen"][std::to_string(id)];
    put(bp.gen.pg, id, g, "pg");
    put(bp.gen.qg, id, g, "qg");
  }
  for (const auto& [id, arr] : bp.flow.branch) {
    const auto& br = sol["branch"][std::to_string(id)];
    x[static_cast<size_t>(arr[kPf])] = br["pf"].get<double>();
    if (arr[kQf] >= 0) x[static_cast<size_t>(arr[kQf])] = br["qf"].get<double>();
    if (arr[kPt] >= 0) x[static_cast<size_t>(arr[kPt])] = br["pt"].get<double>();
    if (arr[kQt] >= 0) x[static_cast<size_t>(arr[kQt])] = br["qt"].get<double>();
  }
  return x;
}

}  // namespace

TEST_CASE("run: fixture dcp result document") {
  ResultDocument doc = run(testsupport::case_path("case3_fixture.m"), ProblemId::opf,
                           FormulationId::dcp);
  CHECK(doc.status == TerminationStatus::globally_optimal);
  CHECK(doc.objective == doctest::Approx(173.5).epsilon(1e-8));
  CHECK(doc.case_name == "case3_fixture");

  auto j = result_to_json(doc);
  for (const char* key : {"case", "problem", "formulation", "status", "objective",
                          "solve_seconds", "solution"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["status"] == "GloballyOptimal");
  // dcp carries no voltage magnitudes and no reactive quantities
  CHECK_FALSE(j["solution"]["bus"]["1"].contains("vm"));
  CHECK(j["solution"]["bus"]["1"].contains("va"));
  CHECK_FALSE(j["solution"]["gen"]["1"].contains("qg"));
  CHECK_FALSE(j["solution"]["branch"]["1"].contains("qf"));
  CHECK(j["solution"]["branch"]["1"]["pt"].get<double>() ==
        doctest::Approx(-j["solution"]["branch"]["1"]["pf"].get<double>()));
}

TEST_CASE("run: missing section surfaces as a parse error") {
  auto tmp = std::filesystem::temp_directory_path() / "gridopt_bad_case.m";
  std::ofstream(tmp) << "mpc.baseMVA = 100;\nmpc.gen = [1 0 0 1 -1 1 100 1 10 0;];\nmpc.branch = [];\n";
  try {
    run(tmp.string(), ProblemId::opf, FormulationId::dcp);
    FAIL("expected missing_section");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_section);
  }
  std::filesystem::remove(tmp);
}

TEST_CASE("solution fidelity: reported solutions satisfy a fresh program") {
  for (const char* name : {"case9_wscc.m", "case5_pjm.m"}) {
    Network net = load_network(testsupport::case_path(name));
    for (FormulationId form : {FormulationId::acp, FormulationId::dcp}) {
      ResultDocument doc = run_network(net, name, ProblemId::opf, form);
      REQUIRE(is_optimal(doc.status));
      BuiltProblem bp = build_problem(net, ProblemId::opf, form);
      auto x = solution_to_primal(net, bp, doc.solution);
      CHECK(max_constraint_violation(bp.prog, x) < 1e-5);
      CHECK(max_bound_violation(bp.prog, x) < 1e-5);
    }
  }
}

TEST_CASE("compare: row order, gap and delta columns, arithmetic") {
  ComparisonReport rep = compare(testsupport::case_path("case9_wscc.m"),
                                 {FormulationId::socwr, FormulationId::acp, FormulationId::acr,
                                  FormulationId::qcwr, FormulationId::act});
  REQUIRE(rep.rows.size() == 5);
  CHECK(rep.rows[0].form == FormulationId::acp);
  CHECK(rep.rows[1].form == FormulationId::acr);
  CHECK(rep.rows[2].form == FormulationId::act);
  CHECK(rep.rows[3].form == FormulationId::qcwr);
  CHECK(rep.rows[4].form == FormulationId::socwr);

  CHECK_FALSE(rep.rows[0].delta_vs_base.has_value());
  CHECK_FALSE(rep.rows[0].gap_percent.has_value());
  CHECK(rep.rows[1].delta_vs_base.has_value());
  CHECK_FALSE(rep.rows[1].gap_percent.has_value());
  CHECK(rep.rows[3].gap_percent.has_value());
  CHECK_FALSE(rep.rows[3].delta_vs_base.has_value());

  double base = *rep.rows[0].objective;
  CHECK(std::abs(*rep.rows[1].delta_vs_base - (*rep.rows[1].objective - base)) < 1e-12);
  CHECK(std::abs(*rep.rows[3].gap_percent -
                 100.0 * (base - *rep.rows[3].objective) / base) < 1e-12);
  // exact forms agree; qc is at least as strong as soc
  CHECK(std::abs(*rep.rows[1].delta_vs_base) <= 1e-4 * base);
  CHECK(std::abs(*rep.rows[2].delta_vs_base) <= 1e-4 * base);
  CHECK(*rep.rows[3].gap_percent <= *rep.rows[4].gap_percent + 1e-4);

  auto j = comparison_to_json(rep);
  CHECK(j["rows"].size() == 5);
  std::string table = comparison_to_table(rep);
  CHECK(table.find("acp") != std::string::npos);

  CHECK_THROWS_AS(compare(testsupport::case_path("case9_wscc.m"), {FormulationId::dcp}), Error);
}

TEST_CASE("screen: overload proven infeasible with the load bus kcl tag") {
  ScreenReport rep =
      screen_infeasible(testsupport::case_path("case2_overload.m"), FormulationId::dcp);
  CHECK(rep.verdict == Certificate::proven_infeasible);
  REQUIRE(!rep.violated_tags.empty());
  CHECK(rep.violated_tags[0].first == "kcl_p:bus=2");

  ScreenReport soc =
      screen_infeasible(testsupport::case_path("case2_overload.m"), FormulationId::socwr);
  CHECK(soc.verdict == Certificate::proven_infeasible);

  ScreenReport ok =
      screen_infeasible(testsupport::case_path("case3_fixture.m"), FormulationId::socwr);
  CHECK(ok.verdict == Certificate::feasible_point_found);

  CHECK_THROWS_AS(
      screen_infeasible(testsupport::case_path("case3_fixture.m"), FormulationId::acp), Error);
}

TEST_CASE("batch: legend cells, alignment, empty directory") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "gridopt_batch_test";
  fs::create_directories(dir);
  fs::copy_file(testsupport::case_path("case3_fixture.m"), dir / "case3_fixture.m",
                fs::copy_options::overwrite_existing);
  fs::copy_file(testsupport::case_path("case2_overload.m"), dir / "case2_overload.m",
                fs::copy_options::overwrite_existing);

  std::string csv = batch(dir.string(), ProblemId::opf, {FormulationId::dcp},
                          (dir / "out.csv").string());
  CHECK(csv.find("case,buses,branches,dcp_objective,dcp_status,dcp_seconds") == 0);
  CHECK(csv.find("case2_overload,2,1,inf.,ProvenInfeasible") != std::string::npos);
  CHECK(csv.find("case3_fixture,3,3,173.5") != std::string::npos);
  std::ifstream written(dir / "out.csv");
  CHECK(written.good());

  // a broken file is recorded in-row and the batch still completes
  std::ofstream(dir / "broken.m") << "mpc.baseMVA = 100;\n";
  std::string csv_err = batch(dir.string(), ProblemId::opf, {FormulationId::dcp}, "");
  CHECK(csv_err.find("broken,,,,missing_section,") != std::string::npos);

  fs::path empty = dir / "empty";
  fs::create_directories(empty);
  std::string header_only = batch(empty.string(), ProblemId::opf, {FormulationId::dcp}, "");
  CHECK(header_only == "case,buses,branches,dcp_objective,dcp_status,dcp_seconds\n");

  fs::remove_all(dir);
}

TEST_CASE("run: ots result carries rounded branch indicators") {
  ResultDocument doc = run(testsupport::case_path("case3_fixture.m"), ProblemId::ots,
                           FormulationId::dcp);
  REQUIRE(is_optimal(doc.status));
  CHECK(doc.objective == doctest::Approx(56.5).epsilon(1e-6));
  int on = 0;
  for (const auto& [id, br] : doc.solution["branch"].items()) {
    (void)id;
    REQUIRE(br.contains("z"));
    double z = br["z"].get<double>();
    CHECK((z == 0.0 || z == 1.0));
    on += static_cast<int>(z);
  }
  CHECK(on < 3);  // the optimum opens at least one line on this fixture
}

TEST_CASE("validate summary") {
  auto v = validate(testsupport::case_path("case5_pjm.m"));
  CHECK(v["buses"] == 5);
  CHECK(v["branches"] == 6);
  CHECK(v["gens"] == 5);
  CHECK(v["ref_buses"] == 1);
  CHECK(v["total_load_mw"].get<double>() == doctest::Approx(1000.0));
  CHECK(v["status"] == "ok");
}

TEST_CASE("concurrent solves of one shared network agree with sequential ones") {
  Network net = load_network(testsupport::case_path("case9_wscc.m"));
  const std::vector<FormulationId> forms = {FormulationId::acp, FormulationId::acr,
                                            FormulationId::dcp, FormulationId::socwr};
  std::vector<double> sequential;
  for (FormulationId f : forms) {
    sequential.push_back(run_network(net, "case9", ProblemId::opf, f).objective);
  }
  std::vector<double> concurrent(forms.size(), 0.0);
  std::vector<std::thread> pool;
  for (size_t i = 0; i < forms.size(); ++i) {
    pool.emplace_back([&, i] {
      concurrent[i] = run_network(net, "case9", ProblemId::opf, forms[i]).objective;
    });
  }
  for (auto& t : pool) t.join();
  for (size_t i = 0; i < forms.size(); ++i) {
    CHECK(concurrent[i] == doctest::Approx(sequential[i]).epsilon(1e-10));
  }
}

TEST_CASE("solution import round trip") {
  Network net = load_network(testsupport::case_path("case3_fixture.m"));
  BuiltProblem bp = build_opf(net, FormulationId::dcp);
  SolveResult r = solve_continuous(bp.prog);
  REQUIRE(is_optimal(r.status));
  ImportReport rep = import_solution(net, ProblemId::opf, FormulationId::dcp, r.primal);
  CHECK(rep.feasible);
  CHECK(rep.objective == doctest::Approx(r.objective).epsilon(1e-10));

  std::vector<double> junk(r.primal.size(), 0.0);
  ImportReport bad = import_solution(net, ProblemId::opf, FormulationId::dcp, junk);
  CHECK_FALSE(bad.feasible);
}
