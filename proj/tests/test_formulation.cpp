#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "gridopt/error.hpp"
#include "gridopt/formulation.hpp"
#include "support/ac_oracle.hpp"
#include "support/cases.hpp"
#include "support/nets.hpp"

using namespace gridopt;
using testsupport::ac_branch_flows;
using testsupport::BranchState;
using testsupport::make_branch;
using testsupport::two_bus;

namespace {

Network fixture() { return build_network(parse_case(testsupport::read_case("case3_fixture.m"))); }

// Assigns an exact AC state (plus oracle flows and matching injections) to a
// freshly built two-bus program for any formulation; returns the full
// variable vector.
std::vector<double> exact_assignment(const MathProgram& prog, const Network& net,
                                     FormulationId form, const VoltageVars& volt,
                                     const GenVars& gen, const FlowVars& flow,
                                     const BranchState& s) {
  const Branch& br = net.branches.at(1);
  auto flows = ac_branch_flows(br, s);
  std::vector<double> x(static_cast<size_t>(prog.num_vars()), 0.0);
  auto set = [&](const std::map<int, int>& m, int key, double v) {
    auto it = m.find(key);
    if (it != m.end()) x[static_cast<size_t>(it->second)] = v;
  };

  double dtheta = s.va_f - s.va_t;
  set(volt.vm, 1, s.vm_f);
  set(volt.vm, 2, s.vm_t);
  set(volt.va, 1, s.va_f);
  set(volt.va, 2, s.va_t);
  set(volt.vr, 1, s.vm_f * std::cos(s.va_f));
  set(volt.vi, 1, s.vm_f * std::sin(s.va_f));
  set(volt.vr, 2, s.vm_t * std::cos(s.va_t));
  set(volt.vi, 2, s.vm_t * std::sin(s.va_t));
  set(volt.w, 1, s.vm_f * s.vm_f);
  set(volt.w, 2, s.vm_t * s.vm_t);
  set(volt.wr, 1, s.vm_f * s.vm_t * std::cos(dtheta));
  set(volt.wi, 1, s.vm_f * s.vm_t * std::sin(dtheta));
  set(volt.td, 1, dtheta);
  set(volt.cs, 1, std::cos(dtheta));
  set(volt.sn, 1, std::sin(dtheta));
  set(volt.vv, 1, s.vm_f * s.vm_t);

  const auto& f = flow.branch.at(1);
  x[static_cast<size_t>(f[kPf])] = flows.pf;
  if (f[kQf] >= 0) x[static_cast<size_t>(f[kQf])] = flows.qf;
  if (f[kPt] >= 0) x[static_cast<size_t>(f[kPt])] = flows.pt;
  if (f[kQt] >= 0) x[static_cast<size_t>(f[kQt])] = flows.qt;

  // injections satisfying KCL at both buses
  set(gen.pg, 1, flows.pf + net.buses.at(1).pd);
  set(gen.pg, 2, flows.pt + net.buses.at(2).pd);
  set(gen.qg, 1, flows.qf + net.buses.at(1).qd);
  set(gen.qg, 2, flows.qt + net.buses.at(2).qd);
  return x;
}

struct BuiltParts {
  MathProgram prog;
  VoltageVars volt;
  GenVars gen;
  FlowVars flow;
};

BuiltParts build_parts(const Network& net, FormulationId form) {
  BuiltParts bp;
  bp.volt = variable_voltage(bp.prog, net, form);
  bp.gen = variable_generation(bp.prog, net, form);
  bp.flow = variable_branch_flow(bp.prog, net, form);
  constraint_voltage(bp.prog, net, form, bp.volt);
  for (const auto& [id, bus] : net.buses) {
    (void)bus;
    constraint_kcl_shunt(bp.prog, net, form, bp.volt, bp.gen, bp.flow, id);
  }
  for (const auto& [id, br] : net.branches) {
    (void)br;
    constraint_ohms_yt_from(bp.prog, net, form, bp.volt, bp.flow, id);
    constraint_ohms_yt_to(bp.prog, net, form, bp.volt, bp.flow, id);
    constraint_voltage_angle_difference(bp.prog, net, form, bp.volt, id);
    constraint_thermal_limit_from(bp.prog, net, form, bp.flow, id);
    constraint_thermal_limit_to(bp.prog, net, form, bp.flow, id);
  }
  return bp;
}

}  // namespace

TEST_CASE("variable_voltage counts") {
  Network net = fixture();
  {
    MathProgram p;
    variable_voltage(p, net, FormulationId::acp);
    CHECK(p.num_vars() == 6);  // 3 vm + 3 va
  }
  {
    MathProgram p;
    variable_voltage(p, net, FormulationId::dcp);
    CHECK(p.num_vars() == 3);  // va only
  }
  {
    MathProgram p;
    variable_voltage(p, net, FormulationId::socwr);
    CHECK(p.num_vars() == 3 + 2 * 3);  // N + 2E
  }
  {
    MathProgram p;
    variable_voltage(p, net, FormulationId::acr);
    CHECK(p.num_vars() == 6);
  }
}

TEST_CASE("constraint_voltage counts") {
  Network net = fixture();
  {
    MathProgram p;
    auto v = variable_voltage(p, net, FormulationId::acp);
    constraint_voltage(p, net, FormulationId::acp, v);
    CHECK(p.num_constraints() == 0);
  }
  {
    MathProgram p;
    auto v = variable_voltage(p, net, FormulationId::socwr);
    constraint_voltage(p, net, FormulationId::socwr, v);
    CHECK(p.num_constraints() == 3);  // one cone per branch
  }
  {
    MathProgram p;
    auto v = variable_voltage(p, net, FormulationId::act);
    constraint_voltage(p, net, FormulationId::act, v);
    CHECK(p.num_constraints() == 2 * 3);  // quadratic equality + tangent link
  }
}

TEST_CASE("voltage_product realizations") {
  Network net = two_bus(make_branch(1, 1, 2, 0.0, 0.1));
  // ACP at vm=(1,1), theta=(0,0) -> (1, 0)
  {
    MathProgram p;
    auto v = variable_voltage(p, net, FormulationId::acp);
    auto [re, im] = voltage_product(net, FormulationId::acp, v, 1, 2);
    std::vector<double> x(static_cast<size_t>(p.num_vars()), 0.0);
    x[static_cast<size_t>(v.vm.at(1))] = 1.0;
    x[static_cast<size_t>(v.vm.at(2))] = 1.0;
    CHECK(evaluate(re, x) == doctest::Approx(1.0));
    CHECK(evaluate(im, x) == doctest::Approx(0.0));
  }
  // ACR at vr=(1, 0.8), vi=(0, 0.6) -> (0.8, -0.6), the complex conjugate product
  {
    MathProgram p;
    auto v = variable_voltage(p, net, FormulationId::acr);
    auto [re, im] = voltage_product(net, FormulationId::acr, v, 1, 2);
    std::vector<double> x(static_cast<size_t>(p.num_vars()), 0.0);
    x[static_cast<size_t>(v.vr.at(1))] = 1.0;
    x[static_cast<size_t>(v.vi.at(1))] = 0.0;
    x[static_cast<size_t>(v.vr.at(2))] = 0.8;
    x[static_cast<size_t>(v.vi.at(2))] = 0.6;
    std::complex<double> want = std::complex<double>(1.0, 0.0) * std::conj(std::complex<double>(0.8, 0.6));
    CHECK(evaluate(re, x) == doctest::Approx(want.real()));
    CHECK(evaluate(im, x) == doctest::Approx(want.imag()));
  }
  // DCP -> (0, theta_i - theta_j)
  {
    MathProgram p;
    auto v = variable_voltage(p, net, FormulationId::dcp);
    auto [re, im] = voltage_product(net, FormulationId::dcp, v, 1, 2);
    std::vector<double> x = {0.3, 0.1};
    CHECK(evaluate(re, x) == 0.0);
    CHECK(evaluate(im, x) == doctest::Approx(0.2));
  }
}

TEST_CASE("polar Ohm's law matches the complex-power oracle") {
  // r=0, x=0.1, flat voltages: no flow; at dtheta=0.1: pf = 10 sin(0.1),
  // qf = 10 (1 - cos(0.1)).
  Network net = two_bus(make_branch(1, 1, 2, 0.0, 0.1));
  auto bp = build_parts(net, FormulationId::acp);

  auto probe = [&](const BranchState& s) {
    auto x = exact_assignment(bp.prog, net, FormulationId::acp, bp.volt, bp.gen, bp.flow, s);
    return max_constraint_violation(bp.prog, x);
  };
  CHECK(probe({1.0, 0.0, 1.0, 0.0}) < 1e-12);

  auto flows = ac_branch_flows(net.branches.at(1), {1.0, 0.1, 1.0, 0.0});
  CHECK(flows.pf == doctest::Approx(10 * std::sin(0.1)).epsilon(1e-12));
  CHECK(flows.pf == doctest::Approx(0.998334).epsilon(1e-6));
  CHECK(flows.qf == doctest::Approx(10 * (1 - std::cos(0.1))).epsilon(1e-12));
  CHECK(flows.qf == doctest::Approx(0.0499583).epsilon(1e-5));
  CHECK(probe({1.0, 0.1, 1.0, 0.0}) < 1e-12);

  // with resistance, charging, off-nominal tap and shift
  Network hard = two_bus(make_branch(1, 1, 2, 0.02, 0.15, 0.04, 0.98, 0.05));
  auto hp = build_parts(hard, FormulationId::acp);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> mag(0.92, 1.08), ang(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    BranchState s{mag(rng), ang(rng), mag(rng), ang(rng)};
    auto x = exact_assignment(hp.prog, hard, FormulationId::acp, hp.volt, hp.gen, hp.flow, s);
    CHECK(max_constraint_violation(hp.prog, x) < 1e-10);
  }
}

TEST_CASE("exactness equivalence of acp, acr and act") {
  Network net = two_bus(make_branch(1, 1, 2, 0.03, 0.2, 0.02, 1.04, -0.03));
  auto acp = build_parts(net, FormulationId::acp);
  auto acr = build_parts(net, FormulationId::acr);
  auto act = build_parts(net, FormulationId::act);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> mag(0.91, 1.09), ang(-0.45, 0.45);
  for (int i = 0; i < 100; ++i) {
    BranchState s{mag(rng), ang(rng), mag(rng), ang(rng)};
    // interior angle difference only
    if (s.va_f - s.va_t <= net.branches.at(1).ang_min + 1e-3 ||
        s.va_f - s.va_t >= net.branches.at(1).ang_max - 1e-3) {
      continue;
    }
    auto xp = exact_assignment(acp.prog, net, FormulationId::acp, acp.volt, acp.gen, acp.flow, s);
    auto xr = exact_assignment(acr.prog, net, FormulationId::acr, acr.volt, acr.gen, acr.flow, s);
    auto xt = exact_assignment(act.prog, net, FormulationId::act, act.volt, act.gen, act.flow, s);
    CHECK(max_constraint_violation(acp.prog, xp) < 1e-10);
    CHECK(max_constraint_violation(acr.prog, xr) < 1e-10);
    CHECK(max_constraint_violation(act.prog, xt) < 1e-10);
  }
}

TEST_CASE("relaxation containment: exact branch states satisfy qc and soc sets") {
  Network net = two_bus(make_branch(1, 1, 2, 0.01, 0.12, 0.03));
  auto soc = build_parts(net, FormulationId::socwr);
  auto qc = build_parts(net, FormulationId::qcwr);

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> mag(0.9, 1.1);
  const Branch& br = net.branches.at(1);
  std::uniform_real_distribution<double> ang(br.ang_min, br.ang_max);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    double dtheta = ang(rng);
    BranchState s{mag(rng), dtheta, mag(rng), 0.0};
    auto xs = exact_assignment(soc.prog, net, FormulationId::socwr, soc.volt, soc.gen, soc.flow, s);
    auto xq = exact_assignment(qc.prog, net, FormulationId::qcwr, qc.volt, qc.gen, qc.flow, s);
    CHECK(max_constraint_violation(soc.prog, xs) < 1e-9);
    CHECK(max_bound_violation(soc.prog, xs) < 1e-9);
    CHECK(max_constraint_violation(qc.prog, xq) < 1e-9);
    CHECK(max_bound_violation(qc.prog, xq) < 1e-9);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("line losses are nonnegative on exact states when g >= 0") {
  Network net = two_bus(make_branch(1, 1, 2, 0.05, 0.2, 0.06, 1.02, 0.02));
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> mag(0.9, 1.1), ang(-0.6, 0.6);
  for (int i = 0; i < 500; ++i) {
    auto flows = ac_branch_flows(net.branches.at(1), {mag(rng), ang(rng), mag(rng), ang(rng)});
    CHECK(flows.pf + flows.pt >= -1e-12);
  }
}

TEST_CASE("dcp flows are antisymmetric by construction") {
  Network net = two_bus(make_branch(1, 1, 2, 0.0, 0.1));
  MathProgram p;
  auto volt = variable_voltage(p, net, FormulationId::dcp);
  (void)volt;
  auto flow = variable_branch_flow(p, net, FormulationId::dcp);
  Expr pf = branch_flow_expr(FormulationId::dcp, flow, 1, kPf);
  Expr pt = branch_flow_expr(FormulationId::dcp, flow, 1, kPt);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> val(-2, 2);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(static_cast<size_t>(p.num_vars()));
    for (auto& xi : x) xi = val(rng);
    CHECK(evaluate(pt, x) == doctest::Approx(-evaluate(pf, x)).epsilon(1e-14));
  }
  CHECK(branch_flow_expr(FormulationId::dcp, flow, 1, kQf)->kind == ExprKind::constant);
}

TEST_CASE("dcp ohms and thermal rows reproduce the fixture pattern") {
  Network net = two_bus(make_branch(1, 1, 2, 0.0, 0.1));
  net.branches.at(1).rate_a = 0.5;
  auto bp = build_parts(net, FormulationId::dcp);
  // rows: kcl x2, ohms_p_from, ang_diff, thermal_from (two-sided)
  bool saw_thermal = false;
  for (const auto& c : bp.prog.constraints()) {
    if (c.tag == "thermal_from:branch=1") {
      saw_thermal = true;
      CHECK(c.lower == doctest::Approx(-0.5));
      CHECK(c.upper == doctest::Approx(0.5));
    }
  }
  CHECK(saw_thermal);

  // p_f = (theta_f - theta_t)/x: at dtheta = 0.1, x = 0.1 -> 1.0
  std::vector<double> x(static_cast<size_t>(bp.prog.num_vars()), 0.0);
  x[static_cast<size_t>(bp.volt.va.at(1))] = 0.1;
  x[static_cast<size_t>(bp.flow.branch.at(1)[kPf])] = 1.0;
  for (const auto& c : bp.prog.constraints()) {
    if (c.tag == "ohms_p_from:branch=1") {
      CHECK(evaluate(c.body, x) == doctest::Approx(0.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("thermal limits: absent rate posts nothing, 3-4-5 point is boundary feasible") {
  Network net = two_bus(make_branch(1, 1, 2, 0.0, 0.1));  // no rate_a
  {
    MathProgram p;
    auto flow = variable_branch_flow(p, net, FormulationId::acp);
    constraint_thermal_limit_from(p, net, FormulationId::acp, flow, 1);
    constraint_thermal_limit_to(p, net, FormulationId::acp, flow, 1);
    CHECK(p.num_constraints() == 0);
  }
  net.branches.at(1).rate_a = 0.5;
  {
    MathProgram p;
    auto flow = variable_branch_flow(p, net, FormulationId::acp);
    constraint_thermal_limit_from(p, net, FormulationId::acp, flow, 1);
    REQUIRE(p.num_constraints() == 1);
    std::vector<double> x(static_cast<size_t>(p.num_vars()), 0.0);
    x[static_cast<size_t>(flow.branch.at(1)[kPf])] = 0.3;
    x[static_cast<size_t>(flow.branch.at(1)[kQf])] = 0.4;
    const auto& c = p.constraints()[0];
    CHECK(evaluate(c.body, x) == doctest::Approx(c.upper));  // 0.25 == 0.25
  }
}

TEST_CASE("angle difference rows per formulation") {
  Network net = two_bus(make_branch(1, 1, 2, 0.0, 0.1));
  {
    MathProgram p;
    auto v = variable_voltage(p, net, FormulationId::acp);
    constraint_voltage_angle_difference(p, net, FormulationId::acp, v, 1);
    REQUIRE(p.num_constraints() == 1);
    CHECK(p.constraints()[0].lower == doctest::Approx(-std::numbers::pi / 3));
    CHECK(p.constraints()[0].upper == doctest::Approx(std::numbers::pi / 3));
  }
  {
    // SOCWR with ang_max = pi/4: wi <= wr (tan pi/4 = 1)
    Network n45 = two_bus(make_branch(1, 1, 2, 0.0, 0.1));
    n45.branches.at(1).ang_min = -std::numbers::pi / 4;
    n45.branches.at(1).ang_max = std::numbers::pi / 4;
    MathProgram p;
    auto v = variable_voltage(p, n45, FormulationId::socwr);
    constraint_voltage_angle_difference(p, n45, FormulationId::socwr, v, 1);
    REQUIRE(p.num_constraints() == 2);
    std::vector<double> x(static_cast<size_t>(p.num_vars()), 0.0);
    x[static_cast<size_t>(v.wr.at(1))] = 0.7;
    x[static_cast<size_t>(v.wi.at(1))] = 0.7;
    CHECK(evaluate(p.constraints()[0].body, x) == doctest::Approx(0.0).epsilon(1e-12));
  }
  {
    // clamped +-pi/2 bounds still post finite-tan rows
    Network nc = two_bus(make_branch(1, 1, 2, 0.0, 0.1));
    nc.branches.at(1).ang_min = -std::numbers::pi / 2;
    nc.branches.at(1).ang_max = std::numbers::pi / 2;
    MathProgram p;
    auto v = variable_voltage(p, nc, FormulationId::socwr);
    constraint_voltage_angle_difference(p, nc, FormulationId::socwr, v, 1);
    REQUIRE(p.num_constraints() == 2);
    for (const auto& c : p.constraints()) {
      SparseVec g;
      SparseSym h;
      std::vector<double> x(static_cast<size_t>(p.num_vars()), 0.5);
      differentiate(c.body, x, g, h);
      for (double gv : g.value) CHECK(std::isfinite(gv));
    }
  }
}

TEST_CASE("theta_ref per formulation") {
  Network net = two_bus(make_branch(1, 1, 2, 0.0, 0.1));
  {
    MathProgram p;
    auto v = variable_voltage(p, net, FormulationId::acp);
    constraint_theta_ref(p, net, FormulationId::acp, v, 1);
    REQUIRE(p.num_constraints() == 1);
    CHECK(p.constraints()[0].tag == "theta_ref:bus=1");
    CHECK(p.constraints()[0].lower == 0.0);
    CHECK(p.constraints()[0].upper == 0.0);
  }
  {
    MathProgram p;
    auto v = variable_voltage(p, net, FormulationId::acr);
    constraint_theta_ref(p, net, FormulationId::acr, v, 1);
    CHECK(p.num_constraints() == 2);  // vi = 0 and vr >= 0
  }
  {
    MathProgram p;
    auto v = variable_voltage(p, net, FormulationId::socwr);
    constraint_theta_ref(p, net, FormulationId::socwr, v, 1);
    CHECK(p.num_constraints() == 0);
  }
}

TEST_CASE("kcl rows") {
  // isolated bus, one gen, pd = 1: row is pg = 1
  Network net;
  net.base_mva = 100.0;
  net.buses[1] = testsupport::make_bus(1, BusType::ref, 1.0);
  net.ref_buses = {1};
  net.gens[1] = testsupport::make_gen(1, 1);
  {
    MathProgram p;
    auto volt = variable_voltage(p, net, FormulationId::acp);
    auto gen = variable_generation(p, net, FormulationId::acp);
    FlowVars flow;
    constraint_kcl_shunt(p, net, FormulationId::acp, volt, gen, flow, 1);
    REQUIRE(p.num_constraints() == 2);  // active + reactive
    const auto& c = p.constraints()[0];
    CHECK(c.tag == "kcl_p:bus=1");
    CHECK(c.lower == 1.0);
    CHECK(c.upper == 1.0);
    std::vector<double> x(static_cast<size_t>(p.num_vars()), 0.0);
    x[static_cast<size_t>(gen.pg.at(1))] = 1.0;
    CHECK(evaluate(c.body, x) == doctest::Approx(1.0));
  }
  // shunt sign: gs = 0.05, vm = 1, nothing else -> -0.05 = 0, infeasible
  net.gens.clear();
  net.buses[1].pd = 0.0;
  net.buses[1].gs = 0.05;
  {
    MathProgram p;
    auto volt = variable_voltage(p, net, FormulationId::acp);
    GenVars gen;
    FlowVars flow;
    constraint_kcl_shunt(p, net, FormulationId::acp, volt, gen, flow, 1);
    std::vector<double> x(static_cast<size_t>(p.num_vars()), 0.0);
    x[static_cast<size_t>(volt.vm.at(1))] = 1.0;
    const auto& c = p.constraints()[0];
    CHECK(evaluate(c.body, x) == doctest::Approx(-0.05));
    CHECK(c.lower == 0.0);  // so the row is violated by exactly 0.05
  }
  // AC forms post 2N rows, dcp posts N
  Network fix = fixture();
  {
    MathProgram p;
    auto volt = variable_voltage(p, fix, FormulationId::acp);
    auto gen = variable_generation(p, fix, FormulationId::acp);
    auto flow = variable_branch_flow(p, fix, FormulationId::acp);
    for (const auto& [id, bus] : fix.buses) {
      (void)bus;
      constraint_kcl_shunt(p, fix, FormulationId::acp, volt, gen, flow, id);
    }
    CHECK(p.num_constraints() == 6);
  }
  {
    MathProgram p;
    auto volt = variable_voltage(p, fix, FormulationId::dcp);
    auto gen = variable_generation(p, fix, FormulationId::dcp);
    auto flow = variable_branch_flow(p, fix, FormulationId::dcp);
    for (const auto& [id, bus] : fix.buses) {
      (void)bus;
      constraint_kcl_shunt(p, fix, FormulationId::dcp, volt, gen, flow, id);
    }
    CHECK(p.num_constraints() == 3);
  }
}

TEST_CASE("dcline constraint") {
  Network net = two_bus(make_branch(1, 1, 2, 0.0, 0.1));
  DcLine dc;
  dc.id = 1;
  dc.f_bus = 1;
  dc.t_bus = 2;
  dc.pmin_f = -1.0;
  dc.pmax_f = 1.0;
  dc.pmin_t = -1.0;
  dc.pmax_t = 1.0;
  dc.qmin_f = dc.qmin_t = -0.5;
  dc.qmax_f = dc.qmax_t = 0.5;

  auto check_transfer = [&](double loss0, double loss1, double pf, double want_pt) {
    Network n = net;
    DcLine d = dc;
    d.loss0 = loss0;
    d.loss1 = loss1;
    n.dclines[1] = d;
    MathProgram p;
    FlowVars flow;
    variable_dcline_flow(p, n, FormulationId::acp, flow);
    constraint_dcline(p, n, FormulationId::acp, flow, 1);
    REQUIRE(p.num_constraints() == 1);
    const auto& c = p.constraints()[0];
    std::vector<double> x(static_cast<size_t>(p.num_vars()), 0.0);
    x[static_cast<size_t>(flow.dcline.at(1)[0])] = pf;
    x[static_cast<size_t>(flow.dcline.at(1)[1])] = want_pt;
    CHECK(evaluate(c.body, x) == doctest::Approx(c.lower).epsilon(1e-12));
  };
  check_transfer(0.0, 0.0, 0.7, -0.7);   // lossless: p_t = -p_f
  check_transfer(0.01, 0.0, 0.5, -0.49); // affine loss

  // no dclines -> no constraints
  MathProgram p;
  FlowVars flow;
  variable_dcline_flow(p, net, FormulationId::acp, flow);
  CHECK(p.num_vars() == 0);
}

TEST_CASE("on/off variants") {
  Network net = two_bus(make_branch(1, 1, 2, 0.0, 0.1));
  net.branches.at(1).rate_a = 0.5;

  // big-M example: x=0.1, tau=1, bounds +-pi/3, shift 0 -> (2pi/3)/0.1
  CHECK(dcp_ohms_big_m(net.branches.at(1)) ==
        doctest::Approx((2 * std::numbers::pi / 3) / 0.1).epsilon(1e-12));
  CHECK(dcp_ohms_big_m(net.branches.at(1)) == doctest::Approx(20.944).epsilon(1e-4));

  // dcp: z = 1 reproduces ohms exactly; z = 0 deactivates it and zeroes flow
  {
    MathProgram p;
    FlowVars flow;
    variable_branch_indicator(p, net, flow);
    auto volt = variable_voltage_on_off(p, net, FormulationId::dcp);
    auto f2 = variable_branch_flow(p, net, FormulationId::dcp);
    flow.branch = f2.branch;
    constraint_ohms_yt_from_on_off(p, net, FormulationId::dcp, volt, flow, 1);
    constraint_thermal_limit_from_on_off(p, net, FormulationId::dcp, flow, 1);
    REQUIRE(p.num_constraints() == 4);

    auto violated = [&](std::vector<double> x) { return max_constraint_violation(p, x); };
    int zi = flow.indicator.at(1), pfi = flow.branch.at(1)[kPf];
    int va1 = volt.va.at(1), va2 = volt.va.at(2);
    std::vector<double> x(static_cast<size_t>(p.num_vars()), 0.0);
    // on: flow must match the dc law
    x[static_cast<size_t>(zi)] = 1.0;
    x[static_cast<size_t>(va1)] = 0.03;
    x[static_cast<size_t>(va2)] = 0.0;
    x[static_cast<size_t>(pfi)] = 0.3;
    CHECK(violated(x) < 1e-12);
    x[static_cast<size_t>(pfi)] = 0.1;  // wrong flow while on: violated
    CHECK(violated(x) > 0.1);
    // off: any in-range angles, zero flow
    x[static_cast<size_t>(zi)] = 0.0;
    x[static_cast<size_t>(pfi)] = 0.0;
    x[static_cast<size_t>(va1)] = 0.4;
    CHECK(violated(x) < 1e-12);
    // off with nonzero flow: the z-scaled cap bites
    x[static_cast<size_t>(pfi)] = 0.2;
    CHECK(violated(x) > 0.1);
  }

  // w-space: z = 0 forces wr, wi and the w copies to zero, flows vanish
  {
    MathProgram p;
    FlowVars flow;
    variable_branch_indicator(p, net, flow);
    auto volt = variable_voltage_on_off(p, net, FormulationId::socwr);
    auto f2 = variable_branch_flow(p, net, FormulationId::socwr);
    flow.branch = f2.branch;
    constraint_voltage_on_off(p, net, FormulationId::socwr, volt, flow);
    constraint_ohms_yt_from_on_off(p, net, FormulationId::socwr, volt, flow, 1);
    constraint_ohms_yt_to_on_off(p, net, FormulationId::socwr, volt, flow, 1);

    std::vector<double> x(static_cast<size_t>(p.num_vars()), 0.0);
    x[static_cast<size_t>(volt.w.at(1))] = 1.02;
    x[static_cast<size_t>(volt.w.at(2))] = 0.98;
    // off: everything branch-local at zero
    CHECK(max_constraint_violation(p, x) < 1e-12);
    // on: copies must track the bus w and the product box re-activates
    x[static_cast<size_t>(flow.indicator.at(1))] = 1.0;
    x[static_cast<size_t>(volt.w_from.at(1))] = 1.02;
    x[static_cast<size_t>(volt.w_to.at(1))] = 0.98;
    x[static_cast<size_t>(volt.wr.at(1))] = 0.999;
    x[static_cast<size_t>(volt.wi.at(1))] = 0.01;
    // flows per the w-space ohms
    auto [g, b] = branch_admittance(net.branches.at(1));
    double pf = g * 1.02 - (g * 0.999 + b * 0.01);
    double qf = -(b + 0.0) * 1.02 - (g * 0.01 - b * 0.999);
    double pt = g * 0.98 - (g * 0.999 - b * 0.01);
    double qt = -(b + 0.0) * 0.98 + (g * 0.01 + b * 0.999);
    x[static_cast<size_t>(flow.branch.at(1)[kPf])] = pf;
    x[static_cast<size_t>(flow.branch.at(1)[kQf])] = qf;
    x[static_cast<size_t>(flow.branch.at(1)[kPt])] = pt;
    x[static_cast<size_t>(flow.branch.at(1)[kQt])] = qt;
    CHECK(max_constraint_violation(p, x) < 1e-9);
  }

  // exact AC forms are rejected
  {
    MathProgram p;
    CHECK_THROWS_AS(variable_voltage_on_off(p, net, FormulationId::acp), Error);
    try {
      variable_voltage_on_off(p, net, FormulationId::acr);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unsupported_on_off_form);
    }
  }
}
