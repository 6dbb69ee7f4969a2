#include "gridopt/problems.hpp"

#include <string>

#include "gridopt/error.hpp"

namespace gridopt {

ProblemId problem_from_string(std::string_view name) {
  if (name == "opf") return ProblemId::opf;
  if (name == "ots") return ProblemId::ots;
  if (name == "pf") return ProblemId::pf;
  fail(Errc::option_error, "unknown problem '" + std::string(name) + "'; expected opf|ots|pf");
}

const char* problem_name(ProblemId problem) noexcept {
  switch (problem) {
    case ProblemId::opf: return "opf";
    case ProblemId::ots: return "ots";
    case ProblemId::pf: return "pf";
  }
  return "?";
}

namespace {

void objective_min_fuel_cost(BuiltProblem& bp, const Network& net) {
  std::vector<Expr> terms;
  for (const auto& [id, gen] : net.gens) {
    Expr pg = variable(bp.gen.pg.at(id));
    const auto& coef = gen.cost.coefficients;
    int degree = gen.cost.degree();
    for (size_t k = 0; k < coef.size(); ++k) {
      if (coef[k] == 0.0) continue;
      terms.push_back(scale(coef[k], pow_int(pg, degree - static_cast<int>(k))));
    }
  }
  bp.prog.set_objective(sum_of(std::move(terms)));
}

}  // namespace

BuiltProblem build_opf(const Network& net, FormulationId form) {
  BuiltProblem bp;
  bp.problem = ProblemId::opf;
  bp.form = form;

  bp.volt = variable_voltage(bp.prog, net, form);
  bp.gen = variable_generation(bp.prog, net, form);
  bp.flow = variable_branch_flow(bp.prog, net, form);
  variable_dcline_flow(bp.prog, net, form, bp.flow);

  objective_min_fuel_cost(bp, net);

  constraint_voltage(bp.prog, net, form, bp.volt);
  for (int ref : net.ref_buses) constraint_theta_ref(bp.prog, net, form, bp.volt, ref);
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
  for (const auto& [id, dc] : net.dclines) {
    (void)dc;
    constraint_dcline(bp.prog, net, form, bp.flow, id);
  }

  bp.prog.set_convex(formulation_is_convex(form));
  return bp;
}

BuiltProblem build_ots(const Network& net, FormulationId form) {
  if (formulation_is_exact_ac(form)) {
    fail(Errc::unsupported_on_off_form,
         std::string("ots requires a relaxation-compatible formulation (dcp, socwr, qcwr); ") +
             formulation_name(form) + " is supported only under fix-and-solve");
  }
  BuiltProblem bp;
  bp.problem = ProblemId::ots;
  bp.form = form;

  variable_branch_indicator(bp.prog, net, bp.flow);
  bp.volt = variable_voltage_on_off(bp.prog, net, form);
  bp.gen = variable_generation(bp.prog, net, form);
  FlowVars flows = variable_branch_flow(bp.prog, net, form);
  bp.flow.branch = std::move(flows.branch);
  variable_dcline_flow(bp.prog, net, form, bp.flow);

  objective_min_fuel_cost(bp, net);

  constraint_voltage_on_off(bp.prog, net, form, bp.volt, bp.flow);
  for (int ref : net.ref_buses) constraint_theta_ref(bp.prog, net, form, bp.volt, ref);
  for (const auto& [id, bus] : net.buses) {
    (void)bus;
    constraint_kcl_shunt(bp.prog, net, form, bp.volt, bp.gen, bp.flow, id);
  }
  for (const auto& [id, br] : net.branches) {
    (void)br;
    constraint_ohms_yt_from_on_off(bp.prog, net, form, bp.volt, bp.flow, id);
    constraint_ohms_yt_to_on_off(bp.prog, net, form, bp.volt, bp.flow, id);
    constraint_voltage_angle_difference_on_off(bp.prog, net, form, bp.volt, bp.flow, id);
    constraint_thermal_limit_from_on_off(bp.prog, net, form, bp.flow, id);
    constraint_thermal_limit_to_on_off(bp.prog, net, form, bp.flow, id);
  }
  for (const auto& [id, dc] : net.dclines) {
    (void)dc;
    constraint_dcline(bp.prog, net, form, bp.flow, id);
  }

  bp.prog.set_convex(formulation_is_convex(form));
  return bp;
}

BuiltProblem build_pf(const Network& net, FormulationId form) {
  BuiltProblem bp;
  bp.problem = ProblemId::pf;
  bp.form = form;

  // Exact forms drop the operating boxes: the state is pinned by set-points
  // and may sit exactly on an OPF-active bound, which a barrier method cannot
  // reach from the interior.  The relaxations keep their boxes (the w-space
  // envelopes are defined by them).  Flow variables stay rate-bounded, which
  // is what certifies overload infeasibility.
  bool boxed = form == FormulationId::socwr || form == FormulationId::qcwr;
  bp.volt = variable_voltage(bp.prog, net, form, boxed);
  bp.gen = variable_generation(bp.prog, net, form, boxed);
  bp.flow = variable_branch_flow(bp.prog, net, form);
  variable_dcline_flow(bp.prog, net, form, bp.flow);

  bp.prog.set_objective(constant(0.0));

  constraint_voltage(bp.prog, net, form, bp.volt);
  for (int ref : net.ref_buses) constraint_theta_ref(bp.prog, net, form, bp.volt, ref);
  for (const auto& [id, bus] : net.buses) {
    (void)bus;
    constraint_kcl_shunt(bp.prog, net, form, bp.volt, bp.gen, bp.flow, id);
  }
  for (const auto& [id, br] : net.branches) {
    (void)br;
    constraint_ohms_yt_from(bp.prog, net, form, bp.volt, bp.flow, id);
    constraint_ohms_yt_to(bp.prog, net, form, bp.volt, bp.flow, id);
  }
  for (const auto& [id, dc] : net.dclines) {
    (void)dc;
    constraint_dcline(bp.prog, net, form, bp.flow, id);
  }

  // Pin active set-points away from the reference buses.
  for (const auto& [id, gen] : net.gens) {
    if (net.ref_buses.count(gen.bus)) continue;
    bp.prog.restrict_bounds(bp.gen.pg.at(id), gen.pg0, gen.pg0);
  }

  // Pin voltage magnitudes at generator buses (AC forms): the set-point is
  // the lowest-id in-service unit's vg.
  if (formulation_has_reactive(form)) {
    std::map<int, double> vset;
    for (const auto& [id, gen] : net.gens) vset.try_emplace(gen.bus, gen.vg);
    for (const auto& [bus, vg] : vset) {
      switch (form) {
        case FormulationId::acp:
          bp.prog.restrict_bounds(bp.volt.vm.at(bus), vg, vg);
          break;
        case FormulationId::qcwr:
          bp.prog.restrict_bounds(bp.volt.vm.at(bus), vg, vg);
          bp.prog.restrict_bounds(bp.volt.w.at(bus), vg * vg, vg * vg);
          break;
        case FormulationId::act:
        case FormulationId::socwr:
          bp.prog.restrict_bounds(bp.volt.w.at(bus), vg * vg, vg * vg);
          break;
        case FormulationId::acr:
          bp.prog.post_constraint(bus_voltage_sqr(form, bp.volt, bus), vg * vg, vg * vg,
                                  "pf_vset:bus=" + std::to_string(bus));
          break;
        case FormulationId::dcp:
          break;
      }
    }
  }

  bp.prog.set_convex(formulation_is_convex(form));
  return bp;
}

BuiltProblem build_problem(const Network& net, ProblemId problem, FormulationId form) {
  switch (problem) {
    case ProblemId::opf: return build_opf(net, form);
    case ProblemId::ots: return build_ots(net, form);
    case ProblemId::pf: return build_pf(net, form);
  }
  fail(Errc::option_error, "bad problem id");
}

}  // namespace gridopt
