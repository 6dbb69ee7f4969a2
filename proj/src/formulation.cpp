#include "gridopt/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gridopt/error.hpp"

namespace gridopt {

namespace {

// Angle bounds are kept strictly inside (-pi/2, pi/2) before any tan().
constexpr double kTanCap = 1.5707963267948966 - 1e-4;

double cap(double angle) { return std::min(std::max(angle, -kTanCap), kTanCap); }

double theta_max(const Branch& br) {
  return cap(std::max(std::abs(br.ang_min), br.ang_max));
}

std::string key(const char* name, const char* comp, int id) {
  return std::string(name) + ":" + comp + "=" + std::to_string(id);
}

std::string vname(const char* name, int id) {
  return std::string(name) + "[" + std::to_string(id) + "]";
}

void require_on_off_form(FormulationId form) {
  if (formulation_is_exact_ac(form)) {
    fail(Errc::unsupported_on_off_form,
         std::string("on/off constraints are not available for ") + formulation_name(form) +
             "; use dcp, socwr or qcwr (exact AC forms only under fix-and-solve)");
  }
}

// Voltage-product box for w-space forms.
struct WrWiBounds {
  double wr_lo, wr_hi, wi_hi;  // wi box is symmetric +-wi_hi
};

WrWiBounds wrwi_bounds(const Network& net, const Branch& br) {
  const Bus& f = net.buses.at(br.f_bus);
  const Bus& t = net.buses.at(br.t_bus);
  double tm = theta_max(br);
  return {f.vm_min * t.vm_min * std::cos(tm), f.vm_max * t.vm_max,
          f.vm_max * t.vm_max * std::sin(tm)};
}

Expr var(int index) { return variable(index); }

// z - x*y McCormick rows over [xl,xu] x [yl,yu]; valid linear envelopes of
// the bilinear product.
void mccormick(MathProgram& prog, const Expr& z, const Expr& x, const Expr& y, double xl,
               double xu, double yl, double yu, const std::string& tag) {
  prog.post_constraint(sum_of({z, scale(-xl, y), scale(-yl, x)}), -xl * yl, kUnbounded,
                       tag + ":ll");
  prog.post_constraint(sum_of({z, scale(-xu, y), scale(-yu, x)}), -xu * yu, kUnbounded,
                       tag + ":uu");
  prog.post_constraint(sum_of({z, scale(-xl, y), scale(-yu, x)}), -kUnbounded, -xl * yu,
                       tag + ":lu");
  prog.post_constraint(sum_of({z, scale(-xu, y), scale(-yl, x)}), -kUnbounded, -xu * yl,
                       tag + ":ul");
}

}  // namespace

FormulationId formulation_from_string(std::string_view name) {
  if (name == "acp") return FormulationId::acp;
  if (name == "acr") return FormulationId::acr;
  if (name == "act") return FormulationId::act;
  if (name == "dcp") return FormulationId::dcp;
  if (name == "socwr") return FormulationId::socwr;
  if (name == "qcwr") return FormulationId::qcwr;
  fail(Errc::option_error, "unknown formulation '" + std::string(name) +
                               "'; expected acp|acr|act|dcp|socwr|qcwr");
}

const char* formulation_name(FormulationId form) noexcept {
  switch (form) {
    case FormulationId::acp: return "acp";
    case FormulationId::acr: return "acr";
    case FormulationId::act: return "act";
    case FormulationId::dcp: return "dcp";
    case FormulationId::socwr: return "socwr";
    case FormulationId::qcwr: return "qcwr";
  }
  return "?";
}

bool formulation_is_convex(FormulationId form) noexcept {
  return form == FormulationId::dcp || form == FormulationId::socwr ||
         form == FormulationId::qcwr;
}

bool formulation_is_exact_ac(FormulationId form) noexcept {
  return form == FormulationId::acp || form == FormulationId::acr || form == FormulationId::act;
}

bool formulation_has_angles(FormulationId form) noexcept {
  return form != FormulationId::socwr && form != FormulationId::acr;
}

bool formulation_has_reactive(FormulationId form) noexcept {
  return form != FormulationId::dcp;
}

namespace {

VoltageVars voltage_vars_impl(MathProgram& prog, const Network& net, FormulationId form,
                              bool on_off, bool bounded) {
  VoltageVars v;
  auto vm_lo = [&](const Bus& bus) { return bounded ? bus.vm_min : 0.0; };
  auto vm_hi = [&](const Bus& bus) { return bounded ? bus.vm_max : kUnbounded; };
  switch (form) {
    case FormulationId::acp:
      for (const auto& [id, bus] : net.buses) {
        v.vm[id] = prog.define_variable(vname("vm", id), vm_lo(bus), vm_hi(bus),
                                        VarKind::continuous, 1.0).index;
      }
      for (const auto& [id, bus] : net.buses) {
        (void)bus;
        v.va[id] =
            prog.define_variable(vname("va", id), -kUnbounded, kUnbounded, VarKind::continuous, 0.0)
                .index;
      }
      break;
    case FormulationId::acr:
      for (const auto& [id, bus] : net.buses) {
        double lim = bounded ? bus.vm_max : kUnbounded;
        v.vr[id] =
            prog.define_variable(vname("vr", id), -lim, lim, VarKind::continuous, 1.0).index;
      }
      for (const auto& [id, bus] : net.buses) {
        double lim = bounded ? bus.vm_max : kUnbounded;
        v.vi[id] =
            prog.define_variable(vname("vi", id), -lim, lim, VarKind::continuous, 0.0).index;
      }
      break;
    case FormulationId::dcp:
      for (const auto& [id, bus] : net.buses) {
        (void)bus;
        v.va[id] =
            prog.define_variable(vname("va", id), -kUnbounded, kUnbounded, VarKind::continuous, 0.0)
                .index;
      }
      break;
    case FormulationId::act:
    case FormulationId::socwr:
    case FormulationId::qcwr: {
      if (form != FormulationId::socwr) {
        for (const auto& [id, bus] : net.buses) {
          (void)bus;
          v.va[id] = prog.define_variable(vname("va", id), -kUnbounded, kUnbounded,
                                          VarKind::continuous, 0.0).index;
        }
      }
      if (form == FormulationId::qcwr) {
        for (const auto& [id, bus] : net.buses) {
          v.vm[id] = prog.define_variable(vname("vm", id), vm_lo(bus), vm_hi(bus),
                                          VarKind::continuous, 1.0).index;
        }
      }
      for (const auto& [id, bus] : net.buses) {
        double lo = bounded ? bus.vm_min * bus.vm_min : 0.0;
        double hi = bounded ? bus.vm_max * bus.vm_max : kUnbounded;
        v.w[id] = prog.define_variable(vname("w", id), lo, hi, VarKind::continuous, 1.0).index;
      }
      for (const auto& [id, br] : net.branches) {
        WrWiBounds b = wrwi_bounds(net, br);
        double wr_lo = bounded ? (on_off ? std::min(0.0, b.wr_lo) : b.wr_lo) : -kUnbounded;
        double wr_hi = bounded ? b.wr_hi : kUnbounded;
        double wi_hi = bounded ? b.wi_hi : kUnbounded;
        v.wr[id] = prog.define_variable(vname("wr", id), wr_lo, wr_hi, VarKind::continuous, 1.0)
                       .index;
        v.wi[id] =
            prog.define_variable(vname("wi", id), -wi_hi, wi_hi, VarKind::continuous, 0.0).index;
      }
      if (form == FormulationId::qcwr && !on_off) {
        for (const auto& [id, br] : net.branches) {
          v.td[id] = prog.define_variable(vname("td", id), br.ang_min, br.ang_max,
                                          VarKind::continuous, 0.0).index;
        }
        for (const auto& [id, br] : net.branches) {
          double tm = theta_max(br);
          v.cs[id] = prog.define_variable(vname("cs", id), std::cos(tm), 1.0,
                                          VarKind::continuous, 1.0).index;
        }
        for (const auto& [id, br] : net.branches) {
          v.sn[id] = prog.define_variable(vname("sn", id), std::sin(cap(br.ang_min)),
                                          std::sin(cap(br.ang_max)), VarKind::continuous, 0.0)
                         .index;
        }
        for (const auto& [id, br] : net.branches) {
          const Bus& f = net.buses.at(br.f_bus);
          const Bus& t = net.buses.at(br.t_bus);
          v.vv[id] = prog.define_variable(vname("vv", id), f.vm_min * t.vm_min,
                                          f.vm_max * t.vm_max, VarKind::continuous, 1.0).index;
        }
      }
      if (on_off) {
        for (const auto& [id, br] : net.branches) {
          const Bus& f = net.buses.at(br.f_bus);
          const Bus& t = net.buses.at(br.t_bus);
          v.w_from[id] = prog.define_variable(vname("w_from", id), 0.0, f.vm_max * f.vm_max,
                                              VarKind::continuous, 1.0).index;
          v.w_to[id] = prog.define_variable(vname("w_to", id), 0.0, t.vm_max * t.vm_max,
                                            VarKind::continuous, 1.0).index;
        }
      }
      break;
    }
  }
  return v;
}

}  // namespace

VoltageVars variable_voltage(MathProgram& prog, const Network& net, FormulationId form,
                             bool bounded) {
  return voltage_vars_impl(prog, net, form, false, bounded);
}

VoltageVars variable_voltage_on_off(MathProgram& prog, const Network& net, FormulationId form) {
  require_on_off_form(form);
  return voltage_vars_impl(prog, net, form, true, true);
}

GenVars variable_generation(MathProgram& prog, const Network& net, FormulationId form,
                            bool bounded) {
  GenVars g;
  for (const auto& [id, gen] : net.gens) {
    double lo = bounded ? gen.pmin : -kUnbounded;
    double hi = bounded ? gen.pmax : kUnbounded;
    g.pg[id] = prog.define_variable(vname("pg", id), lo, hi, VarKind::continuous,
                                    0.5 * (gen.pmin + gen.pmax)).index;
  }
  if (formulation_has_reactive(form)) {
    for (const auto& [id, gen] : net.gens) {
      double lo = bounded ? gen.qmin : -kUnbounded;
      double hi = bounded ? gen.qmax : kUnbounded;
      g.qg[id] = prog.define_variable(vname("qg", id), lo, hi, VarKind::continuous,
                                      0.5 * (gen.qmin + gen.qmax)).index;
    }
  }
  return g;
}

FlowVars variable_branch_flow(MathProgram& prog, const Network& net, FormulationId form) {
  FlowVars f;
  for (const auto& [id, br] : net.branches) {
    double lim = br.rate_a ? *br.rate_a : kUnbounded;
    auto flow_var = [&](const char* name) {
      return prog.define_variable(vname(name, id), -lim, lim, VarKind::continuous, 0.0).index;
    };
    if (form == FormulationId::dcp) {
      f.branch[id] = {flow_var("pf"), -1, -1, -1};
    } else {
      f.branch[id] = {flow_var("pf"), flow_var("qf"), flow_var("pt"), flow_var("qt")};
    }
  }
  return f;
}

void variable_dcline_flow(MathProgram& prog, const Network& net, FormulationId form,
                          FlowVars& flow) {
  for (const auto& [id, dc] : net.dclines) {
    auto mk = [&](const char* name, double lo, double hi) {
      return prog.define_variable(vname(name, id), lo, hi, VarKind::continuous, 0.5 * (lo + hi))
          .index;
    };
    int pf = mk("pdc_f", dc.pmin_f, dc.pmax_f);
    int pt = mk("pdc_t", dc.pmin_t, dc.pmax_t);
    int qf = -1, qt = -1;
    if (formulation_has_reactive(form)) {
      qf = mk("qdc_f", dc.qmin_f, dc.qmax_f);
      qt = mk("qdc_t", dc.qmin_t, dc.qmax_t);
    }
    flow.dcline[id] = {pf, pt, qf, qt};
  }
}

void variable_branch_indicator(MathProgram& prog, const Network& net, FlowVars& flow) {
  for (const auto& [id, br] : net.branches) {
    (void)br;
    flow.indicator[id] =
        prog.define_variable(vname("z", id), 0.0, 1.0, VarKind::binary, 1.0).index;
  }
}

std::pair<Expr, Expr> voltage_product(const Network& net, FormulationId form,
                                      const VoltageVars& volt, int bus_i, int bus_j) {
  switch (form) {
    case FormulationId::acp: {
      Expr mag = mul(var(volt.vm.at(bus_i)), var(volt.vm.at(bus_j)));
      Expr dtheta = sub(var(volt.va.at(bus_i)), var(volt.va.at(bus_j)));
      return {mul(mag, cos_of(dtheta)), mul(mag, sin_of(dtheta))};
    }
    case FormulationId::acr: {
      Expr vri = var(volt.vr.at(bus_i)), vrj = var(volt.vr.at(bus_j));
      Expr vii = var(volt.vi.at(bus_i)), vij = var(volt.vi.at(bus_j));
      return {add(mul(vri, vrj), mul(vii, vij)), sub(mul(vii, vrj), mul(vri, vij))};
    }
    case FormulationId::dcp:
      return {constant(0.0), sub(var(volt.va.at(bus_i)), var(volt.va.at(bus_j)))};
    case FormulationId::act:
    case FormulationId::socwr:
    case FormulationId::qcwr: {
      // keyed by branch; locate the branch joining the pair
      for (const auto& [id, br] : net.branches) {
        if (br.f_bus == bus_i && br.t_bus == bus_j) {
          return {var(volt.wr.at(id)), var(volt.wi.at(id))};
        }
        if (br.f_bus == bus_j && br.t_bus == bus_i) {
          return {var(volt.wr.at(id)), negate(var(volt.wi.at(id)))};
        }
      }
      fail(Errc::internal_error, "no branch joins buses " + std::to_string(bus_i) + " and " +
                                     std::to_string(bus_j));
    }
  }
  fail(Errc::internal_error, "bad formulation");
}

Expr bus_voltage_sqr(FormulationId form, const VoltageVars& volt, int bus) {
  switch (form) {
    case FormulationId::acp: return pow_int(var(volt.vm.at(bus)), 2);
    case FormulationId::acr:
      return add(pow_int(var(volt.vr.at(bus)), 2), pow_int(var(volt.vi.at(bus)), 2));
    case FormulationId::dcp: return constant(1.0);
    case FormulationId::act:
    case FormulationId::socwr:
    case FormulationId::qcwr: return var(volt.w.at(bus));
  }
  fail(Errc::internal_error, "bad formulation");
}

Expr branch_flow_expr(FormulationId form, const FlowVars& flow, int branch, int quantity) {
  const auto& idx = flow.branch.at(branch);
  if (form == FormulationId::dcp) {
    if (quantity == kPf) return var(idx[kPf]);
    if (quantity == kPt) return negate(var(idx[kPf]));
    return constant(0.0);
  }
  return var(idx[static_cast<size_t>(quantity)]);
}

namespace {

// Branch-level voltage products with the phase shift rotated in:
//   re' = vm_f vm_t cos(theta_f - theta_t - shift)
//   im' = vm_f vm_t sin(theta_f - theta_t - shift)
// For w-space forms the on/off pair (wr, wi) plays the unshifted product.
std::pair<Expr, Expr> shifted_products(const Network& net, FormulationId form,
                                       const VoltageVars& volt, const Branch& br) {
  Expr re, im;
  if (volt.wr.count(br.id)) {
    re = var(volt.wr.at(br.id));
    im = var(volt.wi.at(br.id));
  } else {
    std::tie(re, im) = voltage_product(net, form, volt, br.f_bus, br.t_bus);
  }
  if (br.theta_shift == 0.0) return {re, im};
  double cs = std::cos(br.theta_shift), sn = std::sin(br.theta_shift);
  return {add(scale(cs, re), scale(sn, im)), sub(scale(cs, im), scale(sn, re))};
}

struct OhmsParts {
  Expr v2_from_scaled;  // |V_f|^2 / tau^2 realization (w_from for on/off)
  Expr v2_to;
  Expr re, im;  // shifted products divided by tau
};

OhmsParts ohms_parts(const Network& net, FormulationId form, const VoltageVars& volt,
                     const Branch& br) {
  OhmsParts parts;
  double tau2 = br.tau * br.tau;
  Expr v2f = volt.w_from.count(br.id) ? var(volt.w_from.at(br.id))
                                      : bus_voltage_sqr(form, volt, br.f_bus);
  Expr v2t = volt.w_to.count(br.id) ? var(volt.w_to.at(br.id))
                                    : bus_voltage_sqr(form, volt, br.t_bus);
  parts.v2_from_scaled = scale(1.0 / tau2, v2f);
  parts.v2_to = v2t;
  auto [re, im] = shifted_products(net, form, volt, br);
  parts.re = scale(1.0 / br.tau, re);
  parts.im = scale(1.0 / br.tau, im);
  return parts;
}

Expr dcp_flow_expr(const Branch& br, const VoltageVars& volt) {
  double b_dc = 1.0 / (br.x * br.tau);
  return scale(b_dc, sum_of({var(volt.va.at(br.f_bus)), negate(var(volt.va.at(br.t_bus))),
                             constant(-br.theta_shift)}));
}

}  // namespace

void constraint_ohms_yt_from(MathProgram& prog, const Network& net, FormulationId form,
                             const VoltageVars& volt, const FlowVars& flow, int branch) {
  const Branch& br = net.branches.at(branch);
  if (form == FormulationId::dcp) {
    Expr body = sub(branch_flow_expr(form, flow, branch, kPf), dcp_flow_expr(br, volt));
    prog.post_constraint(body, 0.0, 0.0, key("ohms_p_from", "branch", branch));
    return;
  }
  auto [g, b] = branch_admittance(br);
  OhmsParts parts = ohms_parts(net, form, volt, br);
  double bc2 = br.b_c / 2.0;
  // p_f = g v2f/t^2 - (g re' + b im')/t
  Expr p = sum_of({branch_flow_expr(form, flow, branch, kPf),
                   scale(-g, parts.v2_from_scaled), scale(g, parts.re), scale(b, parts.im)});
  prog.post_constraint(p, 0.0, 0.0, key("ohms_p_from", "branch", branch));
  // q_f = -(b + bc/2) v2f/t^2 - (g im' - b re')/t
  Expr q = sum_of({branch_flow_expr(form, flow, branch, kQf),
                   scale(b + bc2, parts.v2_from_scaled), scale(g, parts.im),
                   scale(-b, parts.re)});
  prog.post_constraint(q, 0.0, 0.0, key("ohms_q_from", "branch", branch));
}

void constraint_ohms_yt_to(MathProgram& prog, const Network& net, FormulationId form,
                           const VoltageVars& volt, const FlowVars& flow, int branch) {
  if (form == FormulationId::dcp) return;  // p_t = -p_f by construction
  const Branch& br = net.branches.at(branch);
  auto [g, b] = branch_admittance(br);
  OhmsParts parts = ohms_parts(net, form, volt, br);
  double bc2 = br.b_c / 2.0;
  // p_t = g v2t - (g re' - b im')/t
  Expr p = sum_of({branch_flow_expr(form, flow, branch, kPt), scale(-g, parts.v2_to),
                   scale(g, parts.re), scale(-b, parts.im)});
  prog.post_constraint(p, 0.0, 0.0, key("ohms_p_to", "branch", branch));
  // q_t = -(b + bc/2) v2t + (g im' + b re')/t
  Expr q = sum_of({branch_flow_expr(form, flow, branch, kQt), scale(b + bc2, parts.v2_to),
                   scale(-g, parts.im), scale(-b, parts.re)});
  prog.post_constraint(q, 0.0, 0.0, key("ohms_q_to", "branch", branch));
}

void constraint_kcl_shunt(MathProgram& prog, const Network& net, FormulationId form,
                          const VoltageVars& volt, const GenVars& gen, const FlowVars& flow,
                          int bus) {
  const Bus& b = net.buses.at(bus);
  std::vector<Expr> p_terms, q_terms;
  for (const auto& [id, g] : net.gens) {
    if (g.bus != bus) continue;
    p_terms.push_back(var(gen.pg.at(id)));
    if (formulation_has_reactive(form)) q_terms.push_back(var(gen.qg.at(id)));
  }
  for (const auto& [id, br] : net.branches) {
    if (br.f_bus == bus) {
      p_terms.push_back(negate(branch_flow_expr(form, flow, id, kPf)));
      if (formulation_has_reactive(form)) {
        q_terms.push_back(negate(branch_flow_expr(form, flow, id, kQf)));
      }
    }
    if (br.t_bus == bus) {
      p_terms.push_back(negate(branch_flow_expr(form, flow, id, kPt)));
      if (formulation_has_reactive(form)) {
        q_terms.push_back(negate(branch_flow_expr(form, flow, id, kQt)));
      }
    }
  }
  for (const auto& [id, dc] : net.dclines) {
    int side = dc.f_bus == bus ? 0 : (dc.t_bus == bus ? 1 : -1);
    if (side < 0) continue;
    const auto& idx = flow.dcline.at(id);
    p_terms.push_back(negate(var(idx[static_cast<size_t>(side)])));
    if (formulation_has_reactive(form) && idx[2] >= 0) {
      q_terms.push_back(negate(var(idx[side == 0 ? 2 : 3])));
    }
  }
  if (b.gs != 0.0) p_terms.push_back(scale(-b.gs, bus_voltage_sqr(form, volt, bus)));
  prog.post_constraint(sum_of(std::move(p_terms)), b.pd, b.pd, key("kcl_p", "bus", bus));

  if (formulation_has_reactive(form)) {
    if (b.bs != 0.0) q_terms.push_back(scale(b.bs, bus_voltage_sqr(form, volt, bus)));
    prog.post_constraint(sum_of(std::move(q_terms)), b.qd, b.qd, key("kcl_q", "bus", bus));
  }
}

void constraint_thermal_limit_from(MathProgram& prog, const Network& net, FormulationId form,
                                   const FlowVars& flow, int branch) {
  const Branch& br = net.branches.at(branch);
  if (!br.rate_a) return;
  double rate = *br.rate_a;
  if (form == FormulationId::dcp) {
    prog.post_constraint(branch_flow_expr(form, flow, branch, kPf), -rate, rate,
                         key("thermal_from", "branch", branch));
    return;
  }
  Expr body = add(pow_int(branch_flow_expr(form, flow, branch, kPf), 2),
                  pow_int(branch_flow_expr(form, flow, branch, kQf), 2));
  prog.post_constraint(body, -kUnbounded, rate * rate, key("thermal_from", "branch", branch));
}

void constraint_thermal_limit_to(MathProgram& prog, const Network& net, FormulationId form,
                                 const FlowVars& flow, int branch) {
  const Branch& br = net.branches.at(branch);
  if (!br.rate_a || form == FormulationId::dcp) return;  // dcp to-side equals the from-side
  double rate = *br.rate_a;
  Expr body = add(pow_int(branch_flow_expr(form, flow, branch, kPt), 2),
                  pow_int(branch_flow_expr(form, flow, branch, kQt), 2));
  prog.post_constraint(body, -kUnbounded, rate * rate, key("thermal_to", "branch", branch));
}

void constraint_voltage_angle_difference(MathProgram& prog, const Network& net,
                                         FormulationId form, const VoltageVars& volt,
                                         int branch) {
  const Branch& br = net.branches.at(branch);
  switch (form) {
    case FormulationId::acp:
    case FormulationId::act:
    case FormulationId::dcp:
    case FormulationId::qcwr: {
      Expr d = sub(var(volt.va.at(br.f_bus)), var(volt.va.at(br.t_bus)));
      prog.post_constraint(d, br.ang_min, br.ang_max, key("ang_diff", "branch", branch));
      return;
    }
    case FormulationId::acr: {
      auto [re, im] = voltage_product(net, form, volt, br.f_bus, br.t_bus);
      prog.post_constraint(sub(im, scale(std::tan(cap(br.ang_max)), re)), -kUnbounded, 0.0,
                           key("ang_diff_hi", "branch", branch));
      prog.post_constraint(sub(im, scale(std::tan(cap(br.ang_min)), re)), 0.0, kUnbounded,
                           key("ang_diff_lo", "branch", branch));
      return;
    }
    case FormulationId::socwr: {
      Expr wr = var(volt.wr.at(branch)), wi = var(volt.wi.at(branch));
      prog.post_constraint(sub(wi, scale(std::tan(cap(br.ang_max)), wr)), -kUnbounded, 0.0,
                           key("ang_diff_hi", "branch", branch));
      prog.post_constraint(sub(wi, scale(std::tan(cap(br.ang_min)), wr)), 0.0, kUnbounded,
                           key("ang_diff_lo", "branch", branch));
      return;
    }
  }
}

void constraint_theta_ref(MathProgram& prog, const Network& net, FormulationId form,
                          const VoltageVars& volt, int bus) {
  (void)net;
  switch (form) {
    case FormulationId::acp:
    case FormulationId::act:
    case FormulationId::dcp:
    case FormulationId::qcwr:
      prog.post_constraint(var(volt.va.at(bus)), 0.0, 0.0, key("theta_ref", "bus", bus));
      return;
    case FormulationId::acr:
      prog.post_constraint(var(volt.vi.at(bus)), 0.0, 0.0, key("theta_ref_im", "bus", bus));
      prog.post_constraint(var(volt.vr.at(bus)), 0.0, kUnbounded,
                           key("theta_ref_re", "bus", bus));
      return;
    case FormulationId::socwr:
      return;  // no angle variables to pin
  }
}

namespace {

void qcwr_bus_links(MathProgram& prog, const Network& net, const VoltageVars& volt) {
  for (const auto& [id, bus] : net.buses) {
    Expr vm = var(volt.vm.at(id)), w = var(volt.w.at(id));
    // vm^2 <= w <= (vmin + vmax) vm - vmin vmax
    prog.post_constraint(sub(pow_int(vm, 2), w), -kUnbounded, 0.0, key("w_lb", "bus", id));
    prog.post_constraint(sub(w, scale(bus.vm_min + bus.vm_max, vm)), -kUnbounded,
                         -bus.vm_min * bus.vm_max, key("w_ub", "bus", id));
  }
}

void soc_cone(MathProgram& prog, const VoltageVars& volt, int branch, int w_f, int w_t) {
  Expr body = sum_of({pow_int(var(volt.wr.at(branch)), 2), pow_int(var(volt.wi.at(branch)), 2),
                      negate(mul(var(w_f), var(w_t)))});
  prog.post_constraint(body, -kUnbounded, 0.0, key("soc", "branch", branch));
}

}  // namespace

void constraint_voltage(MathProgram& prog, const Network& net, FormulationId form,
                        const VoltageVars& volt) {
  switch (form) {
    case FormulationId::acp:
    case FormulationId::dcp:
      return;
    case FormulationId::acr:
      for (const auto& [id, bus] : net.buses) {
        Expr mag2 = bus_voltage_sqr(form, volt, id);
        prog.post_constraint(mag2, bus.vm_min * bus.vm_min, bus.vm_max * bus.vm_max,
                             key("voltage_mag", "bus", id));
      }
      return;
    case FormulationId::act:
      for (const auto& [id, br] : net.branches) {
        Expr wr = var(volt.wr.at(id)), wi = var(volt.wi.at(id));
        Expr quad = sum_of({pow_int(wr, 2), pow_int(wi, 2),
                            negate(mul(var(volt.w.at(br.f_bus)), var(volt.w.at(br.t_bus))))});
        prog.post_constraint(quad, 0.0, 0.0, key("w_link", "branch", id));
        Expr dtheta = sub(var(volt.va.at(br.f_bus)), var(volt.va.at(br.t_bus)));
        prog.post_constraint(sub(wi, mul(wr, tan_of(dtheta))), 0.0, 0.0,
                             key("w_tan", "branch", id));
      }
      return;
    case FormulationId::socwr:
      for (const auto& [id, br] : net.branches) {
        soc_cone(prog, volt, id, volt.w.at(br.f_bus), volt.w.at(br.t_bus));
      }
      return;
    case FormulationId::qcwr: {
      qcwr_bus_links(prog, net, volt);
      for (const auto& [id, br] : net.branches) {
        const Bus& f = net.buses.at(br.f_bus);
        const Bus& t = net.buses.at(br.t_bus);
        double tm = theta_max(br);
        double amin = cap(br.ang_min), amax = cap(br.ang_max);
        Expr td = var(volt.td.at(id)), cs = var(volt.cs.at(id)), sn = var(volt.sn.at(id));
        Expr vv = var(volt.vv.at(id));

        // td tracks the angle difference exactly
        prog.post_constraint(
            sub(td, sub(var(volt.va.at(br.f_bus)), var(volt.va.at(br.t_bus)))), 0.0, 0.0,
            key("td_link", "branch", id));

        // cosine envelope: quadratic upper bound, chord lower bound
        double quad_coef = (1.0 - std::cos(tm)) / (tm * tm);
        prog.post_constraint(add(cs, scale(quad_coef, pow_int(td, 2))), -kUnbounded, 1.0,
                             key("cs_ub", "branch", id));
        double chord = (std::cos(amax) - std::cos(amin)) / (amax - amin);
        prog.post_constraint(sub(cs, scale(chord, td)), std::cos(amin) - chord * amin,
                             kUnbounded, key("cs_lb", "branch", id));

        // sine envelope: tangent lines at +-tm/2
        double c_half = std::cos(tm / 2.0), s_half = std::sin(tm / 2.0);
        prog.post_constraint(sub(sn, scale(c_half, td)), -kUnbounded,
                             s_half - c_half * tm / 2.0, key("sn_ub", "branch", id));
        prog.post_constraint(sub(sn, scale(c_half, td)), c_half * tm / 2.0 - s_half, kUnbounded,
                             key("sn_lb", "branch", id));

        // vv = vm_f * vm_t, wr = vv cs, wi = vv sn via McCormick
        mccormick(prog, vv, var(volt.vm.at(br.f_bus)), var(volt.vm.at(br.t_bus)), f.vm_min,
                  f.vm_max, t.vm_min, t.vm_max, key("vv_mc", "branch", id));
        double vv_lo = f.vm_min * t.vm_min, vv_hi = f.vm_max * t.vm_max;
        mccormick(prog, var(volt.wr.at(id)), vv, cs, vv_lo, vv_hi, std::cos(tm), 1.0,
                  key("wr_mc", "branch", id));
        mccormick(prog, var(volt.wi.at(id)), vv, sn, vv_lo, vv_hi, std::sin(cap(br.ang_min)),
                  std::sin(cap(br.ang_max)), key("wi_mc", "branch", id));

        soc_cone(prog, volt, id, volt.w.at(br.f_bus), volt.w.at(br.t_bus));
      }
      return;
    }
  }
}

void constraint_dcline(MathProgram& prog, const Network& net, FormulationId form,
                       const FlowVars& flow, int dcline) {
  (void)form;
  const DcLine& dc = net.dclines.at(dcline);
  const auto& idx = flow.dcline.at(dcline);
  // p_f + p_t = loss0 + loss1 * p_f
  Expr body = add(scale(1.0 - dc.loss1, var(idx[0])), var(idx[1]));
  prog.post_constraint(body, dc.loss0, dc.loss0, key("dcline", "dcline", dcline));
}

double dcp_ohms_big_m(const Branch& branch) {
  return (std::abs(branch.ang_min) + branch.ang_max + std::abs(branch.theta_shift)) /
         (branch.x * branch.tau);
}

void constraint_voltage_on_off(MathProgram& prog, const Network& net, FormulationId form,
                               const VoltageVars& volt, const FlowVars& flow) {
  require_on_off_form(form);
  if (form == FormulationId::dcp) return;
  if (form == FormulationId::qcwr) qcwr_bus_links(prog, net, volt);
  for (const auto& [id, br] : net.branches) {
    Expr z = var(flow.indicator.at(id));
    WrWiBounds b = wrwi_bounds(net, br);
    // z-scaled voltage-product boxes: z = 0 forces wr = wi = 0
    prog.post_constraint(sub(var(volt.wr.at(id)), scale(b.wr_hi, z)), -kUnbounded, 0.0,
                         key("wr_z_ub", "branch", id));
    prog.post_constraint(sub(var(volt.wr.at(id)), scale(std::min(0.0, b.wr_lo), z)), 0.0,
                         kUnbounded, key("wr_z_lb", "branch", id));
    prog.post_constraint(sub(var(volt.wi.at(id)), scale(b.wi_hi, z)), -kUnbounded, 0.0,
                         key("wi_z_ub", "branch", id));
    prog.post_constraint(add(var(volt.wi.at(id)), scale(b.wi_hi, z)), 0.0, kUnbounded,
                         key("wi_z_lb", "branch", id));

    // on/off copies follow the bus w when z = 1 and collapse to 0 when z = 0
    const Bus& f = net.buses.at(br.f_bus);
    const Bus& t = net.buses.at(br.t_bus);
    auto link_w_copy = [&](int copy, int bus_w, const Bus& bus, const char* side) {
      Expr wc = var(copy), w = var(bus_w);
      double lo2 = bus.vm_min * bus.vm_min, hi2 = bus.vm_max * bus.vm_max;
      prog.post_constraint(sub(wc, scale(hi2, z)), -kUnbounded, 0.0,
                           key((std::string("w_") + side + "_z_ub").c_str(), "branch", id));
      prog.post_constraint(sub(wc, scale(lo2, z)), 0.0, kUnbounded,
                           key((std::string("w_") + side + "_z_lb").c_str(), "branch", id));
      // wc <= w - lo2 (1 - z);  wc >= w - hi2 (1 - z)
      prog.post_constraint(sum_of({wc, negate(w), scale(-lo2, z)}), -kUnbounded, -lo2,
                           key((std::string("w_") + side + "_link_ub").c_str(), "branch", id));
      prog.post_constraint(sum_of({wc, negate(w), scale(-hi2, z)}), -hi2, kUnbounded,
                           key((std::string("w_") + side + "_link_lb").c_str(), "branch", id));
    };
    link_w_copy(volt.w_from.at(id), volt.w.at(br.f_bus), f, "from");
    link_w_copy(volt.w_to.at(id), volt.w.at(br.t_bus), t, "to");

    soc_cone(prog, volt, id, volt.w_from.at(id), volt.w_to.at(id));
  }
}

void constraint_ohms_yt_from_on_off(MathProgram& prog, const Network& net, FormulationId form,
                                    const VoltageVars& volt, const FlowVars& flow, int branch) {
  require_on_off_form(form);
  const Branch& br = net.branches.at(branch);
  if (form == FormulationId::dcp) {
    // |p_f - flow_expr| <= M (1 - z)
    double m = dcp_ohms_big_m(br);
    Expr z = var(flow.indicator.at(branch));
    Expr gap = sub(branch_flow_expr(form, flow, branch, kPf), dcp_flow_expr(br, volt));
    prog.post_constraint(add(gap, scale(m, z)), -kUnbounded, m,
                         key("ohms_p_from_ub", "branch", branch));
    prog.post_constraint(sub(gap, scale(m, z)), -m, kUnbounded,
                         key("ohms_p_from_lb", "branch", branch));
    return;
  }
  // w-space: the Ohm equalities over the on/off copies already vanish at
  // z = 0, so they are posted unchanged.
  constraint_ohms_yt_from(prog, net, form, volt, flow, branch);
}

void constraint_ohms_yt_to_on_off(MathProgram& prog, const Network& net, FormulationId form,
                                  const VoltageVars& volt, const FlowVars& flow, int branch) {
  require_on_off_form(form);
  if (form == FormulationId::dcp) return;
  constraint_ohms_yt_to(prog, net, form, volt, flow, branch);
}

void constraint_thermal_limit_from_on_off(MathProgram& prog, const Network& net,
                                          FormulationId form, const FlowVars& flow, int branch) {
  require_on_off_form(form);
  const Branch& br = net.branches.at(branch);
  Expr z = var(flow.indicator.at(branch));
  // Without a thermal rating the dcp flow must still be forced to zero when
  // the branch is open; the Ohm big-M doubles as the flow cap.
  double rate = br.rate_a ? *br.rate_a
                          : (form == FormulationId::dcp ? dcp_ohms_big_m(br) : kUnbounded);
  if (!std::isfinite(rate)) return;
  if (form == FormulationId::dcp) {
    Expr pf = branch_flow_expr(form, flow, branch, kPf);
    prog.post_constraint(sub(pf, scale(rate, z)), -kUnbounded, 0.0,
                         key("thermal_from_ub", "branch", branch));
    prog.post_constraint(add(pf, scale(rate, z)), 0.0, kUnbounded,
                         key("thermal_from_lb", "branch", branch));
    return;
  }
  Expr body = sum_of({pow_int(branch_flow_expr(form, flow, branch, kPf), 2),
                      pow_int(branch_flow_expr(form, flow, branch, kQf), 2),
                      scale(-rate * rate, pow_int(z, 2))});
  prog.post_constraint(body, -kUnbounded, 0.0, key("thermal_from", "branch", branch));
}

void constraint_thermal_limit_to_on_off(MathProgram& prog, const Network& net,
                                        FormulationId form, const FlowVars& flow, int branch) {
  require_on_off_form(form);
  const Branch& br = net.branches.at(branch);
  if (form == FormulationId::dcp || !br.rate_a) return;
  double rate = *br.rate_a;
  Expr z = var(flow.indicator.at(branch));
  Expr body = sum_of({pow_int(branch_flow_expr(form, flow, branch, kPt), 2),
                      pow_int(branch_flow_expr(form, flow, branch, kQt), 2),
                      scale(-rate * rate, pow_int(z, 2))});
  prog.post_constraint(body, -kUnbounded, 0.0, key("thermal_to", "branch", branch));
}

void constraint_voltage_angle_difference_on_off(MathProgram& prog, const Network& net,
                                                FormulationId form, const VoltageVars& volt,
                                                const FlowVars& flow, int branch) {
  require_on_off_form(form);
  const Branch& br = net.branches.at(branch);
  if (form == FormulationId::socwr) {
    // the tan-scaled rows hold trivially at wr = wi = 0
    constraint_voltage_angle_difference(prog, net, form, volt, branch);
    return;
  }
  // angle-bearing forms: bounds relaxed by +-theta_M (1 - z), theta_M = pi
  const double theta_m_relax = 3.14159265358979323846;
  Expr d = sub(var(volt.va.at(br.f_bus)), var(volt.va.at(br.t_bus)));
  Expr z = var(flow.indicator.at(branch));
  prog.post_constraint(add(d, scale(theta_m_relax, z)), -kUnbounded,
                       br.ang_max + theta_m_relax, key("ang_diff_ub", "branch", branch));
  prog.post_constraint(sub(d, scale(theta_m_relax, z)), br.ang_min - theta_m_relax, kUnbounded,
                       key("ang_diff_lb", "branch", branch));
}

}  // namespace gridopt
