#pragma once

#include <array>
#include <map>
#include <string_view>

#include "gridopt/network.hpp"
#include "gridopt/program.hpp"

namespace gridopt {

/// Realizations of the abstract voltage product V_i V*_j: exact nonconvex
/// (acp, acr, act), linear approximation (dcp) and convex relaxations
/// (socwr, qcwr).
enum class FormulationId { acp, acr, act, dcp, socwr, qcwr };

FormulationId formulation_from_string(std::string_view name);
const char* formulation_name(FormulationId form) noexcept;
bool formulation_is_convex(FormulationId form) noexcept;   // dcp, socwr, qcwr
bool formulation_is_exact_ac(FormulationId form) noexcept; // acp, acr, act
bool formulation_has_angles(FormulationId form) noexcept;  // has va variables: acp, act, dcp, qcwr
bool formulation_has_reactive(FormulationId form) noexcept;  // all but dcp

/// Variable indices created by variable_voltage; -1 style absence is encoded
/// by the key simply not being present in the map.
struct VoltageVars {
  std::map<int, int> vm, va;      // bus: polar / qcwr magnitudes and angles
  std::map<int, int> vr, vi;      // bus: rectangular
  std::map<int, int> w;           // bus: squared magnitude (w-space)
  std::map<int, int> wr, wi;      // branch: real/imag voltage product
  std::map<int, int> td, cs, sn, vv;  // branch: qcwr auxiliaries
  std::map<int, int> w_from, w_to;    // branch: on/off copies of w at the ends
};

struct GenVars {
  std::map<int, int> pg, qg;  // gen id -> variable index
};

struct FlowVars {
  // branch id -> {pf, qf, pt, qt}; -1 where the formulation drops the
  // quantity (dcp keeps only pf: pt is identically -pf and q is absent).
  std::map<int, std::array<int, 4>> branch;
  // dcline id -> {pf, pt, qf, qt}
  std::map<int, std::array<int, 4>> dcline;
  std::map<int, int> indicator;  // branch id -> binary z (ots only)
};

// ---- variable builders (deterministic order: ascending component ids) ----

/// `bounded = false` drops the operating boxes (vm keeps only vm >= 0); used
/// by the power-flow feasibility problem, which pins set-points instead.
VoltageVars variable_voltage(MathProgram& prog, const Network& net, FormulationId form,
                             bool bounded = true);
GenVars variable_generation(MathProgram& prog, const Network& net, FormulationId form,
                            bool bounded = true);
FlowVars variable_branch_flow(MathProgram& prog, const Network& net, FormulationId form);
void variable_dcline_flow(MathProgram& prog, const Network& net, FormulationId form,
                          FlowVars& flow);
void variable_branch_indicator(MathProgram& prog, const Network& net, FlowVars& flow);
/// As variable_voltage, and for w-space forms adds the per-branch on/off
/// copies w_from/w_to and widens wr/wi boxes to include zero.
VoltageVars variable_voltage_on_off(MathProgram& prog, const Network& net, FormulationId form);

// ---- expressions ----

/// (real, imaginary) expressions of V_i V*_j for an existing branch between
/// buses i and j (either orientation).
std::pair<Expr, Expr> voltage_product(const Network& net, FormulationId form,
                                      const VoltageVars& volt, int bus_i, int bus_j);

/// The squared-magnitude expression |V_i|^2 under the given formulation
/// (constant 1 for dcp).
Expr bus_voltage_sqr(FormulationId form, const VoltageVars& volt, int bus);

/// Flow expressions usable in KCL sums: pf/pt/qf/qt of a branch, handling
/// dcp's implicit pt = -pf.  Returns a constant 0 for absent quantities.
Expr branch_flow_expr(FormulationId form, const FlowVars& flow, int branch, int quantity);
inline constexpr int kPf = 0, kQf = 1, kPt = 2, kQt = 3;

// ---- constraint builders ----

void constraint_voltage(MathProgram& prog, const Network& net, FormulationId form,
                        const VoltageVars& volt);
void constraint_theta_ref(MathProgram& prog, const Network& net, FormulationId form,
                          const VoltageVars& volt, int bus);
void constraint_kcl_shunt(MathProgram& prog, const Network& net, FormulationId form,
                          const VoltageVars& volt, const GenVars& gen, const FlowVars& flow,
                          int bus);
void constraint_ohms_yt_from(MathProgram& prog, const Network& net, FormulationId form,
                             const VoltageVars& volt, const FlowVars& flow, int branch);
void constraint_ohms_yt_to(MathProgram& prog, const Network& net, FormulationId form,
                           const VoltageVars& volt, const FlowVars& flow, int branch);
void constraint_thermal_limit_from(MathProgram& prog, const Network& net, FormulationId form,
                                   const FlowVars& flow, int branch);
void constraint_thermal_limit_to(MathProgram& prog, const Network& net, FormulationId form,
                                 const FlowVars& flow, int branch);
void constraint_voltage_angle_difference(MathProgram& prog, const Network& net,
                                         FormulationId form, const VoltageVars& volt,
                                         int branch);
void constraint_dcline(MathProgram& prog, const Network& net, FormulationId form,
                       const FlowVars& flow, int dcline);

// ---- on/off variants (dcp, socwr, qcwr; exact AC forms are rejected) ----

void constraint_voltage_on_off(MathProgram& prog, const Network& net, FormulationId form,
                               const VoltageVars& volt, const FlowVars& flow);
void constraint_ohms_yt_from_on_off(MathProgram& prog, const Network& net, FormulationId form,
                                    const VoltageVars& volt, const FlowVars& flow, int branch);
void constraint_ohms_yt_to_on_off(MathProgram& prog, const Network& net, FormulationId form,
                                  const VoltageVars& volt, const FlowVars& flow, int branch);
void constraint_thermal_limit_from_on_off(MathProgram& prog, const Network& net,
                                          FormulationId form, const FlowVars& flow, int branch);
void constraint_thermal_limit_to_on_off(MathProgram& prog, const Network& net,
                                        FormulationId form, const FlowVars& flow, int branch);
void constraint_voltage_angle_difference_on_off(MathProgram& prog, const Network& net,
                                                FormulationId form, const VoltageVars& volt,
                                                const FlowVars& flow, int branch);

/// Big-M constant of the dcp on/off Ohm constraint:
/// (|ang_min| + ang_max + |theta_shift|) / (x * tau).
double dcp_ohms_big_m(const Branch& branch);

}  // namespace gridopt
