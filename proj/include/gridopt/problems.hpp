#pragma once

#include <string_view>

#include "gridopt/formulation.hpp"

namespace gridopt {

enum class ProblemId { opf, ots, pf };

ProblemId problem_from_string(std::string_view name);
const char* problem_name(ProblemId problem) noexcept;

/// A fully built program plus the component-to-variable maps needed to read
/// a solution back out in network terms.
struct BuiltProblem {
  MathProgram prog;
  ProblemId problem = ProblemId::opf;
  FormulationId form = FormulationId::acp;
  VoltageVars volt;
  GenVars gen;
  FlowVars flow;
};

/// Optimal power flow: fuel-cost objective over the full constraint catalog,
/// built in a fixed component order so rebuilds serialize identically.
BuiltProblem build_opf(const Network& net, FormulationId form);

/// Optimal transmission switching: one binary indicator per branch and the
/// on/off constraint variants.  Only dcp/socwr/qcwr are supported
/// (unsupported_on_off_form otherwise).
BuiltProblem build_ots(const Network& net, FormulationId form);

/// Power-flow feasibility: the OPF constraint set with a zero objective,
/// pg pinned to its set-point except at reference buses, voltage magnitudes
/// pinned at generator buses (AC forms), thermal and angle rows omitted.
BuiltProblem build_pf(const Network& net, FormulationId form);

BuiltProblem build_problem(const Network& net, ProblemId problem, FormulationId form);

}  // namespace gridopt
