#pragma once

#include "gridopt/solve.hpp"

namespace gridopt::detail {

/// Core NLP solve.  `relax_binaries` lets branch-and-bound solve node
/// relaxations; the public solve_continuous rejects unfixed binaries.
SolveResult ipm_solve(const MathProgram& prog, const SolveOptions& opts, bool relax_binaries);

/// Phase-1 elastic solve shared by certify_infeasibility and the endgame
/// classification of failed solves.
CertifyResult phase1_certify(const MathProgram& prog, const SolveOptions& opts,
                             bool relax_binaries);

/// Gradient-based objective scale, min(1, 100/||grad f(start)||_inf); the
/// solver works on the scaled objective and tolerances apply to it.
double objective_gradient_scale(const MathProgram& prog);

}  // namespace gridopt::detail
