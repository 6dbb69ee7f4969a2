#pragma once

#include <limits>
#include <string>
#include <vector>

#include "gridopt/expr.hpp"

namespace gridopt {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

enum class VarKind { continuous, binary };

struct VarRef {
  int index = -1;
  std::string name;
  double lower = -kUnbounded;
  double upper = kUnbounded;
  VarKind kind = VarKind::continuous;
  double start = 0.0;
};

struct Constraint {
  Expr body;
  double lower = -kUnbounded;
  double upper = kUnbounded;  // lower == upper is an equality
  std::string tag;            // provenance label, e.g. "kcl_p:bus=5"
};

/// Solver-agnostic mathematical program: variables, constraints over the
/// expression DAG, and a minimization objective.  Single writer while being
/// built; immutable once handed to a solver.
class MathProgram {
 public:
  /// Throws bounds_crossed when lower > upper; the start value is projected
  /// into the bounds.
  const VarRef& define_variable(const std::string& name, double lower, double upper,
                                VarKind kind = VarKind::continuous, double start = 0.0);

  /// Appends a constraint and returns its ordinal id.  Throws
  /// foreign_variable if body references an unregistered variable and
  /// bounds_crossed if lower > upper.
  int post_constraint(Expr body, double lower, double upper, std::string tag);

  /// Replaces the objective (sense is always minimize).
  void set_objective(Expr expr);

  const std::vector<VarRef>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return cons_; }
  const Expr& objective() const { return objective_; }
  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(cons_.size()); }
  bool has_binaries() const;

  /// Marks the program as a convex optimization problem; set by the problem
  /// builders for the DCP/SOCWR/QCWR formulations.  Governs whether solvers
  /// may report globally-optimal / proven-infeasible statuses.
  void set_convex(bool convex) { convex_ = convex; }
  bool is_convex() const { return convex_; }

  /// Start vector assembled from the variable declarations.
  std::vector<double> start_point() const;

  /// Tightens the bounds of an existing variable (used for fixing values).
  void restrict_bounds(int index, double lower, double upper);

  /// Replaces a variable's start value (projected into its bounds).
  void set_start(int index, double start);

 private:
  std::vector<VarRef> vars_;
  std::vector<Constraint> cons_;
  Expr objective_ = constant(0.0);
  bool convex_ = false;
};

/// Objective value at a point.
double objective_value(const MathProgram& prog, std::span<const double> x);

/// Largest constraint-row violation at a point (p.u. scale of the row).
double max_constraint_violation(const MathProgram& prog, std::span<const double> x);

/// Largest variable-bound violation at a point.
double max_bound_violation(const MathProgram& prog, std::span<const double> x);

/// Lossless JSON encoding of the whole program; the paired reader
/// reconstructs an identical program.  Unbounded sides encode as null.
nlohmann::json program_to_json(const MathProgram& prog);
MathProgram program_from_json(const nlohmann::json& doc);

}  // namespace gridopt
