#pragma once

#include <memory>
#include <span>
#include <vector>

#include "json.hpp"

namespace gridopt {

enum class ExprKind { constant, variable, sum, product, power, sin, cos, tan };

class ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

/// Immutable expression DAG node.  The node set is closed over everything the
/// power-flow formulations need: polynomials in variables and sin/cos/tan of
/// affine angle terms.
class ExprNode {
 public:
  ExprKind kind = ExprKind::constant;
  double value = 0.0;      // constant
  int var = -1;            // variable index
  std::vector<Expr> args;  // sum/product terms, or the single argument
  int exponent = 0;        // power, >= 0
};

// Builders.  Sums and products flatten nested nodes of the same kind and fold
// constants, so programs built in a fixed order serialize identically.
Expr constant(double v);
Expr variable(int index);
Expr sum_of(std::vector<Expr> terms);
Expr product_of(std::vector<Expr> factors);
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr mul(const Expr& a, const Expr& b);
Expr scale(double k, const Expr& e);
Expr negate(const Expr& e);
Expr pow_int(const Expr& base, int exponent);
Expr sin_of(const Expr& e);
Expr cos_of(const Expr& e);
Expr tan_of(const Expr& e);

/// Largest variable index referenced, or -1 for a constant expression.
int max_var_index(const Expr& e);

/// Exact arithmetic evaluation at a point indexed by variable index.
double evaluate(const Expr& e, std::span<const double> point);

struct SparseVec {
  std::vector<int> index;  // sorted variable indices (structural support)
  std::vector<double> value;
};

/// Symmetric sparse matrix stored as its lower triangle (row >= col),
/// entries sorted by (row, col).  Mirrored entries are implied exactly.
struct SparseSym {
  std::vector<int> row;
  std::vector<int> col;
  std::vector<double> value;
};

/// Exact first and second partial derivatives at a point.  The sparsity
/// patterns are structural, hence independent of the point.
void differentiate(const Expr& e, std::span<const double> point, SparseVec& gradient,
                   SparseSym& hessian);

nlohmann::json expr_to_json(const Expr& e);
Expr expr_from_json(const nlohmann::json& j);

/// Evaluator bound to one expression: caches the variable list and the
/// structural Hessian pattern, and computes dense derivatives over the
/// expression's own variables.  Used per-constraint by the solver.
///
/// The derivative calls reuse an internal workspace, so a single instance is
/// not safe for concurrent use; distinct instances are independent.
class LocalEvaluator {
 public:
  LocalEvaluator();  // evaluates the constant 0
  explicit LocalEvaluator(Expr e);
  ~LocalEvaluator();
  LocalEvaluator(LocalEvaluator&&) noexcept;
  LocalEvaluator& operator=(LocalEvaluator&&) noexcept;

  const std::vector<int>& vars() const { return vars_; }
  // Structural Hessian pairs as (i, j) local indices with i >= j, sorted.
  const std::vector<std::pair<int, int>>& hess_pairs() const { return hess_pairs_; }

  double value(std::span<const double> x) const;
  /// grad must have vars().size() entries; returns the value.
  double value_grad(std::span<const double> x, std::span<double> grad);
  /// hess must have hess_pairs().size() entries, filled in pattern order.
  double value_grad_hess(std::span<const double> x, std::span<double> grad,
                         std::span<double> hess);

 private:
  struct Workspace;

  Expr expr_;
  std::vector<int> vars_;
  std::vector<std::pair<int, int>> hess_pairs_;
  std::unique_ptr<Workspace> ws_;
};

}  // namespace gridopt
