#include "gridopt/expr.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <unordered_map>

#include <Eigen/Dense>

#include "gridopt/error.hpp"

namespace gridopt {

Expr constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::constant;
  n->value = v;
  return n;
}

Expr variable(int index) {
  if (index < 0) fail(Errc::internal_error, "negative variable index");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::variable;
  n->var = index;
  return n;
}

Expr sum_of(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  double c = 0.0;
  for (auto& t : terms) {
    if (t->kind == ExprKind::constant) {
      c += t->value;
    } else if (t->kind == ExprKind::sum) {
      for (const auto& a : t->args) {
        if (a->kind == ExprKind::constant) c += a->value;
        else flat.push_back(a);
      }
    } else {
      flat.push_back(std::move(t));
    }
  }
  if (c != 0.0) flat.push_back(constant(c));
  if (flat.empty()) return constant(0.0);
  if (flat.size() == 1) return flat.front();
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::sum;
  n->args = std::move(flat);
  return n;
}

Expr product_of(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  double c = 1.0;
  for (auto& f : factors) {
    if (f->kind == ExprKind::constant) {
      c *= f->value;
    } else if (f->kind == ExprKind::product) {
      for (const auto& a : f->args) {
        if (a->kind == ExprKind::constant) c *= a->value;
        else flat.push_back(a);
      }
    } else {
      flat.push_back(std::move(f));
    }
  }
  if (c == 0.0) return constant(0.0);
  if (c != 1.0) flat.insert(flat.begin(), constant(c));
  if (flat.empty()) return constant(1.0);
  if (flat.size() == 1) return flat.front();
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::product;
  n->args = std::move(flat);
  return n;
}

Expr add(const Expr& a, const Expr& b) { return sum_of({a, b}); }
Expr sub(const Expr& a, const Expr& b) { return sum_of({a, negate(b)}); }
Expr mul(const Expr& a, const Expr& b) { return product_of({a, b}); }
Expr scale(double k, const Expr& e) { return product_of({constant(k), e}); }
Expr negate(const Expr& e) { return scale(-1.0, e); }

Expr pow_int(const Expr& base, int exponent) {
  if (exponent < 0) fail(Errc::internal_error, "negative exponent not in the node set");
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  if (base->kind == ExprKind::constant) return constant(std::pow(base->value, exponent));
  auto node = std::make_shared<ExprNode>();
  node->kind = ExprKind::power;
  node->args = {base};
  node->exponent = exponent;
  return node;
}

namespace {
Expr unary(ExprKind kind, const Expr& e, double (*fn)(double)) {
  if (e->kind == ExprKind::constant) return constant(fn(e->value));
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->args = {e};
  return n;
}
}  // namespace

Expr sin_of(const Expr& e) { return unary(ExprKind::sin, e, std::sin); }
Expr cos_of(const Expr& e) { return unary(ExprKind::cos, e, std::cos); }
Expr tan_of(const Expr& e) { return unary(ExprKind::tan, e, std::tan); }

int max_var_index(const Expr& e) {
  if (e->kind == ExprKind::variable) return e->var;
  int m = -1;
  for (const auto& a : e->args) m = std::max(m, max_var_index(a));
  return m;
}

double evaluate(const Expr& e, std::span<const double> point) {
  switch (e->kind) {
    case ExprKind::constant: return e->value;
    case ExprKind::variable: return point[static_cast<size_t>(e->var)];
    case ExprKind::sum: {
      double acc = 0.0;
      for (const auto& a : e->args) acc += evaluate(a, point);
      return acc;
    }
    case ExprKind::product: {
      double acc = 1.0;
      for (const auto& a : e->args) acc *= evaluate(a, point);
      return acc;
    }
    case ExprKind::power: return std::pow(evaluate(e->args[0], point), e->exponent);
    case ExprKind::sin: return std::sin(evaluate(e->args[0], point));
    case ExprKind::cos: return std::cos(evaluate(e->args[0], point));
    case ExprKind::tan: return std::tan(evaluate(e->args[0], point));
  }
  fail(Errc::internal_error, "bad expression node");
}

namespace {

// Structural supports: which variables the gradient can touch and which
// variable pairs the Hessian can touch, independent of the point.
void gradient_support(const Expr& e, std::set<int>& out) {
  if (e->kind == ExprKind::variable) {
    out.insert(e->var);
    return;
  }
  if (e->kind == ExprKind::power && e->exponent == 0) return;
  for (const auto& a : e->args) gradient_support(a, out);
}

using PairSet = std::set<std::pair<int, int>>;

void insert_cross(const std::set<int>& a, const std::set<int>& b, PairSet& out) {
  for (int i : a) {
    for (int j : b) {
      out.emplace(std::max(i, j), std::min(i, j));
    }
  }
}

void hessian_support(const Expr& e, PairSet& out) {
  switch (e->kind) {
    case ExprKind::constant:
    case ExprKind::variable:
      return;
    case ExprKind::sum:
      for (const auto& a : e->args) hessian_support(a, out);
      return;
    case ExprKind::product: {
      std::vector<std::set<int>> gs(e->args.size());
      for (size_t i = 0; i < e->args.size(); ++i) {
        hessian_support(e->args[i], out);
        gradient_support(e->args[i], gs[i]);
      }
      for (size_t i = 0; i < gs.size(); ++i) {
        for (size_t j = i + 1; j < gs.size(); ++j) insert_cross(gs[i], gs[j], out);
      }
      return;
    }
    case ExprKind::power: {
      hessian_support(e->args[0], out);
      if (e->exponent >= 2) {
        std::set<int> g;
        gradient_support(e->args[0], g);
        insert_cross(g, g, out);
      }
      return;
    }
    case ExprKind::sin:
    case ExprKind::cos:
    case ExprKind::tan: {
      hessian_support(e->args[0], out);
      std::set<int> g;
      gradient_support(e->args[0], g);
      insert_cross(g, g, out);
      return;
    }
  }
}

// Dense derivative workspace over the expression's local variables.  Frames
// are pooled per recursion depth (deque keeps references stable across growth).
struct Frame {
  double v = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
};

class DenseDiff {
 public:
  DenseDiff(const std::unordered_map<int, int>& local, int m, bool want_hess)
      : local_(local), m_(m), want_hess_(want_hess) {}

  void run(const Expr& e, std::span<const double> x, Frame& out) {
    x_ = x;
    eval(e, 0, out);
  }

 private:
  Frame& scratch(size_t depth) {
    while (pool_.size() <= depth) pool_.emplace_back();
    Frame& f = pool_[depth];
    size_frame(f);
    return f;
  }

  void size_frame(Frame& f) const {
    if (f.g.size() != m_) f.g.resize(m_);
    if (want_hess_ && (f.h.rows() != m_ || f.h.cols() != m_)) f.h.resize(m_, m_);
  }

  void clear(Frame& f) {
    f.v = 0.0;
    f.g.setZero();
    if (want_hess_) f.h.setZero();
  }

  void eval(const Expr& e, size_t depth, Frame& out) {
    size_frame(out);
    switch (e->kind) {
      case ExprKind::constant:
        clear(out);
        out.v = e->value;
        return;
      case ExprKind::variable:
        clear(out);
        out.v = x_[static_cast<size_t>(e->var)];
        out.g[local_.at(e->var)] = 1.0;
        return;
      case ExprKind::sum: {
        clear(out);
        Frame& tmp = scratch(depth);
        for (const auto& a : e->args) {
          eval(a, depth + 1, tmp);
          out.v += tmp.v;
          out.g += tmp.g;
          if (want_hess_) out.h += tmp.h;
        }
        return;
      }
      case ExprKind::product: {
        eval(e->args[0], depth + 1, out);
        Frame& tmp = scratch(depth);
        for (size_t i = 1; i < e->args.size(); ++i) {
          eval(e->args[i], depth + 1, tmp);
          if (want_hess_) {
            out.h = out.v * tmp.h + tmp.v * out.h + out.g * tmp.g.transpose() +
                    tmp.g * out.g.transpose();
          }
          out.g = out.v * tmp.g + tmp.v * out.g;
          out.v *= tmp.v;
        }
        return;
      }
      case ExprKind::power: {
        eval(e->args[0], depth + 1, out);
        int n = e->exponent;
        double fv = out.v;
        double d1 = n * std::pow(fv, n - 1);
        if (want_hess_) {
          double d2 = n * (n - 1) * (n >= 2 ? std::pow(fv, n - 2) : 0.0);
          out.h = d1 * out.h + d2 * out.g * out.g.transpose();
        }
        out.g = d1 * out.g;
        out.v = std::pow(fv, n);
        return;
      }
      case ExprKind::sin:
      case ExprKind::cos:
      case ExprKind::tan: {
        eval(e->args[0], depth + 1, out);
        double fv = out.v, d1 = 0.0, d2 = 0.0;
        if (e->kind == ExprKind::sin) {
          out.v = std::sin(fv), d1 = std::cos(fv), d2 = -out.v;
        } else if (e->kind == ExprKind::cos) {
          out.v = std::cos(fv), d1 = -std::sin(fv), d2 = -out.v;
        } else {
          double t = std::tan(fv);
          out.v = t, d1 = 1.0 + t * t, d2 = 2.0 * t * d1;
        }
        if (want_hess_) out.h = d1 * out.h + d2 * out.g * out.g.transpose();
        out.g = d1 * out.g;
        return;
      }
    }
    fail(Errc::internal_error, "bad expression node");
  }

  const std::unordered_map<int, int>& local_;
  Eigen::Index m_;
  bool want_hess_;
  std::span<const double> x_;
  std::deque<Frame> pool_;
};

}  // namespace

struct LocalEvaluator::Workspace {
  std::unordered_map<int, int> local;
  DenseDiff grad_diff;
  DenseDiff hess_diff;
  Frame out;

  Workspace(const std::vector<int>& vars, std::unordered_map<int, int> map)
      : local(std::move(map)),
        grad_diff(local, static_cast<int>(vars.size()), false),
        hess_diff(local, static_cast<int>(vars.size()), true) {}
};

LocalEvaluator::LocalEvaluator() : LocalEvaluator(constant(0.0)) {}

LocalEvaluator::LocalEvaluator(Expr e) : expr_(std::move(e)) {
  std::set<int> vars;
  gradient_support(expr_, vars);
  vars_.assign(vars.begin(), vars.end());

  std::unordered_map<int, int> local;
  for (size_t i = 0; i < vars_.size(); ++i) local[vars_[i]] = static_cast<int>(i);

  PairSet pairs;
  hessian_support(expr_, pairs);
  hess_pairs_.reserve(pairs.size());
  for (auto [gi, gj] : pairs) hess_pairs_.emplace_back(local.at(gi), local.at(gj));
  std::sort(hess_pairs_.begin(), hess_pairs_.end());

  ws_ = std::make_unique<Workspace>(vars_, std::move(local));
}

LocalEvaluator::~LocalEvaluator() = default;
LocalEvaluator::LocalEvaluator(LocalEvaluator&&) noexcept = default;
LocalEvaluator& LocalEvaluator::operator=(LocalEvaluator&&) noexcept = default;

double LocalEvaluator::value(std::span<const double> x) const { return evaluate(expr_, x); }

double LocalEvaluator::value_grad(std::span<const double> x, std::span<double> grad) {
  Frame& out = ws_->out;
  ws_->grad_diff.run(expr_, x, out);
  for (size_t i = 0; i < vars_.size(); ++i) grad[i] = out.g[static_cast<Eigen::Index>(i)];
  return out.v;
}

double LocalEvaluator::value_grad_hess(std::span<const double> x, std::span<double> grad,
                                       std::span<double> hess) {
  Frame& out = ws_->out;
  ws_->hess_diff.run(expr_, x, out);
  for (size_t i = 0; i < vars_.size(); ++i) grad[i] = out.g[static_cast<Eigen::Index>(i)];
  for (size_t k = 0; k < hess_pairs_.size(); ++k) {
    auto [i, j] = hess_pairs_[k];
    hess[k] = out.h(i, j);
  }
  return out.v;
}

void differentiate(const Expr& e, std::span<const double> point, SparseVec& gradient,
                   SparseSym& hessian) {
  LocalEvaluator ev(e);
  size_t m = ev.vars().size();
  std::vector<double> g(m), h(ev.hess_pairs().size());
  ev.value_grad_hess(point, g, h);

  gradient.index = ev.vars();
  gradient.value = std::move(g);

  hessian.row.clear();
  hessian.col.clear();
  for (auto [i, j] : ev.hess_pairs()) {
    hessian.row.push_back(ev.vars()[static_cast<size_t>(i)]);
    hessian.col.push_back(ev.vars()[static_cast<size_t>(j)]);
  }
  hessian.value = std::move(h);
}

nlohmann::json expr_to_json(const Expr& e) {
  using nlohmann::json;
  switch (e->kind) {
    case ExprKind::constant: return json::array({"const", e->value});
    case ExprKind::variable: return json::array({"var", e->var});
    case ExprKind::sum:
    case ExprKind::product: {
      json out = json::array({e->kind == ExprKind::sum ? "sum" : "prod"});
      for (const auto& a : e->args) out.push_back(expr_to_json(a));
      return out;
    }
    case ExprKind::power: return json::array({"pow", expr_to_json(e->args[0]), e->exponent});
    case ExprKind::sin: return json::array({"sin", expr_to_json(e->args[0])});
    case ExprKind::cos: return json::array({"cos", expr_to_json(e->args[0])});
    case ExprKind::tan: return json::array({"tan", expr_to_json(e->args[0])});
  }
  fail(Errc::internal_error, "bad expression node");
}

Expr expr_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_string()) {
    fail(Errc::token_error, "malformed expression document");
  }
  const std::string op = j[0].get<std::string>();
  auto arity = [&](size_t n) {
    if (j.size() != n + 1) fail(Errc::token_error, "expression op '" + op + "' has wrong arity");
  };
  if (op == "const") {
    arity(1);
    return constant(j[1].get<double>());
  }
  if (op == "var") {
    arity(1);
    return variable(j[1].get<int>());
  }
  if (op == "sum" || op == "prod") {
    std::vector<Expr> args;
    for (size_t i = 1; i < j.size(); ++i) args.push_back(expr_from_json(j[i]));
    return op == "sum" ? sum_of(std::move(args)) : product_of(std::move(args));
  }
  if (op == "pow") {
    arity(2);
    return pow_int(expr_from_json(j[1]), j[2].get<int>());
  }
  if (op == "sin") { arity(1); return sin_of(expr_from_json(j[1])); }
  if (op == "cos") { arity(1); return cos_of(expr_from_json(j[1])); }
  if (op == "tan") { arity(1); return tan_of(expr_from_json(j[1])); }
  fail(Errc::token_error, "unknown expression op '" + op + "'");
}

}  // namespace gridopt
