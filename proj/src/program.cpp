#include "gridopt/program.hpp"

#include <algorithm>
#include <cmath>

#include "gridopt/error.hpp"

namespace gridopt {

const VarRef& MathProgram::define_variable(const std::string& name, double lower, double upper,
                                           VarKind kind, double start) {
  if (lower > upper) {
    fail(Errc::bounds_crossed,
         "variable " + name + " has lower " + std::to_string(lower) + " > upper " +
             std::to_string(upper));
  }
  VarRef v;
  v.index = static_cast<int>(vars_.size());
  v.name = name;
  v.lower = lower;
  v.upper = upper;
  v.kind = kind;
  v.start = std::min(std::max(start, lower), upper);
  vars_.push_back(std::move(v));
  return vars_.back();
}

int MathProgram::post_constraint(Expr body, double lower, double upper, std::string tag) {
  if (lower > upper) {
    fail(Errc::bounds_crossed, "constraint " + tag + " has crossed bounds");
  }
  if (max_var_index(body) >= num_vars()) {
    fail(Errc::foreign_variable,
         "constraint " + tag + " references variable index " + std::to_string(max_var_index(body)) +
             " but the program has " + std::to_string(num_vars()) + " variables");
  }
  Constraint c;
  c.body = std::move(body);
  c.lower = lower;
  c.upper = upper;
  c.tag = std::move(tag);
  cons_.push_back(std::move(c));
  return static_cast<int>(cons_.size()) - 1;
}

void MathProgram::set_objective(Expr expr) {
  if (max_var_index(expr) >= num_vars()) {
    fail(Errc::foreign_variable, "objective references an unregistered variable");
  }
  objective_ = std::move(expr);
}

bool MathProgram::has_binaries() const {
  return std::any_of(vars_.begin(), vars_.end(),
                     [](const VarRef& v) { return v.kind == VarKind::binary; });
}

std::vector<double> MathProgram::start_point() const {
  std::vector<double> x(vars_.size());
  for (size_t i = 0; i < vars_.size(); ++i) x[i] = vars_[i].start;
  return x;
}

void MathProgram::restrict_bounds(int index, double lower, double upper) {
  if (index < 0 || index >= num_vars()) fail(Errc::foreign_variable, "bad variable index");
  if (lower > upper) fail(Errc::bounds_crossed, "crossed bounds for " + vars_[index].name);
  VarRef& v = vars_[static_cast<size_t>(index)];
  v.lower = lower;
  v.upper = upper;
  v.start = std::min(std::max(v.start, lower), upper);
}

void MathProgram::set_start(int index, double start) {
  if (index < 0 || index >= num_vars()) fail(Errc::foreign_variable, "bad variable index");
  VarRef& v = vars_[static_cast<size_t>(index)];
  v.start = std::min(std::max(start, v.lower), v.upper);
}

double objective_value(const MathProgram& prog, std::span<const double> x) {
  return evaluate(prog.objective(), x);
}

double max_constraint_violation(const MathProgram& prog, std::span<const double> x) {
  double worst = 0.0;
  for (const auto& c : prog.constraints()) {
    double v = evaluate(c.body, x);
    worst = std::max(worst, c.lower - v);
    worst = std::max(worst, v - c.upper);
  }
  return worst;
}

double max_bound_violation(const MathProgram& prog, std::span<const double> x) {
  double worst = 0.0;
  for (const auto& v : prog.variables()) {
    double xi = x[static_cast<size_t>(v.index)];
    worst = std::max(worst, v.lower - xi);
    worst = std::max(worst, xi - v.upper);
  }
  return worst;
}

namespace {

nlohmann::json bound_to_json(double b) {
  if (std::isinf(b)) return nullptr;
  return b;
}

double bound_from_json(const nlohmann::json& j, double sign) {
  if (j.is_null()) return sign * kUnbounded;
  return j.get<double>();
}

}  // namespace

nlohmann::json program_to_json(const MathProgram& prog) {
  nlohmann::json doc;
  doc["sense"] = "min";
  doc["convex"] = prog.is_convex();
  auto vars = nlohmann::json::array();
  for (const auto& v : prog.variables()) {
    vars.push_back({{"name", v.name},
                    {"lower", bound_to_json(v.lower)},
                    {"upper", bound_to_json(v.upper)},
                    {"kind", v.kind == VarKind::binary ? "binary" : "continuous"},
                    {"start", v.start}});
  }
  doc["variables"] = std::move(vars);
  auto cons = nlohmann::json::array();
  for (const auto& c : prog.constraints()) {
    cons.push_back({{"body", expr_to_json(c.body)},
                    {"lower", bound_to_json(c.lower)},
                    {"upper", bound_to_json(c.upper)},
                    {"tag", c.tag}});
  }
  doc["constraints"] = std::move(cons);
  doc["objective"] = expr_to_json(prog.objective());
  return doc;
}

MathProgram program_from_json(const nlohmann::json& doc) {
  MathProgram prog;
  for (const auto& v : doc.at("variables")) {
    prog.define_variable(v.at("name").get<std::string>(),
                         bound_from_json(v.at("lower"), -1.0),
                         bound_from_json(v.at("upper"), 1.0),
                         v.at("kind").get<std::string>() == "binary" ? VarKind::binary
                                                                     : VarKind::continuous,
                         v.at("start").get<double>());
  }
  for (const auto& c : doc.at("constraints")) {
    prog.post_constraint(expr_from_json(c.at("body")), bound_from_json(c.at("lower"), -1.0),
                         bound_from_json(c.at("upper"), 1.0), c.at("tag").get<std::string>());
  }
  prog.set_objective(expr_from_json(doc.at("objective")));
  prog.set_convex(doc.at("convex").get<bool>());
  return prog;
}

}  // namespace gridopt
