#pragma once

// Seeded random expression trees over the full node set; trig arguments stay
// clear of the tan pole so finite-difference checks remain well conditioned.

#include <random>
#include <vector>

#include "gridopt/expr.hpp"

namespace testsupport {

struct ExprGen {
  std::mt19937 rng;
  int nvars;

  explicit ExprGen(unsigned seed, int nvars_) : rng(seed), nvars(nvars_) {}

  double unif(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  gridopt::Expr affine_angle() {
    std::vector<gridopt::Expr> terms;
    int k = 1 + pick(2);
    double budget = 1.3;
    for (int i = 0; i < k; ++i) {
      double c = unif(-budget / k, budget / k);
      terms.push_back(gridopt::scale(c, gridopt::variable(pick(nvars))));
    }
    terms.push_back(gridopt::constant(unif(-0.1, 0.1)));
    return gridopt::sum_of(std::move(terms));
  }

  gridopt::Expr gen(int depth) {
    int top = depth <= 0 ? 2 : 8;
    switch (pick(top)) {
      case 0: return gridopt::constant(unif(-2, 2));
      case 1: return gridopt::variable(pick(nvars));
      case 2: {
        std::vector<gridopt::Expr> args;
        int k = 2 + pick(3);
        for (int i = 0; i < k; ++i) args.push_back(gen(depth - 1));
        return gridopt::sum_of(std::move(args));
      }
      case 3: {
        std::vector<gridopt::Expr> args;
        int k = 2 + pick(2);
        for (int i = 0; i < k; ++i) args.push_back(gen(depth - 1));
        return gridopt::product_of(std::move(args));
      }
      case 4: return gridopt::pow_int(gen(depth - 1), 2 + pick(2));
      case 5: return gridopt::sin_of(affine_angle());
      case 6: return gridopt::cos_of(affine_angle());
      default: return gridopt::tan_of(affine_angle());
    }
  }
};

}  // namespace testsupport
