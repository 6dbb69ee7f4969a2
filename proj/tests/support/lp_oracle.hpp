#pragma once

// Independent LP oracle by corner-point enumeration: for a 2-D reduced LP,
// intersect every pair of constraint lines, keep feasible intersections and
// return the best objective.  Used to pin the 3-bus DC OPF optimum without
// touching the solver under test.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace testsupport {

struct HalfPlane {
  // a*u + b*v <= c
  double a, b, c;
};

struct CornerLp {
  // minimize p*u + q*v + r over the intersection of half-planes
  double p = 0, q = 0, r = 0;
  std::vector<HalfPlane> rows;

  bool feasible(double u, double v, double tol = 1e-9) const {
    for (const auto& h : rows) {
      if (h.a * u + h.b * v > h.c + tol) return false;
    }
    return true;
  }

  // Best corner (minimum); the feasible set must be bounded with an optimum
  // at a vertex for the enumeration to be exhaustive.
  std::optional<std::array<double, 3>> solve() const {
    std::optional<std::array<double, 3>> best;
    for (size_t i = 0; i < rows.size(); ++i) {
      for (size_t j = i + 1; j < rows.size(); ++j) {
        double det = rows[i].a * rows[j].b - rows[j].a * rows[i].b;
        if (std::abs(det) < 1e-12) continue;
        double u = (rows[i].c * rows[j].b - rows[j].c * rows[i].b) / det;
        double v = (rows[i].a * rows[j].c - rows[j].a * rows[i].c) / det;
        if (!feasible(u, v)) continue;
        double obj = p * u + q * v + r;
        if (!best || obj < (*best)[0]) best = {obj, u, v};
      }
    }
    return best;
  }
};

// The 3-bus fixture reduced to (va2, va3): pg eliminated through the nodal
// balances, line limits and pg bounds as half-planes.
//   pg1 = 1 - 10 va2 - 20 va3
//   pg2 = 2 + 40 va2 - 30 va3
//   pg3 = 4 - 30 va2 + 50 va3
//   objective = pg1 + 10 pg2 + 100 pg3 = 421 - 2610 va2 + 4680 va3
struct Fixture3BusOracle {
  double pg_max = 10.0;

  std::array<double, 5> solve() const {  // objective, pg1, pg2, pg3, (va2, va3 dropped)
    CornerLp lp;
    lp.p = -2610;
    lp.q = 4680;
    lp.r = 421;
    auto add = [&](double a, double b, double c) { lp.rows.push_back({a, b, c}); };
    // |10(va1 - va2)| <= 0.5 with va1 = 0
    add(-10, 0, 0.5);
    add(10, 0, 0.5);
    // |20(va1 - va3)| <= 0.5
    add(0, -20, 0.5);
    add(0, 20, 0.5);
    // pg >= 0
    add(10, 20, 1.0);    // pg1 >= 0
    add(-40, 30, 2.0);   // pg2 >= 0
    add(30, -50, 4.0);   // pg3 >= 0
    // pg <= pg_max
    add(-10, -20, pg_max - 1.0);
    add(40, -30, pg_max - 2.0);
    add(-30, 50, pg_max - 4.0);

    auto best = lp.solve();
    if (!best) return {std::numeric_limits<double>::quiet_NaN(), 0, 0, 0, 0};
    double va2 = (*best)[1], va3 = (*best)[2];
    double pg1 = 1 - 10 * va2 - 20 * va3;
    double pg2 = 2 + 40 * va2 - 30 * va3;
    double pg3 = 4 - 30 * va2 + 50 * va3;
    return {(*best)[0], pg1, pg2, pg3, va2};
  }
};

}  // namespace testsupport
