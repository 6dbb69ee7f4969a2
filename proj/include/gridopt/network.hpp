#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gridopt/matpower.hpp"

namespace gridopt {

enum class BusType { pq = 1, pv = 2, ref = 3 };

struct Bus {
  int id = 0;
  BusType bus_type = BusType::pq;
  double vm_min = 0.0, vm_max = 0.0;  // p.u. voltage magnitude bounds
  double pd = 0.0, qd = 0.0;          // p.u. constant-power load
  double gs = 0.0, bs = 0.0;          // p.u. fixed shunt
  double vm0 = 1.0, va0 = 0.0;        // initial state, p.u. / radians

  bool operator==(const Bus&) const = default;
};

/// Polynomial generation cost in $/h as a function of p.u. active output.
/// Coefficients are ordered highest degree first (c_n ... c_0).
struct CostPolynomial {
  std::vector<double> coefficients{0.0};

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
  double eval(double pg) const;

  bool operator==(const CostPolynomial&) const = default;
};

struct Generator {
  int id = 0;
  int bus = 0;
  double pmin = 0.0, pmax = 0.0;  // p.u.
  double qmin = 0.0, qmax = 0.0;  // p.u.
  CostPolynomial cost;
  double pg0 = 0.0, qg0 = 0.0;  // dispatch set-point from the case, p.u.
  double vg = 1.0;              // voltage set-point, used by the PF problem only

  bool operator==(const Generator&) const = default;
};

struct Branch {
  int id = 0;
  int f_bus = 0, t_bus = 0;
  double r = 0.0, x = 0.0;       // p.u. series impedance
  double b_c = 0.0;              // p.u. total charging susceptance
  double tau = 1.0;              // tap ratio, > 0
  double theta_shift = 0.0;      // radians
  std::optional<double> rate_a;  // p.u. apparent-power limit; absent = unbounded
  double ang_min = 0.0, ang_max = 0.0;  // radians, ang_min <= 0 <= ang_max

  bool operator==(const Branch&) const = default;
};

struct DcLine {
  int id = 0;
  int f_bus = 0, t_bus = 0;
  double pmin_f = 0.0, pmax_f = 0.0;  // p.u. bounds on the from-side withdrawal
  double pmin_t = 0.0, pmax_t = 0.0;
  double qmin_f = 0.0, qmax_f = 0.0;
  double qmin_t = 0.0, qmax_t = 0.0;
  double loss0 = 0.0;  // p.u. constant loss
  double loss1 = 0.0;  // dimensionless proportional loss, in [0, 1)

  bool operator==(const DcLine&) const = default;
};

/// Validated per-unit network: only in-service components, every endpoint
/// resolvable, at least one reference bus.  Immutable after construction.
struct Network {
  std::string name;
  double base_mva = 100.0;
  std::map<int, Bus> buses;
  std::map<int, Generator> gens;
  std::map<int, Branch> branches;
  std::map<int, DcLine> dclines;
  std::set<int> ref_buses;

  bool operator==(const Network&) const = default;
};

/// Convert a RawCase to a per-unit Network: MW/MVAr/MVA divided by baseMVA,
/// degrees to radians, tap 0 -> 1, out-of-service rows dropped, angle bounds
/// defaulted to +-pi/3 when zero-width and clamped to +-pi/2, polynomial
/// costs rescaled to p.u. output.
///
/// Throws Error: no_reference_bus, dangling_endpoint, unsupported_cost_model,
/// invalid_impedance.
Network build_network(const RawCase& raw);

/// Series admittance g + jb of the branch pi-model: g = r/(r^2+x^2),
/// b = -x/(r^2+x^2).  Throws invalid_impedance when r = x = 0.
std::pair<double, double> branch_admittance(const Branch& branch);

/// Lossless JSON round trip used by the harness result documents.
nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& doc);

}  // namespace gridopt
