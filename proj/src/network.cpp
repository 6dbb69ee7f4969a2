#include "gridopt/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gridopt/error.hpp"

namespace gridopt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;

// Matpower column indices (0-based).
enum BusCol { BUS_I = 0, BUS_TYPE = 1, PD = 2, QD = 3, GS = 4, BS = 5, VM = 7, VA = 8, VMAX = 11, VMIN = 12 };
enum GenCol { GEN_BUS = 0, PG = 1, QG = 2, QMAX = 3, QMIN = 4, VG = 5, GEN_STATUS = 7, PMAX = 8, PMIN = 9 };
enum BranchCol { F_BUS = 0, T_BUS = 1, BR_R = 2, BR_X = 3, BR_B = 4, RATE_A = 5, TAP = 8, SHIFT = 9, BR_STATUS = 10, ANGMIN = 11, ANGMAX = 12 };
enum DclineCol { DC_F_BUS = 0, DC_T_BUS = 1, DC_STATUS = 2, DC_PF = 3, DC_PT = 4, DC_QF = 5, DC_QT = 6, DC_PMIN = 9, DC_PMAX = 10, DC_QMINF = 11, DC_QMAXF = 12, DC_QMINT = 13, DC_QMAXT = 14, DC_LOSS0 = 15, DC_LOSS1 = 16 };

int as_id(double v) { return static_cast<int>(std::llround(v)); }

void require_cols(const Matrix& m, size_t n, const std::string& what) {
  if (!m.empty() && m.front().size() < n) {
    fail(Errc::token_error, "mpc." + what + " has " + std::to_string(m.front().size()) +
                                " columns, need at least " + std::to_string(n));
  }
}

// Zero-width bounds mean "unconstrained" in the case format; replace with
// +-pi/3 and clamp into [-pi/2, pi/2] keeping ang_min <= 0 <= ang_max so the
// trigonometric envelopes downstream stay well defined.
std::pair<double, double> normalize_angle_bounds(double ang_min_deg, double ang_max_deg) {
  double lo = ang_min_deg * kDegToRad;
  double hi = ang_max_deg * kDegToRad;
  if (lo == 0.0 && hi == 0.0) {
    lo = -kPi / 3.0;
    hi = kPi / 3.0;
  }
  lo = std::min(std::max(lo, -kPi / 2.0), 0.0);
  hi = std::max(std::min(hi, kPi / 2.0), 0.0);
  if (lo == 0.0 && hi == 0.0) {  // degenerate input such as [-0, 0]
    lo = -kPi / 3.0;
    hi = kPi / 3.0;
  }
  return {lo, hi};
}

CostPolynomial convert_gencost(const std::vector<double>& row, double base_mva, int gen_id) {
  if (row.size() < 4) {
    fail(Errc::unsupported_cost_model, "gencost row for gen " + std::to_string(gen_id) + " too short");
  }
  int model = as_id(row[0]);
  if (model != 2) {
    fail(Errc::unsupported_cost_model,
         "gen " + std::to_string(gen_id) + " uses cost model " + std::to_string(model) +
             "; only polynomial (model 2) is supported");
  }
  int ncost = as_id(row[3]);
  if (ncost < 1 || ncost > 4) {
    fail(Errc::unsupported_cost_model, "gen " + std::to_string(gen_id) + " has polynomial degree " +
                                           std::to_string(ncost - 1) + "; degree <= 3 supported");
  }
  if (row.size() < static_cast<size_t>(4 + ncost)) {
    fail(Errc::unsupported_cost_model, "gencost row for gen " + std::to_string(gen_id) +
                                           " is missing coefficients");
  }
  // File coefficients are over MW output; rescale so the polynomial is a
  // function of p.u. output: c_k * (base * pg)^k.
  CostPolynomial poly;
  poly.coefficients.clear();
  for (int k = 0; k < ncost; ++k) {
    int deg = ncost - 1 - k;
    poly.coefficients.push_back(row[4 + k] * std::pow(base_mva, deg));
  }
  return poly;
}

}  // namespace

double CostPolynomial::eval(double pg) const {
  double acc = 0.0;
  for (double c : coefficients) acc = acc * pg + c;
  return acc;
}

Network build_network(const RawCase& raw) {
  Network net;
  net.name = raw.name;
  net.base_mva = raw.base_mva;
  const double base = raw.base_mva;

  require_cols(raw.bus, 13, "bus");
  require_cols(raw.gen, 10, "gen");
  require_cols(raw.branch, 13, "branch");
  if (raw.dcline) require_cols(*raw.dcline, 17, "dcline");
  if (!raw.gencost.empty() && raw.gencost.size() != raw.gen.size()) {
    fail(Errc::unsupported_cost_model,
         "mpc.gencost has " + std::to_string(raw.gencost.size()) + " rows for " +
             std::to_string(raw.gen.size()) + " generators");
  }

  for (const auto& row : raw.bus) {
    int type = as_id(row[BUS_TYPE]);
    if (type != 1 && type != 2 && type != 3) continue;  // type 4 = isolated, dropped
    Bus bus;
    bus.id = as_id(row[BUS_I]);
    bus.bus_type = static_cast<BusType>(type);
    bus.pd = row[PD] / base;
    bus.qd = row[QD] / base;
    bus.gs = row[GS] / base;
    bus.bs = row[BS] / base;
    bus.vm0 = row[VM];
    bus.va0 = row[VA] * kDegToRad;
    bus.vm_max = row[VMAX];
    bus.vm_min = row[VMIN];
    if (!(bus.vm_min > 0.0) || bus.vm_min > bus.vm_max) {
      fail(Errc::token_error, "bus " + std::to_string(bus.id) + " has invalid voltage bounds [" +
                                  std::to_string(bus.vm_min) + ", " + std::to_string(bus.vm_max) + "]");
    }
    if (type == 3) net.ref_buses.insert(bus.id);
    net.buses.emplace(bus.id, bus);
  }
  if (net.ref_buses.empty()) fail(Errc::no_reference_bus, "case has no type-3 bus");

  // Components at known-but-isolated buses are filtered like any other
  // out-of-service row; unknown bus ids are data errors.
  std::set<int> raw_bus_ids;
  for (const auto& row : raw.bus) raw_bus_ids.insert(as_id(row[BUS_I]));
  auto endpoint_live = [&](int bus_id, const std::string& what) {
    if (net.buses.count(bus_id)) return true;
    if (raw_bus_ids.count(bus_id)) return false;
    fail(Errc::dangling_endpoint, what + " references missing bus " + std::to_string(bus_id));
  };

  int gen_id = 0;
  for (size_t i = 0; i < raw.gen.size(); ++i) {
    const auto& row = raw.gen[i];
    ++gen_id;
    if (as_id(row[GEN_STATUS]) != 1) continue;
    int bus_id = as_id(row[GEN_BUS]);
    if (!endpoint_live(bus_id, "gen " + std::to_string(gen_id))) continue;
    Generator gen;
    gen.id = gen_id;
    gen.bus = bus_id;
    gen.pmax = row[PMAX] / base;
    gen.pmin = row[PMIN] / base;
    gen.qmax = row[QMAX] / base;
    gen.qmin = row[QMIN] / base;
    gen.pg0 = row[PG] / base;
    gen.qg0 = row[QG] / base;
    gen.vg = row[VG] > 0 ? row[VG] : 1.0;
    if (gen.pmin > gen.pmax || gen.qmin > gen.qmax) {
      fail(Errc::token_error, "gen " + std::to_string(gen_id) + " has crossed output bounds");
    }
    if (!raw.gencost.empty()) gen.cost = convert_gencost(raw.gencost[i], base, gen_id);
    net.gens.emplace(gen.id, gen);
  }

  int br_id = 0;
  for (const auto& row : raw.branch) {
    ++br_id;
    if (as_id(row[BR_STATUS]) != 1) continue;
    Branch br;
    br.id = br_id;
    br.f_bus = as_id(row[F_BUS]);
    br.t_bus = as_id(row[T_BUS]);
    if (!endpoint_live(br.f_bus, "branch " + std::to_string(br_id)) ||
        !endpoint_live(br.t_bus, "branch " + std::to_string(br_id))) {
      continue;
    }
    br.r = row[BR_R];
    br.x = row[BR_X];
    if (br.r == 0.0 && br.x == 0.0) {
      fail(Errc::invalid_impedance, "branch " + std::to_string(br_id) + " has r = x = 0");
    }
    br.b_c = row[BR_B];
    br.tau = row[TAP] != 0.0 ? row[TAP] : 1.0;
    if (br.tau <= 0.0) {
      fail(Errc::token_error, "branch " + std::to_string(br_id) + " has negative tap ratio");
    }
    br.theta_shift = row[SHIFT] * kDegToRad;
    double rate = row[RATE_A] / base;
    if (rate > 0.0 && std::isfinite(rate)) br.rate_a = rate;
    std::tie(br.ang_min, br.ang_max) = normalize_angle_bounds(row[ANGMIN], row[ANGMAX]);
    net.branches.emplace(br.id, br);
  }

  if (raw.dcline) {
    int dc_id = 0;
    for (const auto& row : *raw.dcline) {
      ++dc_id;
      if (as_id(row[DC_STATUS]) != 1) continue;
      DcLine dc;
      dc.id = dc_id;
      dc.f_bus = as_id(row[DC_F_BUS]);
      dc.t_bus = as_id(row[DC_T_BUS]);
      if (!endpoint_live(dc.f_bus, "dcline " + std::to_string(dc_id)) ||
          !endpoint_live(dc.t_bus, "dcline " + std::to_string(dc_id))) {
        continue;
      }
      dc.pmin_f = row[DC_PMIN] / base;
      dc.pmax_f = row[DC_PMAX] / base;
      dc.qmin_f = row[DC_QMINF] / base;
      dc.qmax_f = row[DC_QMAXF] / base;
      dc.qmin_t = row[DC_QMINT] / base;
      dc.qmax_t = row[DC_QMAXT] / base;
      dc.loss0 = row[DC_LOSS0] / base;
      dc.loss1 = row[DC_LOSS1];
      if (dc.loss1 < 0.0 || dc.loss1 >= 1.0 || dc.loss0 < 0.0) {
        fail(Errc::token_error, "dcline " + std::to_string(dc_id) + " has invalid loss parameters");
      }
      // The to-side withdrawal is pinned by p_t = loss0 + (loss1 - 1) p_f.
      dc.pmin_t = dc.loss0 + (dc.loss1 - 1.0) * dc.pmax_f;
      dc.pmax_t = dc.loss0 + (dc.loss1 - 1.0) * dc.pmin_f;
      net.dclines.emplace(dc.id, dc);
    }
  }

  return net;
}

std::pair<double, double> branch_admittance(const Branch& branch) {
  double denom = branch.r * branch.r + branch.x * branch.x;
  if (denom == 0.0) {
    fail(Errc::invalid_impedance, "branch " + std::to_string(branch.id) + " has r = x = 0");
  }
  return {branch.r / denom, -branch.x / denom};
}

namespace {

nlohmann::json bus_to_json(const Bus& b) {
  return {{"bus_type", static_cast<int>(b.bus_type)}, {"vm_min", b.vm_min}, {"vm_max", b.vm_max},
          {"pd", b.pd},       {"qd", b.qd},           {"gs", b.gs},         {"bs", b.bs},
          {"vm0", b.vm0},     {"va0", b.va0}};
}

nlohmann::json gen_to_json(const Generator& g) {
  return {{"bus", g.bus},   {"pmin", g.pmin}, {"pmax", g.pmax}, {"qmin", g.qmin},
          {"qmax", g.qmax}, {"cost", g.cost.coefficients},      {"pg0", g.pg0},
          {"qg0", g.qg0},   {"vg", g.vg}};
}

nlohmann::json branch_to_json(const Branch& b) {
  nlohmann::json j = {{"f_bus", b.f_bus}, {"t_bus", b.t_bus},   {"r", b.r},
                      {"x", b.x},         {"b_c", b.b_c},       {"tau", b.tau},
                      {"theta_shift", b.theta_shift},           {"ang_min", b.ang_min},
                      {"ang_max", b.ang_max}};
  if (b.rate_a) j["rate_a"] = *b.rate_a;
  return j;
}

nlohmann::json dcline_to_json(const DcLine& d) {
  return {{"f_bus", d.f_bus},   {"t_bus", d.t_bus},   {"pmin_f", d.pmin_f}, {"pmax_f", d.pmax_f},
          {"pmin_t", d.pmin_t}, {"pmax_t", d.pmax_t}, {"qmin_f", d.qmin_f}, {"qmax_f", d.qmax_f},
          {"qmin_t", d.qmin_t}, {"qmax_t", d.qmax_t}, {"loss0", d.loss0},   {"loss1", d.loss1}};
}

}  // namespace

nlohmann::json network_to_json(const Network& net) {
  nlohmann::json doc;
  doc["name"] = net.name;
  doc["baseMVA"] = net.base_mva;
  doc["bus"] = nlohmann::json::object();
  for (const auto& [id, b] : net.buses) doc["bus"][std::to_string(id)] = bus_to_json(b);
  doc["gen"] = nlohmann::json::object();
  for (const auto& [id, g] : net.gens) doc["gen"][std::to_string(id)] = gen_to_json(g);
  doc["branch"] = nlohmann::json::object();
  for (const auto& [id, b] : net.branches) doc["branch"][std::to_string(id)] = branch_to_json(b);
  doc["dcline"] = nlohmann::json::object();
  for (const auto& [id, d] : net.dclines) doc["dcline"][std::to_string(id)] = dcline_to_json(d);
  return doc;
}

Network network_from_json(const nlohmann::json& doc) {
  Network net;
  net.name = doc.at("name").get<std::string>();
  net.base_mva = doc.at("baseMVA").get<double>();
  for (const auto& [key, j] : doc.at("bus").items()) {
    Bus b;
    b.id = std::stoi(key);
    b.bus_type = static_cast<BusType>(j.at("bus_type").get<int>());
    b.vm_min = j.at("vm_min");
    b.vm_max = j.at("vm_max");
    b.pd = j.at("pd");
    b.qd = j.at("qd");
    b.gs = j.at("gs");
    b.bs = j.at("bs");
    b.vm0 = j.at("vm0");
    b.va0 = j.at("va0");
    if (b.bus_type == BusType::ref) net.ref_buses.insert(b.id);
    net.buses.emplace(b.id, b);
  }
  for (const auto& [key, j] : doc.at("gen").items()) {
    Generator g;
    g.id = std::stoi(key);
    g.bus = j.at("bus");
    g.pmin = j.at("pmin");
    g.pmax = j.at("pmax");
    g.qmin = j.at("qmin");
    g.qmax = j.at("qmax");
    g.cost.coefficients = j.at("cost").get<std::vector<double>>();
    g.pg0 = j.at("pg0");
    g.qg0 = j.at("qg0");
    g.vg = j.at("vg");
    net.gens.emplace(g.id, g);
  }
  for (const auto& [key, j] : doc.at("branch").items()) {
    Branch b;
    b.id = std::stoi(key);
    b.f_bus = j.at("f_bus");
    b.t_bus = j.at("t_bus");
    b.r = j.at("r");
    b.x = j.at("x");
    b.b_c = j.at("b_c");
    b.tau = j.at("tau");
    b.theta_shift = j.at("theta_shift");
    b.ang_min = j.at("ang_min");
    b.ang_max = j.at("ang_max");
    if (j.contains("rate_a")) b.rate_a = j.at("rate_a").get<double>();
    net.branches.emplace(b.id, b);
  }
  for (const auto& [key, j] : doc.at("dcline").items()) {
    DcLine d;
    d.id = std::stoi(key);
    d.f_bus = j.at("f_bus");
    d.t_bus = j.at("t_bus");
    d.pmin_f = j.at("pmin_f");
    d.pmax_f = j.at("pmax_f");
    d.pmin_t = j.at("pmin_t");
    d.pmax_t = j.at("pmax_t");
    d.qmin_f = j.at("qmin_f");
    d.qmax_f = j.at("qmax_f");
    d.qmin_t = j.at("qmin_t");
    d.qmax_t = j.at("qmax_t");
    d.loss0 = j.at("loss0");
    d.loss1 = j.at("loss1");
    net.dclines.emplace(d.id, d);
  }
  return net;
}

}  // namespace gridopt
