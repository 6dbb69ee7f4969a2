#pragma once

// Hand-built networks for formulation tests.

#include "gridopt/network.hpp"

namespace testsupport {

inline gridopt::Bus make_bus(int id, gridopt::BusType type, double pd = 0.0, double qd = 0.0) {
  gridopt::Bus b;
  b.id = id;
  b.bus_type = type;
  b.vm_min = 0.9;
  b.vm_max = 1.1;
  b.pd = pd;
  b.qd = qd;
  return b;
}

inline gridopt::Generator make_gen(int id, int bus, double pmax = 10.0, double qmax = 10.0) {
  gridopt::Generator g;
  g.id = id;
  g.bus = bus;
  g.pmin = -pmax;
  g.pmax = pmax;
  g.qmin = -qmax;
  g.qmax = qmax;
  g.cost.coefficients = {1.0, 0.0};
  return g;
}

inline gridopt::Branch make_branch(int id, int f, int t, double r, double x,
                                   double bc = 0.0, double tau = 1.0, double shift = 0.0) {
  gridopt::Branch br;
  br.id = id;
  br.f_bus = f;
  br.t_bus = t;
  br.r = r;
  br.x = x;
  br.b_c = bc;
  br.tau = tau;
  br.theta_shift = shift;
  br.ang_min = -1.0471975511965976;  // -pi/3
  br.ang_max = 1.0471975511965976;
  return br;
}

// Single-branch two-bus network with generous generation at both ends.
inline gridopt::Network two_bus(const gridopt::Branch& br, double pd = 0.4, double qd = 0.1) {
  gridopt::Network net;
  net.name = "two_bus";
  net.base_mva = 100.0;
  net.buses[1] = make_bus(1, gridopt::BusType::ref);
  net.buses[2] = make_bus(2, gridopt::BusType::pq, pd, qd);
  net.ref_buses = {1};
  net.gens[1] = make_gen(1, 1);
  net.gens[2] = make_gen(2, 2);
  gridopt::Branch b = br;
  b.id = 1;
  b.f_bus = 1;
  b.t_bus = 2;
  net.branches[1] = b;
  return net;
}

}  // namespace testsupport
