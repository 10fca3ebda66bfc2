#pragma once

// Shared test fixtures: the eight-generator gas stack and the two candidate
// storage technologies used across the unit and acceptance suites.

#include <array>
#include <vector>

#include "hessplan/domain.hpp"

namespace fixtures {

inline std::vector<hessplan::GasOffer> gas_stack() {
  using hessplan::GasOffer;
  auto mk = [](const char* id, double qe, double pe, double qr, double pr, double qrt,
               double prt) {
    GasOffer g;
    g.id = id;
    g.da_energy = {qe, pe};
    g.da_reserve_up = {qr, pr};
    g.da_reserve_down = {qr, pr};
    g.rt_energy = {qrt, prt};
    return g;
  };
  return {
      mk("g1", 240, 20, 30, 10, 30, 20),   mk("g2", 240, 30, 30, 15, 30, 30),
      mk("g3", 240, 40, 30, 20, 30, 40),   mk("g4", 240, 60, 30, 30, 30, 60),
      mk("g5", 240, 90, 30, 45, 30, 90),   mk("g6", 240, 120, 30, 60, 30, 120),
      mk("g7", 320, 150, 40, 75, 40, 150), mk("g8", 320, 300, 40, 150, 40, 300),
  };
}

inline hessplan::StorageTech tech_s1() {
  hessplan::StorageTech t;
  t.id = "s1";
  t.power_ratio = 0.2;
  t.max_capacity = 500.0;
  t.eta_charge = 0.95;
  t.eta_discharge = 0.95;
  t.soc_min = 0.05;
  t.soc_max = 0.95;
  t.soc_init = 0.50;
  t.invest_cost = 3571.0 / 365.0;
  t.marginal_cost = 0.0;
  return t;
}

inline hessplan::StorageTech tech_s2() {
  hessplan::StorageTech t = tech_s1();
  t.id = "s2";
  t.power_ratio = 5.0;
  t.invest_cost = 4571.0 / 365.0;
  return t;
}

inline std::array<hessplan::StorageTech, 2> both_techs() { return {tech_s1(), tech_s2()}; }

}  // namespace fixtures
