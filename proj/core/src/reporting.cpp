#include "hessplan/reporting.hpp"

#include <algorithm>
#include <ostream>

#include "json.hpp"

namespace hessplan::report {

void write_profit_table(std::ostream& os, const std::vector<ProfitRow>& rows) {
  os << "day,system,da_energy,da_reserve,da_total,rt_balance,unweighted,weighted\n";
  for (const ProfitRow& r : rows) {
    const double da_total = r.da_energy + r.da_reserve;
    const double unweighted = da_total + r.rt_balance;
    os << r.day << ',' << r.system << ',' << r.da_energy << ',' << r.da_reserve << ','
       << da_total << ',' << r.rt_balance << ',' << unweighted << ','
       << r.weight * unweighted << "\n";
  }
}

void write_validation_table(std::ostream& os, const std::vector<ValidationRow>& rows) {
  os << "day,system,da_energy,da_reserve,rt_balance,soc_feasible\n";
  for (const ValidationRow& r : rows)
    os << r.day << ',' << r.system << ',' << r.da_energy << ',' << r.da_reserve << ','
       << r.rt_balance << ',' << (r.soc_feasible ? "yes" : "no") << "\n";
}

SupplyCurve build_supply_curve(const market::DayAheadHour& hour, const ClearingResult& result) {
  SupplyCurve curve;

  double wind = 0.0;
  for (const auto& w : hour.wind) wind += w.quantity_mw;
  double cleared_charge = 0.0;
  for (const ClearedLine& line : result.lines)
    if (line.product == "CH_DA") cleared_charge += line.quantity;
  curve.residual_demand_mw = std::max(0.0, hour.demand - wind) + cleared_charge;
  curve.clearing_price = result.lambda_energy;

  struct Block {
    std::string id;
    double quantity;
    double price;
    double cleared;
    bool storage;
  };
  std::vector<Block> blocks;
  for (const auto& g : hour.gas)
    blocks.push_back({g.id, g.da_energy.quantity_mw, g.da_energy.price,
                      result.quantity_of(g.id, "E_DA"), false});
  for (const auto& s : hour.storage)
    if (s.discharge.quantity_mw > 0.0)
      blocks.push_back({s.id, s.discharge.quantity_mw, s.discharge.price,
                        result.quantity_of(s.id, "DCH_DA"), true});
  std::stable_sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
    if (a.price != b.price) return a.price < b.price;
    return a.storage > b.storage;  // storage blocks drawn first at equal price
  });

  double cum = 0.0;
  for (const Block& b : blocks) {
    SupplyStep step;
    step.participant = b.id;
    step.from_mw = cum;
    step.to_mw = cum + b.quantity;
    step.price = b.price;
    step.cleared_mw = b.cleared;
    step.is_storage = b.storage;
    cum = step.to_mw;
    curve.steps.push_back(step);
  }
  return curve;
}

void write_supply_curve_csv(std::ostream& os, const SupplyCurve& curve) {
  os << "kind,participant,from_mw,to_mw,price,cleared_mw\n";
  for (const SupplyStep& s : curve.steps)
    os << (s.is_storage ? "storage" : "supply") << ',' << s.participant << ',' << s.from_mw
       << ',' << s.to_mw << ',' << s.price << ',' << s.cleared_mw << "\n";
  os << "clearing,," << curve.residual_demand_mw << ',' << curve.residual_demand_mw << ','
     << curve.clearing_price << ',' << curve.residual_demand_mw << "\n";
}

void write_grid_study(std::ostream& os, const std::vector<GridStudyRow>& rows) {
  os << "scenario,limit_mw,E_s1,E_s2,profit_per_day,reallocation_required,status\n";
  for (const GridStudyRow& r : rows)
    os << r.variant << ',' << r.limit_mw << ',' << r.e_s1 << ',' << r.e_s2 << ','
       << r.profit_per_day << ',' << (r.reallocation_required ? "yes" : "no") << ',' << r.status
       << "\n";
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["tool"] = "hessplan";
  j["version"] = "0.1.0";
  j["command"] = m.command;
  j["scenario_path"] = m.scenario_path;
  j["scenario_fnv1a64"] = m.scenario_hash;
  j["seed"] = m.seed;
  j["tol"] = m.tol;
  j["max_iter"] = m.max_iter;
  j["exit_code"] = m.exit_code;
  j["wall_seconds"] = m.wall_seconds;
  j["status"] = m.status;
  return j.dump(2) + "\n";
}

}  // namespace hessplan::report
