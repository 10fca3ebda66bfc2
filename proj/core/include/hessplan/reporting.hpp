#pragma once

// Report rendering: per-day profit distribution tables, out-of-sample
// validation tables, merit-order supply curves, grid-access study summaries,
// and the JSON run manifest.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hessplan/domain.hpp"
#include "hessplan/market.hpp"

namespace hessplan::report {

struct ProfitRow {
  std::string day;
  std::string system;
  double da_energy = 0.0;
  double da_reserve = 0.0;
  double rt_balance = 0.0;
  double weight = 1.0;
};

// columns: day,system,da_energy,da_reserve,da_total,rt_balance,unweighted,weighted
void write_profit_table(std::ostream& os, const std::vector<ProfitRow>& rows);

struct ValidationRow {
  std::string day;
  std::string system;
  double da_energy = 0.0;
  double da_reserve = 0.0;
  double rt_balance = 0.0;
  bool soc_feasible = true;
};

// columns: day,system,da_energy,da_reserve,rt_balance,soc_feasible
void write_validation_table(std::ostream& os, const std::vector<ValidationRow>& rows);

struct SupplyStep {
  std::string participant;
  double from_mw = 0.0;  // cumulative residual quantity where the block starts
  double to_mw = 0.0;
  double price = 0.0;
  double cleared_mw = 0.0;
  bool is_storage = false;
};

struct SupplyCurve {
  std::vector<SupplyStep> steps;   // ascending by price; origin at 0 MW residual
  double residual_demand_mw = 0.0; // demand net of wind plus cleared storage bids
  double clearing_price = 0.0;
};

// Residual (wind-netted) merit-order stack with the operator's blocks
// inserted and the clearing point marked.
SupplyCurve build_supply_curve(const market::DayAheadHour& hour,
                               const ClearingResult& result);

void write_supply_curve_csv(std::ostream& os, const SupplyCurve& curve);

struct GridStudyRow {
  std::string variant;
  double limit_mw = 0.0;
  double e_s1 = 0.0;
  double e_s2 = 0.0;
  double profit_per_day = 0.0;
  bool reallocation_required = false;
  std::string status;
};

void write_grid_study(std::ostream& os, const std::vector<GridStudyRow>& rows);

std::uint64_t fnv1a64(const std::string& bytes);

struct RunManifest {
  std::string command;
  std::string scenario_path;
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int max_iter = 0;
  int exit_code = 0;
  double wall_seconds = 0.0;
  std::string status;
};

std::string manifest_to_json(const RunManifest& manifest);

}  // namespace hessplan::report
