#pragma once

// Core domain records for the hybrid-storage planning library: candidate
// storage technologies, market offers, typical-day data, operator decisions
// and market clearing results, plus the small pure formulas shared by the
// clearing engines and the planning models.

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hessplan {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One candidate storage system. SOC fractions are relative to the rated
// capacity chosen by the planner.
struct StorageTech {
  std::string id;                // "s1" | "s2"
  double power_ratio = 0.0;      // max power per MWh of rated capacity (1/h)
  double max_capacity = 0.0;     // investment limit, MWh
  double eta_charge = 1.0;       // charging efficiency in (0,1]
  double eta_discharge = 1.0;    // discharging efficiency in (0,1]
  double soc_min = 0.0;          // fraction
  double soc_max = 1.0;          // fraction
  double soc_init = 0.5;         // fraction, start-of-day anchor
  double invest_cost = 0.0;      // $/MWh/day, amortized
  double marginal_cost = 0.0;    // $/MWh on charge/discharge/transfer

  void validate() const;
};

struct PriceQuantity {
  double quantity_mw = 0.0;
  double price = 0.0;  // $/MWh
};

// Multi-market bid block of one gas generator for one hour.
struct GasOffer {
  std::string id;
  PriceQuantity da_energy;
  PriceQuantity da_reserve_up;
  PriceQuantity da_reserve_down;
  PriceQuantity rt_energy;

  void validate() const;
};

// Offer-price ceilings for the operator's own bids; they also bound the
// admissible clearing prices inside the planning models.
struct PriceCaps {
  double da_energy = 300.0;   // $/MWh
  double da_reserve = 150.0;  // $/MWh
  double rt_energy = 300.0;   // $/MWh

  void validate() const;
};

// One weighted typical day: demand, wind, reserve requirements and the gas
// fleet's offers, hour by hour.
struct ScenarioDay {
  std::string id;
  double weight = 1.0;
  int horizon = 24;
  std::vector<double> demand;                      // [t], MW
  std::vector<std::vector<double>> wind_offer;     // [w][t], day-ahead offer (forecast) MW
  std::vector<std::vector<double>> wind_realized;  // [w][t], MW
  std::vector<double> reserve_up_req;              // [t], MW
  std::vector<double> reserve_down_req;            // [t], MW
  std::vector<std::vector<GasOffer>> gas;          // [t][g]
  PriceCaps caps;

  int num_wind() const { return static_cast<int>(wind_offer.size()); }
  int num_gas() const { return gas.empty() ? 0 : static_cast<int>(gas.front().size()); }

  void validate() const;
};

// The seven exclusive operating states of one storage system in one hour.
enum class StorageState {
  Idle,
  ChargeGrid,               // charging from the grid only
  DischargeGrid,            // discharging to the grid only
  ChargeFromPartner,        // charging from the other system only
  DischargeToPartner,       // discharging to the other system only
  ChargeGridAndPartner,     // charging from grid and partner simultaneously
  DischargeGridAndPartner,  // discharging to grid and partner simultaneously
};

inline constexpr std::array<StorageState, 7> kAllStorageStates = {
    StorageState::Idle,
    StorageState::ChargeGrid,
    StorageState::DischargeGrid,
    StorageState::ChargeFromPartner,
    StorageState::DischargeToPartner,
    StorageState::ChargeGridAndPartner,
    StorageState::DischargeGridAndPartner,
};

bool charges_from_grid(StorageState s);     // cg | cgs
bool discharges_to_grid(StorageState s);    // dg | dgs
bool charges_from_partner(StorageState s);  // cs | cgs
bool discharges_to_partner(StorageState s); // ds | dgs
bool is_charging(StorageState s);
bool is_discharging(StorageState s);
std::string to_string(StorageState s);
StorageState storage_state_from_string(const std::string& name);

// Price-quantity offer set of one storage system for one hour.
struct EsoHourOffers {
  double p_ch_da = 0, p_dch_da = 0;   // day-ahead energy bid/offer prices
  double p_ru_da = 0, p_rd_da = 0;    // day-ahead reserve offer prices
  double p_ch_rt = 0, p_dch_rt = 0;   // real-time bid/offer prices
  double q_ch_da = 0, q_dch_da = 0;   // MW
  double q_ru_da = 0, q_rd_da = 0;    // MW
  double q_ch_rt = 0, q_dch_rt = 0;   // MW
};

struct EsoDayPlan {
  std::vector<StorageState> state;   // [t]
  std::vector<EsoHourOffers> offers; // [t]
  std::vector<double> soc;           // [t], end-of-hour MWh
};

// Complete operator decision: capacities plus, per day, the per-system plans
// and the planned/achieved inter-system transfers (indexed by source system).
struct EsoDecision {
  struct DayRecord {
    std::string day_id;
    std::array<EsoDayPlan, 2> sys;
    std::array<std::vector<double>, 2> transfer_planned;   // [src][t], MW
    std::array<std::vector<double>, 2> transfer_achieved;  // [src][t], MW
  };

  std::array<double, 2> capacity = {0.0, 0.0};  // MWh
  std::vector<DayRecord> days;
};

// Checks every operational invariant of a decision against the technology
// data: state exclusivity gating, transfer pairing, SOC corridor and terminal
// anchor, achieved-vs-planned transfers, and price caps. Returns a list of
// human-readable violations (empty when clean).
std::vector<std::string> validate_decision(const EsoDecision& decision,
                                           const std::array<StorageTech, 2>& techs,
                                           const PriceCaps& caps,
                                           double tol = 1e-6);

// Grid-access restriction applied to the operator's grid-side offer
// quantities (charge-side for imports, discharge-side for exports).
struct GridAccessSpec {
  enum class Kind {
    None,
    SharedImportCap,     // joint import limit across both systems
    ImportCongestionS1,  // import limit on system 1 alone
    ImportCongestionS2,
    SharedExportCap,
    ExportCongestionS1,
    ExportCongestionS2,
  };
  Kind kind = Kind::None;
  double limit_mw = 0.0;
};

std::string to_string(GridAccessSpec::Kind kind);
GridAccessSpec::Kind grid_access_kind_from_string(const std::string& name);

// A full planning scenario: the two candidate technologies, the weighted
// typical days, and an optional grid-access restriction.
struct Scenario {
  std::array<StorageTech, 2> techs;
  std::vector<ScenarioDay> days;
  GridAccessSpec grid_access;

  void validate() const;  // tech/day checks plus weights summing to one
};

enum class Market { DayAhead, RealTime };
enum class ClearingStatus { Optimal, Infeasible };

// One cleared participant/product line with its offer bound and bound duals.
struct ClearedLine {
  std::string participant;
  std::string product;  // E_DA, CH_DA, DCH_DA, RU_DA, RD_DA, RU_RT, RD_RT, E_RT, CH_RT, DCH_RT
  double quantity = 0.0;
  double offer_bound = 0.0;
  double offer_price = 0.0;
  double lower_dual = 0.0;  // multiplier of quantity >= 0
  double upper_dual = 0.0;  // multiplier of quantity <= bound
};

// Outcome of one hourly clearing run, either day-ahead or real-time.
struct ClearingResult {
  Market market = Market::DayAhead;
  ClearingStatus status = ClearingStatus::Optimal;
  std::string infeasibility;  // name of the violated requirement when infeasible
  double objective = 0.0;     // settlement cost at offer prices, $
  double lambda_energy = 0.0; // DA energy price
  double lambda_ru = 0.0;     // DA up-reserve price
  double lambda_rd = 0.0;     // DA down-reserve price
  double lambda_rt = 0.0;     // RT balancing price
  double balance_residual = 0.0;
  std::vector<ClearedLine> lines;

  const ClearedLine* find(const std::string& participant, const std::string& product) const;
  double quantity_of(const std::string& participant, const std::string& product) const;
};

// --- shared pure formulas -------------------------------------------------

// Reserve requirement rule: 3% of demand plus 5% of renewable output, applied
// identically to the up and down products.
std::pair<double, double> reserve_requirement(double demand_mw, double wind_output_mw);

// One-hour SOC balance: efficiency-weighted inflows minus efficiency-divided
// outflows added to the previous stored energy.
double soc_step(double prev_soc_mwh,
                double grid_charge_mw, double inbound_transfer_mw,
                double rt_down_deploy_mw, double rt_charge_mw,
                double grid_discharge_mw, double outbound_transfer_mw,
                double rt_up_deploy_mw, double rt_discharge_mw,
                const StorageTech& tech);

// Inter-system transfer power cap: the weaker of the two systems' power
// ratings at the given rated capacities.
double transfer_cap(const StorageTech& tech1, const StorageTech& tech2,
                    double capacity1_mwh, double capacity2_mwh);

// Net day-ahead-to-real-time wind deviation (cleared minus realized, summed
// over units); negative means surplus.
double net_deviation(const std::vector<double>& cleared_wind_mw,
                     const std::vector<double>& realized_wind_mw);

}  // namespace hessplan
