#pragma once

// Standalone hourly market clearings: the day-ahead joint energy/reserve
// auction and the real-time balancing auction, both solved as LPs whose
// balance-row duals are the published prices. Also settles operator profit
// from a sequence of hourly results. These engines double as the ground
// truth the single-level planning models are audited against.

#include <array>
#include <iosfwd>
#include <vector>

#include "hessplan/domain.hpp"
#include "hessplan/simplex.hpp"

namespace hessplan::market {

struct StorageDaOffer {
  std::string id;
  PriceQuantity charge;       // demand-side bid
  PriceQuantity discharge;    // supply-side offer
  PriceQuantity reserve_up;
  PriceQuantity reserve_down;
};

// One hour of day-ahead inputs. Wind offers are price-quantity pairs; the
// bundled scenarios always price wind at zero for priority dispatch.
struct DayAheadHour {
  double demand = 0.0;
  double reserve_up_req = 0.0;
  double reserve_down_req = 0.0;
  std::vector<PriceQuantity> wind;
  std::vector<GasOffer> gas;
  std::vector<StorageDaOffer> storage;
};

struct GasRtOffer {
  std::string id;
  double committed_ru = 0.0;   // cleared day-ahead up-reserve, MW
  double committed_rd = 0.0;   // cleared day-ahead down-reserve, MW
  double da_energy_price = 0.0;  // deployment settles at this price
  PriceQuantity rt_energy;
};

struct StorageRtOffer {
  std::string id;
  double committed_ru = 0.0;
  double committed_rd = 0.0;
  double p_dch_da = 0.0;  // up-deployment priced at the DA discharge offer
  double p_ch_da = 0.0;   // down-deployment priced at the DA charge bid
  PriceQuantity rt_discharge;
  PriceQuantity rt_charge;
};

struct RealTimeHour {
  double delta_q = 0.0;  // cleared-minus-realized wind; negative means surplus
  std::vector<GasRtOffer> gas;
  std::vector<StorageRtOffer> storage;
};

// Clears one day-ahead hour. Offer-short inputs produce an infeasible result
// naming the violated requirement; they never throw.
ClearingResult clear_day_ahead(const DayAheadHour& hour,
                               const lp::SimplexOptions& options = {});

// Clears one real-time hour against day-ahead commitments.
ClearingResult clear_real_time(const RealTimeHour& hour,
                               const lp::SimplexOptions& options = {});

// --- scenario plumbing ------------------------------------------------------

// Assembles the hour-t day-ahead inputs of a day, with the operator's offers
// taken from the decision (day_index into decision.days); pass nullptr to
// clear the market without storage participation.
DayAheadHour make_day_ahead_hour(const ScenarioDay& day, int t,
                                 const EsoDecision* decision, int day_index);

// Assembles hour-t real-time inputs from the day-ahead result of the same hour.
RealTimeHour make_real_time_hour(const ScenarioDay& day, int t,
                                 const ClearingResult& da_result,
                                 const EsoDecision* decision, int day_index);

// --- settlement -------------------------------------------------------------

struct ProfitBreakdown {
  double da_energy = 0.0;   // arbitrage net of marginal cost and transfer cost
  double da_reserve = 0.0;  // reserve revenue
  double rt_balance = 0.0;  // real-time settlement net of marginal cost
  double da_total() const { return da_energy + da_reserve; }
  double total() const { return da_energy + da_reserve + rt_balance; }
};

struct SettlementOptions {
  // When set, reserve revenue is scaled by the marginal cost c_s, i.e. the
  // operating-profit expression is applied literally; with the bundled
  // zero-cost technologies that wipes out reserve revenue entirely. Default
  // treats the term as plain reserve revenue.
  bool literal_reserve_cost_form = false;
};

struct DayProfit {
  std::array<ProfitBreakdown, 2> per_system;
  int negative_rt_price_hours = 0;  // flagged for reporting
  double total() const { return per_system[0].total() + per_system[1].total(); }
};

// Settles one day of operator profit from the hourly clearing results and the
// decision's achieved transfers. Throws ValidationError unless both result
// vectors cover exactly the day's horizon.
DayProfit settle_profit(const ScenarioDay& day, const std::vector<ClearingResult>& da,
                        const std::vector<ClearingResult>& rt, const EsoDecision& decision,
                        int day_index, const std::array<StorageTech, 2>& techs,
                        const SettlementOptions& options = {});

// --- invariants and export ---------------------------------------------------

// Merit-order and complementary-slackness checks on a day-ahead result;
// returns human-readable violations.
std::vector<std::string> check_day_ahead_invariants(const DayAheadHour& hour,
                                                    const ClearingResult& result,
                                                    double tol = 1e-6);

// Deployment-within-commitment and bound checks on a real-time result.
std::vector<std::string> check_real_time_invariants(const RealTimeHour& hour,
                                                    const ClearingResult& result,
                                                    double tol = 1e-6);

void write_clearing_csv_header(std::ostream& os);
void append_clearing_csv(std::ostream& os, const std::string& day_id, int hour,
                         const ClearingResult& result);

}  // namespace hessplan::market
