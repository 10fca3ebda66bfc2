#include "hessplan/market.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace hessplan::market {

using lp::LinearModel;
using lp::Relation;
using lp::RowEntry;
using lp::Sense;
using lp::Solution;
using lp::SolveStatus;
using lp::VarId;

namespace {

struct LineRef {
  std::string participant;
  std::string product;
  VarId var;
  double bound;
  double price;
};

void fill_lines(const LinearModel& model, const Solution& sol, ClearingResult& result,
                const std::vector<LineRef>& refs, const std::vector<double>& quantities) {
  const double flip = model.sense() == Sense::Maximize ? -1.0 : 1.0;
  for (const LineRef& ref : refs) {
    ClearedLine line;
    line.participant = ref.participant;
    line.product = ref.product;
    line.quantity = quantities[ref.var];
    line.offer_bound = ref.bound;
    line.offer_price = ref.price;
    // reduced cost in min orientation: positive supports the lower bound,
    // negative supports the upper bound
    const double d = flip * sol.reduced_cost[ref.var];
    line.lower_dual = std::max(0.0, d);
    line.upper_dual = std::max(0.0, -d);
    result.lines.push_back(std::move(line));
  }
}

// Tie-break pass: among cost-optimal dispatches, prefer the one with the
// largest storage participation. The move stays on the optimal face, so the
// first-stage prices and bound duals remain valid for the reported
// quantities. Storage variables occupy the id range [0, n_storage).
std::vector<double> optimistic_quantities(const LinearModel& stage1, const Solution& sol,
                                          int n_storage, const lp::SimplexOptions& options) {
  if (n_storage == 0 || sol.status != SolveStatus::Optimal) return sol.primal;
  // pin the settlement cost at its optimum
  std::vector<RowEntry> cost_row;
  for (VarId v = 0; v < stage1.num_variables(); ++v)
    if (stage1.objective()[v] != 0.0) cost_row.push_back({v, stage1.objective()[v]});
  LinearModel m2;
  for (VarId v = 0; v < stage1.num_variables(); ++v) {
    const auto& var = stage1.variable(v);
    m2.add_variable(var.name, var.lower, var.upper);
  }
  for (lp::RowId r = 0; r < stage1.num_constraints(); ++r) {
    const auto& row = stage1.constraint(r);
    m2.add_constraint(row.name, row.terms, row.relation, row.rhs);
  }
  m2.add_constraint("cost_pin", cost_row, Relation::Equal, sol.objective);
  std::vector<RowEntry> pref;
  for (VarId v = 0; v < n_storage; ++v) pref.push_back({v, 1.0});
  m2.set_objective(Sense::Maximize, pref);
  m2.seal();
  Solution stage2 = lp::solve_lp(m2, options);
  if (stage2.status != SolveStatus::Optimal) return sol.primal;
  return stage2.primal;
}

}  // namespace

ClearingResult clear_day_ahead(const DayAheadHour& hour, const lp::SimplexOptions& options) {
  ClearingResult result;
  result.market = Market::DayAhead;

  double supply = 0.0, ru = 0.0, rd = 0.0;
  for (const auto& w : hour.wind) supply += w.quantity_mw;
  for (const auto& g : hour.gas) {
    supply += g.da_energy.quantity_mw;
    ru += g.da_reserve_up.quantity_mw;
    rd += g.da_reserve_down.quantity_mw;
  }
  for (const auto& s : hour.storage) {
    supply += s.discharge.quantity_mw;
    ru += s.reserve_up.quantity_mw;
    rd += s.reserve_down.quantity_mw;
  }
  if (supply < hour.demand - 1e-9) {
    result.status = ClearingStatus::Infeasible;
    result.infeasibility = "energy balance";
    return result;
  }
  if (ru < hour.reserve_up_req - 1e-9) {
    result.status = ClearingStatus::Infeasible;
    result.infeasibility = "up-reserve requirement";
    return result;
  }
  if (rd < hour.reserve_down_req - 1e-9) {
    result.status = ClearingStatus::Infeasible;
    result.infeasibility = "down-reserve requirement";
    return result;
  }

  LinearModel m;
  std::vector<RowEntry> balance, ru_row, rd_row;
  std::vector<LineRef> refs;

  // storage offers register first so that equal-price ties at the margin
  // resolve in the storage's favor under the deterministic pivot order
  for (const auto& s : hour.storage) {
    const VarId dch = m.add_variable(s.id + ".dch", 0.0, s.discharge.quantity_mw);
    const VarId ch = m.add_variable(s.id + ".ch", 0.0, s.charge.quantity_mw);
    const VarId rup = m.add_variable(s.id + ".ru", 0.0, s.reserve_up.quantity_mw);
    const VarId rdn = m.add_variable(s.id + ".rd", 0.0, s.reserve_down.quantity_mw);
    balance.push_back({dch, 1.0});
    balance.push_back({ch, -1.0});
    ru_row.push_back({rup, 1.0});
    rd_row.push_back({rdn, 1.0});
    m.set_objective_term(dch, s.discharge.price);
    m.set_objective_term(ch, -s.charge.price);
    m.set_objective_term(rup, s.reserve_up.price);
    m.set_objective_term(rdn, s.reserve_down.price);
    refs.push_back({s.id, "DCH_DA", dch, s.discharge.quantity_mw, s.discharge.price});
    refs.push_back({s.id, "CH_DA", ch, s.charge.quantity_mw, s.charge.price});
    refs.push_back({s.id, "RU_DA", rup, s.reserve_up.quantity_mw, s.reserve_up.price});
    refs.push_back({s.id, "RD_DA", rdn, s.reserve_down.quantity_mw, s.reserve_down.price});
  }
  for (const GasOffer& g : hour.gas) {
    const VarId e = m.add_variable(g.id + ".e", 0.0, g.da_energy.quantity_mw);
    const VarId rup = m.add_variable(g.id + ".ru", 0.0, g.da_reserve_up.quantity_mw);
    const VarId rdn = m.add_variable(g.id + ".rd", 0.0, g.da_reserve_down.quantity_mw);
    balance.push_back({e, 1.0});
    ru_row.push_back({rup, 1.0});
    rd_row.push_back({rdn, 1.0});
    m.set_objective_term(e, g.da_energy.price);
    m.set_objective_term(rup, g.da_reserve_up.price);
    m.set_objective_term(rdn, g.da_reserve_down.price);
    refs.push_back({g.id, "E_DA", e, g.da_energy.quantity_mw, g.da_energy.price});
    refs.push_back({g.id, "RU_DA", rup, g.da_reserve_up.quantity_mw, g.da_reserve_up.price});
    refs.push_back({g.id, "RD_DA", rdn, g.da_reserve_down.quantity_mw, g.da_reserve_down.price});
  }
  for (std::size_t w = 0; w < hour.wind.size(); ++w) {
    const std::string id = "w" + std::to_string(w + 1);
    const VarId e = m.add_variable(id + ".e", 0.0, hour.wind[w].quantity_mw);
    balance.push_back({e, 1.0});
    m.set_objective_term(e, hour.wind[w].price);
    refs.push_back({id, "E_DA", e, hour.wind[w].quantity_mw, hour.wind[w].price});
  }

  m.add_constraint("balance_energy", balance, Relation::Equal, hour.demand);
  m.add_constraint("balance_ru", ru_row, Relation::Equal, hour.reserve_up_req);
  m.add_constraint("balance_rd", rd_row, Relation::Equal, hour.reserve_down_req);
  m.seal();

  Solution sol = lp::solve_lp(m, options);
  if (sol.status != SolveStatus::Optimal) {
    result.status = ClearingStatus::Infeasible;
    result.infeasibility = "energy balance";
    return result;
  }
  const std::vector<double> quantities =
      optimistic_quantities(m, sol, 4 * static_cast<int>(hour.storage.size()), options);
  result.status = ClearingStatus::Optimal;
  result.objective = sol.objective;
  result.lambda_energy = sol.dual(m, "balance_energy");
  result.lambda_ru = sol.dual(m, "balance_ru");
  result.lambda_rd = sol.dual(m, "balance_rd");
  fill_lines(m, sol, result, refs, quantities);

  double act = -hour.demand;
  for (const RowEntry& e : m.constraint(m.row_id("balance_energy")).terms)
    act += e.coeff * quantities[e.var];
  result.balance_residual = std::abs(act);
  return result;
}

ClearingResult clear_real_time(const RealTimeHour& hour, const lp::SimplexOptions& options) {
  ClearingResult result;
  result.market = Market::RealTime;

  double up_room = 0.0, down_room = 0.0;
  for (const auto& g : hour.gas) {
    up_room += g.committed_ru + g.rt_energy.quantity_mw;
    down_room += g.committed_rd;
  }
  for (const auto& s : hour.storage) {
    up_room += s.committed_ru + s.rt_discharge.quantity_mw;
    down_room += s.committed_rd + s.rt_charge.quantity_mw;
  }
  if (hour.delta_q > up_room + 1e-9 || -hour.delta_q > down_room + 1e-9) {
    result.status = ClearingStatus::Infeasible;
    result.infeasibility = "real-time balance";
    return result;
  }

  LinearModel m;
  std::vector<RowEntry> balance;
  std::vector<LineRef> refs;

  for (const auto& s : hour.storage) {
    const VarId rup = m.add_variable(s.id + ".ru_rt", 0.0, s.committed_ru);
    const VarId rdn = m.add_variable(s.id + ".rd_rt", 0.0, s.committed_rd);
    const VarId dch = m.add_variable(s.id + ".dch_rt", 0.0, s.rt_discharge.quantity_mw);
    const VarId ch = m.add_variable(s.id + ".ch_rt", 0.0, s.rt_charge.quantity_mw);
    balance.push_back({rup, 1.0});
    balance.push_back({rdn, -1.0});
    balance.push_back({dch, 1.0});
    balance.push_back({ch, -1.0});
    m.set_objective_term(rup, s.p_dch_da);
    m.set_objective_term(rdn, -s.p_ch_da);
    m.set_objective_term(dch, s.rt_discharge.price);
    m.set_objective_term(ch, -s.rt_charge.price);
    refs.push_back({s.id, "RU_RT", rup, s.committed_ru, s.p_dch_da});
    refs.push_back({s.id, "RD_RT", rdn, s.committed_rd, s.p_ch_da});
    refs.push_back({s.id, "DCH_RT", dch, s.rt_discharge.quantity_mw, s.rt_discharge.price});
    refs.push_back({s.id, "CH_RT", ch, s.rt_charge.quantity_mw, s.rt_charge.price});
  }
  for (const auto& g : hour.gas) {
    const VarId rup = m.add_variable(g.id + ".ru_rt", 0.0, g.committed_ru);
    const VarId rdn = m.add_variable(g.id + ".rd_rt", 0.0, g.committed_rd);
    const VarId e = m.add_variable(g.id + ".e_rt", 0.0, g.rt_energy.quantity_mw);
    balance.push_back({rup, 1.0});
    balance.push_back({rdn, -1.0});
    balance.push_back({e, 1.0});
    m.set_objective_term(rup, g.da_energy_price);
    m.set_objective_term(rdn, -g.da_energy_price);
    m.set_objective_term(e, g.rt_energy.price);
    refs.push_back({g.id, "RU_RT", rup, g.committed_ru, g.da_energy_price});
    refs.push_back({g.id, "RD_RT", rdn, g.committed_rd, g.da_energy_price});
    refs.push_back({g.id, "E_RT", e, g.rt_energy.quantity_mw, g.rt_energy.price});
  }

  m.add_constraint("balance_rt", balance, Relation::Equal, hour.delta_q);
  m.seal();

  Solution sol = lp::solve_lp(m, options);
  if (sol.status != SolveStatus::Optimal) {
    result.status = ClearingStatus::Infeasible;
    result.infeasibility = "real-time balance";
    return result;
  }
  const std::vector<double> quantities =
      optimistic_quantities(m, sol, 4 * static_cast<int>(hour.storage.size()), options);
  result.status = ClearingStatus::Optimal;
  result.objective = sol.objective;
  result.lambda_rt = sol.dual(m, "balance_rt");
  fill_lines(m, sol, result, refs, quantities);

  double act = -hour.delta_q;
  for (const RowEntry& e : m.constraint(m.row_id("balance_rt")).terms)
    act += e.coeff * quantities[e.var];
  result.balance_residual = std::abs(act);
  return result;
}

DayAheadHour make_day_ahead_hour(const ScenarioDay& day, int t, const EsoDecision* decision,
                                 int day_index) {
  DayAheadHour hour;
  hour.demand = day.demand[t];
  hour.reserve_up_req = day.reserve_up_req[t];
  hour.reserve_down_req = day.reserve_down_req[t];
  for (int w = 0; w < day.num_wind(); ++w) hour.wind.push_back({day.wind_offer[w][t], 0.0});
  hour.gas = day.gas[t];
  if (decision != nullptr) {
    const auto& rec = decision->days[day_index];
    for (int s = 0; s < 2; ++s) {
      const EsoHourOffers& o = rec.sys[s].offers[t];
      StorageDaOffer offer;
      offer.id = s == 0 ? "s1" : "s2";
      offer.charge = {o.q_ch_da, o.p_ch_da};
      offer.discharge = {o.q_dch_da, o.p_dch_da};
      offer.reserve_up = {o.q_ru_da, o.p_ru_da};
      offer.reserve_down = {o.q_rd_da, o.p_rd_da};
      hour.storage.push_back(offer);
    }
  }
  return hour;
}

RealTimeHour make_real_time_hour(const ScenarioDay& day, int t, const ClearingResult& da_result,
                                 const EsoDecision* decision, int day_index) {
  RealTimeHour hour;
  std::vector<double> cleared_wind, realized;
  for (int w = 0; w < day.num_wind(); ++w) {
    cleared_wind.push_back(da_result.quantity_of("w" + std::to_string(w + 1), "E_DA"));
    realized.push_back(day.wind_realized[w][t]);
  }
  hour.delta_q = net_deviation(cleared_wind, realized);
  for (const GasOffer& g : day.gas[t]) {
    GasRtOffer rt;
    rt.id = g.id;
    rt.committed_ru = da_result.quantity_of(g.id, "RU_DA");
    rt.committed_rd = da_result.quantity_of(g.id, "RD_DA");
    rt.da_energy_price = g.da_energy.price;
    rt.rt_energy = g.rt_energy;
    hour.gas.push_back(rt);
  }
  if (decision != nullptr) {
    const auto& rec = decision->days[day_index];
    for (int s = 0; s < 2; ++s) {
      const EsoHourOffers& o = rec.sys[s].offers[t];
      StorageRtOffer rt;
      rt.id = s == 0 ? "s1" : "s2";
      rt.committed_ru = da_result.quantity_of(rt.id, "RU_DA");
      rt.committed_rd = da_result.quantity_of(rt.id, "RD_DA");
      rt.p_dch_da = o.p_dch_da;
      rt.p_ch_da = o.p_ch_da;
      rt.rt_discharge = {o.q_dch_rt, o.p_dch_rt};
      rt.rt_charge = {o.q_ch_rt, o.p_ch_rt};
      hour.storage.push_back(rt);
    }
  }
  return hour;
}

DayProfit settle_profit(const ScenarioDay& day, const std::vector<ClearingResult>& da,
                        const std::vector<ClearingResult>& rt, const EsoDecision& decision,
                        int day_index, const std::array<StorageTech, 2>& techs,
                        const SettlementOptions& options) {
  const int T = day.horizon;
  if (static_cast<int>(da.size()) != T || static_cast<int>(rt.size()) != T)
    throw ValidationError("settle_profit: results must cover all " + std::to_string(T) +
                          " hours of day " + day.id);
  if (day_index < 0 || day_index >= static_cast<int>(decision.days.size()))
    throw ValidationError("settle_profit: day index out of range");

  DayProfit profit;
  const auto& rec = decision.days[day_index];
  const double joint_cost_rate = techs[0].marginal_cost + techs[1].marginal_cost;

  for (int t = 0; t < T; ++t) {
    const ClearingResult& da_t = da[t];
    const ClearingResult& rt_t = rt[t];
    if (rt_t.status == ClearingStatus::Optimal && rt_t.lambda_rt < -1e-9)
      ++profit.negative_rt_price_hours;
    const double transfers = rec.transfer_achieved[0][t] + rec.transfer_achieved[1][t];
    for (int s = 0; s < 2; ++s) {
      const std::string id = s == 0 ? "s1" : "s2";
      const double c = techs[s].marginal_cost;
      ProfitBreakdown& pb = profit.per_system[s];
      if (da_t.status == ClearingStatus::Optimal) {
        const double dch = da_t.quantity_of(id, "DCH_DA");
        const double ch = da_t.quantity_of(id, "CH_DA");
        const double qru = da_t.quantity_of(id, "RU_DA");
        const double qrd = da_t.quantity_of(id, "RD_DA");
        pb.da_energy += da_t.lambda_energy * (dch - ch) - c * (dch + ch);
        const double reserve_revenue = da_t.lambda_ru * qru + da_t.lambda_rd * qrd;
        pb.da_reserve += options.literal_reserve_cost_form ? c * reserve_revenue : reserve_revenue;
      }
      // the internal transfer cost is a joint term; split evenly for reporting
      pb.da_energy -= 0.5 * joint_cost_rate * transfers;
      if (rt_t.status == ClearingStatus::Optimal) {
        const double ru = rt_t.quantity_of(id, "RU_RT");
        const double rd = rt_t.quantity_of(id, "RD_RT");
        const double dch = rt_t.quantity_of(id, "DCH_RT");
        const double ch = rt_t.quantity_of(id, "CH_RT");
        pb.rt_balance += (rt_t.lambda_rt - c) * (ru + dch) - (rt_t.lambda_rt + c) * (rd + ch);
      }
    }
  }
  return profit;
}

namespace {

// price-merit check over one product side: cheaper supply (or dearer demand
// bids) must clear before anything above (below) it
void check_merit(const std::vector<const ClearedLine*>& stack, bool supply_side, double tol,
                 const std::string& label, std::vector<std::string>& issues) {
  for (const ClearedLine* full : stack) {
    if (full->offer_bound <= tol) continue;
    if (full->quantity < full->offer_bound - tol) continue;  // not fully cleared
    for (const ClearedLine* other : stack) {
      if (other == full || other->offer_bound <= tol) continue;
      if (other->quantity > tol) continue;  // not rejected
      const bool violated = supply_side ? full->offer_price > other->offer_price + tol
                                        : full->offer_price < other->offer_price - tol;
      if (violated)
        issues.push_back(label + ": fully cleared " + full->participant + "@" +
                         std::to_string(full->offer_price) + " vs rejected " +
                         other->participant + "@" + std::to_string(other->offer_price));
    }
  }
}

void check_bounds_and_slackness(const ClearingResult& result, double tol,
                                std::vector<std::string>& issues) {
  for (const ClearedLine& line : result.lines) {
    if (line.quantity < -tol || line.quantity > line.offer_bound + tol)
      issues.push_back(line.participant + "/" + line.product +
                       ": cleared quantity outside offer bound");
    if (line.lower_dual * std::abs(line.quantity) > tol * (1.0 + line.lower_dual))
      issues.push_back(line.participant + "/" + line.product +
                       ": lower-bound slackness violated");
    if (line.upper_dual * std::abs(line.offer_bound - line.quantity) >
        tol * (1.0 + line.upper_dual))
      issues.push_back(line.participant + "/" + line.product +
                       ": upper-bound slackness violated");
  }
}

}  // namespace

std::vector<std::string> check_day_ahead_invariants(const DayAheadHour& hour,
                                                    const ClearingResult& result, double tol) {
  std::vector<std::string> issues;
  if (result.status != ClearingStatus::Optimal) return issues;
  if (result.balance_residual > tol) issues.push_back("energy balance residual above tolerance");

  std::vector<const ClearedLine*> supply, demand, ru, rd;
  for (const ClearedLine& line : result.lines) {
    if (line.product == "E_DA" || line.product == "DCH_DA") supply.push_back(&line);
    if (line.product == "CH_DA") demand.push_back(&line);
    if (line.product == "RU_DA") ru.push_back(&line);
    if (line.product == "RD_DA") rd.push_back(&line);
  }
  check_merit(supply, true, tol, "energy supply", issues);
  check_merit(demand, false, tol, "energy demand", issues);
  check_merit(ru, true, tol, "up-reserve", issues);
  check_merit(rd, true, tol, "down-reserve", issues);
  check_bounds_and_slackness(result, tol, issues);

  double ru_total = 0.0, rd_total = 0.0;
  for (const ClearedLine* l : ru) ru_total += l->quantity;
  for (const ClearedLine* l : rd) rd_total += l->quantity;
  if (std::abs(ru_total - hour.reserve_up_req) > tol)
    issues.push_back("up-reserve requirement not met with equality");
  if (std::abs(rd_total - hour.reserve_down_req) > tol)
    issues.push_back("down-reserve requirement not met with equality");
  return issues;
}

std::vector<std::string> check_real_time_invariants(const RealTimeHour& hour,
                                                    const ClearingResult& result, double tol) {
  std::vector<std::string> issues;
  if (result.status != ClearingStatus::Optimal) return issues;
  if (result.balance_residual > tol)
    issues.push_back("real-time balance residual above tolerance");
  auto committed_of = [&hour](const std::string& id, bool up) {
    for (const auto& g : hour.gas)
      if (g.id == id) return up ? g.committed_ru : g.committed_rd;
    for (const auto& s : hour.storage)
      if (s.id == id) return up ? s.committed_ru : s.committed_rd;
    return 0.0;
  };
  for (const ClearedLine& line : result.lines) {
    if (line.product == "RU_RT" && line.quantity > committed_of(line.participant, true) + tol)
      issues.push_back(line.participant + ": up-deployment above day-ahead commitment");
    if (line.product == "RD_RT" && line.quantity > committed_of(line.participant, false) + tol)
      issues.push_back(line.participant + ": down-deployment above day-ahead commitment");
  }
  check_bounds_and_slackness(result, tol, issues);
  return issues;
}

void write_clearing_csv_header(std::ostream& os) {
  os << "day,hour,market,participant,product,cleared_mw,offer_mw,offer_price,"
        "price_energy,price_ru,price_rd,price_rt\n";
}

void append_clearing_csv(std::ostream& os, const std::string& day_id, int hour,
                         const ClearingResult& result) {
  const char* market = result.market == Market::DayAhead ? "DA" : "RT";
  for (const ClearedLine& line : result.lines) {
    os << day_id << ',' << hour << ',' << market << ',' << line.participant << ','
       << line.product << ',' << line.quantity << ',' << line.offer_bound << ','
       << line.offer_price << ',' << result.lambda_energy << ',' << result.lambda_ru << ','
       << result.lambda_rd << ',' << result.lambda_rt << "\n";
  }
}

}  // namespace hessplan::market
