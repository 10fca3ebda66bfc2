#include "hessplan/domain.hpp"

#include <cmath>
#include <sstream>

namespace hessplan {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void require_series(const std::vector<double>& v, int horizon, const std::string& name,
                    const std::string& day) {
  if (static_cast<int>(v.size()) != horizon) {
    std::ostringstream os;
    os << day << ": " << name << " length " << v.size() << " != horizon " << horizon;
    throw ValidationError(os.str());
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
      std::ostringstream os;
      os << day << ": " << name << "[" << i << "] = " << v[i] << " is negative or non-finite";
      throw ValidationError(os.str());
    }
  }
}

}  // namespace

void StorageTech::validate() const {
  require(eta_charge > 0.0 && eta_charge <= 1.0, id + ": eta_charge outside (0,1]");
  require(eta_discharge > 0.0 && eta_discharge <= 1.0, id + ": eta_discharge outside (0,1]");
  require(soc_min >= 0.0 && soc_min <= soc_init && soc_init <= soc_max && soc_max <= 1.0,
          id + ": SOC fractions must satisfy 0 <= min <= init <= max <= 1");
  require(power_ratio > 0.0, id + ": power_ratio must be positive");
  require(max_capacity >= 0.0, id + ": max_capacity must be nonnegative");
  require(invest_cost >= 0.0, id + ": invest_cost must be nonnegative");
  require(marginal_cost >= 0.0, id + ": marginal_cost must be nonnegative");
}

void GasOffer::validate() const {
  for (const PriceQuantity* pq :
       {&da_energy, &da_reserve_up, &da_reserve_down, &rt_energy}) {
    require(pq->quantity_mw >= 0.0, id + ": offer quantity must be nonnegative");
    require(pq->price >= 0.0, id + ": offer price must be nonnegative");
  }
}

void PriceCaps::validate() const {
  require(da_energy >= 0.0 && da_reserve >= 0.0 && rt_energy >= 0.0,
          "price caps must be nonnegative");
}

void ScenarioDay::validate() const {
  require(horizon > 0, id + ": horizon must be positive");
  require(weight >= 0.0 && weight <= 1.0, id + ": weight outside [0,1]");
  require_series(demand, horizon, "demand", id);
  require_series(reserve_up_req, horizon, "reserve_up_req", id);
  require_series(reserve_down_req, horizon, "reserve_down_req", id);
  require(wind_offer.size() == wind_realized.size(),
          id + ": wind_offer and wind_realized unit counts differ");
  for (std::size_t w = 0; w < wind_offer.size(); ++w) {
    require_series(wind_offer[w], horizon, "wind_offer[" + std::to_string(w) + "]", id);
    require_series(wind_realized[w], horizon, "wind_realized[" + std::to_string(w) + "]", id);
  }
  require(static_cast<int>(gas.size()) == horizon, id + ": gas offer table must have one row per hour");
  const int g_count = num_gas();
  for (int t = 0; t < horizon; ++t) {
    require(static_cast<int>(gas[t].size()) == g_count,
            id + ": gas offer row " + std::to_string(t) + " has inconsistent generator count");
    for (const GasOffer& g : gas[t]) g.validate();
  }
  caps.validate();
}

bool charges_from_grid(StorageState s) {
  return s == StorageState::ChargeGrid || s == StorageState::ChargeGridAndPartner;
}
bool discharges_to_grid(StorageState s) {
  return s == StorageState::DischargeGrid || s == StorageState::DischargeGridAndPartner;
}
bool charges_from_partner(StorageState s) {
  return s == StorageState::ChargeFromPartner || s == StorageState::ChargeGridAndPartner;
}
bool discharges_to_partner(StorageState s) {
  return s == StorageState::DischargeToPartner || s == StorageState::DischargeGridAndPartner;
}
bool is_charging(StorageState s) { return charges_from_grid(s) || charges_from_partner(s); }
bool is_discharging(StorageState s) { return discharges_to_grid(s) || discharges_to_partner(s); }

std::string to_string(StorageState s) {
  switch (s) {
    case StorageState::Idle: return "idle";
    case StorageState::ChargeGrid: return "cg";
    case StorageState::DischargeGrid: return "dg";
    case StorageState::ChargeFromPartner: return "cs";
    case StorageState::DischargeToPartner: return "ds";
    case StorageState::ChargeGridAndPartner: return "cgs";
    case StorageState::DischargeGridAndPartner: return "dgs";
  }
  return "?";
}

StorageState storage_state_from_string(const std::string& name) {
  for (StorageState s : kAllStorageStates)
    if (to_string(s) == name) return s;
  throw ValidationError("unknown storage state '" + name + "'");
}

std::vector<std::string> validate_decision(const EsoDecision& decision,
                                           const std::array<StorageTech, 2>& techs,
                                           const PriceCaps& caps, double tol) {
  std::vector<std::string> issues;
  auto complain = [&issues](const std::string& msg) { issues.push_back(msg); };

  for (int s = 0; s < 2; ++s) {
    if (decision.capacity[s] < -tol || decision.capacity[s] > techs[s].max_capacity + tol)
      complain(techs[s].id + ": capacity " + std::to_string(decision.capacity[s]) +
               " outside [0, max]");
  }

  for (const auto& day : decision.days) {
    const int T = static_cast<int>(day.sys[0].state.size());
    for (int s = 0; s < 2; ++s) {
      const auto& plan = day.sys[s];
      const StorageTech& tech = techs[s];
      const double cap = decision.capacity[s];
      const std::string tag = day.day_id + "/" + tech.id;
      if (static_cast<int>(plan.offers.size()) != T || static_cast<int>(plan.soc.size()) != T) {
        complain(tag + ": plan series lengths inconsistent");
        continue;
      }
      for (int t = 0; t < T; ++t) {
        const auto& o = plan.offers[t];
        const StorageState st = plan.state[t];
        const double p_lim = tech.power_ratio * cap;
        auto gate = [&](double q, bool allowed, const char* what) {
          if (q < -tol) complain(tag + " t=" + std::to_string(t) + ": negative " + what);
          if (!allowed && q > tol)
            complain(tag + " t=" + std::to_string(t) + ": " + what + " offered in state " +
                     to_string(st));
          if (q > p_lim + tol)
            complain(tag + " t=" + std::to_string(t) + ": " + what + " exceeds power rating");
        };
        gate(o.q_dch_da, discharges_to_grid(st), "DA discharge");
        gate(o.q_dch_rt, discharges_to_grid(st), "RT discharge");
        gate(o.q_ru_da, discharges_to_grid(st), "up-reserve");
        gate(o.q_ch_da, charges_from_grid(st), "DA charge");
        gate(o.q_ch_rt, charges_from_grid(st), "RT charge");
        gate(o.q_rd_da, charges_from_grid(st), "down-reserve");
        if (is_discharging(st) &&
            o.q_dch_da + o.q_ru_da + o.q_dch_rt + day.transfer_planned[s][t] > p_lim + tol)
          complain(tag + " t=" + std::to_string(t) + ": total discharge commitment exceeds rating");
        if (is_charging(st)) {
          const int other = 1 - s;
          if (o.q_ch_da + o.q_rd_da + o.q_ch_rt + day.transfer_planned[other][t] > p_lim + tol)
            complain(tag + " t=" + std::to_string(t) + ": total charge commitment exceeds rating");
        }
        for (double p : {o.p_ch_da, o.p_dch_da})
          if (p < -tol || p > caps.da_energy + tol)
            complain(tag + " t=" + std::to_string(t) + ": DA energy price outside cap");
        for (double p : {o.p_ru_da, o.p_rd_da})
          if (p < -tol || p > caps.da_reserve + tol)
            complain(tag + " t=" + std::to_string(t) + ": reserve price outside cap");
        for (double p : {o.p_ch_rt, o.p_dch_rt})
          if (p < -tol || p > caps.rt_energy + tol)
            complain(tag + " t=" + std::to_string(t) + ": RT price outside cap");
        if (plan.soc[t] < tech.soc_min * cap - tol || plan.soc[t] > tech.soc_max * cap + tol)
          complain(tag + " t=" + std::to_string(t) + ": SOC outside corridor");
      }
      if (T > 0 && plan.soc[T - 1] < tech.soc_init * cap - tol)
        complain(tag + ": terminal SOC below initial anchor");
    }
    // transfer pairing: a planned outbound flow requires the sender in a
    // discharge-to-partner state and the receiver in a charge-from-partner state
    for (int t = 0; t < T; ++t) {
      for (int src = 0; src < 2; ++src) {
        const int dst = 1 - src;
        const bool send = discharges_to_partner(day.sys[src].state[t]);
        const bool recv = charges_from_partner(day.sys[dst].state[t]);
        if (send != recv)
          complain(day.day_id + " t=" + std::to_string(t) + ": transfer state pairing broken (" +
                   techs[src].id + "->" + techs[dst].id + ")");
        const double planned = day.transfer_planned[src][t];
        const double achieved = day.transfer_achieved[src][t];
        if (planned < -tol || achieved < -tol)
          complain(day.day_id + " t=" + std::to_string(t) + ": negative transfer");
        if (achieved > planned + tol)
          complain(day.day_id + " t=" + std::to_string(t) + ": achieved transfer above planned");
        if (!send && planned > tol)
          complain(day.day_id + " t=" + std::to_string(t) + ": transfer planned outside sending state");
        const double cap_mw =
            transfer_cap(techs[0], techs[1], decision.capacity[0], decision.capacity[1]);
        if (planned > cap_mw + tol)
          complain(day.day_id + " t=" + std::to_string(t) + ": transfer above inter-system cap");
      }
    }
  }
  return issues;
}

std::string to_string(GridAccessSpec::Kind kind) {
  switch (kind) {
    case GridAccessSpec::Kind::None: return "none";
    case GridAccessSpec::Kind::SharedImportCap: return "shared-import-cap";
    case GridAccessSpec::Kind::ImportCongestionS1: return "import-congestion-s1";
    case GridAccessSpec::Kind::ImportCongestionS2: return "import-congestion-s2";
    case GridAccessSpec::Kind::SharedExportCap: return "shared-export-cap";
    case GridAccessSpec::Kind::ExportCongestionS1: return "export-congestion-s1";
    case GridAccessSpec::Kind::ExportCongestionS2: return "export-congestion-s2";
  }
  return "?";
}

GridAccessSpec::Kind grid_access_kind_from_string(const std::string& name) {
  for (auto kind : {GridAccessSpec::Kind::None, GridAccessSpec::Kind::SharedImportCap,
                    GridAccessSpec::Kind::ImportCongestionS1,
                    GridAccessSpec::Kind::ImportCongestionS2,
                    GridAccessSpec::Kind::SharedExportCap,
                    GridAccessSpec::Kind::ExportCongestionS1,
                    GridAccessSpec::Kind::ExportCongestionS2})
    if (to_string(kind) == name) return kind;
  throw ConfigError(
      "unknown grid access variant '" + name +
      "'; valid: none, shared-import-cap, import-congestion-s1, import-congestion-s2, "
      "shared-export-cap, export-congestion-s1, export-congestion-s2");
}

void Scenario::validate() const {
  techs[0].validate();
  techs[1].validate();
  if (days.empty()) throw ValidationError("scenario has no days");
  double weight_sum = 0.0;
  for (const ScenarioDay& day : days) {
    day.validate();
    weight_sum += day.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "weights sum " << weight_sum << " != 1";
    throw ValidationError(os.str());
  }
  if (grid_access.kind != GridAccessSpec::Kind::None && grid_access.limit_mw < 0.0)
    throw ValidationError("grid access limit must be nonnegative");
}

const ClearedLine* ClearingResult::find(const std::string& participant,
                                        const std::string& product) const {
  for (const auto& line : lines)
    if (line.participant == participant && line.product == product) return &line;
  return nullptr;
}

double ClearingResult::quantity_of(const std::string& participant,
                                   const std::string& product) const {
  const ClearedLine* line = find(participant, product);
  return line ? line->quantity : 0.0;
}

std::pair<double, double> reserve_requirement(double demand_mw, double wind_output_mw) {
  if (demand_mw < 0.0 || wind_output_mw < 0.0)
    throw ValidationError("reserve_requirement: inputs must be nonnegative");
  const double req = 0.03 * demand_mw + 0.05 * wind_output_mw;
  return {req, req};
}

double soc_step(double prev_soc_mwh, double grid_charge_mw, double inbound_transfer_mw,
                double rt_down_deploy_mw, double rt_charge_mw, double grid_discharge_mw,
                double outbound_transfer_mw, double rt_up_deploy_mw, double rt_discharge_mw,
                const StorageTech& tech) {
  const double in = grid_charge_mw + inbound_transfer_mw + rt_down_deploy_mw + rt_charge_mw;
  const double out = grid_discharge_mw + outbound_transfer_mw + rt_up_deploy_mw + rt_discharge_mw;
  return prev_soc_mwh + tech.eta_charge * in - out / tech.eta_discharge;
}

double transfer_cap(const StorageTech& tech1, const StorageTech& tech2, double capacity1_mwh,
                    double capacity2_mwh) {
  return std::min(tech1.power_ratio * capacity1_mwh, tech2.power_ratio * capacity2_mwh);
}

double net_deviation(const std::vector<double>& cleared_wind_mw,
                     const std::vector<double>& realized_wind_mw) {
  if (cleared_wind_mw.size() != realized_wind_mw.size())
    throw ValidationError("net_deviation: series length mismatch");
  double dq = 0.0;
  for (std::size_t w = 0; w < cleared_wind_mw.size(); ++w)
    dq += cleared_wind_mw[w] - realized_wind_mw[w];
  return dq;
}

}  // namespace hessplan
