#include "hessplan/mpec.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace hessplan::mpec {

using lp::kInfinity;
using lp::LinearModel;
using lp::Relation;
using lp::RowEntry;
using lp::Sense;
using lp::Solution;
using lp::VarId;

// ---------------------------------------------------------------------------
// generic KKT machinery
// ---------------------------------------------------------------------------

lp::VarId linearize_complementarity(LinearModel& model, const std::string& name,
                                    std::vector<RowEntry> slack_terms, double slack_constant,
                                    VarId dual, double big_m_primal, double big_m_dual) {
  if (big_m_primal <= 0.0 || big_m_dual <= 0.0)
    throw ConfigError("complementarity pair '" + name + "' needs positive big-M values");
  const VarId b = model.add_binary(name + ".b");
  // slack <= Mp * b
  std::vector<RowEntry> up = slack_terms;
  up.push_back({b, -big_m_primal});
  model.add_constraint(name + ".slk", std::move(up), Relation::LessEqual, -slack_constant);
  // dual <= Md * (1 - b)
  model.add_constraint(name + ".dual", {{dual, 1.0}, {b, big_m_dual}}, Relation::LessEqual,
                       big_m_dual);
  return b;
}

namespace {

// Same two rows with the binary replaced by a pinned continuous variable.
VarId fixed_complementarity(LinearModel& model, const std::string& name,
                            std::vector<RowEntry> slack_terms, double slack_constant,
                            VarId dual, double big_m_primal, double big_m_dual, double value) {
  const VarId b = model.add_variable(name + ".b", value, value);
  std::vector<RowEntry> up = slack_terms;
  up.push_back({b, -big_m_primal});
  model.add_constraint(name + ".slk", std::move(up), Relation::LessEqual, -slack_constant);
  model.add_constraint(name + ".dual", {{dual, 1.0}, {b, big_m_dual}}, Relation::LessEqual,
                       big_m_dual);
  return b;
}

}  // namespace

KktSystem derive_kkt(LinearModel& model, const LowerLevelSpec& spec, bool fixed_binaries,
                     const std::function<double(const std::string&)>* binary_value) {
  KktSystem sys;
  sys.tag = spec.tag;

  // balance duals first so stationarity rows can reference them
  for (const BalanceSpec& bal : spec.balances)
    sys.balance_dual.push_back(
        model.add_variable(spec.tag + "." + bal.name + ".lam", bal.dual_lower, bal.dual_upper));

  // primal variables
  std::vector<VarId> primal;
  for (const LowerVarSpec& v : spec.vars) {
    const bool const_ub = v.upper_bound.var < 0;
    const double ub0 = const_ub ? v.upper_bound.constant : kInfinity;
    primal.push_back(model.add_variable(spec.tag + "." + v.name + ".q", 0.0, ub0));
  }

  // balance equalities
  for (std::size_t i = 0; i < spec.balances.size(); ++i) {
    const BalanceSpec& bal = spec.balances[i];
    std::vector<RowEntry> terms;
    for (std::size_t k = 0; k < spec.vars.size(); ++k)
      for (const auto& [bi, coeff] : spec.vars[k].balance)
        if (static_cast<std::size_t>(bi) == i) terms.push_back({primal[k], coeff});
    for (const RowEntry& e : bal.rhs_terms) terms.push_back({e.var, -e.coeff});
    sys.primal_rows.push_back(model.add_constraint(spec.tag + "." + bal.name, std::move(terms),
                                                   Relation::Equal, bal.rhs_constant));
  }

  for (std::size_t k = 0; k < spec.vars.size(); ++k) {
    const LowerVarSpec& v = spec.vars[k];
    const std::string base = spec.tag + "." + v.name;
    KktVar h;
    h.primal = primal[k];
    h.mu_lo = model.add_variable(base + ".mu_lo", 0.0, v.big_m_dual);
    h.mu_up = model.add_variable(base + ".mu_up", 0.0, v.big_m_dual);

    // variable upper bound becomes an explicit row
    if (v.upper_bound.var >= 0) {
      model.add_constraint(base + ".ub",
                           {{h.primal, 1.0}, {v.upper_bound.var, -v.upper_bound.coeff}},
                           Relation::LessEqual, v.upper_bound.constant);
    }

    // stationarity: cost - sum(a_i * lam_i) - mu_lo + mu_up = 0
    std::vector<RowEntry> st;
    if (v.cost.var >= 0) st.push_back({v.cost.var, v.cost.coeff});
    for (const auto& [bi, coeff] : v.balance) st.push_back({sys.balance_dual[bi], -coeff});
    st.push_back({h.mu_lo, -1.0});
    st.push_back({h.mu_up, 1.0});
    sys.stationarity_rows.push_back(
        model.add_constraint(base + ".stat", std::move(st), Relation::Equal, -v.cost.constant));

    // complementarity, skipped for pairs that are structurally zero
    if (v.big_m_primal > 0.0) {
      auto make_pair = [&](const std::string& pname, std::vector<RowEntry> slack_terms,
                           double slack_constant, VarId dual) -> VarId {
        if (!fixed_binaries)
          return linearize_complementarity(model, pname, std::move(slack_terms), slack_constant,
                                           dual, v.big_m_primal, v.big_m_dual);
        if (binary_value == nullptr)
          throw BuilderError("fixed-binary KKT requires a binary lookup");
        const double val = (*binary_value)(pname + ".b");
        return fixed_complementarity(model, pname, std::move(slack_terms), slack_constant, dual,
                                     v.big_m_primal, v.big_m_dual, val);
      };
      // lower pair: slack = x
      h.b_lo = make_pair(base + ".lo", {{h.primal, 1.0}}, 0.0, h.mu_lo);
      // upper pair: slack = ub - x
      std::vector<RowEntry> up_slack = {{h.primal, -1.0}};
      double up_const = v.upper_bound.constant;
      if (v.upper_bound.var >= 0) up_slack.push_back({v.upper_bound.var, v.upper_bound.coeff});
      h.b_up = make_pair(base + ".up", std::move(up_slack), up_const, h.mu_up);
      if (v.forbid_interior && !fixed_binaries)
        model.add_constraint(base + ".noint", {{h.b_lo, 1.0}, {h.b_up, 1.0}},
                             Relation::LessEqual, 1.0);
    }
    sys.vars.push_back(h);
  }
  return sys;
}

VarId mccormick_envelope(LinearModel& model, VarId x, VarId y, const EnvelopeBox& box) {
  if (!std::isfinite(box.x_lo) || !std::isfinite(box.x_hi) || !std::isfinite(box.y_lo) ||
      !std::isfinite(box.y_hi))
    throw ConfigError("McCormick box must be finite: " + box.aux_name);
  if (box.x_lo > box.x_hi || box.y_lo > box.y_hi)
    throw ConfigError("McCormick box is empty: " + box.aux_name);
  const double w_lo =
      std::min(std::min(box.x_lo * box.y_lo, box.x_lo * box.y_hi),
               std::min(box.x_hi * box.y_lo, box.x_hi * box.y_hi));
  const double w_hi =
      std::max(std::max(box.x_lo * box.y_lo, box.x_lo * box.y_hi),
               std::max(box.x_hi * box.y_lo, box.x_hi * box.y_hi));
  const VarId w = model.add_variable(box.aux_name, w_lo, w_hi);
  // under-estimators
  model.add_constraint(box.aux_name + ".e1",
                       {{w, 1.0}, {x, -box.y_lo}, {y, -box.x_lo}}, Relation::GreaterEqual,
                       -box.x_lo * box.y_lo);
  model.add_constraint(box.aux_name + ".e2",
                       {{w, 1.0}, {x, -box.y_hi}, {y, -box.x_hi}}, Relation::GreaterEqual,
                       -box.x_hi * box.y_hi);
  // over-estimators
  model.add_constraint(box.aux_name + ".e3",
                       {{w, 1.0}, {x, -box.y_lo}, {y, -box.x_hi}}, Relation::LessEqual,
                       -box.x_hi * box.y_lo);
  model.add_constraint(box.aux_name + ".e4",
                       {{w, 1.0}, {x, -box.y_hi}, {y, -box.x_lo}}, Relation::LessEqual,
                       -box.x_lo * box.y_hi);
  return w;
}

double mccormick_gap_bound(const EnvelopeBox& box) {
  return (box.x_hi - box.x_lo) * (box.y_hi - box.y_lo) / 4.0;
}

// ---------------------------------------------------------------------------
// day-level assembly
// ---------------------------------------------------------------------------

namespace {

constexpr int kIdle = 0, kCg = 1, kDg = 2, kCs = 3, kDs = 4, kCgs = 5, kDgs = 6;

StorageState state_of_index(int k) {
  switch (k) {
    case kIdle: return StorageState::Idle;
    case kCg: return StorageState::ChargeGrid;
    case kDg: return StorageState::DischargeGrid;
    case kCs: return StorageState::ChargeFromPartner;
    case kDs: return StorageState::DischargeToPartner;
    case kCgs: return StorageState::ChargeGridAndPartner;
    default: return StorageState::DischargeGridAndPartner;
  }
}

int index_of_state(StorageState s) {
  switch (s) {
    case StorageState::Idle: return kIdle;
    case StorageState::ChargeGrid: return kCg;
    case StorageState::DischargeGrid: return kDg;
    case StorageState::ChargeFromPartner: return kCs;
    case StorageState::DischargeToPartner: return kDs;
    case StorageState::ChargeGridAndPartner: return kCgs;
    case StorageState::DischargeGridAndPartner: return kDgs;
  }
  return kIdle;
}

const char* kStateSuffix[7] = {"idle", "cg", "dg", "cs", "ds", "cgs", "dgs"};

std::string sys_name(int s) { return s == 0 ? "s1" : "s2"; }

}  // namespace

struct HourHandles {
  std::array<std::array<VarId, 7>, 2> om;  // -1 when states are frozen constants
  std::array<double, 2> gate_dch{}, gate_ch{}, gate_send{}, gate_recv{},
      gate_dch_total{}, gate_ch_total{};   // constants used when frozen
  std::array<VarId, 2> q_ch_da, q_dch_da, q_ru_da, q_rd_da, q_ch_rt, q_dch_rt;
  std::array<VarId, 2> p_ch_da, p_dch_da, p_ru_da, p_rd_da, p_ch_rt, p_dch_rt;
  std::array<VarId, 2> soc;
  std::array<VarId, 2> tr, tr_bar;  // by source system

  KktSystem da;
  std::array<int, 2> da_dch, da_ch, da_ru, da_rd;  // positions in da.vars
  std::vector<int> da_ge, da_gru, da_grd, da_w;

  KktSystem rt;
  std::array<int, 2> rt_sru, rt_srd, rt_sdch, rt_sch;
  std::vector<int> rt_gru, rt_grd, rt_ge;

  std::vector<VarId> v_wind;        // -1 when absent
  std::vector<VarId> w_gru, w_grd;  // -1 when absent
};

struct DayHandles {
  double gamma = 1.0;
  std::vector<HourHandles> hours;
};

class DayModel {
 public:
  LinearModel model;
  std::vector<SubstitutionRecord> ledger;
  CapacityMode mode = CapacityMode::Fixed;
  MpecOptions options;
  std::array<StorageTech, 2> techs;
  std::array<double, 2> e_fixed = {0, 0};
  std::array<VarId, 2> e_var = {-1, -1};
  GridAccessSpec grid;
  std::vector<ScenarioDay> day_data;
  std::vector<DayHandles> days;
  std::array<std::vector<StorageState>, 2> frozen_states;  // SP only, single day

  double capacity_value(const Solution& sol, int s) const {
    return e_var[s] >= 0 ? sol.primal[e_var[s]] : e_fixed[s];
  }
};

void DayModelDeleter::operator()(DayModel* p) const { delete p; }

namespace {

class Builder {
 public:
  Builder(DayModel& dm, const ApFixedSet* fixed) : dm_(dm), m_(dm.model), fixed_(fixed) {
    if (fixed_ != nullptr)
      for (const auto& [name, value] : fixed_->binary_values) binary_map_[name] = value;
  }

  void build() {
    if (dm_.mode == CapacityMode::Pinned || dm_.mode == CapacityMode::Variable) {
      for (int s = 0; s < 2; ++s)
        dm_.e_var[s] =
            m_.add_variable("E_" + sys_name(s), 0.0, dm_.techs[s].max_capacity);
    }
    if (dm_.mode == CapacityMode::Pinned) {
      for (int s = 0; s < 2; ++s)
        m_.add_constraint("pin_E_" + sys_name(s), {{dm_.e_var[s], 1.0}}, Relation::Equal,
                          dm_.e_fixed[s]);
    }

    for (std::size_t d = 0; d < dm_.day_data.size(); ++d) build_day(static_cast<int>(d));

    m_.set_objective(Sense::Maximize, {});
    for (const RowEntry& e : objective_) m_.set_objective_term(e.var, e.coeff);
    m_.add_objective_constant(objective_constant_);
    if (dm_.mode == CapacityMode::Variable)
      for (int s = 0; s < 2; ++s)
        m_.set_objective_term(dm_.e_var[s], -dm_.techs[s].invest_cost);
    m_.seal();
  }

 private:
  DayModel& dm_;
  LinearModel& m_;
  const ApFixedSet* fixed_;
  std::map<std::string, double> binary_map_;
  std::vector<RowEntry> objective_;
  double objective_constant_ = 0.0;

  bool frozen() const { return dm_.mode == CapacityMode::Pinned; }

  double fixed_binary(const std::string& name) const {
    auto it = binary_map_.find(name);
    if (it == binary_map_.end())
      throw BuilderError("fixed set incomplete: missing binary '" + name + "'");
    return it->second;
  }

  void add_obj(VarId v, double c) {
    if (v >= 0 && c != 0.0) objective_.push_back({v, c});
  }

  // capacity term of system s as a row entry; returns the constant part
  double e_term(int s, double coeff, std::vector<RowEntry>& terms) const {
    if (dm_.mode == CapacityMode::Fixed) return coeff * dm_.e_fixed[s];
    terms.push_back({dm_.e_var[s], coeff});
    return 0.0;
  }

  double e_upper(int s) const {
    return dm_.mode == CapacityMode::Fixed ? dm_.e_fixed[s] : dm_.techs[s].max_capacity;
  }

  // Big-M of the storage-side complementarity slacks. Pair existence follows
  // the investment limit so the auxiliary/subproblem/monolithic forms share
  // one pair set; the value is tightened to the fixed capacity where known.
  double mp_storage(int s) const {
    const double cap_ub = dm_.techs[s].power_ratio * dm_.techs[s].max_capacity;
    if (dm_.mode == CapacityMode::Variable) return cap_ub;
    // zero rated capacity pins everything to zero; the pairs degenerate away.
    // The subproblem follows the pin target so its pair set matches the
    // auxiliary problem solved at the same capacities.
    if (dm_.techs[s].power_ratio * dm_.e_fixed[s] <= 0.0) return 0.0;
    return dm_.mode == CapacityMode::Fixed ? dm_.techs[s].power_ratio * dm_.e_fixed[s] : cap_ub;
  }

  void build_day(int d) {
    const ScenarioDay& day = dm_.day_data[d];
    DayHandles& dh = dm_.days[d];
    dh.gamma = day.weight;
    dh.hours.resize(day.horizon);
    for (int t = 0; t < day.horizon; ++t) build_hour(d, t);
    // terminal SOC anchor
    for (int s = 0; s < 2; ++s) {
      std::vector<RowEntry> terms = {{dh.hours[day.horizon - 1].soc[s], 1.0}};
      const double c = e_term(s, -dm_.techs[s].soc_init, terms);
      m_.add_constraint(prefix(d, day.horizon - 1) + sys_name(s) + ".soc_final", std::move(terms),
                        Relation::GreaterEqual, -c);
    }
  }

  std::string prefix(int d, int t) const {
    return "d" + std::to_string(d) + ".t" + std::to_string(t) + ".";
  }

  void build_hour(int d, int t) {
    build_states(d, t);
    build_offers_and_prices(d, t);
    build_llp1(d, t);
    build_llp2(d, t);
    build_gating(d, t);
    build_soc(d, t);
    build_grid_access(d, t);
    build_objective_terms(d, t);
  }

  void build_states(int d, int t) {
    HourHandles& h = dm_.days[d].hours[t];
    const std::string pre = prefix(d, t);
    if (frozen()) {
      for (int s = 0; s < 2; ++s) {
        h.om[s].fill(-1);
        const int k = index_of_state(dm_.frozen_states[s][t]);
        auto gate = [&](std::initializer_list<int> ks) {
          for (int kk : ks)
            if (kk == k) return 1.0;
          return 0.0;
        };
        h.gate_dch[s] = gate({kDg, kDgs});
        h.gate_ch[s] = gate({kCg, kCgs});
        h.gate_send[s] = gate({kDs, kDgs});
        h.gate_recv[s] = gate({kCs, kCgs});
        h.gate_dch_total[s] = gate({kDg, kDs, kDgs});
        h.gate_ch_total[s] = gate({kCg, kCs, kCgs});
      }
      return;
    }
    for (int s = 0; s < 2; ++s) {
      std::vector<RowEntry> sum;
      for (int k = 0; k < 7; ++k) {
        h.om[s][k] = m_.add_binary(pre + sys_name(s) + ".om_" + kStateSuffix[k]);
        sum.push_back({h.om[s][k], 1.0});
      }
      m_.add_constraint(pre + sys_name(s) + ".state_sum", std::move(sum), Relation::Equal, 1.0);
    }
    // transfer pairing: sender states on one side match receiver states on the other
    for (int s = 0; s < 2; ++s) {
      const int o = 1 - s;
      m_.add_constraint(pre + sys_name(s) + ".pairing",
                        {{h.om[s][kDs], 1.0},
                         {h.om[s][kDgs], 1.0},
                         {h.om[o][kCs], -1.0},
                         {h.om[o][kCgs], -1.0}},
                        Relation::Equal, 0.0);
    }
  }

  void build_offers_and_prices(int d, int t) {
    HourHandles& h = dm_.days[d].hours[t];
    const ScenarioDay& day = dm_.day_data[d];
    const std::string pre = prefix(d, t);
    for (int s = 0; s < 2; ++s) {
      const std::string sp = pre + sys_name(s) + ".";
      const double pmax = dm_.techs[s].power_ratio * e_upper(s);
      h.q_ch_da[s] = m_.add_variable(sp + "q_ch_da", 0.0, pmax);
      h.q_dch_da[s] = m_.add_variable(sp + "q_dch_da", 0.0, pmax);
      h.q_ru_da[s] = m_.add_variable(sp + "q_ru_da", 0.0, pmax);
      h.q_rd_da[s] = m_.add_variable(sp + "q_rd_da", 0.0, pmax);
      h.q_ch_rt[s] = m_.add_variable(sp + "q_ch_rt", 0.0, pmax);
      h.q_dch_rt[s] = m_.add_variable(sp + "q_dch_rt", 0.0, pmax);

      auto price = [&](const char* name, double cap, double fixed_value) {
        if (frozen()) return m_.add_variable(sp + name, fixed_value, fixed_value);
        return m_.add_variable(sp + name, 0.0, cap);
      };
      const EsoHourOffers* fo = frozen() ? &fixed_->offers[s][t] : nullptr;
      h.p_ch_da[s] = price("p_ch_da", day.caps.da_energy, fo ? fo->p_ch_da : 0);
      h.p_dch_da[s] = price("p_dch_da", day.caps.da_energy, fo ? fo->p_dch_da : 0);
      h.p_ru_da[s] = price("p_ru_da", day.caps.da_reserve, fo ? fo->p_ru_da : 0);
      h.p_rd_da[s] = price("p_rd_da", day.caps.da_reserve, fo ? fo->p_rd_da : 0);
      h.p_ch_rt[s] = price("p_ch_rt", day.caps.rt_energy, fo ? fo->p_ch_rt : 0);
      h.p_dch_rt[s] = price("p_dch_rt", day.caps.rt_energy, fo ? fo->p_dch_rt : 0);
    }
    const double tr_ub = std::min(dm_.techs[0].power_ratio * e_upper(0),
                                  dm_.techs[1].power_ratio * e_upper(1));
    for (int src = 0; src < 2; ++src) {
      const std::string name = src == 0 ? "tr_s1s2" : "tr_s2s1";
      h.tr[src] = m_.add_variable(pre + name, 0.0, tr_ub);
      h.tr_bar[src] = m_.add_variable(pre + name + "_bar", 0.0, tr_ub);
      m_.add_constraint(pre + name + "_cap", {{h.tr_bar[src], 1.0}, {h.tr[src], -1.0}},
                        Relation::LessEqual, 0.0);
    }
  }

  void build_llp1(int d, int t) {
    HourHandles& h = dm_.days[d].hours[t];
    const ScenarioDay& day = dm_.day_data[d];
    const PriceCaps& caps = day.caps;

    LowerLevelSpec spec;
    spec.tag = prefix(d, t) + "da";
    spec.balances.push_back({"bal_e", day.demand[t], {}, 0.0, caps.da_energy});
    spec.balances.push_back({"bal_ru", day.reserve_up_req[t], {}, 0.0, caps.da_reserve});
    spec.balances.push_back({"bal_rd", day.reserve_down_req[t], {}, 0.0, caps.da_reserve});

    auto storage_var = [&](int s, const char* name, VarId price, double price_coeff,
                           int balance, double bal_coeff, VarId bound, double md) {
      LowerVarSpec v;
      v.name = sys_name(s) + std::string(".") + name;
      v.cost = {0.0, price, price_coeff};
      v.balance = {{balance, bal_coeff}};
      v.upper_bound = {0.0, bound, 1.0};
      v.big_m_primal = mp_storage(s);
      v.big_m_dual = md;
      return v;
    };

    for (int s = 0; s < 2; ++s) {
      h.da_dch[s] = static_cast<int>(spec.vars.size());
      spec.vars.push_back(
          storage_var(s, "dch", h.p_dch_da[s], 1.0, 0, 1.0, h.q_dch_da[s], caps.da_energy));
      h.da_ch[s] = static_cast<int>(spec.vars.size());
      spec.vars.push_back(
          storage_var(s, "ch", h.p_ch_da[s], -1.0, 0, -1.0, h.q_ch_da[s], caps.da_energy));
      h.da_ru[s] = static_cast<int>(spec.vars.size());
      spec.vars.push_back(
          storage_var(s, "ru", h.p_ru_da[s], 1.0, 1, 1.0, h.q_ru_da[s], caps.da_reserve));
      h.da_rd[s] = static_cast<int>(spec.vars.size());
      spec.vars.push_back(
          storage_var(s, "rd", h.p_rd_da[s], 1.0, 2, 1.0, h.q_rd_da[s], caps.da_reserve));
    }
    h.da_ge.clear();
    h.da_gru.clear();
    h.da_grd.clear();
    for (const GasOffer& g : day.gas[t]) {
      LowerVarSpec e;
      e.name = g.id + ".e";
      e.cost = {g.da_energy.price, -1, 1.0};
      e.balance = {{0, 1.0}};
      e.upper_bound = {g.da_energy.quantity_mw, -1, 1.0};
      e.big_m_primal = g.da_energy.quantity_mw;
      e.big_m_dual = caps.da_energy;
      h.da_ge.push_back(static_cast<int>(spec.vars.size()));
      spec.vars.push_back(e);

      LowerVarSpec ru = e;
      ru.name = g.id + ".ru";
      ru.cost = {g.da_reserve_up.price, -1, 1.0};
      ru.balance = {{1, 1.0}};
      ru.upper_bound = {g.da_reserve_up.quantity_mw, -1, 1.0};
      ru.big_m_primal = g.da_reserve_up.quantity_mw;
      ru.big_m_dual = caps.da_reserve;
      h.da_gru.push_back(static_cast<int>(spec.vars.size()));
      spec.vars.push_back(ru);

      LowerVarSpec rd = ru;
      rd.name = g.id + ".rd";
      rd.cost = {g.da_reserve_down.price, -1, 1.0};
      rd.balance = {{2, 1.0}};
      rd.upper_bound = {g.da_reserve_down.quantity_mw, -1, 1.0};
      rd.big_m_primal = g.da_reserve_down.quantity_mw;
      h.da_grd.push_back(static_cast<int>(spec.vars.size()));
      spec.vars.push_back(rd);
    }
    h.da_w.clear();
    for (int w = 0; w < day.num_wind(); ++w) {
      LowerVarSpec v;
      v.name = "w" + std::to_string(w + 1);
      v.cost = {0.0, -1, 1.0};
      v.balance = {{0, 1.0}};
      v.upper_bound = {day.wind_offer[w][t], -1, 1.0};
      v.big_m_primal = day.wind_offer[w][t];
      v.big_m_dual = caps.da_energy;
      v.forbid_interior = true;
      h.da_w.push_back(static_cast<int>(spec.vars.size()));
      spec.vars.push_back(v);
    }

    std::function<double(const std::string&)> lookup = [this](const std::string& name) {
      return fixed_binary(name);
    };
    h.da = derive_kkt(m_, spec, frozen(), frozen() ? &lookup : nullptr);
  }

  void build_llp2(int d, int t) {
    HourHandles& h = dm_.days[d].hours[t];
    const ScenarioDay& day = dm_.day_data[d];
    const PriceCaps& caps = day.caps;
    const double md_rt = caps.da_energy + caps.rt_energy;

    LowerLevelSpec spec;
    spec.tag = prefix(d, t) + "rt";
    BalanceSpec bal;
    bal.name = "bal";
    bal.dual_lower = -caps.rt_energy;
    bal.dual_upper = caps.rt_energy;
    double real_sum = 0.0;
    for (int w = 0; w < day.num_wind(); ++w) {
      real_sum += day.wind_realized[w][t];
      bal.rhs_terms.push_back({h.da.vars[h.da_w[w]].primal, 1.0});
    }
    bal.rhs_constant = -real_sum;
    spec.balances.push_back(bal);

    for (int s = 0; s < 2; ++s) {
      const double pmax = mp_storage(s);
      LowerVarSpec ru;
      ru.name = sys_name(s) + ".ru";
      ru.cost = {0.0, h.p_dch_da[s], 1.0};
      ru.balance = {{0, 1.0}};
      ru.upper_bound = {0.0, h.da.vars[h.da_ru[s]].primal, 1.0};
      ru.big_m_primal = pmax;
      ru.big_m_dual = md_rt;
      h.rt_sru[s] = static_cast<int>(spec.vars.size());
      spec.vars.push_back(ru);

      LowerVarSpec rd = ru;
      rd.name = sys_name(s) + ".rd";
      rd.cost = {0.0, h.p_ch_da[s], -1.0};
      rd.balance = {{0, -1.0}};
      rd.upper_bound = {0.0, h.da.vars[h.da_rd[s]].primal, 1.0};
      h.rt_srd[s] = static_cast<int>(spec.vars.size());
      spec.vars.push_back(rd);

      LowerVarSpec dch = ru;
      dch.name = sys_name(s) + ".dch";
      dch.cost = {0.0, h.p_dch_rt[s], 1.0};
      dch.balance = {{0, 1.0}};
      dch.upper_bound = {0.0, h.q_dch_rt[s], 1.0};
      h.rt_sdch[s] = static_cast<int>(spec.vars.size());
      spec.vars.push_back(dch);

      LowerVarSpec ch = ru;
      ch.name = sys_name(s) + ".ch";
      ch.cost = {0.0, h.p_ch_rt[s], -1.0};
      ch.balance = {{0, -1.0}};
      ch.upper_bound = {0.0, h.q_ch_rt[s], 1.0};
      h.rt_sch[s] = static_cast<int>(spec.vars.size());
      spec.vars.push_back(ch);
    }
    h.rt_gru.clear();
    h.rt_grd.clear();
    h.rt_ge.clear();
    for (std::size_t gi = 0; gi < day.gas[t].size(); ++gi) {
      const GasOffer& g = day.gas[t][gi];
      LowerVarSpec ru;
      ru.name = g.id + ".ru";
      ru.cost = {g.da_energy.price, -1, 1.0};
      ru.balance = {{0, 1.0}};
      ru.upper_bound = {0.0, h.da.vars[h.da_gru[gi]].primal, 1.0};
      ru.big_m_primal = g.da_reserve_up.quantity_mw;
      ru.big_m_dual = md_rt;
      h.rt_gru.push_back(static_cast<int>(spec.vars.size()));
      spec.vars.push_back(ru);

      LowerVarSpec rd = ru;
      rd.name = g.id + ".rd";
      rd.cost = {-g.da_energy.price, -1, 1.0};
      rd.balance = {{0, -1.0}};
      rd.upper_bound = {0.0, h.da.vars[h.da_grd[gi]].primal, 1.0};
      rd.big_m_primal = g.da_reserve_down.quantity_mw;
      h.rt_grd.push_back(static_cast<int>(spec.vars.size()));
      spec.vars.push_back(rd);

      LowerVarSpec e = ru;
      e.name = g.id + ".e";
      e.cost = {g.rt_energy.price, -1, 1.0};
      e.balance = {{0, 1.0}};
      e.upper_bound = {g.rt_energy.quantity_mw, -1, 1.0};
      e.big_m_primal = g.rt_energy.quantity_mw;
      h.rt_ge.push_back(static_cast<int>(spec.vars.size()));
      spec.vars.push_back(e);
    }

    std::function<double(const std::string&)> lookup = [this](const std::string& name) {
      return fixed_binary(name);
    };
    h.rt = derive_kkt(m_, spec, frozen(), frozen() ? &lookup : nullptr);
  }

  // one gating row in the mode-appropriate shape
  void gate_row(const HourHandles& h, const std::string& name, std::vector<RowEntry> lhs, int s,
                const std::vector<int>& states, double frozen_gate, double ratio) {
    if (dm_.mode == CapacityMode::Fixed) {
      const double cap = ratio * dm_.e_fixed[s];
      std::vector<RowEntry> terms = lhs;
      for (int k : states) terms.push_back({h.om[s][k], -cap});
      m_.add_constraint(name, std::move(terms), Relation::LessEqual, 0.0);
      return;
    }
    if (dm_.mode == CapacityMode::Pinned) {
      std::vector<RowEntry> terms = lhs;
      if (frozen_gate * ratio != 0.0) terms.push_back({dm_.e_var[s], -frozen_gate * ratio});
      m_.add_constraint(name, std::move(terms), Relation::LessEqual, 0.0);
      return;
    }
    // Variable: gate row against the investment cap plus a capacity row
    const double cap_ub = ratio * dm_.techs[s].max_capacity;
    std::vector<RowEntry> terms = lhs;
    for (int k : states) terms.push_back({h.om[s][k], -cap_ub});
    m_.add_constraint(name + ".gate", std::move(terms), Relation::LessEqual, 0.0);
    std::vector<RowEntry> terms2 = lhs;
    terms2.push_back({dm_.e_var[s], -ratio});
    m_.add_constraint(name + ".cap", std::move(terms2), Relation::LessEqual, 0.0);
  }

  void build_gating(int d, int t) {
    HourHandles& h = dm_.days[d].hours[t];
    const std::string pre = prefix(d, t);
    for (int s = 0; s < 2; ++s) {
      const std::string sp = pre + sys_name(s) + ".";
      const double r = dm_.techs[s].power_ratio;
      const int o = 1 - s;
      gate_row(h, sp + "g_dch_da", {{h.q_dch_da[s], 1.0}}, s, {kDg, kDgs}, h.gate_dch[s], r);
      gate_row(h, sp + "g_dch_rt", {{h.q_dch_rt[s], 1.0}}, s, {kDg, kDgs}, h.gate_dch[s], r);
      gate_row(h, sp + "g_ru", {{h.q_ru_da[s], 1.0}}, s, {kDg, kDgs}, h.gate_dch[s], r);
      gate_row(h, sp + "g_ch_da", {{h.q_ch_da[s], 1.0}}, s, {kCg, kCgs}, h.gate_ch[s], r);
      gate_row(h, sp + "g_ch_rt", {{h.q_ch_rt[s], 1.0}}, s, {kCg, kCgs}, h.gate_ch[s], r);
      gate_row(h, sp + "g_rd", {{h.q_rd_da[s], 1.0}}, s, {kCg, kCgs}, h.gate_ch[s], r);
      gate_row(h, sp + "g_dch_all",
               {{h.q_dch_da[s], 1.0}, {h.tr[s], 1.0}, {h.q_ru_da[s], 1.0}, {h.q_dch_rt[s], 1.0}},
               s, {kDg, kDs, kDgs}, h.gate_dch_total[s], r);
      gate_row(h, sp + "g_ch_all",
               {{h.q_ch_da[s], 1.0}, {h.tr[o], 1.0}, {h.q_rd_da[s], 1.0}, {h.q_ch_rt[s], 1.0}},
               s, {kCg, kCs, kCgs}, h.gate_ch_total[s], r);
    }
    // planned transfer gates, sender and receiver side, against the weaker rating
    for (int src = 0; src < 2; ++src) {
      const int dst = 1 - src;
      const std::string name = pre + (src == 0 ? "tr_s1s2" : "tr_s2s1");
      if (dm_.mode == CapacityMode::Fixed) {
        const double cap = std::min(dm_.techs[0].power_ratio * dm_.e_fixed[0],
                                    dm_.techs[1].power_ratio * dm_.e_fixed[1]);
        m_.add_constraint(name + "_send",
                          {{h.tr[src], 1.0}, {h.om[src][kDs], -cap}, {h.om[src][kDgs], -cap}},
                          Relation::LessEqual, 0.0);
        m_.add_constraint(name + "_recv",
                          {{h.tr[src], 1.0}, {h.om[dst][kCs], -cap}, {h.om[dst][kCgs], -cap}},
                          Relation::LessEqual, 0.0);
      } else if (dm_.mode == CapacityMode::Pinned) {
        if (h.gate_send[src] < 0.5 || h.gate_recv[dst] < 0.5) {
          m_.set_bounds(h.tr[src], 0.0, 0.0);
        } else {
          for (int s = 0; s < 2; ++s) {
            std::vector<RowEntry> terms = {{h.tr[src], 1.0},
                                           {dm_.e_var[s], -dm_.techs[s].power_ratio}};
            m_.add_constraint(name + "_cap_" + sys_name(s), std::move(terms),
                              Relation::LessEqual, 0.0);
          }
        }
      } else {
        const double cap_ub = std::min(dm_.techs[0].power_ratio * dm_.techs[0].max_capacity,
                                       dm_.techs[1].power_ratio * dm_.techs[1].max_capacity);
        m_.add_constraint(name + "_send",
                          {{h.tr[src], 1.0}, {h.om[src][kDs], -cap_ub}, {h.om[src][kDgs], -cap_ub}},
                          Relation::LessEqual, 0.0);
        m_.add_constraint(name + "_recv",
                          {{h.tr[src], 1.0}, {h.om[dst][kCs], -cap_ub}, {h.om[dst][kCgs], -cap_ub}},
                          Relation::LessEqual, 0.0);
        for (int s = 0; s < 2; ++s)
          m_.add_constraint(name + "_cap_" + sys_name(s),
                            {{h.tr[src], 1.0}, {dm_.e_var[s], -dm_.techs[s].power_ratio}},
                            Relation::LessEqual, 0.0);
      }
    }
  }

  void build_soc(int d, int t) {
    HourHandles& h = dm_.days[d].hours[t];
    const std::string pre = prefix(d, t);
    for (int s = 0; s < 2; ++s) {
      const StorageTech& tech = dm_.techs[s];
      const std::string sp = pre + sys_name(s) + ".";
      double lo = 0.0, hi = kInfinity;
      if (dm_.mode == CapacityMode::Fixed) {
        lo = tech.soc_min * dm_.e_fixed[s];
        hi = tech.soc_max * dm_.e_fixed[s];
      }
      h.soc[s] = m_.add_variable(sp + "soc", lo, hi);
      if (dm_.mode != CapacityMode::Fixed) {
        m_.add_constraint(sp + "soc_hi", {{h.soc[s], 1.0}, {dm_.e_var[s], -tech.soc_max}},
                          Relation::LessEqual, 0.0);
        m_.add_constraint(sp + "soc_lo", {{h.soc[s], 1.0}, {dm_.e_var[s], -tech.soc_min}},
                          Relation::GreaterEqual, 0.0);
      }

      const int o = 1 - s;
      std::vector<RowEntry> terms = {{h.soc[s], 1.0}};
      const double ec = tech.eta_charge;
      const double ed = 1.0 / tech.eta_discharge;
      // charge-side inflows
      terms.push_back({h.da.vars[h.da_ch[s]].primal, -ec});
      terms.push_back({h.tr_bar[o], -ec});
      terms.push_back({h.rt.vars[h.rt_srd[s]].primal, -ec});
      terms.push_back({h.rt.vars[h.rt_sch[s]].primal, -ec});
      // discharge-side outflows
      terms.push_back({h.da.vars[h.da_dch[s]].primal, ed});
      terms.push_back({h.tr_bar[s], ed});
      terms.push_back({h.rt.vars[h.rt_sru[s]].primal, ed});
      terms.push_back({h.rt.vars[h.rt_sdch[s]].primal, ed});
      double rhs = 0.0;
      if (t == 0) {
        // start-of-day anchor at the initial SOC fraction of rated capacity
        if (dm_.mode == CapacityMode::Fixed)
          rhs = tech.soc_init * dm_.e_fixed[s];
        else
          terms.push_back({dm_.e_var[s], -tech.soc_init});
      } else {
        terms.push_back({dm_.days[d].hours[t - 1].soc[s], -1.0});
      }
      m_.add_constraint(sp + "soc_bal", std::move(terms), Relation::Equal, rhs);
    }
  }

  void build_grid_access(int d, int t) {
    if (dm_.grid.kind == GridAccessSpec::Kind::None) return;
    HourHandles& h = dm_.days[d].hours[t];
    const std::string pre = prefix(d, t);
    using K = GridAccessSpec::Kind;
    auto import_terms = [&](int s) {
      return std::vector<RowEntry>{
          {h.q_ch_da[s], 1.0}, {h.q_ch_rt[s], 1.0}, {h.q_rd_da[s], 1.0}};
    };
    auto export_terms = [&](int s) {
      return std::vector<RowEntry>{
          {h.q_dch_da[s], 1.0}, {h.q_dch_rt[s], 1.0}, {h.q_ru_da[s], 1.0}};
    };
    const double L = dm_.grid.limit_mw;
    switch (dm_.grid.kind) {
      case K::SharedImportCap: {
        std::vector<RowEntry> terms = import_terms(0);
        for (const RowEntry& e : import_terms(1)) terms.push_back(e);
        m_.add_constraint(pre + "grid_import", std::move(terms), Relation::LessEqual, L);
        break;
      }
      case K::ImportCongestionS1:
        m_.add_constraint(pre + "grid_import_s1", import_terms(0), Relation::LessEqual, L);
        break;
      case K::ImportCongestionS2:
        m_.add_constraint(pre + "grid_import_s2", import_terms(1), Relation::LessEqual, L);
        break;
      case K::SharedExportCap: {
        std::vector<RowEntry> terms = export_terms(0);
        for (const RowEntry& e : export_terms(1)) terms.push_back(e);
        m_.add_constraint(pre + "grid_export", std::move(terms), Relation::LessEqual, L);
        break;
      }
      case K::ExportCongestionS1:
        m_.add_constraint(pre + "grid_export_s1", export_terms(0), Relation::LessEqual, L);
        break;
      case K::ExportCongestionS2:
        m_.add_constraint(pre + "grid_export_s2", export_terms(1), Relation::LessEqual, L);
        break;
      case K::None:
        break;
    }
  }

  // one exactness pin: |w - expr| <= M * gate_binary (gate at zero certifies w == expr)
  void pin_equal(const std::string& name, VarId w, std::vector<RowEntry> expr_terms,
                 double expr_const, VarId gate, double big_m) {
    std::vector<RowEntry> up = {{w, 1.0}};
    for (const RowEntry& e : expr_terms) up.push_back({e.var, -e.coeff});
    up.push_back({gate, -big_m});
    m_.add_constraint(name + ".pu", std::move(up), Relation::LessEqual, expr_const);
    std::vector<RowEntry> dn = {{w, 1.0}};
    for (const RowEntry& e : expr_terms) dn.push_back({e.var, -e.coeff});
    dn.push_back({gate, big_m});
    m_.add_constraint(name + ".pd", std::move(dn), Relation::GreaterEqual, expr_const);
  }

  void build_objective_terms(int d, int t) {
    HourHandles& h = dm_.days[d].hours[t];
    const ScenarioDay& day = dm_.day_data[d];
    const PriceCaps& caps = day.caps;
    const double gamma = day.weight;
    const std::string pre = prefix(d, t);
    const double md_rt = caps.da_energy + caps.rt_energy;

    auto led = [&](const std::string& term, const std::string& method) {
      dm_.ledger.push_back({pre + term, method});
    };

    // --- day-ahead revenue, exact via stationarity/complementarity identities:
    // sum_s lamE*(dch-ch) + lamRU*ru + lamRD*rd
    //   = lamE*D + lamRU*RU + lamRD*RD
    //   - sum_w (p_w*q̄_w + q_w*mu_up_w) - sum_g (p*q̄ + q*mu_up) over energy and reserves
    add_obj(h.da.balance_dual[0], gamma * day.demand[t]);
    add_obj(h.da.balance_dual[1], gamma * day.reserve_up_req[t]);
    add_obj(h.da.balance_dual[2], gamma * day.reserve_down_req[t]);
    for (int w = 0; w < day.num_wind(); ++w) {
      const KktVar& kv = h.da.vars[h.da_w[w]];
      add_obj(kv.primal, -gamma * 0.0);  // wind offer price is zero
      add_obj(kv.mu_up, -gamma * day.wind_offer[w][t]);
    }
    for (std::size_t gi = 0; gi < day.gas[t].size(); ++gi) {
      const GasOffer& g = day.gas[t][gi];
      const KktVar& ge = h.da.vars[h.da_ge[gi]];
      const KktVar& gru = h.da.vars[h.da_gru[gi]];
      const KktVar& grd = h.da.vars[h.da_grd[gi]];
      add_obj(ge.primal, -gamma * g.da_energy.price);
      add_obj(ge.mu_up, -gamma * g.da_energy.quantity_mw);
      add_obj(gru.primal, -gamma * g.da_reserve_up.price);
      add_obj(gru.mu_up, -gamma * g.da_reserve_up.quantity_mw);
      add_obj(grd.primal, -gamma * g.da_reserve_down.price);
      add_obj(grd.mu_up, -gamma * g.da_reserve_down.quantity_mw);
    }
    for (int s = 0; s < 2; ++s) {
      led(sys_name(s) + ".lamE*q_dch_da", "dual-identity");
      led(sys_name(s) + ".lamE*q_ch_da", "dual-identity");
      led(sys_name(s) + ".lamRU*q_ru_da", "dual-identity");
      led(sys_name(s) + ".lamRD*q_rd_da", "dual-identity");
    }

    // --- real-time revenue via the balance identity:
    // sum_s lamRT*(ru+dch-rd-ch)
    //   = lamRT*dQ - sum_g [pE*(ru-rd) + pRT*e + qRT*nu_up_e + nu_up_ru*q̄ruDA + nu_up_rd*q̄rdDA]
    // lamRT*dQ expands into per-unit lamRT*q̄_w products minus a constant term.
    double real_sum = 0.0;
    for (int w = 0; w < day.num_wind(); ++w) real_sum += day.wind_realized[w][t];
    add_obj(h.rt.balance_dual[0], -gamma * real_sum);

    h.v_wind.assign(day.num_wind(), -1);
    for (int w = 0; w < day.num_wind(); ++w) {
      const double qw = day.wind_offer[w][t];
      if (qw <= 0.0) continue;  // cleared wind pinned at zero, product vanishes
      const KktVar& kv = h.da.vars[h.da_w[w]];
      EnvelopeBox box;
      box.x_lo = -caps.rt_energy;
      box.x_hi = caps.rt_energy;
      box.y_lo = 0.0;
      box.y_hi = qw;
      box.aux_name = pre + "aux.v_w" + std::to_string(w + 1);
      const VarId v = mccormick_envelope(m_, h.rt.balance_dual[0], kv.primal, box);
      h.v_wind[w] = v;
      const double mv = 2.0 * caps.rt_energy * qw;
      if (kv.b_up >= 0) {
        // cleared at the offer: v = lamRT * q_w
        pin_equal(box.aux_name + ".at_ub", v, {{h.rt.balance_dual[0], qw}}, 0.0, kv.b_up, mv);
        // cleared at zero: v = 0
        pin_equal(box.aux_name + ".at_lb", v, {}, 0.0, kv.b_lo, mv);
      }
      add_obj(v, gamma);
      led("lamRT*q_w" + std::to_string(w + 1), "mccormick-gated");
    }

    h.w_gru.assign(day.gas[t].size(), -1);
    h.w_grd.assign(day.gas[t].size(), -1);
    for (std::size_t gi = 0; gi < day.gas[t].size(); ++gi) {
      const GasOffer& g = day.gas[t][gi];
      const KktVar& rt_ru = h.rt.vars[h.rt_gru[gi]];
      const KktVar& rt_rd = h.rt.vars[h.rt_grd[gi]];
      const KktVar& rt_e = h.rt.vars[h.rt_ge[gi]];
      add_obj(rt_ru.primal, -gamma * g.da_energy.price);
      add_obj(rt_rd.primal, gamma * g.da_energy.price);
      add_obj(rt_e.primal, -gamma * g.rt_energy.price);
      add_obj(rt_e.mu_up, -gamma * g.rt_energy.quantity_mw);

      // cross-market dual-times-commitment products
      auto cross = [&](const KktVar& rt_kv, const KktVar& da_kv, double q_da,
                       const std::string& label) -> VarId {
        if (q_da <= 0.0) return -1;
        EnvelopeBox box;
        box.x_lo = 0.0;
        box.x_hi = md_rt;
        box.y_lo = 0.0;
        box.y_hi = q_da;
        box.aux_name = pre + "aux." + label;
        const VarId wv = mccormick_envelope(m_, rt_kv.mu_up, da_kv.primal, box);
        const double mw = md_rt * q_da;
        if (rt_kv.b_up >= 0) {
          // deployment slack free (binary 1) forces the dual, and the product, to zero
          m_.add_constraint(box.aux_name + ".offpin",
                            {{wv, 1.0}, {rt_kv.b_up, mw}}, Relation::LessEqual, mw);
        }
        if (da_kv.b_up >= 0) {
          // commitment at its offer: w = nu_up * q_da
          pin_equal(box.aux_name + ".at_ub", wv, {{rt_kv.mu_up, q_da}}, 0.0, da_kv.b_up, mw);
          // commitment at zero: w = 0
          pin_equal(box.aux_name + ".at_lb", wv, {}, 0.0, da_kv.b_lo, mw);
        }
        add_obj(wv, -gamma);
        led(label, "mccormick-gated");
        return wv;
      };
      h.w_gru[gi] =
          cross(rt_ru, h.da.vars[h.da_gru[gi]], g.da_reserve_up.quantity_mw,
                "w_" + g.id + "_ru");
      h.w_grd[gi] =
          cross(rt_rd, h.da.vars[h.da_grd[gi]], g.da_reserve_down.quantity_mw,
                "w_" + g.id + "_rd");
    }
    for (int s = 0; s < 2; ++s)
      for (const char* q : {"q_ru_rt", "q_dch_rt", "q_rd_rt", "q_ch_rt"})
        led(sys_name(s) + ".lamRT*" + q, "balance-identity");

    // --- operating costs
    for (int s = 0; s < 2; ++s) {
      const double c = dm_.techs[s].marginal_cost;
      if (c > 0.0) {
        add_obj(h.da.vars[h.da_dch[s]].primal, -gamma * c);
        add_obj(h.da.vars[h.da_ch[s]].primal, -gamma * c);
        add_obj(h.rt.vars[h.rt_sru[s]].primal, -gamma * c);
        add_obj(h.rt.vars[h.rt_srd[s]].primal, -gamma * c);
        add_obj(h.rt.vars[h.rt_sdch[s]].primal, -gamma * c);
        add_obj(h.rt.vars[h.rt_sch[s]].primal, -gamma * c);
      }
    }
    const double joint = dm_.techs[0].marginal_cost + dm_.techs[1].marginal_cost;
    if (joint > 0.0) {
      add_obj(h.tr_bar[0], -gamma * joint);
      add_obj(h.tr_bar[1], -gamma * joint);
    }

    // --- literal reserve-revenue form: subtract (1-c_s) * (lamRU*ru + lamRD*rd),
    // handled by plain envelopes (no linear identity pins the price-side)
    if (dm_.options.literal_reserve_cost_form) {
      for (int s = 0; s < 2; ++s) {
        const double weight = 1.0 - dm_.techs[s].marginal_cost;
        if (weight == 0.0) continue;
        auto reserve_term = [&](const KktVar& kv, VarId lam, const char* label) {
          EnvelopeBox box;
          box.x_lo = 0.0;
          box.x_hi = caps.da_reserve;
          box.y_lo = 0.0;
          box.y_hi = dm_.techs[s].power_ratio * e_upper(s);
          if (box.y_hi <= 0.0) return;
          box.aux_name = pre + "aux.r_" + sys_name(s) + "_" + label;
          const VarId rv = mccormick_envelope(m_, lam, kv.primal, box);
          add_obj(rv, -gamma * weight);
          led(sys_name(s) + ".literal_" + label, "mccormick-envelope");
        };
        reserve_term(h.da.vars[h.da_ru[s]], h.da.balance_dual[1], "ru");
        reserve_term(h.da.vars[h.da_rd[s]], h.da.balance_dual[2], "rd");
      }
    }

    // --- strong-duality equalities of both clearings (subproblem only; with
    // prices and operator-side duals frozen these rows are linear)
    if (frozen()) build_sd_rows(d, t);
  }

  void build_sd_rows(int d, int t) {
    HourHandles& h = dm_.days[d].hours[t];
    const ScenarioDay& day = dm_.day_data[d];
    const std::string pre = prefix(d, t);
    const auto& fo = fixed_->offers;
    const auto& fd = fixed_->duals;

    // day-ahead: primal cost - dual objective = 0
    std::vector<RowEntry> da;
    double rhs = 0.0;
    for (int s = 0; s < 2; ++s) {
      da.push_back({h.da.vars[h.da_dch[s]].primal, fo[s][t].p_dch_da});
      da.push_back({h.da.vars[h.da_ch[s]].primal, -fo[s][t].p_ch_da});
      da.push_back({h.da.vars[h.da_ru[s]].primal, fo[s][t].p_ru_da});
      da.push_back({h.da.vars[h.da_rd[s]].primal, fo[s][t].p_rd_da});
      // operator-side bound duals are frozen numbers multiplying offer vars
      da.push_back({h.q_dch_da[s], fd[s][t].mu_dch});
      da.push_back({h.q_ch_da[s], fd[s][t].mu_ch});
      da.push_back({h.q_ru_da[s], fd[s][t].mu_ru});
      da.push_back({h.q_rd_da[s], fd[s][t].mu_rd});
    }
    for (std::size_t gi = 0; gi < day.gas[t].size(); ++gi) {
      const GasOffer& g = day.gas[t][gi];
      da.push_back({h.da.vars[h.da_ge[gi]].primal, g.da_energy.price});
      da.push_back({h.da.vars[h.da_gru[gi]].primal, g.da_reserve_up.price});
      da.push_back({h.da.vars[h.da_grd[gi]].primal, g.da_reserve_down.price});
      da.push_back({h.da.vars[h.da_ge[gi]].mu_up, g.da_energy.quantity_mw});
      da.push_back({h.da.vars[h.da_gru[gi]].mu_up, g.da_reserve_up.quantity_mw});
      da.push_back({h.da.vars[h.da_grd[gi]].mu_up, g.da_reserve_down.quantity_mw});
    }
    for (int w = 0; w < day.num_wind(); ++w)
      da.push_back({h.da.vars[h.da_w[w]].mu_up, day.wind_offer[w][t]});
    da.push_back({h.da.balance_dual[0], -day.demand[t]});
    da.push_back({h.da.balance_dual[1], -day.reserve_up_req[t]});
    da.push_back({h.da.balance_dual[2], -day.reserve_down_req[t]});
    m_.add_constraint(pre + "sd_da", std::move(da), Relation::Equal, rhs);

    // real-time: primal cost - dual objective = 0, using the product
    // auxiliaries for lamRT*q̄_w and the frozen operator duals elsewhere
    std::vector<RowEntry> rt;
    double rt_rhs = 0.0;
    for (int s = 0; s < 2; ++s) {
      rt.push_back({h.rt.vars[h.rt_sru[s]].primal, fo[s][t].p_dch_da});
      rt.push_back({h.rt.vars[h.rt_srd[s]].primal, -fo[s][t].p_ch_da});
      rt.push_back({h.rt.vars[h.rt_sdch[s]].primal, fo[s][t].p_dch_rt});
      rt.push_back({h.rt.vars[h.rt_sch[s]].primal, -fo[s][t].p_ch_rt});
      rt.push_back({h.da.vars[h.da_ru[s]].primal, fd[s][t].nu_ru});
      rt.push_back({h.da.vars[h.da_rd[s]].primal, fd[s][t].nu_rd});
      rt.push_back({h.q_dch_rt[s], fd[s][t].nu_dch_rt});
      rt.push_back({h.q_ch_rt[s], fd[s][t].nu_ch_rt});
    }
    for (std::size_t gi = 0; gi < day.gas[t].size(); ++gi) {
      const GasOffer& g = day.gas[t][gi];
      rt.push_back({h.rt.vars[h.rt_gru[gi]].primal, g.da_energy.price});
      rt.push_back({h.rt.vars[h.rt_grd[gi]].primal, -g.da_energy.price});
      rt.push_back({h.rt.vars[h.rt_ge[gi]].primal, g.rt_energy.price});
      rt.push_back({h.rt.vars[h.rt_ge[gi]].mu_up, g.rt_energy.quantity_mw});
      if (h.w_gru[gi] >= 0) rt.push_back({h.w_gru[gi], 1.0});
      if (h.w_grd[gi] >= 0) rt.push_back({h.w_grd[gi], 1.0});
    }
    double real_sum = 0.0;
    for (int w = 0; w < day.num_wind(); ++w) {
      real_sum += day.wind_realized[w][t];
      if (h.v_wind[w] >= 0) rt.push_back({h.v_wind[w], -1.0});
    }
    rt.push_back({h.rt.balance_dual[0], real_sum});
    m_.add_constraint(pre + "sd_rt", std::move(rt), Relation::Equal, rt_rhs);
  }

};

DayModelPtr make_day_model(std::vector<ScenarioDay> days, const std::array<StorageTech, 2>& techs,
                           CapacityMode mode, const std::array<double, 2>& e_values,
                           const GridAccessSpec& grid, const MpecOptions& options,
                           const ApFixedSet* fixed) {
  DayModelPtr dm(new DayModel());
  dm->mode = mode;
  dm->options = options;
  dm->techs = techs;
  dm->e_fixed = e_values;
  dm->grid = grid;
  dm->day_data = std::move(days);
  dm->days.resize(dm->day_data.size());
  if (fixed != nullptr) {
    dm->frozen_states = fixed->state;
  }
  Builder builder(*dm, fixed);
  builder.build();
  return dm;
}

}  // namespace

DayModelPtr assemble_ap(const ScenarioDay& day, const std::array<StorageTech, 2>& techs,
                        const std::array<double, 2>& capacity, const GridAccessSpec& grid,
                        const MpecOptions& options) {
  for (int s = 0; s < 2; ++s)
    if (capacity[s] < -1e-9 || capacity[s] > techs[s].max_capacity + 1e-9)
      throw BuilderError("capacity outside [0, E_max] for " + techs[s].id);
  return make_day_model({day}, techs, CapacityMode::Fixed, capacity, grid, options, nullptr);
}

DayModelPtr assemble_sp(const ScenarioDay& day, const std::array<StorageTech, 2>& techs,
                        const std::array<double, 2>& e_target, const ApFixedSet& fixed,
                        const GridAccessSpec& grid, const MpecOptions& options) {
  if (!fixed.complete) throw BuilderError("fixed set incomplete: extract it from a solved model");
  for (int s = 0; s < 2; ++s) {
    if (fixed.state[s].size() != static_cast<std::size_t>(day.horizon))
      throw BuilderError("fixed set incomplete: states for " + techs[s].id);
    if (fixed.offers[s].size() != static_cast<std::size_t>(day.horizon))
      throw BuilderError("fixed set incomplete: offer prices for " + techs[s].id);
    if (fixed.duals[s].size() != static_cast<std::size_t>(day.horizon))
      throw BuilderError("fixed set incomplete: bound duals for " + techs[s].id);
  }
  DayModelPtr dm =
      make_day_model({day}, techs, CapacityMode::Pinned, e_target, grid, options, &fixed);
  // freeze the operator-side bound duals at their auxiliary-problem values
  LinearModel& m = dm->model;
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < day.horizon; ++t) {
      const HourHandles& h = dm->days[0].hours[t];
      const StorageDualSet& dual = fixed.duals[s][t];
      auto pin = [&m](VarId v, double value) { m.set_bounds(v, value, value); };
      pin(h.da.vars[h.da_dch[s]].mu_up, dual.mu_dch);
      pin(h.da.vars[h.da_ch[s]].mu_up, dual.mu_ch);
      pin(h.da.vars[h.da_ru[s]].mu_up, dual.mu_ru);
      pin(h.da.vars[h.da_rd[s]].mu_up, dual.mu_rd);
      pin(h.rt.vars[h.rt_sru[s]].mu_up, dual.nu_ru);
      pin(h.rt.vars[h.rt_srd[s]].mu_up, dual.nu_rd);
      pin(h.rt.vars[h.rt_sdch[s]].mu_up, dual.nu_dch_rt);
      pin(h.rt.vars[h.rt_sch[s]].mu_up, dual.nu_ch_rt);
    }
  }
  return dm;
}

DayModelPtr assemble_monolithic(const Scenario& scenario, const MpecOptions& options) {
  scenario.validate();
  return make_day_model(scenario.days, scenario.techs, CapacityMode::Variable, {0.0, 0.0},
                        scenario.grid_access, options, nullptr);
}

const LinearModel& model_of(const DayModel& dm) { return dm.model; }
LinearModel& mutable_model_of(DayModel& dm) { return dm.model; }
const std::vector<SubstitutionRecord>& ledger_of(const DayModel& dm) { return dm.ledger; }

namespace {

double clamp_tiny(double v) { return std::abs(v) < 1e-9 ? 0.0 : v; }

}  // namespace

ApFixedSet extract_fixed_set(const DayModel& dm, const Solution& sol) {
  if (dm.day_data.size() != 1) throw BuilderError("fixed set extraction expects a one-day model");
  const ScenarioDay& day = dm.day_data[0];
  ApFixedSet out;
  out.capacity = {dm.capacity_value(sol, 0), dm.capacity_value(sol, 1)};
  for (int s = 0; s < 2; ++s) {
    out.state[s].resize(day.horizon);
    out.offers[s].resize(day.horizon);
    out.duals[s].resize(day.horizon);
  }
  for (int t = 0; t < day.horizon; ++t) {
    const HourHandles& h = dm.days[0].hours[t];
    for (int s = 0; s < 2; ++s) {
      int best = kIdle;
      double best_val = -1.0;
      for (int k = 0; k < 7; ++k) {
        const double v = h.om[s][k] >= 0 ? sol.primal[h.om[s][k]] : (k == kIdle ? 1.0 : 0.0);
        if (v > best_val) {
          best_val = v;
          best = k;
        }
      }
      out.state[s][t] = state_of_index(best);

      EsoHourOffers& o = out.offers[s][t];
      o.p_ch_da = sol.primal[h.p_ch_da[s]];
      o.p_dch_da = sol.primal[h.p_dch_da[s]];
      o.p_ru_da = sol.primal[h.p_ru_da[s]];
      o.p_rd_da = sol.primal[h.p_rd_da[s]];
      o.p_ch_rt = sol.primal[h.p_ch_rt[s]];
      o.p_dch_rt = sol.primal[h.p_dch_rt[s]];
      o.q_ch_da = sol.primal[h.q_ch_da[s]];
      o.q_dch_da = sol.primal[h.q_dch_da[s]];
      o.q_ru_da = sol.primal[h.q_ru_da[s]];
      o.q_rd_da = sol.primal[h.q_rd_da[s]];
      o.q_ch_rt = sol.primal[h.q_ch_rt[s]];
      o.q_dch_rt = sol.primal[h.q_dch_rt[s]];

      StorageDualSet& dual = out.duals[s][t];
      dual.mu_dch = clamp_tiny(sol.primal[h.da.vars[h.da_dch[s]].mu_up]);
      dual.mu_ch = clamp_tiny(sol.primal[h.da.vars[h.da_ch[s]].mu_up]);
      dual.mu_ru = clamp_tiny(sol.primal[h.da.vars[h.da_ru[s]].mu_up]);
      dual.mu_rd = clamp_tiny(sol.primal[h.da.vars[h.da_rd[s]].mu_up]);
      dual.nu_ru = clamp_tiny(sol.primal[h.rt.vars[h.rt_sru[s]].mu_up]);
      dual.nu_rd = clamp_tiny(sol.primal[h.rt.vars[h.rt_srd[s]].mu_up]);
      dual.nu_dch_rt = clamp_tiny(sol.primal[h.rt.vars[h.rt_sdch[s]].mu_up]);
      dual.nu_ch_rt = clamp_tiny(sol.primal[h.rt.vars[h.rt_sch[s]].mu_up]);
    }
  }
  // every binary of the model, rounded, keyed by name
  const LinearModel& m = dm.model;
  for (VarId v = 0; v < m.num_variables(); ++v)
    if (m.variable(v).type == lp::VarType::Binary)
      out.binary_values.emplace_back(m.variable(v).name, std::round(sol.primal[v]));
  out.complete = true;
  return out;
}

EsoDecision extract_decision(const DayModel& dm, const Solution& sol) {
  EsoDecision dec;
  dec.capacity = {dm.capacity_value(sol, 0), dm.capacity_value(sol, 1)};
  for (std::size_t d = 0; d < dm.day_data.size(); ++d) {
    const ScenarioDay& day = dm.day_data[d];
    EsoDecision::DayRecord rec;
    rec.day_id = day.id;
    for (int s = 0; s < 2; ++s) {
      rec.sys[s].state.resize(day.horizon);
      rec.sys[s].offers.resize(day.horizon);
      rec.sys[s].soc.resize(day.horizon);
      rec.transfer_planned[s].assign(day.horizon, 0.0);
      rec.transfer_achieved[s].assign(day.horizon, 0.0);
    }
    for (int t = 0; t < day.horizon; ++t) {
      const HourHandles& h = dm.days[d].hours[t];
      for (int s = 0; s < 2; ++s) {
        if (h.om[s][0] >= 0) {
          int best = kIdle;
          double best_val = -1.0;
          for (int k = 0; k < 7; ++k)
            if (sol.primal[h.om[s][k]] > best_val) {
              best_val = sol.primal[h.om[s][k]];
              best = k;
            }
          rec.sys[s].state[t] = state_of_index(best);
        } else {
          rec.sys[s].state[t] = dm.frozen_states[s][t];
        }
        EsoHourOffers& o = rec.sys[s].offers[t];
        o.p_ch_da = sol.primal[h.p_ch_da[s]];
        o.p_dch_da = sol.primal[h.p_dch_da[s]];
        o.p_ru_da = sol.primal[h.p_ru_da[s]];
        o.p_rd_da = sol.primal[h.p_rd_da[s]];
        o.p_ch_rt = sol.primal[h.p_ch_rt[s]];
        o.p_dch_rt = sol.primal[h.p_dch_rt[s]];
        o.q_ch_da = sol.primal[h.q_ch_da[s]];
        o.q_dch_da = sol.primal[h.q_dch_da[s]];
        o.q_ru_da = sol.primal[h.q_ru_da[s]];
        o.q_rd_da = sol.primal[h.q_rd_da[s]];
        o.q_ch_rt = sol.primal[h.q_ch_rt[s]];
        o.q_dch_rt = sol.primal[h.q_dch_rt[s]];
        rec.sys[s].soc[t] = sol.primal[h.soc[s]];
      }
      for (int src = 0; src < 2; ++src) {
        rec.transfer_planned[src][t] = sol.primal[h.tr[src]];
        rec.transfer_achieved[src][t] = sol.primal[h.tr_bar[src]];
      }
    }
    dec.days.push_back(std::move(rec));
  }
  return dec;
}

double max_complementarity_residual(const DayModel& dm, const Solution& sol) {
  // slack values are read off the complementarity slack rows themselves:
  // each ".slk" row is slack_terms - Mp*b <= -slack_const
  double worst = 0.0;
  const LinearModel& m = dm.model;
  for (lp::RowId r = 0; r < m.num_constraints(); ++r) {
    const auto& row = m.constraint(r);
    const auto len = row.name.size();
    if (len < 4 || row.name.compare(len - 4, 4, ".slk") != 0) continue;
    double slack = 0.0;
    for (const RowEntry& e : row.terms) {
      const auto& vn = m.variable(e.var).name;
      const bool is_binary = vn.size() > 2 && vn.compare(vn.size() - 2, 2, ".b") == 0;
      if (!is_binary) slack += e.coeff * sol.primal[e.var];
    }
    slack -= row.rhs;
    const std::string base = row.name.substr(0, len - 4);  // ends ".lo" or ".up"
    const bool upper = base.compare(base.size() - 3, 3, ".up") == 0;
    const std::string mu_name = base.substr(0, base.size() - 3) + (upper ? ".mu_up" : ".mu_lo");
    if (!m.has_var(mu_name)) continue;
    const double mu = sol.primal[m.var_id(mu_name)];
    worst = std::max(worst, std::abs(slack * mu));
  }
  return worst;
}

double max_embedded_duality_gap(const DayModel& dm, const Solution& sol) {
  double worst = 0.0;
  for (std::size_t d = 0; d < dm.day_data.size(); ++d) {
    const ScenarioDay& day = dm.day_data[d];
    for (int t = 0; t < day.horizon; ++t) {
      const HourHandles& h = dm.days[d].hours[t];
      auto val = [&](VarId v) { return sol.primal[v]; };

      // day-ahead
      double primal = 0.0, dual = 0.0;
      for (int s = 0; s < 2; ++s) {
        primal += val(h.p_dch_da[s]) * val(h.da.vars[h.da_dch[s]].primal);
        primal -= val(h.p_ch_da[s]) * val(h.da.vars[h.da_ch[s]].primal);
        primal += val(h.p_ru_da[s]) * val(h.da.vars[h.da_ru[s]].primal);
        primal += val(h.p_rd_da[s]) * val(h.da.vars[h.da_rd[s]].primal);
        dual -= val(h.da.vars[h.da_dch[s]].mu_up) * val(h.q_dch_da[s]);
        dual -= val(h.da.vars[h.da_ch[s]].mu_up) * val(h.q_ch_da[s]);
        dual -= val(h.da.vars[h.da_ru[s]].mu_up) * val(h.q_ru_da[s]);
        dual -= val(h.da.vars[h.da_rd[s]].mu_up) * val(h.q_rd_da[s]);
      }
      for (std::size_t gi = 0; gi < day.gas[t].size(); ++gi) {
        const GasOffer& g = day.gas[t][gi];
        primal += g.da_energy.price * val(h.da.vars[h.da_ge[gi]].primal);
        primal += g.da_reserve_up.price * val(h.da.vars[h.da_gru[gi]].primal);
        primal += g.da_reserve_down.price * val(h.da.vars[h.da_grd[gi]].primal);
        dual -= val(h.da.vars[h.da_ge[gi]].mu_up) * g.da_energy.quantity_mw;
        dual -= val(h.da.vars[h.da_gru[gi]].mu_up) * g.da_reserve_up.quantity_mw;
        dual -= val(h.da.vars[h.da_grd[gi]].mu_up) * g.da_reserve_down.quantity_mw;
      }
      for (int w = 0; w < day.num_wind(); ++w)
        dual -= val(h.da.vars[h.da_w[w]].mu_up) * day.wind_offer[w][t];
      dual += val(h.da.balance_dual[0]) * day.demand[t];
      dual += val(h.da.balance_dual[1]) * day.reserve_up_req[t];
      dual += val(h.da.balance_dual[2]) * day.reserve_down_req[t];
      worst = std::max(worst, std::abs(primal - dual));

      // real-time
      primal = 0.0;
      dual = 0.0;
      for (int s = 0; s < 2; ++s) {
        primal += val(h.p_dch_da[s]) * val(h.rt.vars[h.rt_sru[s]].primal);
        primal -= val(h.p_ch_da[s]) * val(h.rt.vars[h.rt_srd[s]].primal);
        primal += val(h.p_dch_rt[s]) * val(h.rt.vars[h.rt_sdch[s]].primal);
        primal -= val(h.p_ch_rt[s]) * val(h.rt.vars[h.rt_sch[s]].primal);
        dual -= val(h.rt.vars[h.rt_sru[s]].mu_up) * val(h.da.vars[h.da_ru[s]].primal);
        dual -= val(h.rt.vars[h.rt_srd[s]].mu_up) * val(h.da.vars[h.da_rd[s]].primal);
        dual -= val(h.rt.vars[h.rt_sdch[s]].mu_up) * val(h.q_dch_rt[s]);
        dual -= val(h.rt.vars[h.rt_sch[s]].mu_up) * val(h.q_ch_rt[s]);
      }
      double dq = 0.0;
      for (int w = 0; w < day.num_wind(); ++w)
        dq += val(h.da.vars[h.da_w[w]].primal) - day.wind_realized[w][t];
      for (std::size_t gi = 0; gi < day.gas[t].size(); ++gi) {
        const GasOffer& g = day.gas[t][gi];
        primal += g.da_energy.price *
                  (val(h.rt.vars[h.rt_gru[gi]].primal) - val(h.rt.vars[h.rt_grd[gi]].primal));
        primal += g.rt_energy.price * val(h.rt.vars[h.rt_ge[gi]].primal);
        dual -= val(h.rt.vars[h.rt_gru[gi]].mu_up) * val(h.da.vars[h.da_gru[gi]].primal);
        dual -= val(h.rt.vars[h.rt_grd[gi]].mu_up) * val(h.da.vars[h.da_grd[gi]].primal);
        dual -= val(h.rt.vars[h.rt_ge[gi]].mu_up) * g.rt_energy.quantity_mw;
      }
      dual += val(h.rt.balance_dual[0]) * dq;
      worst = std::max(worst, std::abs(primal - dual));
    }
  }
  return worst;
}

ApAudit audit_against_clearing(const DayModel& dm, const Solution& sol, const ScenarioDay& day,
                               const std::array<StorageTech, 2>& techs, int day_index) {
  EsoDecision decision = extract_decision(dm, sol);
  std::vector<ClearingResult> da, rt;
  for (int t = 0; t < day.horizon; ++t) {
    market::DayAheadHour da_hour = market::make_day_ahead_hour(day, t, &decision, day_index);
    da.push_back(market::clear_day_ahead(da_hour));
    market::RealTimeHour rt_hour =
        market::make_real_time_hour(day, t, da.back(), &decision, day_index);
    rt.push_back(market::clear_real_time(rt_hour));
  }
  market::SettlementOptions so;
  so.literal_reserve_cost_form = dm.options.literal_reserve_cost_form;
  market::DayProfit profit = market::settle_profit(day, da, rt, decision, day_index, techs, so);

  ApAudit audit;
  audit.model_objective = sol.objective;
  audit.recleared_profit = day.weight * profit.total();
  audit.abs_gap = std::abs(audit.model_objective - audit.recleared_profit);
  return audit;
}

}  // namespace hessplan::mpec
