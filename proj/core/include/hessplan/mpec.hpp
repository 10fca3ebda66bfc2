#pragma once

// Single-level reformulation machinery. The two market clearings are replaced
// by their KKT systems (stationarity, Big-M complementarity, dual bounds);
// the price-times-quantity revenue terms are rewritten into linear form
// through stationarity/complementarity identities wherever one exists, and
// through box (McCormick) relaxations with binary-gated exactness pins for
// the residual cross-market products. The same builder emits the per-day
// auxiliary problem (capacities fixed), the per-day linear subproblem
// (integers, offer prices, and the storage-side bound duals frozen; capacity
// pinned by an equality whose dual is the capacity sensitivity), and the
// all-days monolithic program (capacities variable).

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hessplan/domain.hpp"
#include "hessplan/market.hpp"
#include "hessplan/milp.hpp"

namespace hessplan::mpec {

class BuilderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- generic KKT machinery ---------------------------------------------------

// Cost or bound entry of a lower-level variable: a constant plus at most one
// upper-level model variable (offer prices in costs, offer quantities in
// bounds) with a +-1 style coefficient.
struct LinkedCoeff {
  double constant = 0.0;
  lp::VarId var = -1;  // -1: pure constant
  double coeff = 1.0;
};

struct LowerVarSpec {
  std::string name;
  LinkedCoeff cost;
  std::vector<std::pair<int, double>> balance;  // (balance index, coefficient)
  LinkedCoeff upper_bound;                      // lower bound is always zero
  double big_m_primal = 0.0;                    // >= tight bound of the slack
  double big_m_dual = 0.0;                      // >= tight bound of both duals
  // Restricts the variable to clear at a bound (never strictly inside). Used
  // for zero-priced wind so the price-times-quantity auxiliaries stay exact;
  // it makes partially dispatched wind at a zero clearing price
  // unrepresentable, which the bundled scenarios never need.
  bool forbid_interior = false;
};

struct BalanceSpec {
  std::string name;
  double rhs_constant = 0.0;
  std::vector<lp::RowEntry> rhs_terms;  // variable part moved onto the rhs
  double dual_lower = -lp::kInfinity;
  double dual_upper = lp::kInfinity;
};

struct LowerLevelSpec {
  std::string tag;  // name prefix, e.g. "d0.t3.da"
  std::vector<BalanceSpec> balances;
  std::vector<LowerVarSpec> vars;
};

// Handles into the model for one embedded KKT system.
struct KktVar {
  lp::VarId primal = -1;
  lp::VarId mu_lo = -1;
  lp::VarId mu_up = -1;
  lp::VarId b_lo = -1;  // -1 when the pair is degenerate (fixed-at-zero bound)
  lp::VarId b_up = -1;
};

struct KktSystem {
  std::string tag;
  std::vector<lp::VarId> balance_dual;
  std::vector<KktVar> vars;
  std::vector<lp::RowId> primal_rows;        // balance equalities
  std::vector<lp::RowId> stationarity_rows;  // one per variable
};

// Emits primal feasibility, dual variables with sign bounds, stationarity
// equalities, and Big-M complementarity for every bound pair of the given
// lower-level LP (min orientation). `fixed_binaries` switches the
// complementarity binaries to pinned continuous variables (the subproblem
// relaxation); values are then looked up by name through `binary_value`.
KktSystem derive_kkt(lp::LinearModel& model, const LowerLevelSpec& spec,
                     bool fixed_binaries = false,
                     const std::function<double(const std::string&)>* binary_value = nullptr);

// Big-M complementarity for one (slack expression, dual) pair: adds
// slack <= Mp*b and dual <= Md*(1-b) and returns the binary. At any feasible
// point the product slack*dual is zero. Nonpositive Ms are configuration
// errors.
lp::VarId linearize_complementarity(lp::LinearModel& model, const std::string& name,
                                    std::vector<lp::RowEntry> slack_terms, double slack_constant,
                                    lp::VarId dual, double big_m_primal, double big_m_dual);

struct EnvelopeBox {
  double x_lo = 0.0, x_hi = 0.0;
  double y_lo = 0.0, y_hi = 0.0;
  std::string aux_name;
};

// Standard four-inequality relaxation of w = x*y over a finite box; exact
// whenever either variable sits on a box edge. Returns the auxiliary w.
lp::VarId mccormick_envelope(lp::LinearModel& model, lp::VarId x, lp::VarId y,
                             const EnvelopeBox& box);

// Closed-form worst-case envelope width (x_hi-x_lo)*(y_hi-y_lo)/4.
double mccormick_gap_bound(const EnvelopeBox& box);

// --- day-level assembly -------------------------------------------------------

struct MpecOptions {
  // Apply the operating-profit reserve term literally (scaled by the marginal
  // cost) instead of treating it as plain reserve revenue.
  bool literal_reserve_cost_form = false;
  lp::MilpOptions milp;
};

struct SubstitutionRecord {
  std::string term;    // bilinear product in the operating-profit expression
  std::string method;  // dual-identity | balance-identity | mccormick-gated
};

enum class CapacityMode {
  Fixed,     // auxiliary problem: E_s are constants
  Pinned,    // subproblem: E_s variables tied by pin rows carrying the dual
  Variable,  // monolithic: E_s in [0, E_max] with gate/capacity row pairs
};

// The operator-side duals frozen between the auxiliary problem and the
// subproblem, per system and hour.
struct StorageDualSet {
  double mu_dch = 0, mu_ch = 0, mu_ru = 0, mu_rd = 0;  // day-ahead offer-bound duals
  double nu_ru = 0, nu_rd = 0;                         // deployment-cap duals
  double nu_dch_rt = 0, nu_ch_rt = 0;                  // real-time offer-bound duals
};

struct ApFixedSet {
  std::array<double, 2> capacity = {0, 0};
  std::array<std::vector<StorageState>, 2> state;     // [s][t]
  std::array<std::vector<EsoHourOffers>, 2> offers;   // [s][t], prices are what gets fixed
  std::array<std::vector<StorageDualSet>, 2> duals;   // [s][t]
  std::vector<std::pair<std::string, double>> binary_values;  // every model binary
  bool complete = false;
};

class DayModel;  // owns the LinearModel plus the handle tables

struct DayModelDeleter {
  void operator()(DayModel*) const;
};
using DayModelPtr = std::unique_ptr<DayModel, DayModelDeleter>;

// Auxiliary problem for one typical day at fixed capacities.
DayModelPtr assemble_ap(const ScenarioDay& day, const std::array<StorageTech, 2>& techs,
                        const std::array<double, 2>& capacity, const GridAccessSpec& grid,
                        const MpecOptions& options = {});

// Subproblem for one typical day: requires a complete fixed set. Pin rows are
// named pin_E_s1 / pin_E_s2; their duals are the capacity sensitivities.
DayModelPtr assemble_sp(const ScenarioDay& day, const std::array<StorageTech, 2>& techs,
                        const std::array<double, 2>& e_target, const ApFixedSet& fixed,
                        const GridAccessSpec& grid, const MpecOptions& options = {});

// Monolithic single-level program over all days with capacities variable.
DayModelPtr assemble_monolithic(const Scenario& scenario, const MpecOptions& options = {});

// Accessors on the assembled models.
const lp::LinearModel& model_of(const DayModel& dm);
lp::LinearModel& mutable_model_of(DayModel& dm);
const std::vector<SubstitutionRecord>& ledger_of(const DayModel& dm);

// Extracts the frozen set from a solved auxiliary problem.
ApFixedSet extract_fixed_set(const DayModel& dm, const lp::Solution& sol);

// Extracts the full operator decision (capacities, states, offers, SOC,
// transfers) from a solved model; day_count matches how it was assembled.
EsoDecision extract_decision(const DayModel& dm, const lp::Solution& sol);

// Largest |slack*dual| over every complementarity pair at the solution.
double max_complementarity_residual(const DayModel& dm, const lp::Solution& sol);

// Largest per-hour strong-duality gap of the embedded clearings, computed
// from the embedded primal/dual values themselves.
double max_embedded_duality_gap(const DayModel& dm, const lp::Solution& sol);

// Re-runs the real clearing engines on the extracted decision and settles the
// profit, returning (model objective, re-cleared profit). Used to audit that
// the linearized objective is exact at the optimum.
struct ApAudit {
  double model_objective = 0.0;   // weighted day profit from the model
  double recleared_profit = 0.0;  // weighted day profit from the engines
  double abs_gap = 0.0;
};
ApAudit audit_against_clearing(const DayModel& dm, const lp::Solution& sol,
                               const ScenarioDay& day, const std::array<StorageTech, 2>& techs,
                               int day_index_in_decision = 0);

}  // namespace hessplan::mpec
