#include "doctest.h"
#include "fixtures.hpp"
#include "hessplan/mpec.hpp"

#include <cmath>

using namespace hessplan;
using namespace hessplan::mpec;
using lp::LinearModel;
using lp::Relation;
using lp::Sense;
using lp::Solution;
using lp::SolveStatus;
using lp::VarId;

namespace {

// two gas generators with a 20 -> 60 price spread, one wind unit
ScenarioDay spread_day(int T, double demand, double wind_offer, double wind_real) {
  ScenarioDay day;
  day.id = "toy";
  day.weight = 1.0;
  day.horizon = T;
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
  std::vector<GasOffer> fleet = {mk("g1", 240, 20, 30, 10, 30, 20),
                                 mk("g2", 240, 60, 30, 30, 30, 60)};
  for (int t = 0; t < T; ++t) {
    day.demand.push_back(demand + 150.0 * (t % 2));  // alternating low/high hours
    day.gas.push_back(fleet);
  }
  day.wind_offer = {std::vector<double>(T, wind_offer)};
  day.wind_realized = {std::vector<double>(T, wind_real)};
  day.reserve_up_req.assign(T, 10.0);
  day.reserve_down_req.assign(T, 10.0);
  return day;
}

}  // namespace

TEST_CASE("one-variable KKT system pins the textbook optimum") {
  // min p*x st 0 <= x <= u: stationarity p - mu_lo + mu_up = 0 with both
  // complementarity pairs; any feasible point of the system is the LP optimum
  for (double p : {3.0, -3.0}) {
    LinearModel m;
    LowerLevelSpec spec;
    spec.tag = "k";
    LowerVarSpec v;
    v.name = "x";
    v.cost = {p, -1, 1.0};
    v.upper_bound = {10.0, -1, 1.0};
    v.big_m_primal = 10.0;
    v.big_m_dual = 10.0;
    spec.vars.push_back(v);
    KktSystem sys = derive_kkt(m, spec);
    // explore the KKT region in both objective directions
    LinearModel m2 = m;
    m.set_objective(Sense::Maximize, {{sys.vars[0].primal, 1.0}});
    m.seal();
    Solution hi = lp::solve_milp(m);
    REQUIRE(hi.status == SolveStatus::Optimal);
    m2.set_objective(Sense::Minimize, {{sys.vars[0].primal, 1.0}});
    m2.seal();
    Solution lo = lp::solve_milp(m2);
    REQUIRE(lo.status == SolveStatus::Optimal);
    const double expect = p > 0 ? 0.0 : 10.0;
    CHECK(hi.primal[sys.vars[0].primal] == doctest::Approx(expect));
    CHECK(lo.primal[sys.vars[0].primal] == doctest::Approx(expect));
  }
}

TEST_CASE("stationarity rows carry the price variable and balance dual") {
  LinearModel m;
  const VarId price = m.add_variable("p_offer", 0.0, 300.0);
  LowerLevelSpec spec;
  spec.tag = "k";
  spec.balances.push_back({"bal", 100.0, {}, 0.0, 300.0});
  LowerVarSpec v;
  v.name = "q";
  v.cost = {0.0, price, 1.0};
  v.balance = {{0, 1.0}};
  v.upper_bound = {50.0, -1, 1.0};
  v.big_m_primal = 50.0;
  v.big_m_dual = 300.0;
  spec.vars.push_back(v);
  LowerVarSpec g;
  g.name = "g";
  g.cost = {25.0, -1, 1.0};
  g.balance = {{0, 1.0}};
  g.upper_bound = {200.0, -1, 1.0};
  g.big_m_primal = 200.0;
  g.big_m_dual = 300.0;
  spec.vars.push_back(g);
  KktSystem sys = derive_kkt(m, spec);

  // offer-priced variable: p - lam - mu_lo + mu_up = 0
  const auto& row = m.constraint(m.row_id("k.q.stat"));
  REQUIRE(row.relation == Relation::Equal);
  CHECK(row.rhs == 0.0);
  double c_price = 0, c_lam = 0, c_lo = 0, c_up = 0;
  for (const auto& e : row.terms) {
    if (e.var == price) c_price = e.coeff;
    if (e.var == sys.balance_dual[0]) c_lam = e.coeff;
    if (e.var == sys.vars[0].mu_lo) c_lo = e.coeff;
    if (e.var == sys.vars[0].mu_up) c_up = e.coeff;
  }
  CHECK(c_price == 1.0);
  CHECK(c_lam == -1.0);
  CHECK(c_lo == -1.0);
  CHECK(c_up == 1.0);

  // constant-priced variable keeps the constant on the right-hand side
  const auto& rowg = m.constraint(m.row_id("k.g.stat"));
  CHECK(rowg.rhs == -25.0);
}

TEST_CASE("complementarity branches: the binary picks the zero side") {
  LinearModel m;
  const VarId slack = m.add_variable("s", 0.0, 10.0);
  const VarId dual = m.add_variable("d", 0.0, 300.0);
  const VarId b = linearize_complementarity(m, "pair", {{slack, 1.0}}, 0.0, dual, 10.0, 300.0);
  m.set_objective(Sense::Maximize, {{slack, 1.0}, {dual, 1.0}});
  m.seal();

  LinearModel m1 = m;
  m1.set_bounds(b, 1.0, 1.0);
  Solution s1 = lp::solve_milp(m1);
  REQUIRE(s1.status == SolveStatus::Optimal);
  CHECK(s1.primal[slack] == doctest::Approx(10.0));
  CHECK(s1.primal[dual] == doctest::Approx(0.0));

  LinearModel m0 = m;
  m0.set_bounds(b, 0.0, 0.0);
  Solution s0 = lp::solve_milp(m0);
  REQUIRE(s0.status == SolveStatus::Optimal);
  CHECK(s0.primal[slack] == doctest::Approx(0.0));
  CHECK(s0.primal[dual] == doctest::Approx(300.0));

  CHECK_THROWS_AS(linearize_complementarity(m, "bad", {{slack, 1.0}}, 0.0, dual, 0.0, 300.0),
                  ConfigError);
}

TEST_CASE("mccormick envelope: boundary exactness and midpoint width") {
  // unit box with x pinned to 1 forces w = y
  {
    LinearModel m;
    const VarId x = m.add_variable("x", 1.0, 1.0);
    const VarId y = m.add_variable("y", 0.37, 0.37);
    EnvelopeBox box{0.0, 1.0, 0.0, 1.0, "w"};
    const VarId w = mccormick_envelope(m, x, y, box);
    LinearModel m2 = m;
    m.set_objective(Sense::Maximize, {{w, 1.0}});
    m.seal();
    Solution hi = lp::solve_lp(m);
    m2.set_objective(Sense::Minimize, {{w, 1.0}});
    m2.seal();
    Solution lo = lp::solve_lp(m2);
    CHECK(hi.primal[w] == doctest::Approx(0.37));
    CHECK(lo.primal[w] == doctest::Approx(0.37));
  }
  // zero edge forces w = 0
  {
    LinearModel m;
    const VarId x = m.add_variable("x", 0.0, 0.0);
    const VarId y = m.add_variable("y", 50.0, 50.0);
    EnvelopeBox box{0.0, 300.0, 0.0, 100.0, "w"};
    const VarId w = mccormick_envelope(m, x, y, box);
    m.set_objective(Sense::Maximize, {{w, 1.0}});
    m.seal();
    CHECK(lp::solve_lp(m).primal[w] == doctest::Approx(0.0));
  }
  // midpoint deviation matches the closed-form bound
  {
    LinearModel m;
    const VarId x = m.add_variable("x", 150.0, 150.0);
    const VarId y = m.add_variable("y", 50.0, 50.0);
    EnvelopeBox box{0.0, 300.0, 0.0, 100.0, "w"};
    const VarId w = mccormick_envelope(m, x, y, box);
    LinearModel m2 = m;
    m.set_objective(Sense::Maximize, {{w, 1.0}});
    m.seal();
    Solution hi = lp::solve_lp(m);
    m2.set_objective(Sense::Minimize, {{w, 1.0}});
    m2.seal();
    Solution lo = lp::solve_lp(m2);
    const double gap = mccormick_gap_bound(box);
    CHECK(gap == doctest::Approx(7500.0));
    CHECK(hi.primal[w] - 150.0 * 50.0 == doctest::Approx(gap));
    CHECK(150.0 * 50.0 - lo.primal[w] == doctest::Approx(gap));
  }
  // infinite boxes are configuration errors
  {
    LinearModel m;
    const VarId x = m.add_variable("x", 0.0, lp::kInfinity);
    const VarId y = m.add_variable("y", 0.0, 1.0);
    EnvelopeBox box{0.0, lp::kInfinity, 0.0, 1.0, "w"};
    CHECK_THROWS_AS(mccormick_envelope(m, x, y, box), ConfigError);
  }
}

TEST_CASE("revenue identity checked on a solved clearing") {
  // price-times-quantity equals offer revenue plus bound-dual rent
  market::DayAheadHour hour;
  hour.demand = 900.0;
  hour.gas = fixtures::gas_stack();
  market::StorageDaOffer s2;
  s2.id = "s2";
  s2.discharge = {99.5, 60.0};
  s2.reserve_up = {20.0, 12.0};
  hour.storage.push_back(s2);
  hour.reserve_up_req = 35.0;
  hour.reserve_down_req = 0.0;
  ClearingResult r = market::clear_day_ahead(hour);
  REQUIRE(r.status == ClearingStatus::Optimal);

  const ClearedLine* dch = r.find("s2", "DCH_DA");
  REQUIRE(dch != nullptr);
  CHECK(r.lambda_energy * dch->quantity ==
        doctest::Approx(dch->offer_price * dch->quantity + dch->upper_dual * dch->offer_bound)
            .epsilon(1e-9));

  const ClearedLine* ru = r.find("s2", "RU_DA");
  REQUIRE(ru != nullptr);
  CHECK(r.lambda_ru * ru->quantity ==
        doctest::Approx(ru->offer_price * ru->quantity + ru->upper_dual * ru->offer_bound)
            .epsilon(1e-9));
}

TEST_CASE("auxiliary problem at zero capacity earns exactly nothing") {
  // with both capacities zero every operator quantity is forced to zero, so
  // the linearized objective must collapse to zero; this exercises the whole
  // identity plumbing across both markets
  ScenarioDay day = spread_day(2, 380.0, 120.0, 100.0);
  auto techs = fixtures::both_techs();
  DayModelPtr ap = assemble_ap(day, techs, {0.0, 0.0}, {});
  Solution sol = lp::solve_milp(model_of(*ap));
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.objective) <= 1e-5);
  CHECK(max_complementarity_residual(*ap, sol) <= 1e-6);
  CHECK(max_embedded_duality_gap(*ap, sol) <= 1e-5);
}

TEST_CASE("auxiliary problem profits from an arbitrage spread") {
  ScenarioDay day = spread_day(2, 200.0, 0.0, 0.0);  // no wind, clean two-tier spread
  auto techs = fixtures::both_techs();
  const std::array<double, 2> cap = {0.0, 20.0};  // s2 rated 20 MWh, 100 MW
  DayModelPtr ap = assemble_ap(day, techs, cap, {});
  lp::MilpOptions mo;
  Solution sol = lp::solve_milp(model_of(*ap), mo);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective > 100.0);  // the 20->60 spread is worth capturing

  // the linearized objective must match the real clearing engines
  ApAudit audit = audit_against_clearing(*ap, sol, day, techs);
  CHECK(audit.abs_gap <= 1e-4 * std::max(1.0, std::abs(audit.model_objective)));

  // state machine, SOC corridor, transfer pairing on the extracted decision
  EsoDecision dec = extract_decision(*ap, sol);
  auto issues = validate_decision(dec, techs, day.caps);
  for (const auto& msg : issues) MESSAGE(msg);
  CHECK(issues.empty());

  CHECK(max_complementarity_residual(*ap, sol) <= 1e-6);
  CHECK(max_embedded_duality_gap(*ap, sol) <= 1e-5);

  // relaxing the binaries can only improve the bound
  LinearModel relaxed = model_of(*ap).continuous_relaxation();
  Solution rsol = lp::solve_lp(relaxed);
  REQUIRE(rsol.status == SolveStatus::Optimal);
  CHECK(rsol.objective >= sol.objective - 1e-6);

  // every bilinear term appears exactly once in the substitution ledger
  const auto& ledger = ledger_of(*ap);
  CHECK(!ledger.empty());
  std::vector<std::string> terms;
  for (const auto& rec : ledger) terms.push_back(rec.term);
  std::sort(terms.begin(), terms.end());
  CHECK(std::adjacent_find(terms.begin(), terms.end()) == terms.end());
  // 8 operator products per system per hour plus the cross-market products
  const std::size_t expected =
      static_cast<std::size_t>(2 * (4 + 4) * day.horizon + 2 * day.gas[0].size() * day.horizon);
  CHECK(terms.size() == expected);
}

TEST_CASE("subproblem reproduces the auxiliary objective and prices capacity") {
  ScenarioDay day = spread_day(2, 200.0, 0.0, 0.0);
  auto techs = fixtures::both_techs();
  const std::array<double, 2> cap = {0.0, 20.0};
  DayModelPtr ap = assemble_ap(day, techs, cap, {});
  Solution ap_sol = lp::solve_milp(model_of(*ap));
  REQUIRE(ap_sol.status == SolveStatus::Optimal);

  ApFixedSet fixed = extract_fixed_set(*ap, ap_sol);
  DayModelPtr sp = assemble_sp(day, techs, cap, fixed, {});
  Solution sp_sol = lp::solve_lp(model_of(*sp));
  REQUIRE(sp_sol.status == SolveStatus::Optimal);

  // consistency at the anchor capacities
  CHECK(sp_sol.objective ==
        doctest::Approx(ap_sol.objective).epsilon(1e-4).scale(std::max(1.0, ap_sol.objective)));

  // capacity sensitivity: a small step along the pin changes the objective
  // at the dual rate (the fixed pattern keeps the subproblem on one facet)
  const double pi2 = sp_sol.dual(model_of(*sp), "pin_E_s2");
  const double step = 0.05;
  DayModelPtr sp2 = assemble_sp(day, techs, {0.0, 20.0 + step}, fixed, {});
  Solution sp2_sol = lp::solve_lp(model_of(*sp2));
  REQUIRE(sp2_sol.status == SolveStatus::Optimal);
  const double delta = sp2_sol.objective - sp_sol.objective;
  CHECK(delta <= pi2 * step + 1e-5);  // concave value function: linearization overestimates
  CHECK(delta >= pi2 * step - 0.25 * std::abs(pi2 * step) - 1e-5);

  // incomplete fixed set is a named builder error
  ApFixedSet broken = fixed;
  broken.binary_values.erase(broken.binary_values.begin() + 10, broken.binary_values.end());
  CHECK_THROWS_AS(assemble_sp(day, techs, cap, broken, {}), BuilderError);
  ApFixedSet empty;
  CHECK_THROWS_AS(assemble_sp(day, techs, cap, empty, {}), BuilderError);
}

TEST_CASE("subproblem sensitivity vanishes when operations are worthless") {
  // flat prices: no arbitrage, no reserve need, no wind deviation
  ScenarioDay day = spread_day(2, 200.0, 0.0, 0.0);
  for (int t = 0; t < day.horizon; ++t) {
    day.demand[t] = 200.0;
    for (auto& g : day.gas[t]) {
      g.da_energy.price = 25.0;
      g.rt_energy.price = 25.0;
      g.da_reserve_up.price = 10.0;
      g.da_reserve_down.price = 10.0;
    }
    day.reserve_up_req[t] = 0.0;
    day.reserve_down_req[t] = 0.0;
  }
  auto techs = fixtures::both_techs();
  const std::array<double, 2> cap = {10.0, 10.0};
  DayModelPtr ap = assemble_ap(day, techs, cap, {});
  Solution ap_sol = lp::solve_milp(model_of(*ap));
  REQUIRE(ap_sol.status == SolveStatus::Optimal);
  CHECK(std::abs(ap_sol.objective) <= 1e-5);

  ApFixedSet fixed = extract_fixed_set(*ap, ap_sol);
  DayModelPtr sp = assemble_sp(day, techs, cap, fixed, {});
  Solution sp_sol = lp::solve_lp(model_of(*sp));
  REQUIRE(sp_sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sp_sol.objective) <= 1e-5);
  CHECK(std::abs(sp_sol.dual(model_of(*sp), "pin_E_s1")) <= 1e-6);
  CHECK(std::abs(sp_sol.dual(model_of(*sp), "pin_E_s2")) <= 1e-6);
}

TEST_CASE("monolithic capacity choice matches the auxiliary problem when pinned") {
  Scenario sc;
  sc.techs = fixtures::both_techs();
  sc.days = {spread_day(2, 200.0, 0.0, 0.0)};
  sc.days[0].weight = 1.0;
  DayModelPtr mono = assemble_monolithic(sc);
  LinearModel& m = mutable_model_of(*mono);
  m.set_bounds(m.var_id("E_s1"), 0.0, 0.0);
  m.set_bounds(m.var_id("E_s2"), 20.0, 20.0);
  Solution mono_sol = lp::solve_milp(m);
  REQUIRE(mono_sol.status == SolveStatus::Optimal);

  DayModelPtr ap = assemble_ap(sc.days[0], sc.techs, {0.0, 20.0}, {});
  Solution ap_sol = lp::solve_milp(model_of(*ap));
  REQUIRE(ap_sol.status == SolveStatus::Optimal);

  const double invest = sc.techs[1].invest_cost * 20.0;
  CHECK(mono_sol.objective ==
        doctest::Approx(ap_sol.objective - invest).epsilon(1e-6).scale(
            std::max(1.0, std::abs(ap_sol.objective))));
}
