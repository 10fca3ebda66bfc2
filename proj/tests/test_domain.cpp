#include "doctest.h"
#include "hessplan/domain.hpp"

#include <random>

using namespace hessplan;

namespace {

StorageTech tech_s1() {
  StorageTech t;
  t.id = "s1";
  t.power_ratio = 0.2;
  t.max_capacity = 500.0;
  t.eta_charge = 0.95;
  t.eta_discharge = 0.95;
  t.soc_min = 0.05;
  t.soc_max = 0.95;
  t.soc_init = 0.50;
  t.invest_cost = 3571.0 / 365.0;
  return t;
}

StorageTech tech_s2() {
  StorageTech t = tech_s1();
  t.id = "s2";
  t.power_ratio = 5.0;
  t.invest_cost = 4571.0 / 365.0;
  return t;
}

}  // namespace

TEST_CASE("reserve requirement follows the 3+5 rule") {
  auto [ru, rd] = reserve_requirement(1000.0, 200.0);
  CHECK(ru == doctest::Approx(40.0));
  CHECK(rd == doctest::Approx(40.0));
  auto zero = reserve_requirement(0.0, 0.0);
  CHECK(zero.first == 0.0);
  CHECK(zero.second == 0.0);
  auto d = reserve_requirement(100.0, 0.0);
  CHECK(d.first == doctest::Approx(3.0));
  CHECK(d.second == doctest::Approx(3.0));
  CHECK_THROWS_AS(reserve_requirement(-1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(reserve_requirement(0.0, -2.0), ValidationError);
}

TEST_CASE("reserve requirement is linear and monotone") {
  std::mt19937_64 rng(7);
  auto u = [&rng]() { return static_cast<double>(rng() % 10000) / 10.0; };
  for (int i = 0; i < 200; ++i) {
    const double d1 = u(), w1 = u(), d2 = u(), w2 = u(), k = 1.0 + static_cast<double>(rng() % 50) / 10.0;
    auto a = reserve_requirement(d1, w1);
    auto b = reserve_requirement(d2, w2);
    auto sum = reserve_requirement(d1 + d2, w1 + w2);
    CHECK(sum.first == doctest::Approx(a.first + b.first).epsilon(1e-12));
    auto scaled = reserve_requirement(k * d1, k * w1);
    CHECK(scaled.first == doctest::Approx(k * a.first).epsilon(1e-12));
    if (d2 >= d1 && w2 >= w1) CHECK(b.first >= a.first);
  }
}

TEST_CASE("soc step handles charge, discharge, and identity") {
  StorageTech t = tech_s1();
  CHECK(soc_step(50, 10, 0, 0, 0, 0, 0, 0, 0, t) == doctest::Approx(59.5));
  CHECK(soc_step(50, 0, 0, 0, 0, 9.5, 0, 0, 0, t) == doctest::Approx(40.0));
  CHECK(soc_step(50, 10, 0, 0, 0, 9.5, 0, 0, 0, t) == doctest::Approx(49.5));
  CHECK(soc_step(123.4, 0, 0, 0, 0, 0, 0, 0, 0, t) == doctest::Approx(123.4));
}

TEST_CASE("transfer cap is the weaker power rating") {
  StorageTech a = tech_s1(), b = tech_s2();
  CHECK(transfer_cap(a, b, 100.0, 10.0) == doctest::Approx(20.0));
  CHECK(transfer_cap(a, b, 0.0, 10.0) == doctest::Approx(0.0));
  CHECK(transfer_cap(a, b, 500.0, 500.0) == doctest::Approx(100.0));
  // monotone nondecreasing in each capacity
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const double e1 = static_cast<double>(rng() % 500);
    const double e2 = static_cast<double>(rng() % 500);
    const double bump = static_cast<double>(rng() % 50);
    CHECK(transfer_cap(a, b, e1 + bump, e2) >= transfer_cap(a, b, e1, e2) - 1e-12);
    CHECK(transfer_cap(a, b, e1, e2 + bump) >= transfer_cap(a, b, e1, e2) - 1e-12);
  }
}

TEST_CASE("net deviation keeps its sign and checks lengths") {
  CHECK(net_deviation({100.0}, {80.0}) == doctest::Approx(20.0));
  CHECK(net_deviation({100.0}, {120.0}) == doctest::Approx(-20.0));
  CHECK(net_deviation({50.0, 50.0}, {50.0, 50.0}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(net_deviation({1.0, 2.0}, {1.0}), ValidationError);
}

TEST_CASE("storage tech validation rejects bad parameters") {
  StorageTech t = tech_s1();
  CHECK_NOTHROW(t.validate());
  StorageTech bad = t;
  bad.eta_charge = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = t;
  bad.soc_init = 0.01;  // below soc_min
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = t;
  bad.power_ratio = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("state helpers partition the seven states") {
  int charging = 0, discharging = 0, senders = 0, receivers = 0;
  for (StorageState s : kAllStorageStates) {
    if (is_charging(s)) ++charging;
    if (is_discharging(s)) ++discharging;
    if (discharges_to_partner(s)) ++senders;
    if (charges_from_partner(s)) ++receivers;
    CHECK(!(is_charging(s) && is_discharging(s)));
    CHECK(storage_state_from_string(to_string(s)) == s);
  }
  CHECK(charging == 3);
  CHECK(discharging == 3);
  CHECK(senders == 2);
  CHECK(receivers == 2);
  CHECK_THROWS_AS(storage_state_from_string("sideways"), ValidationError);
}

TEST_CASE("decision validation flags pairing, SOC, and transfer violations") {
  std::array<StorageTech, 2> techs = {tech_s1(), tech_s2()};
  PriceCaps caps;

  EsoDecision d;
  d.capacity = {100.0, 40.0};
  EsoDecision::DayRecord day;
  day.day_id = "d1";
  const int T = 2;
  for (int s = 0; s < 2; ++s) {
    day.sys[s].state.assign(T, StorageState::Idle);
    day.sys[s].offers.assign(T, EsoHourOffers{});
    day.sys[s].soc.assign(T, techs[s].soc_init * d.capacity[s]);
    day.transfer_planned[s].assign(T, 0.0);
    day.transfer_achieved[s].assign(T, 0.0);
  }
  d.days.push_back(day);
  CHECK(validate_decision(d, techs, caps).empty());

  // sender without a paired receiver
  d.days[0].sys[0].state[0] = StorageState::DischargeToPartner;
  auto issues = validate_decision(d, techs, caps);
  CHECK(!issues.empty());
  d.days[0].sys[1].state[0] = StorageState::ChargeFromPartner;
  CHECK(validate_decision(d, techs, caps).empty());

  // achieved transfer above planned
  d.days[0].transfer_planned[0][0] = 5.0;
  d.days[0].transfer_achieved[0][0] = 6.0;
  CHECK(!validate_decision(d, techs, caps).empty());
  d.days[0].transfer_achieved[0][0] = 5.0;
  CHECK(validate_decision(d, techs, caps).empty());

  // terminal SOC below the anchor
  d.days[0].sys[1].soc[T - 1] = techs[1].soc_init * d.capacity[1] - 1.0;
  CHECK(!validate_decision(d, techs, caps).empty());
}
