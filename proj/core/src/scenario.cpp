#include "hessplan/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace hessplan::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct CsvDay {
  std::vector<double> demand, wind_realized;
  std::vector<double> wind_forecast, reserve_up, reserve_down;  // optional, may stay empty
};

CsvDay read_day_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open day file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);
  auto col = [&header](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int c_demand = col("demand_mw");
  const int c_wind = col("wind_realized_mw");
  const int c_forecast = col("wind_forecast_mw");
  const int c_ru = col("reserve_up_mw");
  const int c_rd = col("reserve_down_mw");
  if (c_demand < 0 || c_wind < 0)
    throw ValidationError(path + ": required columns demand_mw and wind_realized_mw");

  CsvDay day;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    auto cell = [&](int c, const char* name) {
      if (c >= static_cast<int>(cells.size()))
        throw ValidationError(path + ": row " + std::to_string(row) + " missing column " + name);
      try {
        return std::stod(cells[c]);
      } catch (...) {
        throw ValidationError(path + ": row " + std::to_string(row) + " column " + name +
                              " is not a number: '" + cells[c] + "'");
      }
    };
    day.demand.push_back(cell(c_demand, "demand_mw"));
    day.wind_realized.push_back(cell(c_wind, "wind_realized_mw"));
    if (c_forecast >= 0) day.wind_forecast.push_back(cell(c_forecast, "wind_forecast_mw"));
    if (c_ru >= 0) day.reserve_up.push_back(cell(c_ru, "reserve_up_mw"));
    if (c_rd >= 0) day.reserve_down.push_back(cell(c_rd, "reserve_down_mw"));
  }
  return day;
}

std::vector<double> json_series(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ValidationError(ctx + ": missing series '" + key + "'");
  std::vector<double> out;
  for (const auto& v : j.at(key)) out.push_back(v.get<double>());
  return out;
}

StorageTech tech_from_json(const json& j) {
  StorageTech t;
  t.id = j.at("id").get<std::string>();
  t.power_ratio = j.at("power_ratio").get<double>();
  t.max_capacity = j.at("max_capacity_mwh").get<double>();
  t.eta_charge = j.at("eta_charge").get<double>();
  t.eta_discharge = j.at("eta_discharge").get<double>();
  t.soc_min = j.at("soc_min").get<double>();
  t.soc_max = j.at("soc_max").get<double>();
  t.soc_init = j.at("soc_init").get<double>();
  t.invest_cost = j.at("invest_cost_per_day").get<double>();
  t.marginal_cost = j.at("marginal_cost").get<double>();
  return t;
}

json tech_to_json(const StorageTech& t) {
  json j;
  j["id"] = t.id;
  j["power_ratio"] = t.power_ratio;
  j["max_capacity_mwh"] = t.max_capacity;
  j["eta_charge"] = t.eta_charge;
  j["eta_discharge"] = t.eta_discharge;
  j["soc_min"] = t.soc_min;
  j["soc_max"] = t.soc_max;
  j["soc_init"] = t.soc_init;
  j["invest_cost_per_day"] = t.invest_cost;
  j["marginal_cost"] = t.marginal_cost;
  return j;
}

PriceQuantity pq_from_json(const json& j) {
  return {j.at("quantity_mw").get<double>(), j.at("price").get<double>()};
}

json pq_to_json(const PriceQuantity& pq) {
  json j;
  j["quantity_mw"] = pq.quantity_mw;
  j["price"] = pq.price;
  return j;
}

GasOffer gas_from_json(const json& j) {
  GasOffer g;
  g.id = j.at("id").get<std::string>();
  g.da_energy = pq_from_json(j.at("da_energy"));
  g.da_reserve_up = pq_from_json(j.at("da_reserve_up"));
  g.da_reserve_down = pq_from_json(j.at("da_reserve_down"));
  g.rt_energy = pq_from_json(j.at("rt_energy"));
  return g;
}

json gas_to_json(const GasOffer& g) {
  json j;
  j["id"] = g.id;
  j["da_energy"] = pq_to_json(g.da_energy);
  j["da_reserve_up"] = pq_to_json(g.da_reserve_up);
  j["da_reserve_down"] = pq_to_json(g.da_reserve_down);
  j["rt_energy"] = pq_to_json(g.rt_energy);
  return j;
}

}  // namespace

std::vector<double> generate_forecasts(const std::vector<double>& realized, double band_lo,
                                       double band_hi, std::uint64_t seed, std::uint64_t stream) {
  if (!(band_lo <= band_hi)) throw ConfigError("forecast band must satisfy lo <= hi");
  for (double v : realized)
    if (v < 0.0) throw ConfigError("realized wind must be nonnegative");
  // dedicated generator per (seed, stream), bit-stable scaling to [0,1)
  std::uint64_t state = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  std::mt19937_64 rng(state);
  std::vector<double> out;
  out.reserve(realized.size());
  for (double v : realized) {
    const double u01 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    out.push_back((band_lo + (band_hi - band_lo) * u01) * v);
  }
  return out;
}

Scenario scenario_from_json(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("scenario config does not parse: ") + ex.what());
  }
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
    throw ConfigError("scenario config requires schema_version 1");

  Scenario sc;
  const auto& techs = j.at("techs");
  if (techs.size() != 2) throw ValidationError("exactly two storage technologies required");
  sc.techs[0] = tech_from_json(techs[0]);
  sc.techs[1] = tech_from_json(techs[1]);

  PriceCaps caps;
  if (j.contains("price_caps")) {
    caps.da_energy = j["price_caps"].value("da_energy", caps.da_energy);
    caps.da_reserve = j["price_caps"].value("da_reserve", caps.da_reserve);
    caps.rt_energy = j["price_caps"].value("rt_energy", caps.rt_energy);
  }

  std::vector<GasOffer> fleet;
  for (const auto& g : j.at("gas_offers")) fleet.push_back(gas_from_json(g));

  double demand_frac = 0.03, wind_frac = 0.05;
  if (j.contains("reserve_rule")) {
    demand_frac = j["reserve_rule"].value("demand_fraction", demand_frac);
    wind_frac = j["reserve_rule"].value("wind_fraction", wind_frac);
  }
  double band_lo = 0.8, band_hi = 1.4;
  std::uint64_t seed = 0;
  if (j.contains("forecast")) {
    const auto& f = j["forecast"];
    if (f.contains("band")) {
      band_lo = f["band"][0].get<double>();
      band_hi = f["band"][1].get<double>();
    }
    seed = f.value("seed", 0);
  }
  if (band_lo > band_hi) throw ConfigError("forecast band must satisfy lo <= hi");

  std::uint64_t day_index = 0;
  for (const auto& dj : j.at("days")) {
    ScenarioDay day;
    day.id = dj.at("id").get<std::string>();
    day.weight = dj.at("weight").get<double>();
    day.caps = caps;

    CsvDay raw;
    if (dj.contains("csv")) {
      const fs::path p = fs::path(base_dir) / dj.at("csv").get<std::string>();
      raw = read_day_csv(p.string());
    } else {
      raw.demand = json_series(dj, "demand_mw", day.id);
      raw.wind_realized = json_series(dj, "wind_realized_mw", day.id);
      if (dj.contains("wind_forecast_mw")) raw.wind_forecast = json_series(dj, "wind_forecast_mw", day.id);
      if (dj.contains("reserve_up_mw")) raw.reserve_up = json_series(dj, "reserve_up_mw", day.id);
      if (dj.contains("reserve_down_mw")) raw.reserve_down = json_series(dj, "reserve_down_mw", day.id);
    }
    day.horizon = static_cast<int>(raw.demand.size());
    if (day.horizon == 0) throw ValidationError(day.id + ": no hours");
    auto check_len = [&day](const std::vector<double>& v, const char* what) {
      if (!v.empty() && static_cast<int>(v.size()) != day.horizon)
        throw ValidationError(day.id + ": " + what + " length " + std::to_string(v.size()) +
                              " != horizon " + std::to_string(day.horizon));
    };
    check_len(raw.wind_realized, "wind_realized");
    check_len(raw.wind_forecast, "wind_forecast");
    check_len(raw.reserve_up, "reserve_up");
    check_len(raw.reserve_down, "reserve_down");
    if (static_cast<int>(raw.wind_realized.size()) != day.horizon)
      throw ValidationError(day.id + ": demand length " + std::to_string(day.horizon) +
                            " != wind length " + std::to_string(raw.wind_realized.size()));

    day.demand = raw.demand;
    day.wind_realized = {raw.wind_realized};
    if (!raw.wind_forecast.empty()) {
      day.wind_offer = {raw.wind_forecast};
    } else {
      day.wind_offer = {generate_forecasts(raw.wind_realized, band_lo, band_hi, seed, day_index)};
    }
    if (!raw.reserve_up.empty() && !raw.reserve_down.empty()) {
      day.reserve_up_req = raw.reserve_up;
      day.reserve_down_req = raw.reserve_down;
    } else {
      // requirement from the fractional rule on demand and scheduled wind
      day.reserve_up_req.resize(day.horizon);
      day.reserve_down_req.resize(day.horizon);
      for (int t = 0; t < day.horizon; ++t) {
        const double req = demand_frac * day.demand[t] + wind_frac * day.wind_offer[0][t];
        day.reserve_up_req[t] = req;
        day.reserve_down_req[t] = req;
      }
    }
    day.gas.assign(day.horizon, fleet);
    day.validate();
    sc.days.push_back(std::move(day));
    ++day_index;
  }

  if (j.contains("grid_access")) {
    sc.grid_access.kind = grid_access_kind_from_string(j["grid_access"].value("kind", "none"));
    sc.grid_access.limit_mw = j["grid_access"].value("limit_mw", 0.0);
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& config_path) {
  const std::string text = read_file(config_path);
  const std::string base = fs::path(config_path).parent_path().string();
  return scenario_from_json(text, base.empty() ? "." : base);
}

std::string scenario_to_json(const Scenario& scenario) {
  json j;
  j["schema_version"] = 1;
  const PriceCaps& caps = scenario.days.front().caps;
  j["price_caps"] = {{"da_energy", caps.da_energy},
                     {"da_reserve", caps.da_reserve},
                     {"rt_energy", caps.rt_energy}};
  j["techs"] = json::array({tech_to_json(scenario.techs[0]), tech_to_json(scenario.techs[1])});
  json fleet = json::array();
  for (const GasOffer& g : scenario.days.front().gas.front()) fleet.push_back(gas_to_json(g));
  j["gas_offers"] = fleet;
  j["grid_access"] = {{"kind", to_string(scenario.grid_access.kind)},
                      {"limit_mw", scenario.grid_access.limit_mw}};
  json days = json::array();
  for (const ScenarioDay& day : scenario.days) {
    json dj;
    dj["id"] = day.id;
    dj["weight"] = day.weight;
    dj["demand_mw"] = day.demand;
    dj["wind_realized_mw"] = day.wind_realized[0];
    dj["wind_forecast_mw"] = day.wind_offer[0];
    dj["reserve_up_mw"] = day.reserve_up_req;
    dj["reserve_down_mw"] = day.reserve_down_req;
    days.push_back(dj);
  }
  j["days"] = days;
  return j.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << scenario_to_json(scenario);
}

Scenario apply_grid_access(const Scenario& scenario, const std::string& variant,
                           double limit_mw) {
  Scenario out = scenario;
  out.grid_access.kind = grid_access_kind_from_string(variant);
  out.grid_access.limit_mw = limit_mw;
  out.validate();
  return out;
}

Scenario builtin_default_scenario(int days, int horizon, std::uint64_t seed) {
  Scenario sc;
  StorageTech s1;
  s1.id = "s1";
  s1.power_ratio = 0.2;
  s1.max_capacity = 500.0;
  s1.eta_charge = 0.95;
  s1.eta_discharge = 0.95;
  s1.soc_min = 0.05;
  s1.soc_max = 0.95;
  s1.soc_init = 0.50;
  s1.invest_cost = 3571.0 / 365.0;
  s1.marginal_cost = 0.0;
  StorageTech s2 = s1;
  s2.id = "s2";
  s2.power_ratio = 5.0;
  s2.invest_cost = 4571.0 / 365.0;
  sc.techs = {s1, s2};

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
  const std::vector<GasOffer> fleet = {
      mk("g1", 240, 20, 30, 10, 30, 20),   mk("g2", 240, 30, 30, 15, 30, 30),
      mk("g3", 240, 40, 30, 20, 30, 40),   mk("g4", 240, 60, 30, 30, 30, 60),
      mk("g5", 240, 90, 30, 45, 30, 90),   mk("g6", 240, 120, 30, 60, 30, 120),
      mk("g7", 320, 150, 40, 75, 40, 150), mk("g8", 320, 300, 40, 150, 40, 300),
  };

  const double pi = 3.14159265358979323846;
  for (int d = 0; d < days; ++d) {
    ScenarioDay day;
    day.id = "d" + std::to_string(d + 1);
    day.weight = 1.0 / days;
    day.horizon = horizon;
    // seasonal demand around a morning/evening double peak, gas fleet price-setting
    const double base = 850.0 + 120.0 * std::cos(2.0 * pi * d / std::max(1, days));
    std::vector<double> realized;
    for (int t = 0; t < horizon; ++t) {
      const double x = static_cast<double>(t) / horizon;
      const double peaks = 0.55 * std::sin(2.0 * pi * (x - 0.30)) + 0.25 * std::sin(4.0 * pi * (x - 0.075));
      day.demand.push_back(std::round((base * (1.0 + 0.35 * peaks)) * 10.0) / 10.0);
      const double wind = 140.0 + 110.0 * std::sin(2.0 * pi * (x + 0.12 * (d + 1)));
      realized.push_back(std::round(std::max(0.0, wind) * 10.0) / 10.0);
    }
    day.wind_realized = {realized};
    day.wind_offer = {generate_forecasts(realized, 0.8, 1.4, seed, static_cast<std::uint64_t>(d))};
    day.reserve_up_req.resize(horizon);
    day.reserve_down_req.resize(horizon);
    for (int t = 0; t < horizon; ++t) {
      auto [ru, rd] = reserve_requirement(day.demand[t], day.wind_offer[0][t]);
      day.reserve_up_req[t] = ru;
      day.reserve_down_req[t] = rd;
    }
    day.gas.assign(horizon, fleet);
    sc.days.push_back(std::move(day));
  }
  sc.validate();
  return sc;
}

void write_scenario_files(const Scenario& scenario, const std::string& dir) {
  fs::create_directories(dir);
  json j;
  j["schema_version"] = 1;
  const PriceCaps& caps = scenario.days.front().caps;
  j["price_caps"] = {{"da_energy", caps.da_energy},
                     {"da_reserve", caps.da_reserve},
                     {"rt_energy", caps.rt_energy}};
  j["techs"] = json::array({tech_to_json(scenario.techs[0]), tech_to_json(scenario.techs[1])});
  json fleet = json::array();
  for (const GasOffer& g : scenario.days.front().gas.front()) fleet.push_back(gas_to_json(g));
  j["gas_offers"] = fleet;
  j["grid_access"] = {{"kind", to_string(scenario.grid_access.kind)},
                      {"limit_mw", scenario.grid_access.limit_mw}};
  json days = json::array();
  for (const ScenarioDay& day : scenario.days) {
    json dj;
    dj["id"] = day.id;
    dj["weight"] = day.weight;
    dj["csv"] = day.id + ".csv";
    days.push_back(dj);
    std::ofstream csv(fs::path(dir) / (day.id + ".csv"), std::ios::binary);
    csv.precision(17);
    csv << "hour,demand_mw,wind_realized_mw,wind_forecast_mw,reserve_up_mw,reserve_down_mw\n";
    for (int t = 0; t < day.horizon; ++t)
      csv << t << ',' << day.demand[t] << ',' << day.wind_realized[0][t] << ','
          << day.wind_offer[0][t] << ',' << day.reserve_up_req[t] << ','
          << day.reserve_down_req[t] << "\n";
  }
  j["days"] = days;
  std::ofstream out(fs::path(dir) / "scenario.json", std::ios::binary);
  out << j.dump(2) << "\n";
}

}  // namespace hessplan::io
