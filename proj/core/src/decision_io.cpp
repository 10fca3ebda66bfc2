#include "hessplan/decision_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hessplan::io {

using json = nlohmann::ordered_json;

namespace {

json offers_to_json(const EsoHourOffers& o) {
  json j;
  j["p_ch_da"] = o.p_ch_da;
  j["p_dch_da"] = o.p_dch_da;
  j["p_ru_da"] = o.p_ru_da;
  j["p_rd_da"] = o.p_rd_da;
  j["p_ch_rt"] = o.p_ch_rt;
  j["p_dch_rt"] = o.p_dch_rt;
  j["q_ch_da"] = o.q_ch_da;
  j["q_dch_da"] = o.q_dch_da;
  j["q_ru_da"] = o.q_ru_da;
  j["q_rd_da"] = o.q_rd_da;
  j["q_ch_rt"] = o.q_ch_rt;
  j["q_dch_rt"] = o.q_dch_rt;
  return j;
}

EsoHourOffers offers_from_json(const json& j) {
  EsoHourOffers o;
  o.p_ch_da = j.at("p_ch_da").get<double>();
  o.p_dch_da = j.at("p_dch_da").get<double>();
  o.p_ru_da = j.at("p_ru_da").get<double>();
  o.p_rd_da = j.at("p_rd_da").get<double>();
  o.p_ch_rt = j.at("p_ch_rt").get<double>();
  o.p_dch_rt = j.at("p_dch_rt").get<double>();
  o.q_ch_da = j.at("q_ch_da").get<double>();
  o.q_dch_da = j.at("q_dch_da").get<double>();
  o.q_ru_da = j.at("q_ru_da").get<double>();
  o.q_rd_da = j.at("q_rd_da").get<double>();
  o.q_ch_rt = j.at("q_ch_rt").get<double>();
  o.q_dch_rt = j.at("q_dch_rt").get<double>();
  return o;
}

}  // namespace

std::string decision_to_json(const EsoDecision& decision) {
  json j;
  j["schema_version"] = 1;
  j["capacity_mwh"] = {decision.capacity[0], decision.capacity[1]};
  json days = json::array();
  for (const auto& rec : decision.days) {
    json dj;
    dj["day_id"] = rec.day_id;
    for (int s = 0; s < 2; ++s) {
      json sys;
      json states = json::array();
      for (StorageState st : rec.sys[s].state) states.push_back(to_string(st));
      sys["state"] = states;
      json offers = json::array();
      for (const EsoHourOffers& o : rec.sys[s].offers) offers.push_back(offers_to_json(o));
      sys["offers"] = offers;
      sys["soc_mwh"] = rec.sys[s].soc;
      dj[s == 0 ? "s1" : "s2"] = sys;
    }
    dj["transfer_planned_s1s2"] = rec.transfer_planned[0];
    dj["transfer_planned_s2s1"] = rec.transfer_planned[1];
    dj["transfer_achieved_s1s2"] = rec.transfer_achieved[0];
    dj["transfer_achieved_s2s1"] = rec.transfer_achieved[1];
    days.push_back(dj);
  }
  j["days"] = days;
  return j.dump(2) + "\n";
}

EsoDecision decision_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("decision file does not parse: ") + ex.what());
  }
  EsoDecision d;
  d.capacity[0] = j.at("capacity_mwh")[0].get<double>();
  d.capacity[1] = j.at("capacity_mwh")[1].get<double>();
  for (const auto& dj : j.at("days")) {
    EsoDecision::DayRecord rec;
    rec.day_id = dj.at("day_id").get<std::string>();
    for (int s = 0; s < 2; ++s) {
      const auto& sys = dj.at(s == 0 ? "s1" : "s2");
      for (const auto& st : sys.at("state"))
        rec.sys[s].state.push_back(storage_state_from_string(st.get<std::string>()));
      for (const auto& o : sys.at("offers")) rec.sys[s].offers.push_back(offers_from_json(o));
      for (const auto& v : sys.at("soc_mwh")) rec.sys[s].soc.push_back(v.get<double>());
    }
    for (const auto& v : dj.at("transfer_planned_s1s2")) rec.transfer_planned[0].push_back(v.get<double>());
    for (const auto& v : dj.at("transfer_planned_s2s1")) rec.transfer_planned[1].push_back(v.get<double>());
    for (const auto& v : dj.at("transfer_achieved_s1s2")) rec.transfer_achieved[0].push_back(v.get<double>());
    for (const auto& v : dj.at("transfer_achieved_s2s1")) rec.transfer_achieved[1].push_back(v.get<double>());
    d.days.push_back(std::move(rec));
  }
  return d;
}

void save_decision(const EsoDecision& decision, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << decision_to_json(decision);
}

EsoDecision load_decision(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return decision_from_json(os.str());
}

}  // namespace hessplan::io
