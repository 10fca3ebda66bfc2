#pragma once

// Operator-decision persistence: capacities, per-day states, offers, SOC
// trajectories and transfers as one canonical JSON document.

#include <string>

#include "hessplan/domain.hpp"

namespace hessplan::io {

std::string decision_to_json(const EsoDecision& decision);
EsoDecision decision_from_json(const std::string& text);
void save_decision(const EsoDecision& decision, const std::string& path);
EsoDecision load_decision(const std::string& path);

}  // namespace hessplan::io
