#pragma once

// Scenario ingestion and persistence. A scenario is one JSON document that
// carries the technologies, the gas fleet's offers, price caps, the reserve
// rule, and the typical days either inline or as referenced per-day CSV
// files (columns: hour, demand_mw, wind_realized_mw, optionally
// wind_forecast_mw, reserve_up_mw, reserve_down_mw). Wind forecasts missing
// from the data are generated from the realized series with a seeded uniform
// band. Canonical saves round-trip byte for byte.

#include <cstdint>
#include <string>
#include <vector>

#include "hessplan/domain.hpp"

namespace hessplan::io {

// Loads and fully validates a scenario; errors carry file/row context.
Scenario load_scenario(const std::string& config_path);

// Canonical single-document form (days inlined, keys ordered, fixed float
// formatting). save(load(x)) is byte-identical for canonical files.
std::string scenario_to_json(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::string& path);
Scenario scenario_from_json(const std::string& text, const std::string& base_dir = ".");

// forecast_t = u_t * realized_t with u_t uniform on [band_lo, band_hi],
// deterministic for a given seed/stream pair.
std::vector<double> generate_forecasts(const std::vector<double>& realized, double band_lo,
                                       double band_hi, std::uint64_t seed,
                                       std::uint64_t stream = 0);

// Returns a copy of the scenario with one of the six grid-access variants
// applied; variant names are the kebab-case kinds accepted by the config.
Scenario apply_grid_access(const Scenario& scenario, const std::string& variant,
                           double limit_mw);

// The bundled study scenario: the eight-generator fleet, both candidate
// technologies, and `days` synthetic demand/wind days of the given horizon
// (defaults mirror the bundled data set: four days, 24 hours).
Scenario builtin_default_scenario(int days = 4, int horizon = 24, std::uint64_t seed = 7);

// Writes the bundled scenario as a config plus per-day CSVs under dir.
void write_scenario_files(const Scenario& scenario, const std::string& dir);

}  // namespace hessplan::io
