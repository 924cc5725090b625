#pragma once

#include "rcsdid/dgp.hpp"

#include <filesystem>
#include <string_view>

namespace rcsdid {

// Reads a scenario from JSON (`{"k_co": 30, ...}`) or key=value lines
// (`#` starts a comment). Keys: k_co, k_tr, periods (or T), t_pre, tau,
// factors (or r), w, rho, base_rc, s_lo, s_hi, seed, noise_sd. Keys absent
// from the file keep their value in `base`; unknown keys are rejected.
ScenarioConfig load_scenario_config(const std::filesystem::path& path, ScenarioConfig base = {});

// Applies one key/value pair; throws ValidationError for unknown keys or
// malformed values.
void set_scenario_value(ScenarioConfig& cfg, std::string_view key, std::string_view value);

}  // namespace rcsdid
