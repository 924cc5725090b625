#include "rcsdid/config.hpp"

#include "rcsdid/errors.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

namespace rcsdid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  value = trim(value);
  T out{};
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size())
    throw ValidationError("config key '" + std::string(key) + "': cannot parse '" +
                          std::string(value) + "'");
  return out;
}

}  // namespace

void set_scenario_value(ScenarioConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "k_co") cfg.k_co = parse_number<int>(key, value);
  else if (key == "k_tr") cfg.k_tr = parse_number<int>(key, value);
  else if (key == "periods" || key == "T") cfg.periods = parse_number<int>(key, value);
  else if (key == "t_pre") cfg.t_pre = parse_number<int>(key, value);
  else if (key == "tau") cfg.tau = parse_number<double>(key, value);
  else if (key == "factors" || key == "r") cfg.factors = parse_number<int>(key, value);
  else if (key == "w") cfg.w = parse_number<double>(key, value);
  else if (key == "rho") cfg.rho = parse_number<double>(key, value);
  else if (key == "base_rc") cfg.base_rc = parse_number<int>(key, value);
  else if (key == "s_lo") cfg.s_lo = parse_number<int>(key, value);
  else if (key == "s_hi") cfg.s_hi = parse_number<int>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "noise_sd") cfg.noise_sd = parse_number<double>(key, value);
  else throw ValidationError("unknown config key '" + std::string(key) + "'");
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config '" + path.string() + "': " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
      const std::string v = value.is_string() ? value.get<std::string>() : value.dump();
      set_scenario_value(base, key, v);
    }
    return base;
  }

  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError("config '" + path.string() + "' line " + std::to_string(lineno) +
                            ": expected key=value");
    set_scenario_value(base, trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  return base;
}

}  // namespace rcsdid
