#include "qchain/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "qchain/network.hpp"

namespace qchain {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::uint32_t to_u32(const std::string& s) {
  const std::uint64_t v = to_u64(s);
  if (v > 0xffffffffULL) throw ConfigError("integer out of range: '" + s + "'");
  return static_cast<std::uint32_t>(v);
}

std::vector<std::uint32_t> to_u32_list(const std::string& s) {
  std::vector<std::uint32_t> out;
  for (const auto& item : split(s, ',')) {
    if (item.find(':') != std::string::npos) {
      const auto parts = split(item, ':');
      if (parts.size() != 3) throw ConfigError("range must be start:stop:step, got '" + item + "'");
      const std::uint32_t start = to_u32(parts[0]);
      const std::uint32_t stop = to_u32(parts[1]);
      const std::uint32_t step = to_u32(parts[2]);
      if (step == 0 || stop < start) throw ConfigError("empty or unbounded range '" + item + "'");
      for (std::uint64_t v = start; v <= stop; v += step) out.push_back(static_cast<std::uint32_t>(v));
    } else {
      out.push_back(to_u32(item));
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<double> to_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) {
    if (item.find(':') != std::string::npos) {
      const auto parts = split(item, ':');
      if (parts.size() != 3) throw ConfigError("range must be start:stop:step, got '" + item + "'");
      const double start = to_double(parts[0]);
      const double stop = to_double(parts[1]);
      const double step = to_double(parts[2]);
      if (!(step > 0.0) || stop < start) throw ConfigError("empty or unbounded range '" + item + "'");
      // Index-based stepping avoids accumulating rounding error.
      const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
      for (std::size_t i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
    } else {
      out.push_back(to_double(item));
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

ProtocolKind to_protocol(const std::string& s) {
  if (s == "hopper") return ProtocolKind::kHopper;
  if (s == "sync") return ProtocolKind::kSync;
  throw ConfigError("protocol must be 'hopper' or 'sync', got '" + s + "'");
}

struct Entry {
  std::string value;
  int line = 0;
};

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table{
      {"protocol",
       [](ScenarioConfig& c, const std::string& v) {
         c.protocols.clear();
         for (const auto& p : split(v, ',')) c.protocols.push_back(to_protocol(p));
       }},
      {"n_repeaters", [](ScenarioConfig& c, const std::string& v) { c.n_repeaters = to_u32_list(v); }},
      {"link_length_m", [](ScenarioConfig& c, const std::string& v) { c.link_length_m = to_double(v); }},
      {"cells_per_node",
       [](ScenarioConfig& c, const std::string& v) { c.cells_per_node = to_u32_list(v); }},
      {"n_applications",
       [](ScenarioConfig& c, const std::string& v) { c.n_applications = to_u32_list(v); }},
      {"p_le", [](ScenarioConfig& c, const std::string& v) { c.p_le_grid = to_double_list(v); }},
      {"gamma", [](ScenarioConfig& c, const std::string& v) { c.params.gamma_hz = to_double(v); }},
      {"f_init", [](ScenarioConfig& c, const std::string& v) { c.params.f_init = to_double(v); }},
      {"epsg_rate", [](ScenarioConfig& c, const std::string& v) { c.params.epsg_rate_hz = to_double(v); }},
      {"bsm_success_prob",
       [](ScenarioConfig& c, const std::string& v) { c.params.bsm_success_prob = to_double(v); }},
      {"bsm_duration_s",
       [](ScenarioConfig& c, const std::string& v) {
         c.params.bsm_duration = Duration::from_seconds(to_double(v));
       }},
      {"xz_duration_s",
       [](ScenarioConfig& c, const std::string& v) {
         c.params.xz_duration = Duration::from_seconds(to_double(v));
       }},
      {"signal_speed",
       [](ScenarioConfig& c, const std::string& v) { c.params.signal_speed_mps = to_double(v); }},
      {"composite_decay_multiplier",
       [](ScenarioConfig& c, const std::string& v) {
         c.params.composite_decay_multiplier = to_double(v);
       }},
      {"duration_s", [](ScenarioConfig& c, const std::string& v) { c.duration_s = to_double(v); }},
      {"n_replications",
       [](ScenarioConfig& c, const std::string& v) { c.n_replications = to_u32(v); }},
      {"base_seed", [](ScenarioConfig& c, const std::string& v) { c.base_seed = to_u64(v); }},
      {"slave_resolution",
       [](ScenarioConfig& c, const std::string& v) {
         if (v == "pair-id") {
           c.hopper.resolution = hopper::SlaveResolution::kByPairId;
         } else if (v == "index") {
           c.hopper.resolution = hopper::SlaveResolution::kByIndex;
         } else {
           throw ConfigError("slave_resolution must be 'pair-id' or 'index', got '" + v + "'");
         }
       }},
      {"hold_time_s",
       [](ScenarioConfig& c, const std::string& v) {
         const double s = to_double(v);
         if (s < 0.0) throw ConfigError("hold_time_s must be non-negative");
         c.hopper.hold_time = Duration::from_seconds(s);
       }},
  };
  return table;
}

void apply_regime(ScenarioConfig& c, const std::string& regime) {
  if (regime == "long") {
    c.link_length_m = 5.0e6;
    c.params.gamma_hz = 1.0;
  } else if (regime == "short") {
    c.link_length_m = 5.0;
    c.params.gamma_hz = 0.01;
  } else {
    throw ConfigError("regime must be 'long' or 'short', got '" + regime + "'");
  }
}

// Throws with the line of the key most responsible for the failure.
void validate_keyed(const ScenarioConfig& cfg, const std::map<std::string, Entry, std::less<>>& keys,
                    const std::string& source) {
  auto fail = [&](const std::string& key, const std::string& what) {
    auto it = keys.find(key);
    const std::string where =
        it == keys.end() ? source : source + ":" + std::to_string(it->second.line);
    throw ConfigError(where + ": " + what);
  };
  // PhysicalParams errors start with the parameter name; durations drop the `_s`.
  auto param_key = [](const std::string& what) -> std::string {
    const std::string name = what.substr(0, what.find(' '));
    if (name == "bsm_duration" || name == "xz_duration") return name + "_s";
    return name;
  };
  try {
    cfg.params.validate();
  } catch (const ConfigError& e) {
    fail(param_key(e.what()), e.what());
  }
  if (!(cfg.duration_s > 0.0)) fail("duration_s", "duration_s must be strictly positive");
  if (cfg.n_replications == 0) fail("n_replications", "n_replications must be at least 1");
  if (!(cfg.link_length_m >= 0.0)) fail("link_length_m", "link_length_m must be non-negative");
  if (cfg.protocols.empty()) fail("protocol", "no protocol selected");
  const bool has_sync =
      std::find(cfg.protocols.begin(), cfg.protocols.end(), ProtocolKind::kSync) != cfg.protocols.end();
  if (has_sync) {
    for (double p : cfg.p_le_grid) {
      if (!(p > 0.0 && p < 1.0)) fail("p_le", "p_le values must lie strictly inside (0, 1)");
    }
  }
  for (std::uint32_t r : cfg.n_repeaters) {
    for (std::uint32_t q : cfg.cells_per_node) {
      try {
        (void)build_chain(r, cfg.link_length_m, q, cfg.params);
      } catch (const ConfigError& e) {
        fail("cells_per_node", std::string("infeasible memory split: ") + e.what());
      }
    }
  }
}

}  // namespace

ScenarioConfig parse_config(std::istream& in, const std::string& source) {
  std::map<std::string, Entry, std::less<>> keys;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key != "regime" && setters().find(key) == setters().end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
    if (value.empty()) throw ConfigError(where + ": missing value for '" + key + "'");
    if (!keys.emplace(key, Entry{value, line_no}).second) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }
  }

  ScenarioConfig cfg;
  if (auto it = keys.find("regime"); it != keys.end()) {
    try {
      apply_regime(cfg, it->second.value);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(it->second.line) + ": " + e.what());
    }
  }
  for (const auto& [key, entry] : keys) {
    if (key == "regime") continue;
    try {
      setters().at(key)(cfg, entry.value);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(entry.line) + ": " + e.what());
    }
  }
  validate_keyed(cfg, keys, source);
  return cfg;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_config(in, path.string());
}

void validate(const ScenarioConfig& cfg) { validate_keyed(cfg, {}, "<config>"); }

std::string default_config_text() {
  return R"(# qchain scenario defaults
protocol = hopper              # hopper | sync | hopper,sync
regime = long                  # long: 5e6 m links, gamma 1 Hz; short: 5 m links, gamma 0.01 Hz
n_repeaters = 3                # list or start:stop:step
link_length_m = 5e6
cells_per_node = 50            # list or start:stop:step
n_applications = 1             # list or start:stop:step (hopper only)
p_le = 0.5                     # sync local-entanglement probability grid
gamma = 1                      # decay rate, Hz
f_init = 0.95
epsg_rate = 100                # pairs per second per link
bsm_success_prob = 0.95
bsm_duration_s = 0.001
xz_duration_s = 0.001
signal_speed = 3e8             # m/s; 2e8 for fibre
composite_decay_multiplier = 1
duration_s = 60
n_replications = 10
base_seed = 1
slave_resolution = pair-id     # pair-id | index
hold_time_s = 0
)";
}

}  // namespace qchain
