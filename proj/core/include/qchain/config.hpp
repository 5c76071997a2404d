#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "qchain/hopper.hpp"
#include "qchain/runtime.hpp"
#include "qchain/types.hpp"

namespace qchain {

/// A full experiment: one topology family, the sweep grid and the seeding.
///
/// File format: one `key = value` per line, `#` starts a comment. Sweep keys
/// accept comma lists (`10, 20, 30`) and inclusive ranges (`10:150:10`).
/// `regime = long|short` presets link length and decay rate; explicit keys
/// override the preset wherever they appear in the file.
struct ScenarioConfig {
  std::vector<ProtocolKind> protocols{ProtocolKind::kHopper};
  std::vector<std::uint32_t> n_repeaters{3};
  double link_length_m = 5.0e6;
  std::vector<std::uint32_t> cells_per_node{50};
  std::vector<std::uint32_t> n_applications{1};
  std::vector<double> p_le_grid{0.5};
  PhysicalParams params;
  double duration_s = 60.0;
  std::uint32_t n_replications = 10;
  std::uint64_t base_seed = 1;
  hopper::Options hopper;
};

/// Parses and validates; throws ConfigError carrying `<source>:<line>: ...`.
ScenarioConfig parse_config(std::istream& in, const std::string& source = "<config>");
ScenarioConfig parse_config(const std::filesystem::path& path);

/// Checks value ranges and that every memory split in the grid is feasible.
void validate(const ScenarioConfig& cfg);

/// Documented defaults in the config file syntax.
std::string default_config_text();

}  // namespace qchain
