#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

#include "qchain/config.hpp"
#include "qchain/runtime.hpp"

namespace qchain {

/// One combination of the sweep grid.
struct GridPoint {
  std::uint32_t index = 0;
  ProtocolKind protocol = ProtocolKind::kHopper;
  std::uint32_t n_repeaters = 0;
  std::uint32_t cells_per_node = 0;
  std::uint32_t n_applications = 0;  ///< 0 for sync.
  double p_le = 0.0;                 ///< NaN for hopper.
};

/// Grid order: protocol, n_repeaters, cells_per_node, then n_applications
/// (hopper) or p_le (sync). Indices are dense in that order.
std::vector<GridPoint> enumerate_grid(const ScenarioConfig& cfg);

ReplicationSpec make_spec(const ScenarioConfig& cfg, const GridPoint& g, std::uint32_t replication);

struct ExperimentOptions {
  std::filesystem::path out_dir;  ///< Empty: no per-replication files.
  bool trace = false;             ///< Engine trace to out/trace/g<g>_r<r>.tsv
  bool dump_messages = false;     ///< Protocol dump to out/messages/g<g>_r<r>.tsv
  unsigned jobs = 0;              ///< 0: hardware concurrency.
};

struct ExperimentResult {
  std::vector<GridPoint> grid;
  std::vector<std::vector<RunMetrics>> runs;  ///< runs[g][r]
  std::vector<std::vector<std::uint64_t>> seeds;
};

/// Runs every grid point and replication. Failures name the grid point and seed.
ExperimentResult run_experiment(const ScenarioConfig& cfg, const ExperimentOptions& opts = {});

/// One row per (grid point, replication).
void write_replications_csv(std::ostream& out, const ScenarioConfig& cfg, const ExperimentResult& r);

/// One row per grid point with `_mean` and `_ci95` columns; sync rows carry
/// the best p_le of their (n_repeaters, cells_per_node) group.
void write_aggregated_csv(std::ostream& out, const ScenarioConfig& cfg, const ExperimentResult& r);

/// Writes replications.csv and aggregated.csv into `dir`.
void write_csv_files(const std::filesystem::path& dir, const ScenarioConfig& cfg,
                     const ExperimentResult& r);

}  // namespace qchain
