#include "qchain/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include "qchain/rng.hpp"

namespace qchain {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Column {
  const char* name;
  bool integral;
  std::function<double(const RunMetrics&)> get;
};

const std::vector<Column>& metric_columns() {
  static const std::vector<Column> cols{
      {"throughput", false, [](const RunMetrics& m) { return m.throughput; }},
      {"attempts", true, [](const RunMetrics& m) { return static_cast<double>(m.attempts); }},
      {"successes", true, [](const RunMetrics& m) { return static_cast<double>(m.successes); }},
      {"failures_bsm", true, [](const RunMetrics& m) { return static_cast<double>(m.failures_bsm); }},
      {"failures_stale", true, [](const RunMetrics& m) { return static_cast<double>(m.failures_stale); }},
      {"failures_le", true, [](const RunMetrics& m) { return static_cast<double>(m.failures_le); }},
      {"abandoned", true, [](const RunMetrics& m) { return static_cast<double>(m.abandoned); }},
      {"fidelity_mean", false, [](const RunMetrics& m) { return m.fidelity_mean; }},
      {"fidelity_min", false, [](const RunMetrics& m) { return m.fidelity_min; }},
      {"below_entanglement", true,
       [](const RunMetrics& m) { return static_cast<double>(m.below_entanglement); }},
      {"generated", true, [](const RunMetrics& m) { return static_cast<double>(m.generated); }},
      {"stored", true, [](const RunMetrics& m) { return static_cast<double>(m.stored); }},
      {"overwritten", true, [](const RunMetrics& m) { return static_cast<double>(m.overwritten); }},
      {"dropped", true, [](const RunMetrics& m) { return static_cast<double>(m.dropped); }},
      {"wait_mean_s", false, [](const RunMetrics& m) { return m.wait_mean_s; }},
      {"wait_max_s", false, [](const RunMetrics& m) { return m.wait_max_s; }},
      {"attempts_per_success", false, [](const RunMetrics& m) { return m.attempts_per_success; }},
      {"orphan_used", true, [](const RunMetrics& m) { return static_cast<double>(m.orphan_used); }},
      {"duplicate_consumption", true,
       [](const RunMetrics& m) { return static_cast<double>(m.duplicate_consumption); }},
      {"live_after_drain", true,
       [](const RunMetrics& m) { return static_cast<double>(m.live_after_drain); }},
  };
  return cols;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string integral(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(v));
  return buf;
}

void write_keys(std::ostream& out, const ScenarioConfig& cfg, const GridPoint& g) {
  out << g.index << ',' << to_string(g.protocol) << ',' << g.n_repeaters << ','
      << num(cfg.link_length_m) << ',' << g.cells_per_node << ',' << g.n_applications << ','
      << num(g.p_le);
}

constexpr const char* kKeyHeader =
    "grid_index,protocol,n_repeaters,link_length_m,cells_per_node,n_applications,p_le";

std::string run_label(const GridPoint& g, std::uint32_t r, std::uint64_t seed) {
  return "grid point " + std::to_string(g.index) + " replication " + std::to_string(r) +
         " seed " + std::to_string(seed);
}

}  // namespace

std::vector<GridPoint> enumerate_grid(const ScenarioConfig& cfg) {
  std::vector<GridPoint> grid;
  for (ProtocolKind p : cfg.protocols) {
    for (std::uint32_t r : cfg.n_repeaters) {
      for (std::uint32_t q : cfg.cells_per_node) {
        if (p == ProtocolKind::kHopper) {
          for (std::uint32_t a : cfg.n_applications) grid.push_back({0, p, r, q, a, kNaN});
        } else {
          for (double pl : cfg.p_le_grid) grid.push_back({0, p, r, q, 0, pl});
        }
      }
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i].index = static_cast<std::uint32_t>(i);
  return grid;
}

ReplicationSpec make_spec(const ScenarioConfig& cfg, const GridPoint& g, std::uint32_t replication) {
  ReplicationSpec s;
  s.protocol = g.protocol;
  s.n_repeaters = g.n_repeaters;
  s.link_length_m = cfg.link_length_m;
  s.cells_per_node = g.cells_per_node;
  s.n_applications = g.n_applications;
  s.p_le = g.protocol == ProtocolKind::kSync ? g.p_le : 0.5;
  s.params = cfg.params;
  s.duration = Duration::from_seconds(cfg.duration_s);
  s.seed = derive_seed(cfg.base_seed, g.index, replication);
  s.hopper = cfg.hopper;
  return s;
}

ExperimentResult run_experiment(const ScenarioConfig& cfg, const ExperimentOptions& opts) {
  ExperimentResult res;
  res.grid = enumerate_grid(cfg);
  const std::size_t reps = cfg.n_replications;
  res.runs.assign(res.grid.size(), std::vector<RunMetrics>(reps));
  res.seeds.assign(res.grid.size(), std::vector<std::uint64_t>(reps));

  if (!opts.out_dir.empty()) {
    if (opts.trace) std::filesystem::create_directories(opts.out_dir / "trace");
    if (opts.dump_messages) std::filesystem::create_directories(opts.out_dir / "messages");
  }

  const std::size_t total = res.grid.size() * reps;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::string first_error;

  auto worker = [&] {
    for (std::size_t job = next++; job < total && !failed; job = next++) {
      const GridPoint& g = res.grid[job / reps];
      const auto r = static_cast<std::uint32_t>(job % reps);
      const ReplicationSpec spec = make_spec(cfg, g, r);
      res.seeds[g.index][r] = spec.seed;
      violation_context = run_label(g, r, spec.seed);
      try {
        std::ofstream trace_file;
        std::ofstream msg_file;
        TraceSinks sinks;
        const std::string stem = "g" + std::to_string(g.index) + "_r" + std::to_string(r) + ".tsv";
        if (opts.trace && !opts.out_dir.empty()) {
          trace_file.open(opts.out_dir / "trace" / stem);
          sinks.engine_trace = &trace_file;
        }
        if (opts.dump_messages && !opts.out_dir.empty()) {
          msg_file.open(opts.out_dir / "messages" / stem);
          sinks.message_dump = &msg_file;
        }
        res.runs[g.index][r] = run_replication(spec, sinks);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (!failed.exchange(true)) first_error = run_label(g, r, spec.seed) + ": " + e.what();
      }
      violation_context.clear();
    }
  };

  unsigned jobs = opts.jobs != 0 ? opts.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(total, 1)));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }
  if (failed) throw std::runtime_error("replication failed: " + first_error);
  return res;
}

void write_replications_csv(std::ostream& out, const ScenarioConfig& cfg, const ExperimentResult& r) {
  out << kKeyHeader << ",replication,seed";
  for (const auto& c : metric_columns()) out << ',' << c.name;
  out << '\n';
  for (const GridPoint& g : r.grid) {
    for (std::size_t rep = 0; rep < r.runs[g.index].size(); ++rep) {
      const RunMetrics& m = r.runs[g.index][rep];
      write_keys(out, cfg, g);
      out << ',' << rep << ',' << r.seeds[g.index][rep];
      for (const auto& c : metric_columns()) {
        const double v = c.get(m);
        out << ',' << (c.integral ? integral(v) : num(v));
      }
      out << '\n';
    }
  }
}

void write_aggregated_csv(std::ostream& out, const ScenarioConfig& cfg, const ExperimentResult& r) {
  const auto& cols = metric_columns();
  // summaries[g][c]
  std::vector<std::vector<Summary>> summaries(r.grid.size());
  for (const GridPoint& g : r.grid) {
    for (const auto& c : cols) {
      std::vector<double> vals;
      for (const RunMetrics& m : r.runs[g.index]) {
        const double v = c.get(m);
        if (!std::isnan(v)) vals.push_back(v);
      }
      summaries[g.index].push_back(aggregate(vals));
    }
  }

  // Best p_le per (n_repeaters, cells_per_node) by mean throughput; ties keep the lower p.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> best;
  for (const GridPoint& g : r.grid) {
    if (g.protocol != ProtocolKind::kSync) continue;
    const auto key = std::make_pair(g.n_repeaters, g.cells_per_node);
    auto it = best.find(key);
    if (it == best.end() || summaries[g.index][0].mean > summaries[it->second][0].mean) {
      best[key] = g.index;
    }
  }

  out << kKeyHeader << ",replications";
  for (const auto& c : cols) out << ',' << c.name << "_mean," << c.name << "_ci95";
  out << ",best_p_le,best_p_throughput_mean,is_best_p\n";
  for (const GridPoint& g : r.grid) {
    write_keys(out, cfg, g);
    out << ',' << r.runs[g.index].size();
    for (const Summary& s : summaries[g.index]) {
      out << ',' << num(s.mean) << ',' << num(s.ci95.value_or(kNaN));
    }
    if (g.protocol == ProtocolKind::kSync) {
      const std::uint32_t b = best.at({g.n_repeaters, g.cells_per_node});
      out << ',' << num(r.grid[b].p_le) << ',' << num(summaries[b][0].mean) << ','
          << (b == g.index ? 1 : 0) << '\n';
    } else {
      out << ",nan,nan,0\n";
    }
  }
}

void write_csv_files(const std::filesystem::path& dir, const ScenarioConfig& cfg,
                     const ExperimentResult& r) {
  std::filesystem::create_directories(dir);
  std::ofstream reps(dir / "replications.csv");
  std::ofstream agg(dir / "aggregated.csv");
  if (!reps || !agg) throw std::runtime_error("cannot write CSV files in " + dir.string());
  write_replications_csv(reps, cfg, r);
  write_aggregated_csv(agg, cfg, r);
}

}  // namespace qchain
