#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

#include "qchain/config.hpp"
#include "qchain/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Entanglement distribution over repeater chains: HOPPER and SYNC"};
  std::string config_path;
  std::string out_dir = "out";
  bool trace = false;
  bool dump_messages = false;
  bool list_defaults = false;
  unsigned jobs = 0;
  app.add_option("--config", config_path, "Scenario file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_flag("--trace", trace, "Write the engine dispatch trace of every replication");
  app.add_flag("--dump-messages", dump_messages, "Write every protocol message of every replication");
  app.add_flag("--list-defaults", list_defaults, "Print the default scenario and exit");
  app.add_option("-j,--jobs", jobs, "Worker threads (0: all cores)")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  if (list_defaults) {
    std::cout << qchain::default_config_text();
    return 0;
  }
  if (config_path.empty()) {
    std::cerr << "qchain: --config is required (see --list-defaults)\n";
    return 2;
  }

  try {
    const qchain::ScenarioConfig cfg = qchain::parse_config(std::filesystem::path(config_path));
    qchain::ExperimentOptions opts;
    opts.out_dir = out_dir;
    opts.trace = trace;
    opts.dump_messages = dump_messages;
    opts.jobs = jobs;
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = qchain::run_experiment(cfg, opts);
    qchain::write_csv_files(out_dir, cfg, result);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "qchain: %zu grid points x %u replications in %.1f s -> %s\n",
                 result.grid.size(), cfg.n_replications, wall, out_dir.c_str());
  } catch (const qchain::ConfigError& e) {
    std::cerr << "qchain: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "qchain: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
