// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Trend criteria run the committed figure configs under configs/.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracle.hpp"
#include "../support/scripted.hpp"
#include "qchain/config.hpp"
#include "qchain/experiment.hpp"
#include "qchain/fidelity.hpp"
#include "qchain/runtime.hpp"
#include "qchain/sync.hpp"

namespace fs = std::filesystem;
using namespace qchain;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back(what);
    }
  }
};

int g_failures = 0;

void report(const std::string& name, const Verdict& v, const std::string& summary) {
  std::printf("%s  %-28s %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), summary.c_str());
  for (const auto& n : v.notes) std::printf("      - %s\n", n.c_str());
  std::fflush(stdout);
  if (!v.pass) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------------------

void fidelity_formulas() {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  RngStream rng(20240601);
  double worst = 0.0;
  double worst_semigroup = 0.0;
  int asym = 0;
  for (int i = 0; i < 1000; ++i) {
    const double f1 = 0.25 + 0.75 * rng.uniform();
    const double f2 = 0.25 + 0.75 * rng.uniform();
    const double g = 0.001 + 5.0 * rng.uniform();
    const double a = 3.0 * rng.uniform();
    const double b = 3.0 * rng.uniform();
    worst = std::max(worst, oracle::rel_err(dephase(Fidelity{f1}, g, a).value(), oracle::dephase(f1, g, a)));
    worst = std::max(worst, oracle::rel_err(swap_fidelity(Fidelity{f1}, Fidelity{f2}).value(),
                                            oracle::swap(f1, f2)));
    worst_semigroup =
        std::max(worst_semigroup, std::abs(dephase(Fidelity{f1}, g, a + b).value() -
                                           dephase(dephase(Fidelity{f1}, g, a), g, b).value()));
    if (swap_fidelity(Fidelity{f1}, Fidelity{f2}).value() !=
        swap_fidelity(Fidelity{f2}, Fidelity{f1}).value()) {
      ++asym;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.check(worst <= 1e-12, fmt("max relative error %.3g > 1e-12", worst));
  v.check(worst_semigroup <= 1e-12, fmt("semigroup deviation %.3g > 1e-12", worst_semigroup));
  v.check(asym == 0, fmt("%g asymmetric swap results", asym));
  v.check(secs < 1.0, fmt("took %.3f s", secs));
  report("fidelity-formulas", v,
         fmt("max rel err %.2g, semigroup %.2g, asymmetric %g, %.3f s", worst, worst_semigroup, asym, secs));
}

// ---------------------------------------------------------------------------

struct FsmCase {
  std::uint32_t repeaters;
  std::uint32_t cells;
  std::uint32_t apps;
  double length_m;
  double gamma;
  double p_bsm;
  hopper::SlaveResolution resolution;
  std::uint64_t seed;
};

// One 60 s hopper replication with every arrival and delivery observed.
void fsm_replication(const FsmCase& fc, Verdict& v) {
  PhysicalParams params;
  params.gamma_hz = fc.gamma;
  params.bsm_success_prob = fc.p_bsm;
  hopper::Options opts;
  opts.resolution = fc.resolution;
  testing::ScriptedChain c(fc.repeaters, fc.length_m, fc.cells, params, opts, fc.seed);
  const std::string tag = "seed " + std::to_string(fc.seed) + ": ";

  struct Arrival {
    LinkId link;
    std::uint64_t seq;
  };
  std::vector<Arrival> arrivals;
  std::map<std::pair<std::uint32_t, int>, LinkCounters> seen;  // (link, side)
  bool overwrite_order_ok = true;
  c.epsg.set_absorb_hook([&](NodeId n, LinkId l, const AbsorbOutcome& o) {
    const Link& link = c.topo.link(l);
    const int side = n == link.upstream ? 0 : 1;
    LinkCounters& k = seen[{to_index(l), side}];
    ++k.generated;
    const std::uint64_t seq = c.epsg.pair_counter(l);
    switch (o.kind) {
      case AbsorbOutcome::Kind::kStored: ++k.stored; break;
      case AbsorbOutcome::Kind::kOverwrote:
        ++k.overwritten;
        overwrite_order_ok = overwrite_order_ok && o.old_pair_seq != 0 && o.old_pair_seq < seq;
        break;
      case AbsorbOutcome::Kind::kDropped: ++k.dropped; break;
    }
    if (side == 0) arrivals.push_back({l, seq});
    c.protocol.on_absorbed(n, l, o);
  });

  std::uint64_t completed = 0;
  bool running = true;
  c.protocol.set_listener(hopper::Listener{
      [&](const hopper::EbitAttempt& a) { c.delivered.push_back(a); },
      [&](const hopper::EbitAttempt& a) {
        ++completed;
        if (running) c.protocol.request(c.app(a.app_id));
      }});

  c.epsg.start();
  for (std::uint32_t i = 0; i < fc.apps; ++i) c.protocol.request(c.app(i));
  c.engine.run_until(SimTime::from_seconds(60.0));
  running = false;
  c.epsg.stop();
  c.protocol.begin_drain();
  c.engine.run_to_completion();

  // Conservation, counted independently of the driver.
  for (const Link& l : c.topo.links()) {
    for (int side : {0, 1}) {
      const LinkCounters& mine = seen[{to_index(l.id), side}];
      const LinkCounters& theirs = c.epsg.counters(l.id, side == 0 ? Role::kMaster : Role::kSlave);
      const std::uint64_t gen = c.epsg.pair_counter(l.id);
      v.check(mine.generated == gen && mine.stored + mine.overwritten + mine.dropped == gen,
              tag + "conservation broken on link " + std::to_string(to_index(l.id)));
      v.check(mine.stored == theirs.stored && mine.overwritten == theirs.overwritten &&
                  mine.dropped == theirs.dropped,
              tag + "driver counters disagree with observed outcomes");
    }
  }
  v.check(overwrite_order_ok, tag + "an overwrite did not replace an older pair");

  // Nothing left locked and nothing left running.
  v.check(c.memory.used_count() == 0, tag + std::to_string(c.memory.used_count()) + " orphan Used cells");
  v.check(c.protocol.live_attempts() == 0, tag + "attempts still live after drain");

  // At-most-once consumption.
  std::set<std::pair<std::uint32_t, std::uint64_t>> consumed;
  bool unique = true;
  for (const auto& a : c.delivered) {
    for (const auto& h : a.timeline) unique = consumed.insert({to_index(h.link), h.pair_seq}).second && unique;
  }
  v.check(unique && c.protocol.stats().duplicate_consumption == 0, tag + "a pair was consumed twice");

  // Accounting.
  const auto& s = c.protocol.stats();
  v.check(s.successes + s.failures_bsm + s.failures_stale + s.abandoned == s.attempts,
          tag + "attempt accounting does not balance");
  v.check(completed == s.successes, tag + "applications completed != successes");

  // Mirror consistency: replay the arrivals on untouched memories.
  QuantumMemory replay(c.topo);
  bool mirrored = true;
  for (const Arrival& a : arrivals) {
    const Link& l = c.topo.link(a.link);
    const StoredHalf h{a.seq, SimTime{}, Fidelity{params.f_init}};
    const auto up = replay.absorb(l.upstream, a.link, h);
    const auto down = replay.absorb(l.downstream, a.link, h);
    const CellRef m{l.upstream, up.cell};
    mirrored = mirrored && up.kind == down.kind && c.topo.mirror(m) == CellRef{l.downstream, down.cell} &&
               replay.cell(m).half->pair_seq == replay.cell(*c.topo.mirror(m)).half->pair_seq;
  }
  v.check(mirrored, tag + "mirrored cells diverged under lock-free replay");
}

void fsm_properties() {
  Verdict v;
  RngStream rng(777);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 100; ++i) {
    FsmCase fc;
    fc.repeaters = 1 + rng.uniform_below(5);
    fc.cells = 2 + rng.uniform_below(80);
    fc.apps = 1 + rng.uniform_below(40);
    const bool long_regime = rng.bernoulli(0.5);
    fc.length_m = long_regime ? 5.0e6 : 5.0;
    fc.gamma = long_regime ? 1.0 : 0.01;
    fc.p_bsm = rng.bernoulli(0.5) ? 0.95 : 0.5 + 0.5 * rng.uniform();
    fc.resolution = rng.bernoulli(0.8) ? hopper::SlaveResolution::kByPairId : hopper::SlaveResolution::kByIndex;
    fc.seed = rng.next_u64();
    if (fc.repeaters + 1 > fc.cells) fc.cells = fc.repeaters + 1;
    fsm_replication(fc, v);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report("fsm-properties", v, fmt("100 randomized 60 s replications, %.1f s", secs));
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(const fs::path& configs) {
  Verdict v;
  ScenarioConfig cfg = parse_config(configs / "fig8.conf");
  cfg.cells_per_node = {6, 50};
  cfg.p_le_grid = {0.5, 0.9};
  cfg.n_replications = 2;
  const fs::path root = fs::temp_directory_path() / "qchain_determinism";
  fs::remove_all(root);
  std::size_t files = 0;
  std::uintmax_t bytes = 0;
  for (const char* run : {"a", "b"}) {
    ExperimentOptions opts{root / run, true, true, run[0] == 'a' ? 1u : 4u};
    write_csv_files(root / run, cfg, run_experiment(cfg, opts));
  }
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "a");
    const std::string a = slurp(e.path());
    ++files;
    bytes += a.size();
    v.check(!a.empty() || rel.string().find("messages") != std::string::npos, rel.string() + " is empty");
    v.check(a == slurp(root / "b" / rel), rel.string() + " differs between runs");
  }
  v.check(files > 2, "no trace files written");
  fs::remove_all(root);
  report("determinism", v,
         fmt("%g files, %.1f MB byte-identical (serial vs parallel)", static_cast<double>(files),
             static_cast<double>(bytes) / 1e6));
}

// ---------------------------------------------------------------------------

void sync_oracle() {
  Verdict v;
  const PhysicalParams p;
  std::string summary;
  for (auto [links, reps] : {std::pair{2u, 1u}, std::pair{4u, 3u}}) {
    sync::SlotConfig s;
    s.p_le = 0.6;
    s.links = links;
    s.repeaters = reps;
    s.lanes = 1;
    s.t_le = sync::derive_phase_duration(s.p_le, p.epsg_rate_hz, 1);
    s.t_slot = s.t_le + p.bsm_duration + p.xz_duration;
    RngStream rng(links * 1000 + reps);
    constexpr int kSlots = 20'000;
    int ok = 0;
    for (int i = 0; i < kSlots; ++i) ok += sync::run_slot(s, p, rng, SimTime{})[0].success();
    const double want = oracle::lane_success(s.p_le, links, p.bsm_success_prob, reps);
    const double se = std::sqrt(want * (1.0 - want) / kSlots);
    const double got = static_cast<double>(ok) / kSlots;
    const double z = (got - want) / se;
    v.check(std::abs(z) <= 3.0, fmt("(L=%g, R=%g): %.3g standard errors", links, reps, z));
    summary += fmt("(L=%g,R=%g) %.4f vs %.4f", links, reps, got, want) + fmt(" z=%+.2f; ", z);
  }
  report("sync-oracle", v, summary + "over 20000 slots each");
}

// ---------------------------------------------------------------------------

struct Point {
  GridPoint g;
  Summary thr;
  Summary fid;
};

std::vector<Point> summarize(const ExperimentResult& r) {
  std::vector<Point> out;
  for (const GridPoint& g : r.grid) {
    std::vector<double> thr;
    std::vector<double> fid;
    for (const RunMetrics& m : r.runs[g.index]) {
      thr.push_back(m.throughput);
      if (!std::isnan(m.fidelity_mean)) fid.push_back(m.fidelity_mean);
    }
    out.push_back({g, aggregate(thr), aggregate(fid)});
  }
  return out;
}

double ci(const Summary& s) { return s.ci95.value_or(0.0); }

bool overlap(const Summary& a, const Summary& b) {
  return a.mean - ci(a) <= b.mean + ci(b) && b.mean - ci(b) <= a.mean + ci(a);
}

// Next point is not above the previous one beyond their confidence intervals.
bool not_increasing(const Summary& prev, const Summary& next) {
  return next.mean - ci(next) <= prev.mean + ci(prev);
}

/// HOPPER curve for `apps` applications in grid order.
std::vector<Point> hopper_curve(const std::vector<Point>& pts, std::uint32_t apps) {
  std::vector<Point> c;
  for (const auto& p : pts) {
    if (p.g.protocol == ProtocolKind::kHopper && p.g.n_applications == apps) c.push_back(p);
  }
  return c;
}

/// SYNC at its best p_le for every memory size.
std::vector<Point> sync_best(const std::vector<Point>& pts) {
  std::map<std::uint32_t, Point> best;
  for (const auto& p : pts) {
    if (p.g.protocol != ProtocolKind::kSync) continue;
    auto it = best.find(p.g.cells_per_node);
    if (it == best.end() || p.thr.mean > it->second.thr.mean) best.insert_or_assign(p.g.cells_per_node, p);
  }
  std::vector<Point> c;
  for (auto& [q, p] : best) c.push_back(p);
  return c;
}

const Point& at_cells(const std::vector<Point>& curve, std::uint32_t q) {
  for (const auto& p : curve) {
    if (p.g.cells_per_node == q) return p;
  }
  throw std::runtime_error("memory size " + std::to_string(q) + " missing from the sweep");
}

ExperimentResult run_figure(const fs::path& configs, const char* name) {
  return run_experiment(parse_config(configs / name));
}

constexpr double kPlateau = 84.0;
constexpr double kPlateauLo = kPlateau * 0.9;
constexpr double kPlateauHi = kPlateau * 1.1;

void hopper_memory_sweep(const fs::path& configs) {
  Verdict v;
  const auto pts = summarize(run_figure(configs, "fig7.conf"));
  const auto h1 = hopper_curve(pts, 1);
  const auto h30 = hopper_curve(pts, 30);
  const auto h40 = hopper_curve(pts, 40);
  const auto h50 = hopper_curve(pts, 50);

  double plateau_min = 1e9;
  double plateau_max = 0.0;
  for (const auto& p : h30) {
    if (p.g.cells_per_node < 50) continue;
    plateau_min = std::min(plateau_min, p.thr.mean);
    plateau_max = std::max(plateau_max, p.thr.mean);
    v.check(p.thr.mean >= kPlateauLo && p.thr.mean <= kPlateauHi,
            fmt("30 apps, Q=%g: %.2f outside [%.1f, %.1f]", p.g.cells_per_node, p.thr.mean, kPlateauLo, kPlateauHi));
  }

  double h1_max = 0.0;
  for (const auto& p : h1) h1_max = std::max(h1_max, p.thr.mean);
  const double h1_20 = at_cells(h1, 20).thr.mean;
  v.check(h1_20 >= 0.9 * h1_max, fmt("1 app: Q=20 gives %.2f, below 90%% of its maximum %.2f", h1_20, h1_max));

  int overlaps = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < h30.size(); ++i) {
    const Summary* s[] = {&h30[i].thr, &h40[i].thr, &h50[i].thr};
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        ++pairs;
        if (overlap(*s[a], *s[b])) {
          ++overlaps;
        } else {
          v.check(false, fmt("Q=%g: %g vs %g applications do not overlap (%.2f+-%.2f vs %.2f+-%.2f)",
                             h30[i].g.cells_per_node, 30 + 10 * a, 30 + 10 * b) +
                             fmt(" (%.2f+-%.2f vs %.2f+-%.2f)", s[a]->mean, ci(*s[a]), s[b]->mean, ci(*s[b])));
        }
      }
    }
  }
  report("hopper-memory-sweep", v,
         fmt("30-app plateau %.1f..%.1f ebits/s; 1 app at Q=20 %.2f of max %.2f; ", plateau_min,
             plateau_max, h1_20, h1_max) +
             fmt("30/40/50 overlap %g/%g", overlaps, pairs));
}

void sync_vs_hopper_long(const fs::path& configs) {
  Verdict v;
  const auto pts = summarize(run_figure(configs, "fig8.conf"));
  const auto h10 = hopper_curve(pts, 10);
  const auto h30 = hopper_curve(pts, 30);
  const auto sy = sync_best(pts);

  double sync_max = 0.0;
  for (const auto& p : sy) sync_max = std::max(sync_max, p.thr.mean);
  v.check(sync_max >= 15.0 && sync_max <= 25.0, fmt("SYNC best-p maximum %.2f outside [15, 25]", sync_max));

  for (std::size_t i = 0; i < h30.size(); ++i) {
    const std::uint32_t q = h30[i].g.cells_per_node;
    const Point& s = at_cells(sy, q);
    if (q <= 10) continue;
    v.check(h30[i].thr.mean + ci(h30[i].thr) >= h10[i].thr.mean - ci(h10[i].thr),
            fmt("Q=%g: HOPPER 30 apps %.2f below 10 apps %.2f", q, h30[i].thr.mean, h10[i].thr.mean));
    if (q >= 50) {
      v.check(h30[i].thr.mean - ci(h30[i].thr) > h10[i].thr.mean + ci(h10[i].thr),
              fmt("Q=%g: HOPPER 30 apps %.2f not above 10 apps %.2f", q, h30[i].thr.mean, h10[i].thr.mean));
    }
    v.check(h10[i].thr.mean >= s.thr.mean,
            fmt("Q=%g: HOPPER 10 apps %.2f below SYNC %.2f", q, h10[i].thr.mean, s.thr.mean));
  }

  const double plateau = h30.back().thr.mean;
  const double vanishing = h30.front().thr.mean;
  const double recovered = at_cells(h30, 20).thr.mean;
  v.check(vanishing <= 0.05 * plateau,
          fmt("HOPPER at Q=%g gives %.3f, not vanishing against %.2f", h30.front().g.cells_per_node, vanishing, plateau));
  v.check(recovered >= 0.5 * plateau, fmt("HOPPER at Q=20 gives %.2f, under half of %.2f", recovered, plateau));

  // Fidelity: HOPPER curves from the first memory size where they deliver steadily.
  auto check_fidelity = [&](const std::vector<Point>& curve, const char* name, std::uint32_t q_from) {
    std::vector<Point> c;
    for (const auto& p : curve) {
      if (p.g.cells_per_node >= q_from) c.push_back(p);
    }
    for (std::size_t i = 1; i < c.size(); ++i) {
      v.check(not_increasing(c[i - 1].fid, c[i].fid),
              std::string(name) + fmt(" fidelity rises from Q=%g (%.4f) to Q=%g (%.4f)", c[i - 1].g.cells_per_node,
                                      c[i - 1].fid.mean, c[i].g.cells_per_node, c[i].fid.mean));
    }
    v.check(c.back().fid.mean < c.front().fid.mean, std::string(name) + " fidelity does not decrease overall");
    return c.front().fid.mean - c.back().fid.mean;
  };
  const double d10 = check_fidelity(h10, "HOPPER-10", 10);
  const double d30 = check_fidelity(h30, "HOPPER-30", 10);
  const double ds = check_fidelity(sy, "SYNC", 10);
  v.check(ds > d10 && ds > d30, fmt("SYNC fidelity drop %.4f not the largest (%.4f, %.4f)", ds, d10, d30));
  for (std::size_t i = 0; i < h30.size(); ++i) {
    const std::uint32_t q = h30[i].g.cells_per_node;
    if (q < 10) continue;
    const double fs_q = at_cells(sy, q).fid.mean;
    v.check(h10[i].fid.mean >= fs_q && h30[i].fid.mean >= fs_q,
            fmt("Q=%g: SYNC fidelity %.4f above HOPPER (%.4f, %.4f)", q, fs_q, h10[i].fid.mean, h30[i].fid.mean));
  }
  report("sync-vs-hopper-long", v,
         fmt("SYNC max %.1f; HOPPER-30 %.3f at Q=2, %.1f at Q=20, %.1f at Q=150; ", sync_max, vanishing,
             recovered, plateau) +
             fmt("fidelity drop SYNC %.3f, HOPPER-10 %.3f, HOPPER-30 %.3f", ds, d10, d30));
}

void hopper_path_length(const fs::path& configs) {
  Verdict v;
  auto pts = summarize(run_figure(configs, "fig9.conf"));
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.g.n_repeaters < b.g.n_repeaters; });
  for (std::size_t i = 1; i < pts.size(); ++i) {
    v.check(not_increasing(pts[i - 1].thr, pts[i].thr),
            fmt("throughput rises from %g to %g repeaters", pts[i - 1].g.n_repeaters, pts[i].g.n_repeaters));
    v.check(not_increasing(pts[i - 1].fid, pts[i].fid),
            fmt("fidelity rises from %g to %g repeaters", pts[i - 1].g.n_repeaters, pts[i].g.n_repeaters));
  }
  // Geometric decay fitted on the first step must not outrun the measured curve.
  const double r1 = pts[1].thr.mean / pts[0].thr.mean;
  std::string ratios;
  for (std::size_t i = 2; i < pts.size(); ++i) {
    const double geometric = pts[0].thr.mean * std::pow(r1, static_cast<double>(i));
    v.check(pts[i].thr.mean + ci(pts[i].thr) >= geometric,
            fmt("%g repeaters: %.2f+-%.2f below geometric extrapolation %.2f", pts[i].g.n_repeaters, pts[i].thr.mean,
                ci(pts[i].thr), geometric));
  }
  for (std::size_t i = 1; i < pts.size(); ++i) ratios += fmt("%.3f ", pts[i].thr.mean / pts[i - 1].thr.mean);
  report("hopper-path-length", v,
         fmt("throughput %.1f -> %.1f, fidelity %.3f -> %.3f; ", pts.front().thr.mean, pts.back().thr.mean,
             pts.front().fid.mean, pts.back().fid.mean) +
             "step ratios " + ratios);
}

void short_distance(const fs::path& configs) {
  Verdict v;
  const auto pts = summarize(run_figure(configs, "fig10.conf"));
  const auto h10 = hopper_curve(pts, 10);
  const auto h30 = hopper_curve(pts, 30);
  const auto sy = sync_best(pts);

  double mean = 0.0;
  for (const auto& p : sy) mean += p.thr.mean;
  mean /= static_cast<double>(sy.size());
  double spread = 0.0;
  for (const auto& p : sy) {
    spread = std::max(spread, std::abs(p.thr.mean / mean - 1.0));
    v.check(std::abs(p.thr.mean / mean - 1.0) <= 0.15,
            fmt("SYNC at Q=%g: %.2f more than 15%% from %.2f", p.g.cells_per_node, p.thr.mean, mean));
  }
  for (const auto* c : {&h10, &h30}) {
    const double top = c->back().thr.mean;
    v.check(top >= kPlateauLo && top <= kPlateauHi,
            fmt("HOPPER %g apps at Q=%g: %.2f outside [%.1f", c->back().g.n_applications, c->back().g.cells_per_node,
                top, kPlateauLo) +
                fmt(", %.1f]", kPlateauHi));
  }
  int overlaps = 0;
  for (std::size_t i = 0; i < h10.size(); ++i) {
    if (overlap(h10[i].thr, h30[i].thr)) {
      ++overlaps;
    } else {
      v.check(false, fmt("Q=%g: 10 vs 30 apps differ (%.2f+-%.2f vs %.2f+-%.2f)", h10[i].g.cells_per_node,
                         h10[i].thr.mean, ci(h10[i].thr), h30[i].thr.mean) +
                         fmt(" ci30 %.2f", ci(h30[i].thr)));
    }
  }
  report("short-distance", v,
         fmt("SYNC mean %.1f, max deviation %.1f%%; HOPPER at Q=150 %.1f / %.1f; ", mean, 100.0 * spread,
             h10.back().thr.mean, h30.back().thr.mean) +
             fmt("10/30 overlap %g/%g", overlaps, static_cast<double>(h10.size())));
}

// ---------------------------------------------------------------------------

void single_rtt() {
  Verdict v;
  PhysicalParams p;
  p.bsm_success_prob = 1.0;
  constexpr double kLength = 5.0e6;
  constexpr std::uint32_t kRepeaters = 3;
  testing::ScriptedChain c(kRepeaters, kLength, 6, p);
  c.preload(1);
  c.engine.run_until(SimTime::from_seconds(0.25));
  const SimTime t0 = c.engine.now();
  c.protocol.request(c.app());
  c.engine.run_to_completion();

  // Closed form: per-hop flight times, one BSM per repeater, then the corrections.
  const Duration hop = Duration::from_seconds(kLength / p.signal_speed_mps);
  const Duration forward = hop * static_cast<std::int64_t>(kRepeaters + 1);
  const SimTime delivered = t0 + forward + p.bsm_duration * kRepeaters + p.xz_duration;
  const SimTime acknowledged = delivered + forward;

  v.check(c.delivered.size() == 1 && c.established.size() == 1, "expected exactly one ebit");
  if (!c.delivered.empty()) {
    v.check(*c.delivered[0].delivered_at == delivered,
            "delivered at " + format_seconds(*c.delivered[0].delivered_at) + ", expected " + format_seconds(delivered));
  }
  v.check(c.engine.now() == acknowledged,
          "EsRemComp at " + format_seconds(c.engine.now()) + ", expected " + format_seconds(acknowledged));
  report("single-rtt", v,
         "delivered at " + format_seconds(delivered - t0) + " s after the request, acknowledged at " +
             format_seconds(acknowledged - t0) + " s");
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path configs = argc > 1 ? fs::path(argv[1]) : fs::path(QCHAIN_SOURCE_DIR) / "configs";
  const std::vector<std::pair<const char*, std::function<void()>>> suite{
      {"fidelity-formulas", fidelity_formulas},
      {"fsm-properties", fsm_properties},
      {"determinism", [&] { determinism(configs); }},
      {"sync-oracle", sync_oracle},
      {"hopper-memory-sweep", [&] { hopper_memory_sweep(configs); }},
      {"sync-vs-hopper-long", [&] { sync_vs_hopper_long(configs); }},
      {"hopper-path-length", [&] { hopper_path_length(configs); }},
      {"short-distance", [&] { short_distance(configs); }},
      {"single-rtt", single_rtt},
  };
  for (const auto& [name, run] : suite) {
    try {
      run();
    } catch (const std::exception& e) {
      Verdict v;
      v.check(false, e.what());
      report(name, v, "aborted");
    }
  }
  std::printf("%d of %zu criteria failed\n", g_failures, suite.size());
  return g_failures == 0 ? 0 : 1;
}
