#include <benchmark/benchmark.h>

#include "qchain/engine.hpp"
#include "qchain/network.hpp"
#include "qchain/rng.hpp"
#include "qchain/runtime.hpp"
#include "qchain/sync.hpp"

namespace {

using namespace qchain;

void BM_EngineDispatch(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Engine e;
    RngStream rng(1);
    std::uint64_t sink = 0;
    for (int i = 0; i < n; ++i) {
      e.schedule(Duration::from_picos(static_cast<std::int64_t>(rng.uniform_below(1'000'000))),
                 EventKind::kPairArrival, [&sink] { ++sink; });
    }
    e.run_to_completion();
    benchmark::DoNotOptimize(sink);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EngineDispatch)->Arg(1 << 10)->Arg(1 << 16);

void BM_HopperReplication(benchmark::State& state) {
  ReplicationSpec s;
  s.cells_per_node = static_cast<std::uint32_t>(state.range(0));
  s.n_applications = 30;
  for (auto _ : state) {
    const RunMetrics m = run_replication(s);
    benchmark::DoNotOptimize(m.successes);
    ++s.seed;
  }
}
BENCHMARK(BM_HopperReplication)->Arg(10)->Arg(50)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_SyncSlot(benchmark::State& state) {
  const PhysicalParams p;
  const Topology t = build_chain(3, 5.0e6, static_cast<std::uint32_t>(state.range(0)), p);
  const auto slot = sync::make_slot_config(t, t.shortest_path(t.head(), t.tail()), p, 0.9);
  RngStream rng(3);
  for (auto _ : state) {
    auto out = sync::run_slot(slot, p, rng, SimTime{});
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * slot.lanes);
}
BENCHMARK(BM_SyncSlot)->Arg(10)->Arg(150);

}  // namespace
BENCHMARK_MAIN();
