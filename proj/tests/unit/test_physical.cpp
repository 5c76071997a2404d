#include <gtest/gtest.h>

#include "qchain/engine.hpp"
#include "qchain/physical.hpp"
#include "qchain/rng.hpp"

namespace qchain {
namespace {

// One link A-B with three cells on each side.
struct Fixture : ::testing::Test {
  Topology topo = build_chain(0, 1.0, 3, PhysicalParams{});
  QuantumMemory mem{topo};
  const NodeId a = topo.head();
  const LinkId l{0};

  StoredHalf half(std::uint64_t seq, double birth) {
    return StoredHalf{seq, SimTime::from_seconds(birth), Fidelity{0.95}};
  }
};

using Absorb = Fixture;
using Lock = Fixture;
using MemoryDeathTest = Fixture;

TEST_F(Absorb, LowestEmptyFirst) {
  EXPECT_EQ(mem.absorb(a, l, half(1, 0.0)).cell, 0u);
  ASSERT_EQ(mem.lock({a, 0}, 1, 9), LockOutcome::kLocked);
  EXPECT_EQ(mem.absorb(a, l, half(2, 1.0)).cell, 1u);
  mem.free({a, 0});
  const auto out = mem.absorb(a, l, half(3, 2.0));
  EXPECT_EQ(out.kind, AbsorbOutcome::Kind::kStored);
  EXPECT_EQ(out.cell, 0u);
}

TEST_F(Absorb, OverwritesOldestValid) {
  mem.absorb(a, l, half(1, 1.0));
  mem.absorb(a, l, half(2, 3.0));
  mem.absorb(a, l, half(3, 4.0));
  ASSERT_EQ(mem.lock({a, 2}, 3, 9), LockOutcome::kLocked);
  const auto out = mem.absorb(a, l, half(4, 5.0));
  EXPECT_EQ(out.kind, AbsorbOutcome::Kind::kOverwrote);
  EXPECT_EQ(out.cell, 0u);
  EXPECT_EQ(out.old_pair_seq, 1u);
  EXPECT_EQ(mem.cell({a, 0}).half->pair_seq, 4u);
}

TEST_F(Absorb, DropsWhenAllUsed) {
  for (std::uint64_t s = 1; s <= 3; ++s) {
    mem.absorb(a, l, half(s, 0.0));
    ASSERT_EQ(mem.lock({a, static_cast<std::uint32_t>(s - 1)}, s, 9), LockOutcome::kLocked);
  }
  EXPECT_EQ(mem.absorb(a, l, half(4, 1.0)).kind, AbsorbOutcome::Kind::kDropped);
  EXPECT_EQ(mem.used_count(), 3u);
}

TEST_F(Lock, Outcomes) {
  EXPECT_EQ(mem.lock({a, 0}, 17, 9), LockOutcome::kNotValid);
  mem.absorb(a, l, half(17, 0.0));
  mem.absorb(a, l, half(18, 0.0));
  mem.absorb(a, l, half(19, 0.0));
  mem.absorb(a, l, half(20, 1.0));  // Overwrites 17 in cell 0.
  EXPECT_EQ(mem.lock({a, 0}, 17, 9), LockOutcome::kStaleMismatch);
  EXPECT_EQ(mem.lock({a, 0}, 20, 9), LockOutcome::kLocked);
  EXPECT_EQ(mem.lock({a, 0}, 20, 9), LockOutcome::kNotValid);
  EXPECT_EQ(mem.youngest_valid(a, l), std::optional<std::uint32_t>{2});
  EXPECT_EQ(mem.find_pair(a, l, 18), std::optional<std::uint32_t>{1});
  EXPECT_EQ(mem.find_pair(a, l, 17), std::nullopt);
}

TEST_F(Lock, FreeReturnsToEmpty) {
  mem.absorb(a, l, half(1, 0.0));
  mem.free({a, 0});  // Valid -> Empty
  EXPECT_EQ(mem.cell({a, 0}).state, CellState::kEmpty);
  EXPECT_FALSE(mem.cell({a, 0}).half.has_value());
  mem.absorb(a, l, half(2, 0.0));
  mem.lock({a, 0}, 2, 9);
  mem.free({a, 0});  // Used -> Empty
  EXPECT_EQ(mem.cell({a, 0}).state, CellState::kEmpty);
  EXPECT_EQ(mem.used_count(), 0u);
}

TEST_F(MemoryDeathTest, DoubleFree) {
  mem.absorb(a, l, half(1, 0.0));
  mem.free({a, 0});
  EXPECT_DEATH(mem.free({a, 0}), "contract violation");
}

TEST(Bsm, PerfectAndRate) {
  RngStream rng(5);
  const auto r = attempt_bsm(Fidelity{1.0}, Fidelity{1.0}, 1.0, rng);
  EXPECT_TRUE(r.success);
  EXPECT_DOUBLE_EQ(r.f_out.value(), 1.0);
  EXPECT_LT(r.bits, 4);
  int ok = 0;
  for (int i = 0; i < 100'000; ++i) ok += attempt_bsm(Fidelity{0.9}, Fidelity{0.9}, 0.95, rng).success;
  EXPECT_NEAR(ok / 1e5, 0.95, 0.005);
}

TEST(Epsg, InterArrivalAndCounts) {
  const PhysicalParams p;
  const Topology topo = build_chain(0, 5.0e6, 4, p);
  RngStream rng(11);
  double sum = 0.0;
  for (int i = 0; i < 100'000; ++i) sum += next_generation(topo.link(LinkId{0}), rng).seconds();
  EXPECT_NEAR(sum / 1e5, 0.01, 0.0001);
  EXPECT_NEAR(quantum_arrival_latency(topo.link(LinkId{0}), p.signal_speed_mps).seconds(),
              2.5e6 / 3.0e8, 1e-12);

  Engine engine;
  QuantumMemory mem(topo);
  RngStream rng2(12);
  EpsgDriver epsg(engine, mem, rng2, p);
  epsg.start();
  engine.run_until(SimTime::from_seconds(60.0));
  const auto n = epsg.pair_counter(LinkId{0});
  EXPECT_NEAR(static_cast<double>(n), 6000.0, 4.0 * std::sqrt(6000.0));
  for (Role side : {Role::kMaster, Role::kSlave}) {
    const LinkCounters& c = epsg.counters(LinkId{0}, side);
    EXPECT_EQ(c.generated, n);
    EXPECT_EQ(c.stored + c.overwritten + c.dropped, n);
    EXPECT_EQ(c.stored, 4u);  // Nothing ever locks, so only the first four fill empties.
  }
  // No locks: both ends hold identical pairs cell by cell.
  for (std::uint32_t i = 0; i < 4; ++i) {
    const CellRef m{topo.head(), i};
    EXPECT_EQ(mem.cell(m).half->pair_seq, mem.cell(*topo.mirror(m)).half->pair_seq);
  }
}

}  // namespace
}  // namespace qchain
