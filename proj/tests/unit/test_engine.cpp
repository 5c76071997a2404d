#include <gtest/gtest.h>

#include <sstream>
#include <vector>

#include "qchain/engine.hpp"

namespace qchain {
namespace {

constexpr auto kMs = Duration::from_picos(1'000'000'000);

TEST(Engine, SameTimeIsFifo) {
  Engine e;
  std::vector<int> order;
  e.schedule(kMs, EventKind::kSimEnd, [&] { order.push_back(1); });
  e.schedule(kMs, EventKind::kSimEnd, [&] { order.push_back(2); });
  e.schedule(Duration::zero(), EventKind::kSimEnd, [&] {
    order.push_back(0);
    e.schedule(Duration::zero(), EventKind::kSimEnd, [&] { order.push_back(10); });
  });
  e.schedule(Duration::zero(), EventKind::kSimEnd, [&] { order.push_back(5); });
  e.run_to_completion();
  EXPECT_EQ(order, (std::vector<int>{0, 5, 10, 1, 2}));
}

TEST(Engine, CancelledEventNeverFires) {
  Engine e;
  bool fired = false;
  const auto h = e.schedule(kMs, EventKind::kSimEnd, [&] { fired = true; });
  EXPECT_TRUE(e.cancel(h));
  EXPECT_FALSE(e.cancel(h));
  e.run_to_completion();
  EXPECT_FALSE(fired);
  EXPECT_EQ(e.pending(), 0u);
}

TEST(Engine, RunUntilIsInclusive) {
  Engine e;
  EXPECT_EQ(e.run_until(SimTime::from_seconds(1.0)), 0u);
  EXPECT_EQ(e.now(), SimTime::from_seconds(1.0));

  Engine f;
  for (double t : {1.0, 2.0, 3.0}) {
    f.schedule_at(SimTime::from_seconds(t), EventKind::kSimEnd, [] {});
  }
  EXPECT_EQ(f.run_until(SimTime::from_seconds(2.5)), 2u);
  EXPECT_EQ(f.now(), SimTime::from_seconds(2.5));
  EXPECT_EQ(f.run_until(SimTime::from_seconds(3.0)), 1u);
}

TEST(Engine, ClockNeverDecreases) {
  Engine e;
  SimTime last;
  bool monotone = true;
  for (int i = 0; i < 100; ++i) {
    e.schedule(Duration::from_picos((i * 7919) % 1000), EventKind::kSimEnd, [&] {
      monotone = monotone && e.now() >= last;
      last = e.now();
    });
  }
  e.run_to_completion();
  EXPECT_TRUE(monotone);
}

TEST(Engine, TraceFormat) {
  Engine e;
  std::ostringstream trace;
  e.set_trace(&trace);
  e.schedule(kMs, EventKind::kBsmComplete, [] {}, "bsm at R1");
  e.run_to_completion();
  EXPECT_EQ(trace.str(), "0.001000000000\t0\tbsm-complete\tbsm at R1\n");
}

TEST(EngineDeathTest, NegativeDelay) {
  Engine e;
  EXPECT_DEATH(e.schedule(Duration::from_picos(-1), EventKind::kSimEnd, [] {}), "contract violation");
}

}  // namespace
}  // namespace qchain
