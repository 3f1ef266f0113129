#include "doctest.h"

#include <array>
#include <map>
#include <stdexcept>
#include <vector>

#include "vrsim/scheduler.hpp"

using namespace vrsim;

TEST_CASE("round-robin pick") {
  const std::vector<std::size_t> all = {0, 1, 2};
  CHECK(sched::rr_pick(all, 0) == std::pair<std::size_t, std::size_t>{1, 1});
  CHECK(sched::rr_pick(all, 1) == std::pair<std::size_t, std::size_t>{2, 2});
  CHECK(sched::rr_pick(all, 2) == std::pair<std::size_t, std::size_t>{0, 0});

  // Slots that just went idle are skipped, not waited for.
  const std::vector<std::size_t> gap = {0, 2};
  CHECK(sched::rr_pick(gap, 0).first == 2);
  CHECK(sched::rr_pick(gap, 1).first == 2);
  CHECK(sched::rr_pick(gap, 2).first == 0);

  const std::vector<std::size_t> solo = {5};
  CHECK(sched::rr_pick(solo, 5).first == 5);
  CHECK(sched::rr_pick(solo, 0).first == 5);

  // Cursor beyond every slot wraps to the front.
  CHECK(sched::rr_pick(all, 99).first == 0);

  CHECK_THROWS_AS((void)sched::rr_pick({}, 0), std::invalid_argument);
}

TEST_CASE("round-robin fairness over a window") {
  const std::vector<std::size_t> all = {0, 1, 2, 3, 4};
  std::size_t cursor = all.size() - 1;  // engine's initial cursor: first pick is slot 0
  std::map<std::size_t, int> served;
  for (int t = 0; t < 5 * 40; ++t) {
    const auto [pick, next] = sched::rr_pick(all, cursor);
    ++served[pick];
    cursor = next;
  }
  for (const auto& [slot, count] : served) {
    CAPTURE(slot);
    CHECK(count == 40);
  }
}

TEST_CASE("proportional-fair pick") {
  const std::vector<std::size_t> both = {0, 1};

  SUBCASE("equal averages: highest instantaneous rate wins") {
    const std::array<double, 2> rate = {100.0, 90.0};
    const std::array<double, 2> avg = {50.0, 50.0};
    CHECK(sched::pf_pick(both, rate, avg) == 0);
  }
  SUBCASE("worked ratio example") {
    const std::array<double, 2> rate = {100.0, 90.0};
    const std::array<double, 2> avg = {50.0, 30.0};
    // 100/50 = 2 < 90/30 = 3
    CHECK(sched::pf_pick(both, rate, avg) == 1);
  }
  SUBCASE("exact tie goes to the lowest index") {
    const std::array<double, 2> rate = {100.0, 100.0};
    const std::array<double, 2> avg = {50.0, 50.0};
    CHECK(sched::pf_pick(both, rate, avg) == 0);
  }
  SUBCASE("zero averages floor at 1 bps instead of dividing by zero") {
    const std::array<double, 2> rate = {100.0, 90.0};
    const std::array<double, 2> avg = {0.0, 0.0};
    CHECK(sched::pf_pick(both, rate, avg) == 0);
  }
  SUBCASE("zero rates still pick someone") {
    const std::array<double, 2> rate = {0.0, 0.0};
    const std::array<double, 2> avg = {50.0, 50.0};
    CHECK(sched::pf_pick(both, rate, avg) == 0);
  }
  SUBCASE("scaling all averages leaves the argmax unchanged") {
    const std::vector<std::size_t> slots = {0, 1, 2, 3};
    const std::array<double, 4> rate = {9e8, 4e8, 7e8, 2e8};
    std::array<double, 4> avg = {3e8, 1e8, 9e8, 5e7};
    const auto base = sched::pf_pick(slots, rate, avg);
    for (double s : {2.0, 10.0, 1000.0}) {
      auto scaled = avg;
      for (auto& a : scaled) a *= s;
      CHECK(sched::pf_pick(slots, rate, scaled) == base);
    }
  }
  SUBCASE("empty backlog throws") {
    const std::array<double, 1> z = {0.0};
    CHECK_THROWS_AS((void)sched::pf_pick({}, z, z), std::invalid_argument);
  }
}

TEST_CASE("proportional-fair average update") {
  // Fixed point: serving at exactly the average keeps it put.
  CHECK(sched::pf_update(5e8, 5e8, 100) == doctest::Approx(5e8).epsilon(1e-12));
  // tc = 1 tracks the last TTI exactly.
  CHECK(sched::pf_update(123.0, 777.0, 1) == 777.0);
  // Worked example: (1 - 1/100)*100 + 0 = 99.
  CHECK(sched::pf_update(100.0, 0.0, 100) == doctest::Approx(99.0).epsilon(1e-12));
  CHECK(sched::pf_update(0.0, 1000.0, 100) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)sched::pf_update(1.0, 1.0, 0), std::invalid_argument);

  // Converges to the served rate under constant service.
  double avg = 0.0;
  for (int i = 0; i < 3000; ++i) avg = sched::pf_update(avg, 4e8, 100);
  CHECK(avg == doctest::Approx(4e8).epsilon(1e-9));
}
