#include <cmath>

#include "doctest.h"
#include "squarebox/schedule.hpp"

using namespace squarebox;

TEST_CASE("side_length examples") {
  CHECK(side_length(0.05, 224, Norm::Linf) == 50);
  CHECK(side_length(0.001, 28, Norm::L2) == 3);
  CHECK(side_length(1.0, 10, Norm::Linf) == 10);
  CHECK(side_length(1.0, 10, Norm::L2) == 10);
  CHECK(side_length(1e-6, 28, Norm::Linf) == 1);
  CHECK(side_length(0.5, 2, Norm::L2) == 2);  // the l2 floor never exceeds w
}

TEST_CASE("p_schedule halves at the breakpoints") {
  const double p = 0.1;
  CHECK(p_schedule(0, 10000, p) == p);
  CHECK(p_schedule(9, 10000, p) == p);
  CHECK(p_schedule(10, 10000, p) == p / 2);
  CHECK(p_schedule(49, 10000, p) == p / 2);
  CHECK(p_schedule(50, 10000, p) == p / 4);
  CHECK(p_schedule(8000, 10000, p) == p / 256);
  CHECK(p_schedule(9999, 10000, p) == p / 256);
}

TEST_CASE("p_schedule rescales with the budget") {
  const double p = 0.05;
  CHECK(p_schedule(19, 20000, p) == p);
  CHECK(p_schedule(20, 20000, p) == p / 2);
  CHECK(p_schedule(16000, 20000, p) == p / 256);
  // N = 5000: breakpoints 5, 25, 100, 500, 1000, 2000, 3000, 4000.
  CHECK(p_schedule(4, 5000, p) == p);
  CHECK(p_schedule(5, 5000, p) == p / 2);
  CHECK(p_schedule(500, 5000, p) == p / 16);
  // Tiny budgets clamp breakpoints to 1.
  CHECK(p_schedule(1, 10, p) == p / 16);
}

TEST_CASE("p_schedule is non-increasing") {
  for (std::int64_t n : {100, 1000, 5000, 10000, 12345}) {
    double prev = 1.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double p = p_schedule(i, n, 0.3);
      REQUIRE(p <= prev);
      prev = p;
    }
  }
}
