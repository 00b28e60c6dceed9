#pragma once

#include <cstdint>

#include "squarebox/core.hpp"

namespace squarebox {

// Side of the square window for a fraction p of a w x w image: the closest
// integer to w*sqrt(p), at least 1 (at least 3 for L2), at most w.
int side_length(double p, int w, Norm norm);

// Fraction of pixels to modify at iteration i of an N-query run. p_init is
// halved at iterations {10, 50, 200, 1000, 2000, 4000, 6000, 8000} when
// N = 10000; for other N each breakpoint becomes max(1, round(b * N / 10000)).
double p_schedule(std::int64_t i, std::int64_t n_queries, double p_init);

}  // namespace squarebox
