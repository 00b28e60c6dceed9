#include "squarebox/schedule.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "squarebox/errors.hpp"

namespace squarebox {

int side_length(double p, int w, Norm norm) {
  if (!(p > 0.0 && p <= 1.0)) throw ValueError("p must lie in (0, 1]");
  if (w <= 0) throw ShapeError("image side must be positive");
  long h = std::lround(std::sqrt(p * static_cast<double>(w) * w));
  h = std::max(h, norm == Norm::L2 ? 3L : 1L);
  return static_cast<int>(std::min<long>(h, w));
}

double p_schedule(std::int64_t i, std::int64_t n_queries, double p_init) {
  static constexpr std::array<std::int64_t, 8> kBreakpoints = {10,   50,   200,  1000,
                                                               2000, 4000, 6000, 8000};
  double p = p_init;
  for (std::int64_t b : kBreakpoints) {
    const std::int64_t scaled = std::max<std::int64_t>(
        1, std::llround(static_cast<double>(b) * static_cast<double>(n_queries) / 10000.0));
    if (i >= scaled) p /= 2.0;
  }
  return p;
}

}  // namespace squarebox
