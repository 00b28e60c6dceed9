#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "squarebox/rng.hpp"

namespace squarebox::analysis {

// Number of cells k in a window and side s of the convolution filter that
// must fit inside it. Derived: a = floor(sqrt(k)), b = floor(k / a),
// r = k - a*b.
struct ShapeSpec {
  int k = 0;
  int s = 0;

  ShapeSpec(int k, int s);
  int a() const;
  int b() const;
  int r() const;
};

// Largest number of s x s squares contained in a union of axis-aligned unit
// cells of total area k: (a-s+1)(b-s+1) + max(r-s+1, 0).
std::int64_t n_star(int k, int s);

// Occupancy grid of the optimal shape: an a x b rectangle (a rows, b >= a
// columns) plus an extra row of r cells glued along the longer side.
std::vector<std::vector<bool>> optimal_shape(int k);

// Counts s x s squares fully inside optimal_shape(k) by trying every
// placement.
std::int64_t brute_force_square_count(int k, int s);

// Smooth objective on R^d. The gradient is only used to measure progress,
// never by the search.
struct SmoothObjective {
  std::function<double(std::span<const double>)> evaluate;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  double smoothness = 1.0;  // Lipschitz constant of the gradient
};

// g(x) = 0.5 * ||x||^2, gradient x, L = 1.
SmoothObjective half_squared_norm();

// Largest absolute gap between the analytic gradient and central finite
// differences at x.
double gradient_check(const SmoothObjective& obj, std::span<const double> x, double step = 1e-5);

struct ConvergenceTrace {
  // Entry t is min_{s <= t} ||grad g(x_s)||_2 and the best value so far,
  // for t = 0..T.
  std::vector<double> min_grad_norm;
  std::vector<double> best_value;
};

// Zeroth-order random search on g from x0 (d = x0.size() must be a perfect
// square w^2, read as a 1 x w x w image). Each step draws the per-entry-sign
// window update with wraparound (entries +-2 eps on an h x h window),
// scales it by gamma / sqrt(T), and keeps it only if g strictly decreases.
ConvergenceTrace rs_convergence_trial(const SmoothObjective& obj, std::span<const double> x0,
                                      std::int64_t T, double gamma, int h, double eps, Rng& rng);

// Monte Carlo estimates for the per-entry-sign window update with
// wraparound (corner drawn from {0, ..., w}).
struct KhintchineReport {
  double inner_mc = 0.0;  // mean |<delta, v>|
  double inner_se = 0.0;
  // sqrt(2) eps h^2 / w^2 * ||v||_2 (channel-blocked derivation) and
  // sqrt(2) c eps h^2 / d * ||v||_2 with d = c w^2 (the two agree).
  double inner_bound = 0.0;
  double inner_bound_dim = 0.0;
  double var_mc = 0.0;  // mean ||delta||_2^2
  double var_se = 0.0;
  double var_exact = 0.0;  // 4 c eps^2 h^2
};

KhintchineReport khintchine_check(int w, int h, double eps, int c, std::span<const double> v,
                                  std::int64_t trials, Rng& rng);
// Same draws shared across every direction.
std::vector<KhintchineReport> khintchine_check(int w, int h, double eps, int c,
                                               const std::vector<std::vector<double>>& directions,
                                               std::int64_t trials, Rng& rng);

// Block-grid comparison for a single-channel w x w direction (h must divide
// w): one of the (w/h)^2 aligned blocks is picked uniformly and filled with
// either one shared sign (single) or independent signs (multiple), times 2 eps.
struct SignComparison {
  double single_mc = 0.0;
  double single_se = 0.0;
  double multiple_mc = 0.0;
  double multiple_se = 0.0;
  // 2 eps h^2 / w^2 * ||v||_1, exact when v has constant sign on each block.
  double single_exact = 0.0;
  // sqrt(2) eps h^2 / w^2 ||v||_2 <= E|<delta_multiple, v>| <= 2 eps h / w ||v||_2.
  double multiple_lower = 0.0;
  double multiple_upper = 0.0;
};

SignComparison single_vs_multiple_sign(int w, int h, double eps, std::span<const double> v,
                                       std::int64_t trials, Rng& rng);

struct CheckOptions {
  std::uint64_t seed = 0;
  std::int64_t khintchine_trials = 1000000;
  int khintchine_directions = 50;
  std::int64_t sign_trials = 200000;
  int convergence_seeds = 20;
  std::int64_t convergence_t_short = 100;
  std::int64_t convergence_t_long = 10000;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Square counting, the Khintchine identities, the single/multiple sign gap
// and the random-search convergence direction, each reduced to pass/fail.
std::vector<CheckResult> run_checks(const CheckOptions& options);

}  // namespace squarebox::analysis
