#include "squarebox/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "squarebox/errors.hpp"
#include "squarebox/sampling_linf.hpp"

namespace squarebox::analysis {
namespace {

struct Welford {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double standard_error() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

int perfect_square_root(std::size_t d) {
  const auto w = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
  if (w <= 0 || static_cast<std::size_t>(w) * w != d) {
    throw ShapeError("dimension " + std::to_string(d) + " is not a perfect square");
  }
  return w;
}

}  // namespace

ShapeSpec::ShapeSpec(int k_, int s_) : k(k_), s(s_) {
  if (s < 1 || k < s * s) {
    throw ValueError("need k >= s^2, got k=" + std::to_string(k) + " s=" + std::to_string(s));
  }
}

int ShapeSpec::a() const {
  int a = static_cast<int>(std::sqrt(static_cast<double>(k)));
  while (static_cast<long>(a + 1) * (a + 1) <= k) ++a;
  while (static_cast<long>(a) * a > k) --a;
  return a;
}

int ShapeSpec::b() const { return k / a(); }
int ShapeSpec::r() const { return k - a() * b(); }

std::int64_t n_star(int k, int s) {
  const ShapeSpec spec(k, s);
  const std::int64_t a = spec.a(), b = spec.b(), r = spec.r();
  return (a - s + 1) * (b - s + 1) + std::max<std::int64_t>(r - s + 1, 0);
}

std::vector<std::vector<bool>> optimal_shape(int k) {
  const ShapeSpec spec(k, 1);
  const int a = spec.a(), b = spec.b(), r = spec.r();
  std::vector<std::vector<bool>> grid(a + (r > 0 ? 1 : 0), std::vector<bool>(b, false));
  for (int row = 0; row < a; ++row) std::fill(grid[row].begin(), grid[row].end(), true);
  for (int col = 0; col < r; ++col) grid[a][col] = true;
  return grid;
}

std::int64_t brute_force_square_count(int k, int s) {
  const ShapeSpec spec(k, s);
  const auto grid = optimal_shape(spec.k);
  const int rows = static_cast<int>(grid.size());
  const int cols = static_cast<int>(grid[0].size());
  std::int64_t count = 0;
  for (int r0 = 0; r0 + s <= rows; ++r0) {
    for (int c0 = 0; c0 + s <= cols; ++c0) {
      bool fits = true;
      for (int dr = 0; dr < s && fits; ++dr) {
        for (int dc = 0; dc < s && fits; ++dc) fits = grid[r0 + dr][c0 + dc];
      }
      count += fits ? 1 : 0;
    }
  }
  return count;
}

SmoothObjective half_squared_norm() {
  SmoothObjective obj;
  obj.evaluate = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return 0.5 * s;
  };
  obj.gradient = [](std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); };
  obj.smoothness = 1.0;
  return obj;
}

double gradient_check(const SmoothObjective& obj, std::span<const double> x, double step) {
  const std::vector<double> g = obj.gradient(x);
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = obj.evaluate(probe);
    probe[i] = orig - step;
    const double down = obj.evaluate(probe);
    probe[i] = orig;
    worst = std::max(worst, std::abs((up - down) / (2.0 * step) - g[i]));
  }
  return worst;
}

ConvergenceTrace rs_convergence_trial(const SmoothObjective& obj, std::span<const double> x0,
                                      std::int64_t T, double gamma, int h, double eps, Rng& rng) {
  if (T < 1) throw ValueError("T must be positive");
  const int w = perfect_square_root(x0.size());
  const double scale = gamma / std::sqrt(static_cast<double>(T));

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> candidate(x.size());
  double best = obj.evaluate(x);
  double min_grad = l2(obj.gradient(x));

  ConvergenceTrace trace;
  trace.min_grad_norm.reserve(T + 1);
  trace.best_value.reserve(T + 1);
  trace.min_grad_norm.push_back(min_grad);
  trace.best_value.push_back(best);

  for (std::int64_t t = 1; t <= T; ++t) {
    const UpdateProposal p = sample_delta_linf(eps, h, w, 1, rng, LinfUpdate::SquareCH2);
    for (std::size_t i = 0; i < x.size(); ++i) candidate[i] = x[i] + scale * p.delta[i];
    const double value = obj.evaluate(candidate);
    if (value < best) {
      best = value;
      x.swap(candidate);
      min_grad = std::min(min_grad, l2(obj.gradient(x)));
    }
    trace.min_grad_norm.push_back(min_grad);
    trace.best_value.push_back(best);
  }
  return trace;
}

std::vector<KhintchineReport> khintchine_check(int w, int h, double eps, int c,
                                               const std::vector<std::vector<double>>& directions,
                                               std::int64_t trials, Rng& rng) {
  if (h < 1 || h > w || c < 1) throw ValueError("khintchine_check: need 1 <= h <= w, c >= 1");
  if (trials < 2) throw ValueError("khintchine_check: need at least 2 trials");
  const std::size_t d = static_cast<std::size_t>(c) * w * w;
  for (const auto& v : directions) {
    if (v.size() != d) throw ShapeError("direction length does not match c*w*w");
  }

  std::vector<Welford> inner(directions.size());
  Welford var;
  std::vector<double> acc(directions.size());
  for (std::int64_t t = 0; t < trials; ++t) {
    const UpdateProposal p = sample_delta_linf(eps, h, w, c, rng, LinfUpdate::SquareCH2);
    const Window& win = p.windows.front();
    std::fill(acc.begin(), acc.end(), 0.0);
    double sq = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      for (int dr = 0; dr < h; ++dr) {
        const int row = (win.row + dr) % w;
        for (int dc = 0; dc < h; ++dc) {
          const std::size_t idx = (static_cast<std::size_t>(ch) * w + row) * w + (win.col + dc) % w;
          const double delta = p.delta[idx];
          sq += delta * delta;
          for (std::size_t j = 0; j < directions.size(); ++j) acc[j] += delta * directions[j][idx];
        }
      }
    }
    var.add(sq);
    for (std::size_t j = 0; j < directions.size(); ++j) inner[j].add(std::abs(acc[j]));
  }

  std::vector<KhintchineReport> out(directions.size());
  const double hh = static_cast<double>(h) * h;
  for (std::size_t j = 0; j < directions.size(); ++j) {
    const double vn = l2(directions[j]);
    KhintchineReport& r = out[j];
    r.inner_mc = inner[j].mean;
    r.inner_se = inner[j].standard_error();
    r.inner_bound = std::numbers::sqrt2 * eps * hh / (static_cast<double>(w) * w) * vn;
    r.inner_bound_dim = std::numbers::sqrt2 * c * eps * hh / static_cast<double>(d) * vn;
    r.var_mc = var.mean;
    r.var_se = var.standard_error();
    r.var_exact = 4.0 * c * eps * eps * hh;
  }
  return out;
}

KhintchineReport khintchine_check(int w, int h, double eps, int c, std::span<const double> v,
                                  std::int64_t trials, Rng& rng) {
  const std::vector<std::vector<double>> dirs{std::vector<double>(v.begin(), v.end())};
  return khintchine_check(w, h, eps, c, dirs, trials, rng).front();
}

SignComparison single_vs_multiple_sign(int w, int h, double eps, std::span<const double> v,
                                       std::int64_t trials, Rng& rng) {
  if (h < 1 || w % h != 0) throw ValueError("single_vs_multiple_sign: h must divide w");
  if (v.size() != static_cast<std::size_t>(w) * w) throw ShapeError("direction must be w x w");
  if (trials < 2) throw ValueError("single_vs_multiple_sign: need at least 2 trials");
  const int blocks = w / h;

  Welford single, multiple;
  for (std::int64_t t = 0; t < trials; ++t) {
    const int br = static_cast<int>(rng.uniform_int(0, blocks - 1));
    const int bc = static_cast<int>(rng.uniform_int(0, blocks - 1));
    const double shared = 2.0 * eps * rng.rademacher();
    double s_single = 0.0, s_multiple = 0.0;
    for (int dr = 0; dr < h; ++dr) {
      for (int dc = 0; dc < h; ++dc) {
        const double vi = v[static_cast<std::size_t>(br * h + dr) * w + bc * h + dc];
        s_single += shared * vi;
        s_multiple += 2.0 * eps * rng.rademacher() * vi;
      }
    }
    single.add(std::abs(s_single));
    multiple.add(std::abs(s_multiple));
  }

  double l1 = 0.0;
  for (double e : v) l1 += std::abs(e);
  const double vn = l2(v);
  const double area = static_cast<double>(h) * h / (static_cast<double>(w) * w);
  SignComparison out;
  out.single_mc = single.mean;
  out.single_se = single.standard_error();
  out.multiple_mc = multiple.mean;
  out.multiple_se = multiple.standard_error();
  out.single_exact = 2.0 * eps * area * l1;
  out.multiple_lower = std::numbers::sqrt2 * eps * area * vn;
  out.multiple_upper = 2.0 * eps * h / static_cast<double>(w) * vn;
  return out;
}

std::vector<CheckResult> run_checks(const CheckOptions& options) {
  std::vector<CheckResult> out;
  Rng rng(options.seed);

  {
    int mismatches = 0, cases = 0;
    for (int s = 2; s <= 5; ++s) {
      for (int k = s * s; k <= 120; ++k, ++cases) {
        mismatches += n_star(k, s) != brute_force_square_count(k, s) ? 1 : 0;
      }
    }
    std::ostringstream d;
    d << cases << " (k, s) pairs, " << mismatches << " mismatches";
    out.push_back({"square_count", mismatches == 0, d.str()});
  }

  {
    const int w = 8, h = 3, c = 3;
    const double eps = 0.05;
    std::vector<std::vector<double>> dirs(options.khintchine_directions,
                                          std::vector<double>(static_cast<std::size_t>(c) * w * w));
    for (auto& v : dirs) {
      for (double& e : v) e = rng.normal();
    }
    const auto reports = khintchine_check(w, h, eps, c, dirs, options.khintchine_trials, rng);
    const KhintchineReport& r0 = reports.front();
    const double tol = 3.0 * r0.var_se + 1e-12 * r0.var_exact;
    std::ostringstream d;
    d << "E||delta||^2 = " << r0.var_mc << " vs " << r0.var_exact << " (3 se = " << 3.0 * r0.var_se
      << ")";
    out.push_back({"khintchine_variance", std::abs(r0.var_mc - r0.var_exact) <= tol, d.str()});

    int violations = 0;
    double worst = 1e300;
    for (const auto& r : reports) {
      const double slack = r.inner_mc - (r.inner_bound - 3.0 * r.inner_se);
      worst = std::min(worst, slack);
      violations += slack < 0.0 ? 1 : 0;
    }
    std::ostringstream d2;
    d2 << reports.size() << " directions, " << violations << " below bound, min slack " << worst;
    out.push_back({"khintchine_inner_bound", violations == 0, d2.str()});

    const double gap = std::abs(r0.inner_bound - r0.inner_bound_dim);
    std::ostringstream d3;
    d3 << "channel-blocked " << r0.inner_bound << " vs dimension form " << r0.inner_bound_dim;
    out.push_back({"khintchine_constants_agree", gap <= 1e-12 * r0.inner_bound, d3.str()});
  }

  {
    const int w = 8, h = 2;
    std::vector<double> v(static_cast<std::size_t>(w) * w, 0.0);
    for (int r = 0; r < h; ++r) {
      for (int col = 0; col < h; ++col) v[static_cast<std::size_t>(r) * w + col] = 1.0;
    }
    const SignComparison cmp = single_vs_multiple_sign(w, h, 0.05, v, options.sign_trials, rng);
    std::ostringstream d;
    d << "single " << cmp.single_mc << " vs multiple " << cmp.multiple_mc;
    out.push_back({"single_sign_beats_multiple", cmp.single_mc > cmp.multiple_mc, d.str()});
  }

  {
    const SmoothObjective obj = half_squared_norm();
    const std::vector<double> x0(100, 1.0);
    double short_sum = 0.0, long_sum = 0.0;
    bool monotone = true;
    for (int s = 0; s < options.convergence_seeds; ++s) {
      Rng a(options.seed + 1000 + s);
      Rng b(options.seed + 2000 + s);
      const auto ts = rs_convergence_trial(obj, x0, options.convergence_t_short, 1.0, 2, 0.5, a);
      const auto tl = rs_convergence_trial(obj, x0, options.convergence_t_long, 1.0, 2, 0.5, b);
      short_sum += ts.min_grad_norm.back();
      long_sum += tl.min_grad_norm.back();
      for (const auto* t : {&ts, &tl}) {
        monotone = monotone && std::is_sorted(t->best_value.rbegin(), t->best_value.rend());
      }
    }
    const double n = options.convergence_seeds;
    std::ostringstream d;
    d << "mean min-grad T=" << options.convergence_t_short << ": " << short_sum / n
      << ", T=" << options.convergence_t_long << ": " << long_sum / n;
    out.push_back({"convergence_direction", long_sum < short_sum, d.str()});
    out.push_back({"best_value_monotone", monotone,
                   monotone ? "all traces non-increasing" : "a trace increased"});
  }
  return out;
}

}  // namespace squarebox::analysis
