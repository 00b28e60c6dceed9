#include "squarebox/sampling_linf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "squarebox/errors.hpp"
#include "squarebox/schedule.hpp"

namespace squarebox {
namespace {

std::size_t at(int c, int w, int row, int col) {
  return (static_cast<std::size_t>(c) * w + row) * w + col;
}

// Fills a window in channel c with value, wrapping if requested.
void fill_window(std::vector<double>& delta, int w, int c, const Window& win, double value) {
  for (int dr = 0; dr < win.height; ++dr) {
    const int row = win.wraps ? (win.row + dr) % w : win.row + dr;
    for (int dc = 0; dc < win.width; ++dc) {
      const int col = win.wraps ? (win.col + dc) % w : win.col + dc;
      delta[at(c, w, row, col)] = value;
    }
  }
}

Window inside_window(int h_rows, int h_cols, int w, Rng& rng) {
  Window win;
  win.height = h_rows;
  win.width = h_cols;
  win.row = static_cast<int>(rng.uniform_int(0, w - h_rows));
  win.col = static_cast<int>(rng.uniform_int(0, w - h_cols));
  return win;
}

// k distinct pixel indices out of w*w, by partial Fisher-Yates.
std::vector<int> random_pixels(int w, int k, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(w) * w);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = rng.uniform_int(i, static_cast<std::int64_t>(idx.size()) - 1);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

std::string_view to_string(LinfUpdate u) {
  switch (u) {
    case LinfUpdate::SquareC: return "square-c";
    case LinfUpdate::SquareCH2: return "square-ch2";
    case LinfUpdate::Square1: return "square-1";
    case LinfUpdate::RectC: return "rect-c";
    case LinfUpdate::RandomCH2: return "random-ch2";
    case LinfUpdate::RandomC: return "random-c";
  }
  return "?";
}

std::string_view to_string(LinfInit i) {
  switch (i) {
    case LinfInit::VertStripes: return "vert-stripes";
    case LinfInit::HorizStripes: return "horiz-stripes";
    case LinfInit::UniformRandom: return "uniform-random";
    case LinfInit::RandomSquares: return "random-squares";
  }
  return "?";
}

LinfUpdate parse_linf_update(std::string_view name) {
  for (auto u : {LinfUpdate::SquareC, LinfUpdate::SquareCH2, LinfUpdate::Square1,
                 LinfUpdate::RectC, LinfUpdate::RandomCH2, LinfUpdate::RandomC}) {
    if (name == to_string(u)) return u;
  }
  throw ValueError("unknown linf update '" + std::string(name) + "'");
}

LinfInit parse_linf_init(std::string_view name) {
  for (auto i : {LinfInit::VertStripes, LinfInit::HorizStripes, LinfInit::UniformRandom,
                 LinfInit::RandomSquares}) {
    if (name == to_string(i)) return i;
  }
  throw ValueError("unknown linf init '" + std::string(name) + "'");
}

ImageTensor init_linf(const ImageTensor& x, double eps, LinfInit init, Rng& rng,
                      int square_side) {
  if (!(eps > 0.0)) throw ValueError("eps must be positive");
  const int c = x.channels();
  const int w = x.side();
  std::vector<double> out(x.data().begin(), x.data().end());
  switch (init) {
    case LinfInit::VertStripes:
      for (int col = 0; col < w; ++col) {
        for (int ch = 0; ch < c; ++ch) {
          const double s = eps * rng.rademacher();
          for (int row = 0; row < w; ++row) out[at(ch, w, row, col)] += s;
        }
      }
      break;
    case LinfInit::HorizStripes:
      for (int row = 0; row < w; ++row) {
        for (int ch = 0; ch < c; ++ch) {
          const double s = eps * rng.rademacher();
          for (int col = 0; col < w; ++col) out[at(ch, w, row, col)] += s;
        }
      }
      break;
    case LinfInit::UniformRandom:
      for (double& v : out) v += eps * rng.rademacher();
      break;
    case LinfInit::RandomSquares: {
      const int side = std::clamp(square_side, 1, w);
      std::vector<double> pert(out.size(), 0.0);
      for (int k = 0; k < 5; ++k) {
        const Window win = inside_window(side, side, w, rng);
        for (int ch = 0; ch < c; ++ch) fill_window(pert, w, ch, win, eps * rng.rademacher());
      }
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += pert[i];
      break;
    }
  }
  return ImageTensor::clipped(c, w, std::move(out));
}

UpdateProposal sample_delta_linf(double eps, int h, int w, int c, Rng& rng, LinfUpdate update) {
  if (h < 1 || h > w) {
    throw ValueError("window side " + std::to_string(h) + " outside [1, " + std::to_string(w) + "]");
  }
  UpdateProposal p;
  p.delta.assign(static_cast<std::size_t>(c) * w * w, 0.0);
  const double step = 2.0 * eps;

  switch (update) {
    case LinfUpdate::SquareC: {
      const Window win = inside_window(h, h, w, rng);
      for (int ch = 0; ch < c; ++ch) fill_window(p.delta, w, ch, win, step * rng.rademacher());
      p.windows.push_back(win);
      break;
    }
    case LinfUpdate::Square1: {
      const Window win = inside_window(h, h, w, rng);
      const double s = step * rng.rademacher();
      for (int ch = 0; ch < c; ++ch) fill_window(p.delta, w, ch, win, s);
      p.windows.push_back(win);
      break;
    }
    case LinfUpdate::SquareCH2: {
      // Corner drawn from {0, ..., w}; indices past the edge wrap around.
      Window win{.row = static_cast<int>(rng.uniform_int(0, w)),
                 .col = static_cast<int>(rng.uniform_int(0, w)),
                 .height = h,
                 .width = h,
                 .wraps = true};
      win.row %= w;
      win.col %= w;
      for (int ch = 0; ch < c; ++ch) {
        for (int dr = 0; dr < h; ++dr) {
          for (int dc = 0; dc < h; ++dc) {
            p.delta[at(ch, w, (win.row + dr) % w, (win.col + dc) % w)] = step * rng.rademacher();
          }
        }
      }
      p.windows.push_back(win);
      break;
    }
    case LinfUpdate::RectC: {
      const double alpha = rng.exponential();
      const double beta = rng.exponential();
      const int rows = static_cast<int>(std::clamp<long>(std::lround(alpha * h), 1, w));
      const int cols = static_cast<int>(std::clamp<long>(std::lround(beta * h), 1, w));
      const Window win = inside_window(rows, cols, w, rng);
      for (int ch = 0; ch < c; ++ch) fill_window(p.delta, w, ch, win, step * rng.rademacher());
      p.windows.push_back(win);
      break;
    }
    case LinfUpdate::RandomCH2:
    case LinfUpdate::RandomC: {
      const std::vector<int> pixels = random_pixels(w, h * h, rng);
      for (int ch = 0; ch < c; ++ch) {
        const double channel_sign = update == LinfUpdate::RandomC ? step * rng.rademacher() : 0.0;
        for (int px : pixels) {
          const double v = update == LinfUpdate::RandomC ? channel_sign : step * rng.rademacher();
          p.delta[static_cast<std::size_t>(ch) * w * w + px] = v;
        }
      }
      break;
    }
  }
  return p;
}

ImageTensor LinfSampler::initialize(const ImageTensor& x, double eps, Rng& rng) const {
  const int side = variant_.init == LinfInit::RandomSquares
                       ? side_length(p_init_, x.side(), Norm::Linf)
                       : 1;
  return init_linf(x, eps, variant_.init, rng, side);
}

UpdateProposal LinfSampler::propose(const ImageTensor& x_hat, const ImageTensor&, double eps,
                                    int h, Rng& rng) const {
  return sample_delta_linf(eps, h, x_hat.side(), x_hat.channels(), rng, variant_.update);
}

}  // namespace squarebox
