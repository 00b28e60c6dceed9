#include "squarebox/sampling_l2.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "squarebox/errors.hpp"

namespace squarebox {
namespace {

std::size_t at(int c, int w, int row, int col) {
  return (static_cast<std::size_t>(c) * w + row) * w + col;
}

bool inside(const Window& win, int row, int col) {
  return row >= win.row && row < win.row + win.height && col >= win.col &&
         col < win.col + win.width;
}

// eta_base for any orientation: transposes when the block is wider than tall.
Matrix bump(int rows, int cols) {
  return rows >= cols ? eta_base(rows, cols) : eta_base(cols, rows).transposed();
}

Matrix random_signs(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.rademacher();
  }
  return m;
}

// Shape of a single update / grid tile for the given variant (no sign).
Matrix pattern(int rows, int cols, L2Update update, Rng& rng) {
  if (update == L2Update::EtaSingle) return bump(rows, cols);
  const bool transpose = rng.rademacher() > 0;
  return eta_two_center(rows, cols, transpose);
}

double squared_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

void rescale_to(std::vector<double>& v, double eps) {
  const double n = std::sqrt(squared_norm(v));
  if (n == 0.0) return;
  for (double& e : v) e *= eps / n;
}

}  // namespace

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, fill) {
  if (rows < 0 || cols < 0) throw ShapeError("matrix dimensions must be non-negative");
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

double Matrix::norm() const { return std::sqrt(squared_norm(v_)); }

double Matrix::sum() const {
  double s = 0.0;
  for (double e : v_) s += e;
  return s;
}

std::string_view to_string(L2Update u) {
  switch (u) {
    case L2Update::EtaTwoCenter: return "eta";
    case L2Update::EtaSingle: return "eta-single";
    case L2Update::EtaRandSigns: return "eta-rand";
  }
  return "?";
}

std::string_view to_string(L2Init i) {
  switch (i) {
    case L2Init::EtaGrid: return "eta-grid";
    case L2Init::Gaussian: return "gaussian";
    case L2Init::Uniform: return "uniform";
    case L2Init::VertStripes: return "vert-stripes";
  }
  return "?";
}

L2Update parse_l2_update(std::string_view name) {
  for (auto u : {L2Update::EtaTwoCenter, L2Update::EtaSingle, L2Update::EtaRandSigns}) {
    if (name == to_string(u)) return u;
  }
  throw ValueError("unknown l2 update '" + std::string(name) + "'");
}

L2Init parse_l2_init(std::string_view name) {
  for (auto i : {L2Init::EtaGrid, L2Init::Gaussian, L2Init::Uniform, L2Init::VertStripes}) {
    if (name == to_string(i)) return i;
  }
  throw ValueError("unknown l2 init '" + std::string(name) + "'");
}

Matrix eta_base(int h1, int h2) {
  if (h2 < 1 || h1 < h2) {
    throw ValueError("eta_base needs h1 >= h2 >= 1, got " + std::to_string(h1) + "x" +
                     std::to_string(h2));
  }
  const int n = h1 / 2;
  Matrix m(h1, h2);
  for (int r = 1; r <= h1; ++r) {
    for (int s = 1; s <= h2; ++s) {
      const int big_m = n - std::max(std::abs(r - h1 / 2 - 1), std::abs(s - h2 / 2 - 1));
      double acc = 0.0;
      for (int k = 0; k <= big_m; ++k) {
        const double denom = n + 1 - k;
        acc += 1.0 / (denom * denom);
      }
      m(r - 1, s - 1) = acc;
    }
  }
  return m;
}

Matrix eta_two_center(int rows, int cols, bool transpose) {
  if (rows < 1 || cols < 1) throw ValueError("eta pattern needs positive dimensions");
  if (transpose) return eta_two_center(cols, rows, false).transposed();
  const int k = cols / 2;
  Matrix out(rows, cols);
  if (k > 0) {
    const Matrix left = bump(rows, k);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < k; ++c) out(r, c) = left(r, c);
    }
  }
  const Matrix right = bump(rows, cols - k);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols - k; ++c) out(r, k + c) = -right(r, c);
  }
  return out;
}

Matrix eta_square(int h, Rng& rng) {
  return eta_two_center(h, h, rng.rademacher() > 0);
}

L2Draws draw_l2(int h, int w, int c, Rng& rng, L2Update update) {
  if (h < 1 || h > w) {
    throw ValueError("window side " + std::to_string(h) + " outside [1, " + std::to_string(w) + "]");
  }
  L2Draws d;
  auto window = [&] {
    Window win{.height = h, .width = h};
    win.row = static_cast<int>(rng.uniform_int(0, w - h));
    win.col = static_cast<int>(rng.uniform_int(0, w - h));
    return win;
  };
  d.w1 = window();
  d.w2 = window();
  d.eta = pattern(h, h, update, rng);
  d.signs.reserve(c);
  for (int ch = 0; ch < c; ++ch) {
    if (update == L2Update::EtaRandSigns) {
      d.signs.push_back(random_signs(h, h, rng));
    } else {
      d.signs.emplace_back(h, h, static_cast<double>(rng.rademacher()));
    }
  }
  return d;
}

UpdateProposal apply_l2_update(const ImageTensor& x_hat, const ImageTensor& x, double eps,
                               const L2Draws& draws, L2StepInfo* info) {
  if (!x_hat.same_shape(x)) throw ShapeError("apply_l2_update: shape mismatch");
  const int c = x.channels();
  const int w = x.side();
  const Window& w1 = draws.w1;
  const Window& w2 = draws.w2;
  const int h = w1.height;
  if (w1.width != h || w2.height != h || w2.width != h || draws.eta.rows() != h ||
      draws.eta.cols() != h || static_cast<int>(draws.signs.size()) != c) {
    throw ShapeError("apply_l2_update: inconsistent draw geometry");
  }
  if (w1.row < 0 || w1.col < 0 || w2.row < 0 || w2.col < 0 || w1.row + h > w ||
      w1.col + h > w || w2.row + h > w || w2.col + h > w) {
    throw ShapeError("apply_l2_update: window outside the image");
  }

  std::vector<double> nu(x.size());
  for (std::size_t i = 0; i < nu.size(); ++i) nu[i] = x_hat[i] - x[i];

  const double eps_unused_sq = std::max(0.0, eps * eps - squared_norm(nu));
  const double eta_norm = draws.eta.norm();
  if (info) {
    info->eps_unused_sq = eps_unused_sq;
    info->eps_avail.assign(c, 0.0);
    info->old_union_sq.assign(c, 0.0);
  }

  Matrix temp(h, h);
  for (int ch = 0; ch < c; ++ch) {
    double w1_sq = 0.0;
    for (int r = 0; r < h; ++r) {
      for (int s = 0; s < h; ++s) {
        const double v = nu[at(ch, w, w1.row + r, w1.col + s)];
        w1_sq += v * v;
      }
    }
    double union_sq = w1_sq;
    for (int r = 0; r < h; ++r) {
      for (int s = 0; s < h; ++s) {
        const int row = w2.row + r, col = w2.col + s;
        if (inside(w1, row, col)) continue;
        const double v = nu[at(ch, w, row, col)];
        union_sq += v * v;
      }
    }

    // New content of W1: the signed eta direction plus the normalized old
    // window content. A zero old window contributes nothing.
    const double w1_norm = std::sqrt(w1_sq);
    const Matrix& rho = draws.signs[ch];
    for (int r = 0; r < h; ++r) {
      for (int s = 0; s < h; ++s) {
        double v = rho(r, s) * draws.eta(r, s) / eta_norm;
        if (w1_norm > 0.0) v += nu[at(ch, w, w1.row + r, w1.col + s)] / w1_norm;
        temp(r, s) = v;
      }
    }
    double temp_norm = temp.norm();
    if (temp_norm == 0.0) {
      for (int r = 0; r < h; ++r) {
        for (int s = 0; s < h; ++s) temp(r, s) = rho(r, s) * draws.eta(r, s) / eta_norm;
      }
      temp_norm = temp.norm();
    }
    const double avail = std::sqrt(union_sq + eps_unused_sq / c);
    if (info) {
      info->eps_avail[ch] = avail;
      info->old_union_sq[ch] = union_sq;
    }

    for (int r = 0; r < h; ++r) {
      for (int s = 0; s < h; ++s) nu[at(ch, w, w2.row + r, w2.col + s)] = 0.0;
    }
    for (int r = 0; r < h; ++r) {
      for (int s = 0; s < h; ++s) {
        nu[at(ch, w, w1.row + r, w1.col + s)] = temp(r, s) / temp_norm * avail;
      }
    }
  }

  UpdateProposal p;
  p.delta.resize(x.size());
  for (std::size_t i = 0; i < nu.size(); ++i) p.delta[i] = x[i] + nu[i] - x_hat[i];
  p.windows = {w1, w2};
  return p;
}

UpdateProposal sample_delta_l2(const ImageTensor& x_hat, const ImageTensor& x, double eps, int h,
                               Rng& rng, L2Update update, L2StepInfo* info) {
  const L2Draws draws = draw_l2(h, x.side(), x.channels(), rng, update);
  return apply_l2_update(x_hat, x, eps, draws, info);
}

std::vector<double> init_l2_perturbation(int c, int w, double eps, const L2Variant& variant,
                                         Rng& rng) {
  if (!(eps > 0.0)) throw ValueError("eps must be positive");
  const std::size_t d = static_cast<std::size_t>(c) * w * w;
  std::vector<double> nu(d, 0.0);
  const double corner = eps / std::sqrt(static_cast<double>(d));

  switch (variant.init) {
    case L2Init::EtaGrid: {
      const int tiles = w < 5 ? 1 : 5;
      const int side = w / tiles;
      for (int tr = 0; tr < tiles; ++tr) {
        const int r0 = tr * side;
        const int rows = tr == tiles - 1 ? w - r0 : side;
        for (int tc = 0; tc < tiles; ++tc) {
          const int c0 = tc * side;
          const int cols = tc == tiles - 1 ? w - c0 : side;
          for (int ch = 0; ch < c; ++ch) {
            Matrix tile = pattern(rows, cols, variant.update, rng);
            const Matrix signs = variant.update == L2Update::EtaRandSigns
                                     ? random_signs(rows, cols, rng)
                                     : Matrix(rows, cols, static_cast<double>(rng.rademacher()));
            for (int r = 0; r < rows; ++r) {
              for (int s = 0; s < cols; ++s) nu[at(ch, w, r0 + r, c0 + s)] = tile(r, s) * signs(r, s);
            }
          }
        }
      }
      break;
    }
    case L2Init::Gaussian:
      for (double& v : nu) v = rng.normal();
      break;
    case L2Init::Uniform:
      for (double& v : nu) v = corner * rng.rademacher();
      break;
    case L2Init::VertStripes:
      for (int col = 0; col < w; ++col) {
        for (int ch = 0; ch < c; ++ch) {
          const double s = corner * rng.rademacher();
          for (int row = 0; row < w; ++row) nu[at(ch, w, row, col)] = s;
        }
      }
      break;
  }
  rescale_to(nu, eps);
  return nu;
}

ImageTensor init_l2(const ImageTensor& x, double eps, const L2Variant& variant, Rng& rng) {
  std::vector<double> nu = init_l2_perturbation(x.channels(), x.side(), eps, variant, rng);
  for (std::size_t i = 0; i < nu.size(); ++i) nu[i] += x[i];
  return ImageTensor::clipped(x.channels(), x.side(), std::move(nu));
}

ImageTensor L2Sampler::initialize(const ImageTensor& x, double eps, Rng& rng) const {
  return init_l2(x, eps, variant_, rng);
}

UpdateProposal L2Sampler::propose(const ImageTensor& x_hat, const ImageTensor& x, double eps,
                                  int h, Rng& rng) const {
  return sample_delta_l2(x_hat, x, eps, std::min(h, x.side()), rng, variant_.update);
}

}  // namespace squarebox
