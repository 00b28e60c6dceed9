#pragma once

#include <string_view>
#include <vector>

#include "squarebox/sampling.hpp"

namespace squarebox {

// Dense row-major real matrix for the eta update patterns.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
  const std::vector<double>& values() const { return v_; }

  Matrix transposed() const;
  double norm() const;
  double sum() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> v_;
};

enum class L2Update {
  EtaTwoCenter,  // two opposite-sign centers (the default)
  EtaSingle,     // one center, eta_base(h, h)
  EtaRandSigns,  // two-center pattern times independent per-entry signs
};

enum class L2Init { EtaGrid, Gaussian, Uniform, VertStripes };

struct L2Variant {
  L2Update update = L2Update::EtaTwoCenter;
  L2Init init = L2Init::EtaGrid;
};

std::string_view to_string(L2Update u);
std::string_view to_string(L2Init i);
L2Update parse_l2_update(std::string_view name);
L2Init parse_l2_init(std::string_view name);

// Single-center decaying bump of size h1 x h2 (h1 >= h2 >= 1). With
// n = floor(h1/2) and 1-based (r, s):
//   entry(r, s) = sum_{k=0}^{M(r,s)} 1 / (n + 1 - k)^2,
//   M(r, s) = n - max(|r - floor(h1/2) - 1|, |s - floor(h2/2) - 1|).
Matrix eta_base(int h1, int h2);

// rows x cols pattern with a positive bump on the left half (floor(cols/2)
// columns) and a negative bump on the right half; transpose=true splits
// along rows instead. Halves wider than tall use the transposed bump.
Matrix eta_two_center(int rows, int cols, bool transpose);

// h x h two-center pattern, split direction drawn uniformly.
Matrix eta_square(int h, Rng& rng);

// Everything the l2 proposal draws at random, separated from the
// deterministic update so the update can be checked step by step.
struct L2Draws {
  Window w1;
  Window w2;
  Matrix eta;                 // h x h, unnormalized
  std::vector<Matrix> signs;  // per channel, h x h entries in {-1, +1}
};

// Per-channel bookkeeping of one l2 proposal.
struct L2StepInfo {
  double eps_unused_sq = 0.0;
  std::vector<double> eps_avail;     // per channel
  std::vector<double> old_union_sq;  // ||nu_old restricted to W1 u W2||^2 per channel
};

// Moves perturbation mass from W2 into W1 so that x_hat + delta lies on the
// eps-sphere around x. Requires ||x_hat - x||_2 <= eps.
UpdateProposal apply_l2_update(const ImageTensor& x_hat, const ImageTensor& x, double eps,
                               const L2Draws& draws, L2StepInfo* info = nullptr);

// Draws windows, eta and signs for the variant, then applies them.
L2Draws draw_l2(int h, int w, int c, Rng& rng, L2Update update);
UpdateProposal sample_delta_l2(const ImageTensor& x_hat, const ImageTensor& x, double eps, int h,
                               Rng& rng, L2Update update = L2Update::EtaTwoCenter,
                               L2StepInfo* info = nullptr);

// Starting point on the eps-sphere (before clipping to [0,1]).
//   EtaGrid:     5 x 5 tiling (last row/column absorb the remainder; one tile
//                if w < 5), each tile and channel an independent signed
//                pattern of the variant's update shape.
//   Gaussian:    uniform direction on the sphere.
//   Uniform:     independent +-eps/sqrt(d) per entry.
//   VertStripes: +-eps/sqrt(d) per (column, channel).
ImageTensor init_l2(const ImageTensor& x, double eps, const L2Variant& variant, Rng& rng);
// Unclipped perturbation used by init_l2.
std::vector<double> init_l2_perturbation(int c, int w, double eps, const L2Variant& variant,
                                         Rng& rng);

class L2Sampler final : public Sampler {
 public:
  explicit L2Sampler(L2Variant variant = {}) : variant_(variant) {}

  Norm norm() const override { return Norm::L2; }
  ImageTensor initialize(const ImageTensor& x, double eps, Rng& rng) const override;
  UpdateProposal propose(const ImageTensor& x_hat, const ImageTensor& x, double eps, int h,
                         Rng& rng) const override;

  const L2Variant& variant() const { return variant_; }

 private:
  L2Variant variant_;
};

}  // namespace squarebox
