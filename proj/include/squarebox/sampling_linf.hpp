#pragma once

#include <string_view>

#include "squarebox/sampling.hpp"

namespace squarebox {

// Update shapes of the l-infinity ablation grid. The suffix is the number of
// independent random signs: C one per channel, CH2 one per entry, 1 a single
// sign for the whole update.
enum class LinfUpdate {
  SquareC,    // h x h window, one sign per channel (the default)
  SquareCH2,  // h x h window with wraparound, one sign per entry
  Square1,    // h x h window, one sign shared by all channels
  RectC,      // exponential-scaled rectangle, one sign per channel
  RandomCH2,  // h*h scattered pixels, one sign per entry
  RandomC,    // h*h scattered pixels, one sign per channel
};

enum class LinfInit { VertStripes, HorizStripes, UniformRandom, RandomSquares };

struct LinfVariant {
  LinfUpdate update = LinfUpdate::SquareC;
  LinfInit init = LinfInit::VertStripes;
};

std::string_view to_string(LinfUpdate u);
std::string_view to_string(LinfInit i);
LinfUpdate parse_linf_update(std::string_view name);
LinfInit parse_linf_init(std::string_view name);

// Starting point inside the eps-ball, clipped to [0,1].
//   VertStripes:   one sign per (column, channel), x +- eps.
//   HorizStripes:  one sign per (row, channel).
//   UniformRandom: independent sign per entry.
//   RandomSquares: 5 squares of side square_side at uniform positions, each
//                  filled with a per-channel +-eps; untouched pixels stay x.
ImageTensor init_linf(const ImageTensor& x, double eps, LinfInit init, Rng& rng,
                      int square_side = 1);

// Raw update with entries in {-2eps, 0, +2eps}. Requires 1 <= h <= w.
UpdateProposal sample_delta_linf(double eps, int h, int w, int c, Rng& rng,
                                 LinfUpdate update = LinfUpdate::SquareC);

class LinfSampler final : public Sampler {
 public:
  // p_init sizes the RandomSquares initialization.
  explicit LinfSampler(LinfVariant variant = {}, double p_init = 0.05)
      : variant_(variant), p_init_(p_init) {}

  Norm norm() const override { return Norm::Linf; }
  ImageTensor initialize(const ImageTensor& x, double eps, Rng& rng) const override;
  UpdateProposal propose(const ImageTensor& x_hat, const ImageTensor& x, double eps, int h,
                         Rng& rng) const override;

  const LinfVariant& variant() const { return variant_; }

 private:
  LinfVariant variant_;
  double p_init_;
};

}  // namespace squarebox
