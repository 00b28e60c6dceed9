#pragma once

#include <vector>

#include "squarebox/core.hpp"
#include "squarebox/rng.hpp"

namespace squarebox {

// Axis-aligned window, 0-based. With wraps set, rows and columns past the
// image edge continue from index 0.
struct Window {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;
  bool wraps = false;

  friend bool operator==(const Window&, const Window&) = default;
};

// A raw candidate update delta (image layout, not yet projected) and the
// window geometry it was drawn with. Random-position updates carry no
// windows.
struct UpdateProposal {
  std::vector<double> delta;
  std::vector<Window> windows;
};

// A proposal distribution plus its matching initialization.
class Sampler {
 public:
  virtual ~Sampler() = default;

  virtual Norm norm() const = 0;
  virtual ImageTensor initialize(const ImageTensor& x, double eps, Rng& rng) const = 0;
  virtual UpdateProposal propose(const ImageTensor& x_hat, const ImageTensor& x, double eps,
                                 int h, Rng& rng) const = 0;
};

}  // namespace squarebox
