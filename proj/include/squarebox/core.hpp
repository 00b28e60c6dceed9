#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace squarebox {

enum class Norm { Linf, L2 };

std::string_view to_string(Norm norm);
Norm parse_norm(std::string_view name);

// Perturbation constraint ||x_adv - x||_p <= eps.
class ThreatModel {
 public:
  ThreatModel(Norm norm, double eps);

  Norm norm() const { return norm_; }
  double eps() const { return eps_; }

 private:
  Norm norm_;
  double eps_;
};

// A c x w x w image stored channel-major (channel, row, column) with every
// entry in [0, 1].
class ImageTensor {
 public:
  // Throws ShapeError if data.size() != c*w*w, ValueError if an entry is
  // outside [0, 1] or not finite.
  ImageTensor(int channels, int side, std::vector<double> data);

  // Same as the constructor but clips entries to [0, 1] instead of throwing.
  static ImageTensor clipped(int channels, int side, std::vector<double> data);
  static ImageTensor filled(int channels, int side, double value);

  int channels() const { return channels_; }
  int side() const { return side_; }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double at(int channel, int row, int col) const {
    return data_[index(channel, row, col)];
  }
  std::size_t index(int channel, int row, int col) const {
    return (static_cast<std::size_t>(channel) * side_ + row) * side_ + col;
  }

  bool same_shape(const ImageTensor& other) const {
    return channels_ == other.channels_ && side_ == other.side_;
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  struct Unchecked {};
  ImageTensor(Unchecked, int channels, int side, std::vector<double> data);

  int channels_;
  int side_;
  std::vector<double> data_;
};

// Max-abs for Linf, Euclidean for L2. Empty input gives 0.
double lp_norm(std::span<const double> values, Norm norm);

// ||a - b||_p without materializing the difference.
double lp_distance(std::span<const double> a, std::span<const double> b, Norm norm);

// Projects the raw candidate onto {z : ||z - x||_p <= eps} intersected with
// [0,1]^d. Linf clips componentwise to [x-eps, x+eps] then to [0,1]. L2
// rescales the difference to norm eps when it is larger, then clips to [0,1].
ImageTensor project(std::span<const double> candidate, const ImageTensor& x,
                    const ThreatModel& tm);

}  // namespace squarebox

namespace squarebox {

// Index of the largest entry; ties go to the lowest index. Requires a
// non-empty input.
std::size_t argmax(std::span<const double> values);

}  // namespace squarebox
