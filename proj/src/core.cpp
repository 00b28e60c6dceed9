#include "squarebox/core.hpp"

#include <algorithm>
#include <cmath>

#include "squarebox/errors.hpp"

namespace squarebox {

std::string_view to_string(Norm norm) {
  return norm == Norm::Linf ? "linf" : "l2";
}

Norm parse_norm(std::string_view name) {
  if (name == "linf") return Norm::Linf;
  if (name == "l2") return Norm::L2;
  throw ValueError("unknown norm '" + std::string(name) + "' (expected linf or l2)");
}

ThreatModel::ThreatModel(Norm norm, double eps) : norm_(norm), eps_(eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw ValueError("threat model radius must be positive and finite");
  }
}

ImageTensor::ImageTensor(Unchecked, int channels, int side, std::vector<double> data)
    : channels_(channels), side_(side), data_(std::move(data)) {
  if (channels <= 0 || side <= 0) {
    throw ShapeError("image channels and side must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(channels) * side * side) {
    throw ShapeError("image data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(channels) + "x" +
                     std::to_string(side) + "x" + std::to_string(side));
  }
}

ImageTensor::ImageTensor(int channels, int side, std::vector<double> data)
    : ImageTensor(Unchecked{}, channels, side, std::move(data)) {
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValueError("image entries must lie in [0, 1]");
    }
  }
}

ImageTensor ImageTensor::clipped(int channels, int side, std::vector<double> data) {
  for (double& v : data) {
    if (std::isnan(v)) throw ValueError("image entries must not be NaN");
    v = std::clamp(v, 0.0, 1.0);
  }
  return ImageTensor(Unchecked{}, channels, side, std::move(data));
}

ImageTensor ImageTensor::filled(int channels, int side, double value) {
  if (channels <= 0 || side <= 0) throw ShapeError("image channels and side must be positive");
  return ImageTensor(channels, side,
                     std::vector<double>(static_cast<std::size_t>(channels) * side * side, value));
}

double lp_norm(std::span<const double> values, Norm norm) {
  if (norm == Norm::Linf) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double lp_distance(std::span<const double> a, std::span<const double> b, Norm norm) {
  if (a.size() != b.size()) throw ShapeError("lp_distance: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc = norm == Norm::Linf ? std::max(acc, std::abs(d)) : acc + d * d;
  }
  return norm == Norm::Linf ? acc : std::sqrt(acc);
}

ImageTensor project(std::span<const double> candidate, const ImageTensor& x,
                    const ThreatModel& tm) {
  if (candidate.size() != x.size()) {
    throw ShapeError("project: candidate has " + std::to_string(candidate.size()) +
                     " entries, reference has " + std::to_string(x.size()));
  }
  const double eps = tm.eps();
  std::vector<double> out(candidate.begin(), candidate.end());
  if (tm.norm() == Norm::Linf) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::clamp(out[i], x[i] - eps, x[i] + eps);
    }
  } else {
    const double dist = lp_distance(candidate, x.data(), Norm::L2);
    if (dist > eps) {
      const double scale = eps / dist;
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[i] + (out[i] - x[i]) * scale;
      }
    }
  }
  return ImageTensor::clipped(x.channels(), x.side(), std::move(out));
}

}  // namespace squarebox

namespace squarebox {

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ShapeError("argmax of an empty array");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace squarebox
