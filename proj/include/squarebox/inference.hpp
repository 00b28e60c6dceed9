#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "squarebox/core.hpp"

namespace squarebox {

enum class LayerKind { Dense, Conv2d, ReLU, Softplus, Flatten };

std::string_view to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::Flatten;
  // Dense
  int in_dim = 0;
  int out_dim = 0;
  // Conv2d
  int in_channels = 0;
  int out_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int padding = 0;

  static LayerSpec dense(int in_dim, int out_dim);
  static LayerSpec conv2d(int in_channels, int out_channels, int kernel_h, int kernel_w,
                          int stride = 1, int padding = 0);
  static LayerSpec relu() { return {.kind = LayerKind::ReLU}; }
  static LayerSpec softplus() { return {.kind = LayerKind::Softplus}; }
  static LayerSpec flatten() { return {.kind = LayerKind::Flatten}; }

  bool parametric() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
  // Weight count including bias; zero for non-parametric layers.
  std::size_t parameter_count() const;
};

// (channels, height, width). Dense layers produce (n, 1, 1).
using Shape3 = std::array<int, 3>;

// Immutable feed-forward network. Dense weights are row-major (out x in)
// followed by the bias; Conv2d weights are (out, in, kh, kw) followed by the
// bias. Dense layers accept any input whose total size equals in_dim.
class Model {
 public:
  // Validates that shapes compose, that every parametric layer got exactly
  // parameter_count() values (weights holds one flat array per parametric
  // layer, in order), and that the output has num_classes >= 2 entries.
  Model(Shape3 input_shape, int num_classes, std::vector<LayerSpec> layers,
        std::vector<std::vector<double>> weights);

  const Shape3& input_shape() const { return input_shape_; }
  int num_classes() const { return num_classes_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const std::vector<std::vector<double>>& weights() const { return weights_; }
  std::size_t parameter_count() const;

  std::vector<double> forward(const ImageTensor& image) const;

 private:
  Shape3 input_shape_;
  int num_classes_;
  std::vector<LayerSpec> layers_;
  // One entry per layer; empty for non-parametric layers.
  std::vector<std::vector<double>> weights_;
  // Output shape of each layer.
  std::vector<Shape3> shapes_;
};

// Reads a JSON manifest and the f32 little-endian weight blob it names
// (the "weights" field, resolved relative to the manifest).
Model load_model(const std::filesystem::path& manifest_path);
// Writes manifest_path plus a sibling .bin blob.
void save_model(const Model& model, const std::filesystem::path& manifest_path);

std::vector<double> forward(const Model& model, const ImageTensor& image);
std::size_t predict(const Model& model, const ImageTensor& image);

// Score-returning black box. query() is what an attacker pays for: it bumps
// an atomic counter exactly once per call. evaluate() is the uncounted
// implementation hook.
class Classifier {
 public:
  virtual ~Classifier() = default;

  std::vector<double> query(const ImageTensor& image) const {
    count_.fetch_add(1, std::memory_order_relaxed);
    return evaluate(image);
  }
  std::uint64_t query_count() const { return count_.load(std::memory_order_relaxed); }
  void reset_query_count() { count_.store(0, std::memory_order_relaxed); }

  virtual std::size_t num_classes() const = 0;
  virtual std::vector<double> evaluate(const ImageTensor& image) const = 0;

 private:
  mutable std::atomic<std::uint64_t> count_{0};
};

class LocalClassifier final : public Classifier {
 public:
  explicit LocalClassifier(const Model& model) : model_(model) {}

  std::size_t num_classes() const override { return model_.num_classes(); }
  std::vector<double> evaluate(const ImageTensor& image) const override {
    return model_.forward(image);
  }

 private:
  const Model& model_;
};

// POSTs {"shape":[c,w,w],"image":[...]} to {endpoint}/logits and decodes
// {"logits":[...]}. expected_classes == 0 accepts any length >= 2.
std::vector<double> query_remote(const std::string& endpoint, const ImageTensor& image,
                                 std::chrono::milliseconds timeout,
                                 std::size_t expected_classes = 0);

class RemoteClassifier final : public Classifier {
 public:
  RemoteClassifier(std::string endpoint, std::size_t num_classes,
                   std::chrono::milliseconds timeout = std::chrono::seconds(10));

  std::size_t num_classes() const override { return num_classes_; }
  std::vector<double> evaluate(const ImageTensor& image) const override;

 private:
  std::string endpoint_;
  std::size_t num_classes_;
  std::chrono::milliseconds timeout_;
};

}  // namespace squarebox
