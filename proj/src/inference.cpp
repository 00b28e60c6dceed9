#include "squarebox/inference.hpp"

#include <algorithm>
#include <cmath>

#include "blob_io.hpp"
#include "squarebox/errors.hpp"

namespace squarebox {
namespace {

std::size_t shape_size(const Shape3& s) {
  return static_cast<std::size_t>(s[0]) * s[1] * s[2];
}

std::string shape_str(const Shape3& s) {
  return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]);
}

Shape3 output_shape(const LayerSpec& layer, const Shape3& in, std::size_t index) {
  const std::string where = "layer " + std::to_string(index) + " (" +
                            std::string(to_string(layer.kind)) + ")";
  switch (layer.kind) {
    case LayerKind::Dense:
      if (layer.in_dim <= 0 || layer.out_dim <= 0) {
        throw ShapeError(where + ": dimensions must be positive");
      }
      if (shape_size(in) != static_cast<std::size_t>(layer.in_dim)) {
        throw ShapeError(where + ": expects " + std::to_string(layer.in_dim) +
                         " inputs, previous layer produces " + shape_str(in));
      }
      return {layer.out_dim, 1, 1};
    case LayerKind::Conv2d: {
      if (layer.kernel_h <= 0 || layer.kernel_w <= 0) {
        throw ShapeError(where + ": kernel sizes must be positive");
      }
      if (layer.in_channels <= 0 || layer.out_channels <= 0 || layer.stride <= 0 ||
          layer.padding < 0) {
        throw ShapeError(where + ": invalid channels, stride or padding");
      }
      if (in[0] != layer.in_channels) {
        throw ShapeError(where + ": expects " + std::to_string(layer.in_channels) +
                         " input channels, got " + shape_str(in));
      }
      const int oh = (in[1] + 2 * layer.padding - layer.kernel_h) / layer.stride + 1;
      const int ow = (in[2] + 2 * layer.padding - layer.kernel_w) / layer.stride + 1;
      if (in[1] + 2 * layer.padding < layer.kernel_h ||
          in[2] + 2 * layer.padding < layer.kernel_w || oh <= 0 || ow <= 0) {
        throw ShapeError(where + ": kernel larger than padded input " + shape_str(in));
      }
      return {layer.out_channels, oh, ow};
    }
    case LayerKind::ReLU:
    case LayerKind::Softplus:
      return in;
    case LayerKind::Flatten:
      return {static_cast<int>(shape_size(in)), 1, 1};
  }
  throw UnknownLayerError("unknown layer kind");
}

double softplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

void conv2d(const LayerSpec& L, const std::vector<double>& w, const Shape3& in,
            const Shape3& out, std::span<const double> src, std::vector<double>& dst) {
  const int ih = in[1], iw = in[2];
  const int oh = out[1], ow = out[2];
  const std::size_t kernel_size = static_cast<std::size_t>(L.in_channels) * L.kernel_h * L.kernel_w;
  const double* bias = w.data() + static_cast<std::size_t>(L.out_channels) * kernel_size;
  dst.assign(static_cast<std::size_t>(L.out_channels) * oh * ow, 0.0);
  for (int o = 0; o < L.out_channels; ++o) {
    const double* kern = w.data() + o * kernel_size;
    double* plane = dst.data() + static_cast<std::size_t>(o) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      const int y0 = y * L.stride - L.padding;
      const int ky_lo = std::max(0, -y0);
      const int ky_hi = std::min(L.kernel_h, ih - y0);
      for (int x = 0; x < ow; ++x) {
        const int x0 = x * L.stride - L.padding;
        const int kx_lo = std::max(0, -x0);
        const int kx_hi = std::min(L.kernel_w, iw - x0);
        double acc = bias[o];
        for (int c = 0; c < L.in_channels; ++c) {
          const double* img = src.data() + static_cast<std::size_t>(c) * ih * iw;
          const double* k = kern + static_cast<std::size_t>(c) * L.kernel_h * L.kernel_w;
          for (int ky = ky_lo; ky < ky_hi; ++ky) {
            const double* row = img + static_cast<std::size_t>(y0 + ky) * iw + x0;
            const double* krow = k + ky * L.kernel_w;
            for (int kx = kx_lo; kx < kx_hi; ++kx) acc += krow[kx] * row[kx];
          }
        }
        plane[static_cast<std::size_t>(y) * ow + x] = acc;
      }
    }
  }
}

void dense(const LayerSpec& L, const std::vector<double>& w, std::span<const double> src,
           std::vector<double>& dst) {
  const std::size_t in = L.in_dim;
  const double* bias = w.data() + static_cast<std::size_t>(L.out_dim) * in;
  dst.resize(L.out_dim);
  for (int o = 0; o < L.out_dim; ++o) {
    const double* row = w.data() + o * in;
    double acc = bias[o];
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * src[i];
    dst[o] = acc;
  }
}

int require_int(const nlohmann::json& obj, const char* key, std::size_t layer) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer()) {
    throw ManifestError("layer " + std::to_string(layer) + ": missing integer field '" + key + "'");
  }
  return it->get<int>();
}

LayerKind parse_layer_kind(const std::string& name) {
  if (name == "dense") return LayerKind::Dense;
  if (name == "conv2d") return LayerKind::Conv2d;
  if (name == "relu") return LayerKind::ReLU;
  if (name == "softplus") return LayerKind::Softplus;
  if (name == "flatten") return LayerKind::Flatten;
  throw UnknownLayerError("unknown layer kind '" + name + "'");
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Softplus: return "softplus";
    case LayerKind::Flatten: return "flatten";
  }
  return "?";
}

LayerSpec LayerSpec::dense(int in_dim, int out_dim) {
  return {.kind = LayerKind::Dense, .in_dim = in_dim, .out_dim = out_dim};
}

LayerSpec LayerSpec::conv2d(int in_channels, int out_channels, int kernel_h, int kernel_w,
                            int stride, int padding) {
  return {.kind = LayerKind::Conv2d,
          .in_channels = in_channels,
          .out_channels = out_channels,
          .kernel_h = kernel_h,
          .kernel_w = kernel_w,
          .stride = stride,
          .padding = padding};
}

std::size_t LayerSpec::parameter_count() const {
  switch (kind) {
    case LayerKind::Dense:
      return static_cast<std::size_t>(out_dim) * in_dim + out_dim;
    case LayerKind::Conv2d:
      return static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w +
             out_channels;
    default:
      return 0;
  }
}

Model::Model(Shape3 input_shape, int num_classes, std::vector<LayerSpec> layers,
             std::vector<std::vector<double>> weights)
    : input_shape_(input_shape), num_classes_(num_classes), layers_(std::move(layers)) {
  if (num_classes_ < 2) throw ValueError("model needs at least 2 classes");
  if (input_shape_[0] <= 0 || input_shape_[1] <= 0 || input_shape_[2] <= 0) {
    throw ShapeError("input shape must be positive");
  }
  Shape3 shape = input_shape_;
  std::size_t next_weight = 0;
  weights_.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    shape = output_shape(layers_[i], shape, i);
    shapes_.push_back(shape);
    if (!layers_[i].parametric()) continue;
    if (next_weight >= weights.size()) {
      throw WeightCountError("no weights supplied for layer " + std::to_string(i));
    }
    auto& w = weights[next_weight++];
    if (w.size() != layers_[i].parameter_count()) {
      throw WeightCountError("layer " + std::to_string(i) + " needs " +
                             std::to_string(layers_[i].parameter_count()) + " values, got " +
                             std::to_string(w.size()));
    }
    weights_[i] = std::move(w);
  }
  if (next_weight != weights.size()) {
    throw WeightCountError("more weight arrays than parametric layers");
  }
  if (shape_size(shape) != static_cast<std::size_t>(num_classes_)) {
    throw ShapeError("network output " + shape_str(shape) + " does not match " +
                     std::to_string(num_classes_) + " classes");
  }
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.parameter_count();
  return n;
}

std::vector<double> Model::forward(const ImageTensor& image) const {
  if (image.channels() != input_shape_[0] || image.side() != input_shape_[1] ||
      image.side() != input_shape_[2]) {
    throw ShapeError("image " + std::to_string(image.channels()) + "x" +
                     std::to_string(image.side()) + "x" + std::to_string(image.side()) +
                     " does not match model input " + shape_str(input_shape_));
  }
  std::vector<double> cur(image.data().begin(), image.data().end());
  std::vector<double> next;
  Shape3 shape = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& L = layers_[i];
    const Shape3& out = shapes_[i];
    switch (L.kind) {
      case LayerKind::Dense:
        dense(L, weights_[i], cur, next);
        cur.swap(next);
        break;
      case LayerKind::Conv2d:
        conv2d(L, weights_[i], shape, out, cur, next);
        cur.swap(next);
        break;
      case LayerKind::ReLU:
        for (double& v : cur) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::Softplus:
        for (double& v : cur) v = softplus(v);
        break;
      case LayerKind::Flatten:
        break;
    }
    shape = out;
  }
  return cur;
}

std::vector<double> forward(const Model& model, const ImageTensor& image) {
  return model.forward(image);
}

std::size_t predict(const Model& model, const ImageTensor& image) {
  return argmax(model.forward(image));
}

Model load_model(const std::filesystem::path& manifest_path) {
  const nlohmann::json m = detail::read_json_manifest(manifest_path);
  if (!m.is_object()) throw ManifestError("model manifest must be a JSON object");

  auto shape_it = m.find("input_shape");
  if (shape_it == m.end() || !shape_it->is_array() || shape_it->size() != 3) {
    throw ManifestError("model manifest needs input_shape [c, h, w]");
  }
  Shape3 input{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(*shape_it)[i].is_number_integer()) throw ManifestError("input_shape entries must be integers");
    input[i] = (*shape_it)[i].get<int>();
  }
  auto k_it = m.find("num_classes");
  if (k_it == m.end() || !k_it->is_number_integer()) {
    throw ManifestError("model manifest needs integer num_classes");
  }
  auto layers_it = m.find("layers");
  if (layers_it == m.end() || !layers_it->is_array()) {
    throw ManifestError("model manifest needs a layers array");
  }

  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < layers_it->size(); ++i) {
    const auto& jl = (*layers_it)[i];
    if (!jl.is_object() || !jl.contains("kind") || !jl["kind"].is_string()) {
      throw ManifestError("layer " + std::to_string(i) + ": missing kind");
    }
    LayerSpec spec;
    spec.kind = parse_layer_kind(jl["kind"].get<std::string>());
    if (spec.kind == LayerKind::Dense) {
      spec.in_dim = require_int(jl, "in_dim", i);
      spec.out_dim = require_int(jl, "out_dim", i);
    } else if (spec.kind == LayerKind::Conv2d) {
      spec.in_channels = require_int(jl, "in_channels", i);
      spec.out_channels = require_int(jl, "out_channels", i);
      spec.kernel_h = require_int(jl, "kernel_h", i);
      spec.kernel_w = require_int(jl, "kernel_w", i);
      spec.stride = jl.contains("stride") ? require_int(jl, "stride", i) : 1;
      spec.padding = jl.contains("padding") ? require_int(jl, "padding", i) : 0;
    }
    layers.push_back(spec);
  }

  std::filesystem::path blob = manifest_path;
  blob.replace_extension(".bin");
  if (auto w = m.find("weights"); w != m.end()) {
    if (!w->is_string()) throw ManifestError("weights must be a file name");
    blob = manifest_path.parent_path() / w->get<std::string>();
  }
  std::vector<double> flat;
  try {
    flat = detail::read_f32_blob(blob);
  } catch (const TruncatedBlobError& e) {
    throw WeightCountError(e.what());
  }

  std::size_t expected = 0;
  for (const auto& l : layers) expected += l.parameter_count();
  if (flat.size() != expected) {
    throw WeightCountError("weight blob holds " + std::to_string(flat.size()) +
                           " values, layers need " + std::to_string(expected));
  }
  std::vector<std::vector<double>> weights;
  std::size_t offset = 0;
  for (const auto& l : layers) {
    if (!l.parametric()) continue;
    const std::size_t n = l.parameter_count();
    weights.emplace_back(flat.begin() + offset, flat.begin() + offset + n);
    offset += n;
  }
  return Model(input, k_it->get<int>(), std::move(layers), std::move(weights));
}

void save_model(const Model& model, const std::filesystem::path& manifest_path) {
  nlohmann::json layers = nlohmann::json::array();
  std::vector<double> flat;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const LayerSpec& l = model.layers()[i];
    nlohmann::json jl = {{"kind", to_string(l.kind)}};
    if (l.kind == LayerKind::Dense) {
      jl["in_dim"] = l.in_dim;
      jl["out_dim"] = l.out_dim;
    } else if (l.kind == LayerKind::Conv2d) {
      jl["in_channels"] = l.in_channels;
      jl["out_channels"] = l.out_channels;
      jl["kernel_h"] = l.kernel_h;
      jl["kernel_w"] = l.kernel_w;
      jl["stride"] = l.stride;
      jl["padding"] = l.padding;
    }
    layers.push_back(jl);
    const auto& w = model.weights()[i];
    flat.insert(flat.end(), w.begin(), w.end());
  }
  std::filesystem::path blob = manifest_path;
  blob.replace_extension(".bin");
  const nlohmann::json m = {
      {"input_shape", model.input_shape()},
      {"num_classes", model.num_classes()},
      {"weights", blob.filename().string()},
      {"layers", layers},
  };
  std::ofstream out(manifest_path);
  if (!out) throw Error("cannot write " + manifest_path.string());
  out << m.dump(2) << '\n';
  detail::write_f32_blob(blob, flat);
}

}  // namespace squarebox
