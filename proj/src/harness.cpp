#include "squarebox/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "blob_io.hpp"
#include "squarebox/errors.hpp"

namespace squarebox {
namespace {

std::vector<std::int64_t> int_array(const nlohmann::json& m, const char* key) {
  const auto& arr = m.at(key);
  if (!arr.is_array()) throw ManifestError(std::string("'") + key + "' must be an array");
  std::vector<std::int64_t> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_integer()) throw LabelError(std::string("'") + key + "' entries must be integers");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

nlohmann::json optional_json(const auto& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

ImageOutcome attack_one(const Classifier& classifier, const Dataset& dataset,
                        const BatchOptions& options, std::size_t idx) {
  ImageOutcome out;
  out.idx = idx;
  const std::int64_t k = static_cast<std::int64_t>(classifier.num_classes());
  const std::int64_t label = dataset.labels[idx];
  const ImageTensor& x = dataset.images[idx];
  try {
    if (label < 0 || label >= k) {
      throw LabelError("label " + std::to_string(label) + " out of range for " +
                       std::to_string(k) + " classes");
    }
    const bool targeted = options.config.goal.mode == GoalMode::Targeted;
    std::int64_t goal_class = label;
    if (targeted) {
      goal_class = dataset.targets ? (*dataset.targets)[idx] : (label + 1) % k;
      if (goal_class < 0 || goal_class >= k) {
        throw LabelError("target " + std::to_string(goal_class) + " out of range for " +
                         std::to_string(k) + " classes");
      }
    }

    const std::size_t clean = argmax(classifier.evaluate(x));
    out.initial_class = clean;
    const bool skip = targeted ? clean == static_cast<std::size_t>(goal_class)
                               : clean != static_cast<std::size_t>(label);
    if (skip) {
      out.skipped = true;
      return out;
    }

    AttackConfig cfg = options.config;
    cfg.goal.label = static_cast<std::size_t>(goal_class);
    for (int r = 0; r < options.restarts; ++r) {
      cfg.seed = restart_seed(options.config.seed, idx, r);
      AttackResult res;
      try {
        res = run_attack(classifier, cfg, x);
      } catch (const AttackAborted& e) {
        out.total_queries += static_cast<std::int64_t>(e.queries_used());
        throw;
      }
      out.total_queries += res.queries_used;
      out.queries = res.queries_used;
      out.final_class = res.final_class;
      out.final_loss = res.final_loss;
      if (res.success) {
        out.success = true;
        out.restart_index = r;
        break;
      }
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    out.success = false;
  }
  return out;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const nlohmann::json m = detail::read_json_manifest(manifest_path);
  Dataset ds;
  std::size_t count = 0;
  int c = 0, w = 0;
  try {
    count = m.at("count").get<std::size_t>();
    const auto& shape = m.at("shape");
    if (!shape.is_array() || shape.size() != 3) throw ShapeError("dataset shape must be [c, w, w]");
    c = shape[0].get<int>();
    w = shape[1].get<int>();
    if (shape[2].get<int>() != w || c <= 0 || w <= 0) {
      throw ShapeError("dataset shape must be [c, w, w] with positive entries");
    }
    ds.labels = int_array(m, "labels");
    if (m.contains("targets")) ds.targets = int_array(m, "targets");
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError("malformed dataset manifest " + manifest_path.string() + ": " + e.what());
  }
  if (ds.labels.size() != count) {
    throw LabelError("dataset declares " + std::to_string(count) + " images but " +
                     std::to_string(ds.labels.size()) + " labels");
  }
  for (std::int64_t l : ds.labels) {
    if (l < 0) throw LabelError("negative label " + std::to_string(l));
  }
  if (ds.targets && ds.targets->size() != count) {
    throw LabelError("dataset targets length does not match count");
  }

  std::filesystem::path blob = manifest_path;
  blob.replace_extension(".bin");
  if (m.contains("blob")) blob = manifest_path.parent_path() / m["blob"].get<std::string>();
  const std::vector<double> flat = detail::read_f32_blob(blob);
  const std::size_t per_image = static_cast<std::size_t>(c) * w * w;
  if (flat.size() < count * per_image) {
    throw TruncatedBlobError("dataset blob holds " + std::to_string(flat.size()) +
                             " values, manifest needs " + std::to_string(count * per_image));
  }
  if (flat.size() > count * per_image) {
    throw ShapeError("dataset blob holds more values than the manifest declares");
  }
  ds.images.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ds.images.emplace_back(c, w, std::vector<double>(flat.begin() + i * per_image,
                                                     flat.begin() + (i + 1) * per_image));
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest_path) {
  if (dataset.images.empty()) throw ValueError("cannot save an empty dataset");
  const ImageTensor& first = dataset.images.front();
  std::vector<double> flat;
  flat.reserve(dataset.size() * first.size());
  for (const auto& img : dataset.images) {
    if (!img.same_shape(first)) throw ShapeError("dataset images must share one shape");
    flat.insert(flat.end(), img.data().begin(), img.data().end());
  }
  std::filesystem::path blob = manifest_path;
  blob.replace_extension(".bin");
  nlohmann::json m = {
      {"count", dataset.size()},
      {"shape", {first.channels(), first.side(), first.side()}},
      {"labels", dataset.labels},
      {"blob", blob.filename().string()},
  };
  if (dataset.targets) m["targets"] = *dataset.targets;
  std::ofstream out(manifest_path);
  if (!out) throw Error("cannot write " + manifest_path.string());
  out << m.dump() << '\n';
  detail::write_f32_blob(blob, flat);
}

std::vector<std::int64_t> default_curve_budgets(std::int64_t n_queries) {
  std::vector<std::int64_t> budgets;
  for (std::int64_t decade = 1; decade < n_queries; decade *= 10) {
    for (std::int64_t m : {1, 2, 5}) {
      if (decade * m < n_queries) budgets.push_back(decade * m);
    }
  }
  budgets.push_back(n_queries);
  return budgets;
}

SuccessCurve aggregate_curve(std::span<const std::optional<std::int64_t>> success_queries,
                             std::span<const std::int64_t> budgets) {
  if (!std::is_sorted(budgets.begin(), budgets.end())) {
    throw ValueError("curve budgets must be sorted ascending");
  }
  SuccessCurve curve;
  curve.reserve(budgets.size());
  const double n = static_cast<double>(success_queries.size());
  for (std::int64_t q : budgets) {
    std::size_t hits = 0;
    for (const auto& s : success_queries) hits += (s && *s <= q) ? 1 : 0;
    curve.emplace_back(q, success_queries.empty() ? 0.0 : static_cast<double>(hits) / n);
  }
  return curve;
}

BatchStats compute_stats(std::span<const ImageOutcome> outcomes,
                         std::span<const std::int64_t> budgets) {
  BatchStats s;
  s.n_points = outcomes.size();
  std::vector<std::optional<std::int64_t>> per_point;
  std::vector<double> success_queries;
  for (const auto& o : outcomes) {
    if (!o.error.empty()) {
      ++s.n_errors;
      continue;
    }
    if (o.skipped) continue;
    ++s.n_initially_correct;
    if (o.success) {
      ++s.n_success;
      success_queries.push_back(static_cast<double>(o.queries));
      per_point.emplace_back(o.queries);
    } else {
      per_point.emplace_back(std::nullopt);
    }
  }
  if (s.n_initially_correct > 0) {
    s.failure_rate = 1.0 - static_cast<double>(s.n_success) /
                               static_cast<double>(s.n_initially_correct);
  }
  if (!success_queries.empty()) {
    double sum = 0.0;
    for (double q : success_queries) sum += q;
    s.avg_queries = sum / static_cast<double>(success_queries.size());
    std::sort(success_queries.begin(), success_queries.end());
    const std::size_t n = success_queries.size();
    s.median_queries = n % 2 == 1 ? success_queries[n / 2]
                                  : 0.5 * (success_queries[n / 2 - 1] + success_queries[n / 2]);
  }
  s.success_curve = aggregate_curve(per_point, budgets);
  return s;
}

std::uint64_t restart_seed(std::uint64_t seed, std::size_t idx, int restart) {
  return seed + static_cast<std::uint64_t>(idx) +
         (static_cast<std::uint64_t>(restart) << 32);
}

BatchReport run_batch(const Classifier& classifier, const Dataset& dataset,
                      const BatchOptions& options) {
  if (options.restarts < 1) throw ValueError("restarts must be at least 1");
  options.config.validate();
  if (dataset.labels.size() != dataset.images.size()) {
    throw LabelError("dataset labels and images differ in length");
  }

  BatchReport report;
  report.images.resize(dataset.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < dataset.size(); i = next.fetch_add(1)) {
      report.images[i] = attack_one(classifier, dataset, options, i);
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(dataset.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  const std::vector<std::int64_t> budgets = options.curve_budgets.empty()
                                                ? default_curve_budgets(options.config.n_queries)
                                                : options.curve_budgets;
  report.stats = compute_stats(report.images, budgets);
  return report;
}

std::string to_json_line(const ImageOutcome& o) {
  nlohmann::ordered_json j;
  j["idx"] = o.idx;
  j["skipped"] = o.skipped;
  j["success"] = o.success;
  j["queries"] = o.attempted() || o.total_queries > 0 ? nlohmann::ordered_json(o.queries)
                                                       : nlohmann::ordered_json(nullptr);
  j["total_queries"] = o.total_queries;
  j["restart_index"] = optional_json(o.restart_index);
  j["initial_class"] = optional_json(o.initial_class);
  j["final_class"] = optional_json(o.final_class);
  j["final_loss"] = optional_json(o.final_loss);
  if (!o.error.empty()) j["error"] = o.error;
  return j.dump();
}

std::string summary_json_line(const BatchStats& s) {
  nlohmann::ordered_json j;
  j["n_points"] = s.n_points;
  j["n_initially_correct"] = s.n_initially_correct;
  j["n_success"] = s.n_success;
  j["n_errors"] = s.n_errors;
  j["failure_rate"] = optional_json(s.failure_rate);
  j["avg_queries"] = optional_json(s.avg_queries);
  j["median_queries"] = optional_json(s.median_queries);
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const auto& [q, rate] : s.success_curve) curve.push_back({q, rate});
  j["success_curve"] = curve;
  nlohmann::ordered_json wrapper;
  wrapper["summary"] = j;
  return wrapper.dump();
}

void write_jsonl(std::ostream& out, const BatchReport& report) {
  for (const auto& o : report.images) out << to_json_line(o) << '\n';
  out << summary_json_line(report.stats) << '\n';
}

void write_curve_csv(std::ostream& out, const SuccessCurve& curve) {
  out << "budget,success_rate\n";
  for (const auto& [q, rate] : curve) out << q << ',' << nlohmann::json(rate).dump() << '\n';
}

}  // namespace squarebox
