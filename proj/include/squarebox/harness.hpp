#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "squarebox/attack.hpp"
#include "squarebox/core.hpp"
#include "squarebox/inference.hpp"

namespace squarebox {

struct Dataset {
  std::vector<ImageTensor> images;
  std::vector<std::int64_t> labels;
  // Targeted mode only. When absent the target is (label + 1) mod K.
  std::optional<std::vector<std::int64_t>> targets;

  std::size_t size() const { return images.size(); }
};

// Manifest: {"count", "shape":[c,w,w], "labels":[...], "targets":[...]?,
// "blob": file}. The blob holds count*c*w*w little-endian f32 values,
// images concatenated channel-major. Labels are checked against the model
// only at attack time.
Dataset load_dataset(const std::filesystem::path& manifest_path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest_path);

struct BatchOptions {
  // Template for every run; goal.label and seed are set per image.
  AttackConfig config;
  int restarts = 1;
  int jobs = 1;
  // Budgets for the success-rate curve. Empty picks a default ladder ending
  // at config.n_queries.
  std::vector<std::int64_t> curve_budgets;
};

struct ImageOutcome {
  std::size_t idx = 0;
  bool skipped = false;
  bool success = false;
  // Queries of the successful restart, or of the last restart on failure.
  std::int64_t queries = 0;
  std::int64_t total_queries = 0;  // across all restarts
  std::optional<int> restart_index;
  std::optional<std::size_t> initial_class;  // clean-input prediction
  std::optional<std::size_t> final_class;
  std::optional<double> final_loss;
  std::string error;  // non-empty if the image could not be attacked

  bool attempted() const { return !skipped && error.empty(); }
};

using SuccessCurve = std::vector<std::pair<std::int64_t, double>>;

struct BatchStats {
  std::size_t n_points = 0;
  std::size_t n_initially_correct = 0;
  std::size_t n_success = 0;
  std::size_t n_errors = 0;
  // Undefined (nullopt) when the denominator is empty.
  std::optional<double> failure_rate;
  // Over successful attacks on initially correct points only.
  std::optional<double> avg_queries;
  std::optional<double> median_queries;
  SuccessCurve success_curve;
};

struct BatchReport {
  std::vector<ImageOutcome> images;
  BatchStats stats;
};

// Default budgets 1, 2, 5, 10, 20, 50, ... below n_queries, then n_queries.
std::vector<std::int64_t> default_curve_budgets(std::int64_t n_queries);

// Each entry is one initially correct point: the query count of its success,
// or nullopt for a failure. Budgets must be ascending.
SuccessCurve aggregate_curve(std::span<const std::optional<std::int64_t>> success_queries,
                             std::span<const std::int64_t> budgets);

BatchStats compute_stats(std::span<const ImageOutcome> outcomes,
                         std::span<const std::int64_t> budgets);

// Restart r of image idx uses seed + idx + r * 2^32.
std::uint64_t restart_seed(std::uint64_t seed, std::size_t idx, int restart);

// Attacks every image, up to jobs at a time. Points the classifier already
// gets wrong (untargeted) or already assigns to the target (targeted) are
// skipped; this screening uses the uncounted Classifier::evaluate. Per-image
// failures are recorded in the outcome and the batch continues.
BatchReport run_batch(const Classifier& classifier, const Dataset& dataset,
                      const BatchOptions& options);

// One JSON object per image in index order, then {"summary": {...}}.
void write_jsonl(std::ostream& out, const BatchReport& report);
std::string to_json_line(const ImageOutcome& outcome);
std::string summary_json_line(const BatchStats& stats);
// "budget,success_rate" rows.
void write_curve_csv(std::ostream& out, const SuccessCurve& curve);

}  // namespace squarebox
