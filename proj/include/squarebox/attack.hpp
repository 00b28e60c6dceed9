#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "squarebox/core.hpp"
#include "squarebox/inference.hpp"
#include "squarebox/losses.hpp"
#include "squarebox/sampling.hpp"
#include "squarebox/sampling_l2.hpp"
#include "squarebox/sampling_linf.hpp"
#include "squarebox/schedule.hpp"

namespace squarebox {

struct SamplerSpec {
  LinfVariant linf;
  L2Variant l2;
};

struct AttackConfig {
  ThreatModel tm{Norm::Linf, 0.05};
  std::int64_t n_queries = 10000;
  double p_init = 0.05;
  AttackGoal goal;
  // Unset means the goal's default (margin untargeted, cross-entropy targeted).
  std::optional<LossKind> loss;
  std::uint64_t seed = 0;
  SamplerSpec sampler;
  // Compare candidates against the loss of the clean input instead of the
  // initialization; the first query then evaluates x itself.
  bool literal_init_loss = false;
  // Skip the query when the projected candidate equals the current iterate.
  bool skip_null_updates = false;

  void validate() const;
  LossKind loss_kind() const { return loss.value_or(default_loss(goal.mode)); }
};

struct AttackResult {
  bool success = false;
  std::int64_t queries_used = 0;
  // Best loss after each query; non-increasing.
  std::vector<double> loss_trace;
  ImageTensor final_image = ImageTensor::filled(1, 1, 0.0);
  // Class of the first queried point and of the final iterate.
  std::size_t initial_class = 0;
  std::size_t final_class = 0;
  double final_loss = 0.0;
};

// One evaluated candidate, reported to an optional observer.
struct QueryEvent {
  std::int64_t query_index = 0;  // 1-based
  std::int64_t iteration = 0;    // 0 for the initial query
  int side = 0;                  // window side used (0 for the initial query)
  const ImageTensor* candidate = nullptr;
  const std::vector<double>* logits = nullptr;
  double loss = 0.0;
  bool accepted = false;
};
using QueryObserver = std::function<void(const QueryEvent&)>;

std::unique_ptr<Sampler> make_sampler(Norm norm, const SamplerSpec& spec, double p_init);

// Random search with square-shaped proposals. The first query evaluates the
// initialization (or x, with literal_init_loss); each later query evaluates
// a projected candidate, which replaces the iterate only if its loss is
// strictly smaller. Stops on success or after n_queries queries.
// Classifier exceptions are rethrown as AttackAborted carrying the number of
// queries completed.
AttackResult run_attack(const Classifier& classifier, const AttackConfig& config,
                        const ImageTensor& x, const QueryObserver& observer = {});
AttackResult run_attack(const Classifier& classifier, const AttackConfig& config,
                        const Sampler& sampler, const ImageTensor& x,
                        const QueryObserver& observer = {});

}  // namespace squarebox
