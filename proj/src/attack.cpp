#include "squarebox/attack.hpp"

#include <string>

#include "squarebox/errors.hpp"

namespace squarebox {

void AttackConfig::validate() const {
  if (n_queries < 1) throw ValueError("query budget must be at least 1");
  if (!(p_init > 0.0 && p_init <= 1.0)) throw ValueError("p_init must lie in (0, 1]");
}

std::unique_ptr<Sampler> make_sampler(Norm norm, const SamplerSpec& spec, double p_init) {
  if (norm == Norm::Linf) return std::make_unique<LinfSampler>(spec.linf, p_init);
  return std::make_unique<L2Sampler>(spec.l2);
}

AttackResult run_attack(const Classifier& classifier, const AttackConfig& config,
                        const ImageTensor& x, const QueryObserver& observer) {
  const auto sampler = make_sampler(config.tm.norm(), config.sampler, config.p_init);
  return run_attack(classifier, config, *sampler, x, observer);
}

AttackResult run_attack(const Classifier& classifier, const AttackConfig& config,
                        const Sampler& sampler, const ImageTensor& x,
                        const QueryObserver& observer) {
  config.validate();
  if (sampler.norm() != config.tm.norm()) {
    throw ValueError("sampler norm does not match the threat model");
  }
  if (config.goal.label >= classifier.num_classes()) {
    throw LabelError("class " + std::to_string(config.goal.label) + " out of range for " +
                     std::to_string(classifier.num_classes()) + " classes");
  }

  Rng rng(config.seed);
  const double eps = config.tm.eps();
  const LossKind loss_kind = config.loss_kind();
  const AttackGoal& goal = config.goal;

  AttackResult res;
  std::int64_t queries = 0;
  auto ask = [&](const ImageTensor& image) {
    try {
      std::vector<double> logits = classifier.query(image);
      ++queries;
      return logits;
    } catch (const std::exception& e) {
      throw AttackAborted(queries, std::string("classifier failed after ") +
                                       std::to_string(queries) + " queries: " + e.what());
    }
  };

  ImageTensor x_hat = sampler.initialize(x, eps, rng);
  const ImageTensor& first = config.literal_init_loss ? x : x_hat;
  std::vector<double> logits = ask(first);
  double best = attack_loss(logits, goal, loss_kind);
  bool adversarial = is_adversarial(logits, goal);
  res.initial_class = argmax(logits);
  res.final_class = res.initial_class;
  if (config.literal_init_loss && adversarial) x_hat = x;
  res.loss_trace.push_back(best);
  if (observer) {
    observer(QueryEvent{.query_index = 1,
                        .candidate = &first,
                        .logits = &logits,
                        .loss = best,
                        .accepted = true});
  }

  const int w = x.side();
  std::vector<double> raw(x.size());
  for (std::int64_t i = 1; i < config.n_queries && !adversarial; ++i) {
    const int h = side_length(p_schedule(i, config.n_queries, config.p_init), w,
                              config.tm.norm());
    const UpdateProposal proposal = sampler.propose(x_hat, x, eps, h, rng);
    for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = x_hat[k] + proposal.delta[k];
    ImageTensor x_new = project(raw, x, config.tm);
    if (config.skip_null_updates && x_new == x_hat) continue;

    logits = ask(x_new);
    const double loss = attack_loss(logits, goal, loss_kind);
    const bool accepted = loss < best;
    if (observer) {
      observer(QueryEvent{.query_index = queries,
                          .iteration = i,
                          .side = h,
                          .candidate = &x_new,
                          .logits = &logits,
                          .loss = loss,
                          .accepted = accepted});
    }
    if (accepted) {
      x_hat = std::move(x_new);
      best = loss;
      adversarial = is_adversarial(logits, goal);
      res.final_class = argmax(logits);
    }
    res.loss_trace.push_back(best);
  }

  res.success = adversarial;
  res.queries_used = queries;
  res.final_loss = best;
  res.final_image = std::move(x_hat);
  return res;
}

}  // namespace squarebox
