#include "squarebox/losses.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "squarebox/core.hpp"
#include "squarebox/errors.hpp"

namespace squarebox {
namespace {

void check_class(std::span<const double> logits, std::size_t k) {
  if (logits.size() < 2) throw ValueError("losses need at least 2 classes");
  if (k >= logits.size()) {
    throw LabelError("class " + std::to_string(k) + " out of range for " +
                     std::to_string(logits.size()) + " logits");
  }
}

}  // namespace

std::string_view to_string(LossKind kind) {
  return kind == LossKind::Margin ? "margin" : "ce";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "margin") return LossKind::Margin;
  if (name == "ce" || name == "cross-entropy") return LossKind::CrossEntropy;
  throw ValueError("unknown loss '" + std::string(name) + "' (expected margin or ce)");
}

LossKind default_loss(GoalMode mode) {
  return mode == GoalMode::Targeted ? LossKind::CrossEntropy : LossKind::Margin;
}

double margin_loss(std::span<const double> logits, std::size_t y) {
  check_class(logits, y);
  double other = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (k != y && logits[k] > other) other = logits[k];
  }
  return logits[y] - other;
}

double ce_targeted_loss(std::span<const double> logits, std::size_t t) {
  check_class(logits, t);
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  return (m - logits[t]) + std::log(sum);
}

bool is_adversarial(std::span<const double> logits, const AttackGoal& goal) {
  check_class(logits, goal.label);
  const std::size_t top = argmax(logits);
  return goal.mode == GoalMode::Untargeted ? top != goal.label : top == goal.label;
}

double attack_loss(std::span<const double> logits, const AttackGoal& goal, LossKind kind) {
  const bool targeted = goal.mode == GoalMode::Targeted;
  if (kind == LossKind::Margin) {
    const double m = margin_loss(logits, goal.label);
    return targeted ? -m : m;
  }
  const double ce = ce_targeted_loss(logits, goal.label);
  return targeted ? ce : -ce;
}

}  // namespace squarebox
