#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace squarebox {

enum class GoalMode { Untargeted, Targeted };

// Untargeted: move away from the true label. Targeted: reach the target class.
struct AttackGoal {
  GoalMode mode = GoalMode::Untargeted;
  std::size_t label = 0;  // true label (untargeted) or target class (targeted)

  static AttackGoal untargeted(std::size_t true_label) { return {GoalMode::Untargeted, true_label}; }
  static AttackGoal targeted(std::size_t target) { return {GoalMode::Targeted, target}; }
};

enum class LossKind { Margin, CrossEntropy };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);
// Margin for untargeted goals, cross-entropy for targeted ones.
LossKind default_loss(GoalMode mode);

// f_y - max_{k != y} f_k. Negative iff some other class scores strictly higher.
double margin_loss(std::span<const double> logits, std::size_t y);

// -f_t + log sum_i exp(f_i), evaluated with a max shift.
double ce_targeted_loss(std::span<const double> logits, std::size_t t);

// Untargeted: argmax != y. Targeted: argmax == t. Ties go to the lowest index.
bool is_adversarial(std::span<const double> logits, const AttackGoal& goal);

// The objective minimized by the attack for the given goal and loss kind.
// Untargeted margin is margin_loss(y); targeted margin is -margin_loss(t);
// targeted cross-entropy is ce_targeted_loss(t); untargeted cross-entropy is
// -ce_targeted_loss(y).
double attack_loss(std::span<const double> logits, const AttackGoal& goal, LossKind kind);

}  // namespace squarebox
