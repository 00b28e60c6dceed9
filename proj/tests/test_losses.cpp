#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "squarebox/errors.hpp"
#include "squarebox/losses.hpp"
#include "squarebox/rng.hpp"

using namespace squarebox;
using V = std::vector<double>;

TEST_CASE("margin_loss examples") {
  CHECK(margin_loss(V{2, 5, 3}, 1) == 2.0);
  CHECK(margin_loss(V{5, 2, 3}, 1) == -3.0);
  for (double c : {-4.0, 0.0, 17.5}) CHECK(margin_loss(V{c, c}, 0) == 0.0);
  CHECK_THROWS_AS(margin_loss(V{1.0}, 0), ValueError);
  CHECK_THROWS_AS(margin_loss(V{1, 2}, 2), LabelError);
}

TEST_CASE("ce_targeted_loss examples") {
  CHECK(ce_targeted_loss(V{0, 0}, 0) == doctest::Approx(std::log(2.0)));
  // log(1 + e^-10) evaluated independently with log1p.
  CHECK(ce_targeted_loss(V{10, 0}, 0) == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-9));
  CHECK(ce_targeted_loss(V{10, 0}, 0) == doctest::Approx(4.5398e-5).epsilon(1e-4));
  const V base{1.5, -2.0, 0.25, 3.0};
  for (double c : {-1000.0, -3.0, 7.0, 1000.0}) {
    V shifted = base;
    for (double& v : shifted) v += c;
    CHECK(std::abs(ce_targeted_loss(shifted, 2) - ce_targeted_loss(base, 2)) <= 1e-12);
  }
  CHECK(std::isfinite(ce_targeted_loss(V{1000, -1000}, 1)));
  CHECK(ce_targeted_loss(V{1000, -1000}, 1) == doctest::Approx(2000.0));
  CHECK_THROWS_AS(ce_targeted_loss(V{1, 2}, 5), LabelError);
}

TEST_CASE("is_adversarial examples") {
  CHECK(is_adversarial(V{1, 2}, AttackGoal::untargeted(0)));
  CHECK_FALSE(is_adversarial(V{1, 2}, AttackGoal::untargeted(1)));
  CHECK(is_adversarial(V{0, 9, 1}, AttackGoal::targeted(1)));
  CHECK_FALSE(is_adversarial(V{3, 3}, AttackGoal::untargeted(0)));
}

TEST_CASE("margin sign agrees with adversariality away from ties") {
  Rng rng(3);
  int mismatches = 0;
  for (int t = 0; t < 10000; ++t) {
    V logits(2 + rng.uniform_int(0, 8));
    for (double& v : logits) v = 10.0 * rng.normal();
    const auto y = static_cast<std::size_t>(rng.uniform_int(0, logits.size() - 1));
    const double m = margin_loss(logits, y);
    if (m == 0.0) continue;
    mismatches += (m < 0.0) != is_adversarial(logits, AttackGoal::untargeted(y));
  }
  CHECK(mismatches == 0);
}

TEST_CASE("cross-entropy is strictly positive") {
  Rng rng(4);
  int bad = 0;
  for (int t = 0; t < 10000; ++t) {
    V logits(2 + rng.uniform_int(0, 8));
    for (double& v : logits) v = 5.0 * rng.normal();
    bad += ce_targeted_loss(logits, rng.uniform_int(0, logits.size() - 1)) > 0.0 ? 0 : 1;
  }
  CHECK(bad == 0);
}

TEST_CASE("losses are invariant under relabeling") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    V logits(6);
    for (double& v : logits) v = rng.normal();
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
      std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    }
    V permuted(6);
    for (std::size_t i = 0; i < 6; ++i) permuted[perm[i]] = logits[i];
    const std::size_t y = static_cast<std::size_t>(rng.uniform_int(0, 5));
    CHECK(margin_loss(permuted, perm[y]) == doctest::Approx(margin_loss(logits, y)));
    CHECK(ce_targeted_loss(permuted, perm[y]) ==
          doctest::Approx(ce_targeted_loss(logits, y)).epsilon(1e-12));
  }
}

TEST_CASE("attack_loss per goal and kind") {
  const V logits{2, 5, 3};
  CHECK(attack_loss(logits, AttackGoal::untargeted(1), LossKind::Margin) == 2.0);
  CHECK(attack_loss(logits, AttackGoal::targeted(2), LossKind::Margin) == 2.0);
  CHECK(attack_loss(logits, AttackGoal::targeted(2), LossKind::CrossEntropy) ==
        doctest::Approx(ce_targeted_loss(logits, 2)));
  CHECK(attack_loss(logits, AttackGoal::untargeted(1), LossKind::CrossEntropy) ==
        doctest::Approx(-ce_targeted_loss(logits, 1)));
  CHECK(default_loss(GoalMode::Targeted) == LossKind::CrossEntropy);
  CHECK(default_loss(GoalMode::Untargeted) == LossKind::Margin);
  CHECK(parse_loss_kind("ce") == LossKind::CrossEntropy);
  CHECK_THROWS_AS(parse_loss_kind("hinge"), ValueError);
}
