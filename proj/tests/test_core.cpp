#include <cmath>
#include <vector>

#include "doctest.h"
#include "squarebox/core.hpp"
#include "squarebox/errors.hpp"
#include "squarebox/rng.hpp"

using namespace squarebox;

TEST_CASE("lp_norm examples") {
  const std::vector<double> zeros(5, 0.0);
  CHECK(lp_norm(zeros, Norm::L2) == 0.0);
  CHECK(lp_norm(std::vector<double>{3, 4}, Norm::L2) == doctest::Approx(5.0));
  CHECK(lp_norm(std::vector<double>{-2, 1, -3}, Norm::Linf) == 3.0);
  CHECK(lp_norm(std::vector<double>{}, Norm::Linf) == 0.0);
  CHECK(lp_norm(std::vector<double>{}, Norm::L2) == 0.0);
}

TEST_CASE("lp_distance matches the norm of the difference") {
  const std::vector<double> a{0.1, 0.9, 0.5}, b{0.4, 0.5, 0.5};
  CHECK(lp_distance(a, b, Norm::Linf) == doctest::Approx(0.4));
  CHECK(lp_distance(a, b, Norm::L2) == doctest::Approx(0.5));
}

TEST_CASE("ImageTensor validation") {
  CHECK_THROWS_AS(ImageTensor(1, 2, {0.1, 0.2, 0.3}), ShapeError);
  CHECK_THROWS_AS(ImageTensor(1, 1, {1.5}), ValueError);
  CHECK_THROWS_AS(ImageTensor(1, 1, {-0.01}), ValueError);
  CHECK_THROWS_AS(ImageTensor(1, 1, {std::nan("")}), ValueError);
  CHECK_THROWS_AS(ImageTensor(0, 1, {}), ShapeError);
  const ImageTensor t = ImageTensor::clipped(1, 2, {-1.0, 0.5, 2.0, 1.0});
  CHECK(t[0] == 0.0);
  CHECK(t[2] == 1.0);
  const ImageTensor img(2, 2, {0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
  CHECK(img.at(1, 0, 1) == doctest::Approx(0.5));
  CHECK(img.index(1, 1, 0) == 6);
}

TEST_CASE("ThreatModel rejects non-positive radii") {
  CHECK_THROWS_AS(ThreatModel(Norm::Linf, 0.0), ValueError);
  CHECK_THROWS_AS(ThreatModel(Norm::L2, -1.0), ValueError);
  CHECK_THROWS_AS(ThreatModel(Norm::L2, INFINITY), ValueError);
  CHECK(ThreatModel(Norm::L2, 0.5).eps() == 0.5);
  CHECK(parse_norm("l2") == Norm::L2);
  CHECK(to_string(Norm::Linf) == "linf");
  CHECK_THROWS_AS(parse_norm("l1"), ValueError);
}

TEST_CASE("project examples") {
  const ImageTensor x = ImageTensor::filled(1, 2, 0.5);
  SUBCASE("inside ball and box is unchanged") {
    const std::vector<double> cand{0.45, 0.5, 0.55, 0.52};
    const ImageTensor r = project(cand, x, ThreatModel(Norm::Linf, 0.1));
    for (std::size_t i = 0; i < cand.size(); ++i) CHECK(r[i] == cand[i]);
  }
  SUBCASE("clip to x + eps") {
    const ImageTensor r = project(std::vector<double>(4, 0.7), x, ThreatModel(Norm::Linf, 0.1));
    for (std::size_t i = 0; i < 4; ++i) CHECK(r[i] == doctest::Approx(0.6));
  }
  SUBCASE("box dominates") {
    const ImageTensor xb = ImageTensor::filled(1, 1, 0.98);
    const ImageTensor r = project(std::vector<double>{1.2}, xb, ThreatModel(Norm::Linf, 0.05));
    CHECK(r[0] == 1.0);
  }
  SUBCASE("l2 rescales the difference") {
    const std::vector<double> cand{0.5 + 0.3, 0.5 + 0.4, 0.5, 0.5};
    const ImageTensor r = project(cand, x, ThreatModel(Norm::L2, 0.1));
    CHECK(r[0] == doctest::Approx(0.56));
    CHECK(r[1] == doctest::Approx(0.58));
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(project(std::vector<double>(3, 0.5), x, ThreatModel(Norm::L2, 0.1)),
                    ShapeError);
  }
}

TEST_CASE("project satisfies both constraints on random triples and is idempotent") {
  Rng rng(7);
  int violations = 0, not_idempotent = 0;
  for (int t = 0; t < 100000; ++t) {
    const Norm norm = t % 2 == 0 ? Norm::Linf : Norm::L2;
    const int c = 1 + static_cast<int>(rng.uniform_int(0, 2));
    const int w = 1 + static_cast<int>(rng.uniform_int(0, 3));
    const std::size_t d = static_cast<std::size_t>(c) * w * w;
    std::vector<double> xv(d), cand(d);
    for (auto& v : xv) v = rng.uniform_real();
    for (auto& v : cand) v = 3.0 * rng.uniform_real() - 1.0;
    const double eps = 0.001 + rng.uniform_real();
    const ThreatModel tm(norm, eps);
    const ImageTensor x(c, w, xv);
    const ImageTensor r = project(cand, x, tm);
    bool ok = lp_distance(r.data(), x.data(), norm) <= eps + 1e-12;
    for (double v : r.data()) ok = ok && v >= 0.0 && v <= 1.0;
    violations += ok ? 0 : 1;
    const ImageTensor rr = project(r.data(), x, tm);
    for (std::size_t i = 0; i < d; ++i) {
      if (std::abs(rr[i] - r[i]) > 1e-12) {
        ++not_idempotent;
        break;
      }
    }
  }
  CHECK(violations == 0);
  CHECK(not_idempotent == 0);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(argmax(std::vector<double>{0.1, 0.9}) == 1);
  CHECK(argmax(std::vector<double>{5, 5}) == 0);
  CHECK(argmax(std::vector<double>{1, 3, 3, 2}) == 1);
}

TEST_CASE("Rng is reproducible and draws in range") {
  Rng a(42), b(42), c(43);
  bool same = true, differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64(), vb = b.next_u64(), vc = c.next_u64();
    same = same && va == vb;
    differs = differs || va != vc;
  }
  CHECK(same);
  CHECK(differs);

  Rng r(1);
  std::vector<int> counts(6, 0);
  double exp_sum = 0.0, normal_sum = 0.0, normal_sq = 0.0;
  int plus = 0;
  const int n = 60000;
  for (int i = 0; i < n; ++i) {
    const auto k = r.uniform_int(-2, 3);
    REQUIRE(k >= -2);
    REQUIRE(k <= 3);
    ++counts[k + 2];
    const double u = r.uniform_real();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const int s = r.rademacher();
    REQUIRE((s == 1 || s == -1));
    plus += s == 1;
    const double e = r.exponential();
    REQUIRE(e >= 0.0);
    exp_sum += e;
    const double z = r.normal();
    normal_sum += z;
    normal_sq += z * z;
  }
  for (int cnt : counts) CHECK(std::abs(cnt - n / 6) < 500);
  CHECK(std::abs(plus - n / 2) < 600);
  CHECK(exp_sum / n == doctest::Approx(1.0).epsilon(0.03));
  CHECK(std::abs(normal_sum / n) < 0.03);
  CHECK(normal_sq / n == doctest::Approx(1.0).epsilon(0.03));
  CHECK(r.uniform_int(4, 4) == 4);
}

TEST_CASE("Rng matches the reference xoshiro256** stream") {
  // Expected values from an independent Python transcription of splitmix64
  // seeding and xoshiro256**. Changing them breaks every recorded run.
  Rng zero(0);
  CHECK(zero.next_u64() == 0x99ec5f36cb75f2b4ULL);
  CHECK(zero.next_u64() == 0xbf6e1f784956452aULL);
  CHECK(zero.next_u64() == 0x1a5f849d4933e6e0ULL);
  Rng r42(42);
  CHECK(r42.next_u64() == 0x15780b2e0c2ec716ULL);
  CHECK(r42.next_u64() == 0x6104d9866d113a7eULL);
  CHECK(r42.next_u64() == 0xae17533239e499a1ULL);
}
