#include <catch2/catch_amalgamated.hpp>
#include <numbers>

#include "mixedfpca/bridge.hpp"
#include "oracle.hpp"

using namespace mfpca;
using Catch::Approx;

namespace {

const CutoffVector kEmpty{};
CutoffVector cut1(double d) { return CutoffVector(std::vector<double>{d}); }

struct KindSetup {
  PairKind kind;
  VariableType tj, tk;
};

// canonical slot types for every pair kind
const std::vector<KindSetup> kAllKinds = {
    {PairKind::cc, VariableType::continuous(), VariableType::continuous()},
    {PairKind::bb, VariableType::binary(), VariableType::binary()},
    {PairKind::cb, VariableType::continuous(), VariableType::binary()},
    {PairKind::tb, VariableType::truncated(), VariableType::binary()},
    {PairKind::ct, VariableType::continuous(), VariableType::truncated()},
    {PairKind::tt, VariableType::truncated(), VariableType::truncated()},
    {PairKind::co, VariableType::continuous(), VariableType::ordinal(4)},
    {PairKind::oo, VariableType::ordinal(3), VariableType::ordinal(4)},
    {PairKind::ob, VariableType::ordinal(4), VariableType::binary()},
    {PairKind::to, VariableType::truncated(), VariableType::ordinal(4)},
};

CutoffVector random_cutoffs(const VariableType& t, Rng& rng) {
  if (t.kind == VarKind::Continuous) return kEmpty;
  if (t.kind == VarKind::Ordinal) {
    std::vector<double> c(t.levels - 1);
    for (auto& v : c) v = rng.uniform(-1.5, 1.5);
    std::sort(c.begin(), c.end());
    return CutoffVector(std::move(c));
  }
  return cut1(rng.uniform(-1.0, 1.0));
}

}  // namespace

TEST_CASE("special correlation matrices match their definitions") {
  const double h = 1.0 / std::numbers::sqrt2;
  const auto s3a = special_corr(SpecialCorr::S3a, 0.0);
  CHECK(s3a.m(0, 1) == 0.0);
  CHECK(s3a.m(0, 2) == 0.0);
  CHECK(s3a.m(1, 2) == Approx(h).margin(1e-15));

  const auto s4b = special_corr(SpecialCorr::S4b, 1.0);
  CHECK(s4b.m(0, 1) == Approx(1.0).margin(1e-7));  // nudged inside by 1e-8
  CHECK(s4b.m(0, 2) == Approx(h).margin(1e-15));
  CHECK(s4b.m(0, 3) == Approx(h).margin(1e-15));

  const auto s5 = special_corr(SpecialCorr::S5, 0.5);
  CHECK(s5.m(1, 2) == Approx(-0.5).margin(1e-15));

  const auto s3 = special_corr(SpecialCorr::S3, 0.3);
  CHECK(s3.m(0, 1) == Approx(-0.3).margin(1e-15));
  CHECK(s3.m(0, 2) == Approx(-0.3 * h).margin(1e-15));

  CHECK_THROWS_AS(special_corr(SpecialCorr::S3a, 1.5), std::invalid_argument);
}

TEST_CASE("closed-form bridge values") {
  CHECK(bridge_forward(0.5, PairKind::cc, kEmpty, kEmpty) ==
        Approx(1.0 / 3.0).margin(1e-12));
  // binary/binary with zero cutoffs: asin(rho)/pi
  for (double r : {-0.8, -0.3, 0.2, 0.6, 0.95}) {
    CHECK(bridge_forward(r, PairKind::bb, cut1(0), cut1(0)) ==
          Approx(std::asin(r) / std::numbers::pi).margin(1e-9));
  }
  CHECK(bridge_forward(1.0, PairKind::bb, cut1(0), cut1(0)) ==
        Approx(0.5).margin(1e-4));
  // independence maps to zero for every kind
  Rng rng(31);
  for (const auto& ks : kAllKinds) {
    const auto cj = random_cutoffs(ks.tj, rng);
    const auto ck = random_cutoffs(ks.tk, rng);
    CHECK(bridge_forward(0.0, ks.kind, cj, ck) == Approx(0.0).margin(1e-9));
  }
}

TEST_CASE("canonicalization is involution-consistent") {
  Rng rng(77);
  const std::vector<VariableType> types = {
      VariableType::continuous(), VariableType::truncated(),
      VariableType::ordinal(3), VariableType::binary()};
  for (const auto& ta : types) {
    for (const auto& tb : types) {
      bool swap_ab = false, swap_ba = false;
      const PairKind kab = canonical_kind(ta, tb, swap_ab);
      const PairKind kba = canonical_kind(tb, ta, swap_ba);
      CHECK(kab == kba);
      const auto ca = random_cutoffs(ta, rng);
      const auto cb = random_cutoffs(tb, rng);
      const double rho = rng.uniform(-0.9, 0.9);
      const auto args_ab = swap_ab ? std::pair{cb, ca} : std::pair{ca, cb};
      const auto args_ba = swap_ba ? std::pair{ca, cb} : std::pair{cb, ca};
      CHECK(bridge_forward(rho, kab, args_ab.first, args_ab.second) ==
            Approx(bridge_forward(rho, kba, args_ba.first, args_ba.second))
                .margin(1e-12));
    }
  }
}

TEST_CASE("spec example: truncated/truncated against the MC oracle") {
  const auto mc = testoracle::population_tau(0.6, VariableType::truncated(),
                                             VariableType::truncated(), cut1(0.5),
                                             cut1(0.5), 1'000'000, 42);
  CHECK(bridge_forward(0.6, PairKind::tt, cut1(0.5), cut1(0.5)) ==
        Approx(mc.tau).margin(3 * mc.se));
}

TEST_CASE("all ten bridge forms agree with the MC oracle") {
  // smaller version of the acceptance run: 3 settings per kind
  Rng rng(2024);
  for (const auto& ks : kAllKinds) {
    for (int setting = 0; setting < 3; ++setting) {
      const auto cj = random_cutoffs(ks.tj, rng);
      const auto ck = random_cutoffs(ks.tk, rng);
      const double rho = rng.uniform(-0.9, 0.9);
      const auto mc = testoracle::population_tau(
          rho, ks.tj, ks.tk, cj, ck, 400'000, 5000 + setting);
      INFO("kind " << to_string(ks.kind) << " rho " << rho);
      CHECK(bridge_forward(rho, ks.kind, cj, ck) ==
            Approx(mc.tau).margin(3.5 * mc.se));
    }
  }
}

TEST_CASE("strict monotonicity in rho for every kind") {
  Rng rng(99);
  for (const auto& ks : kAllKinds) {
    const auto cj = random_cutoffs(ks.tj, rng);
    const auto ck = random_cutoffs(ks.tk, rng);
    double prev = bridge_forward(-0.99, ks.kind, cj, ck);
    for (int i = 1; i < 50; ++i) {
      const double rho = -0.99 + 1.98 * i / 49.0;
      const double cur = bridge_forward(rho, ks.kind, cj, ck);
      INFO("kind " << to_string(ks.kind) << " rho " << rho);
      CHECK(cur > prev);
      CHECK(std::abs(cur) <= 1.0);
      prev = cur;
    }
  }
}

TEST_CASE("binary/binary with zero cutoffs is bounded by one half") {
  double sup = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double rho = -1.0 + 2.0 * i / 100.0;
    sup = std::max(sup, std::abs(bridge_forward(rho, PairKind::bb, cut1(0), cut1(0))));
  }
  CHECK(sup <= 0.5 + 1e-12);
}

TEST_CASE("ordinal with two levels reduces to binary") {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const double rho = rng.uniform(-0.95, 0.95);
    const double dj = rng.uniform(-1.0, 1.0);
    const double dk = rng.uniform(-1.0, 1.0);
    // ob with Ordinal(2) versus bb
    CHECK(bridge_forward(rho, PairKind::ob, cut1(dj), cut1(dk)) ==
          Approx(bridge_forward(rho, PairKind::bb, cut1(dj), cut1(dk)))
              .margin(1e-8));
    // oo with both Ordinal(2) versus bb
    CHECK(bridge_forward(rho, PairKind::oo, cut1(dj), cut1(dk)) ==
          Approx(bridge_forward(rho, PairKind::bb, cut1(dj), cut1(dk)))
              .margin(1e-8));
  }
}

TEST_CASE("cutoff/kind mismatch is rejected") {
  CHECK_THROWS_AS(bridge_forward(0.3, PairKind::cc, cut1(0.5), kEmpty),
                  std::invalid_argument);
  CHECK_THROWS_AS(bridge_forward(0.3, PairKind::bb, cut1(0.5), kEmpty),
                  std::invalid_argument);
  CHECK_THROWS_AS(bridge_inverse(0.1, PairKind::tt, kEmpty, cut1(0.2)),
                  std::invalid_argument);
}

TEST_CASE("inversion examples") {
  CHECK(bridge_inverse(1.0 / 3.0, PairKind::cc, kEmpty, kEmpty) ==
        Approx(0.5).margin(1e-7));
  Rng rng(5);
  for (const auto& ks : kAllKinds) {
    const auto cj = random_cutoffs(ks.tj, rng);
    const auto ck = random_cutoffs(ks.tk, rng);
    CHECK(bridge_inverse(0.0, ks.kind, cj, ck) == Approx(0.0).margin(1e-6));
  }
  // clamping outside the attainable range
  CHECK(bridge_inverse(0.99, PairKind::bb, cut1(0), cut1(0)) ==
        Approx(1.0 - 1e-6).margin(1e-9));
  CHECK(bridge_inverse(-0.99, PairKind::bb, cut1(0), cut1(0)) ==
        Approx(-1.0 + 1e-6).margin(1e-9));
}

TEST_CASE("inverse round trip across kinds") {
  // smaller version of the acceptance run: 8 settings per kind
  Rng rng(1234);
  for (const auto& ks : kAllKinds) {
    for (int setting = 0; setting < 8; ++setting) {
      const auto cj = random_cutoffs(ks.tj, rng);
      const auto ck = random_cutoffs(ks.tk, rng);
      const double rho = rng.uniform(-0.95, 0.95);
      const double tau = bridge_forward(rho, ks.kind, cj, ck);
      const double back = bridge_inverse(tau, ks.kind, cj, ck);
      INFO("kind " << to_string(ks.kind) << " rho " << rho);
      CHECK(back == Approx(rho).margin(1e-6));
    }
  }
}
