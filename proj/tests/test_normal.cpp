#include <catch2/catch_amalgamated.hpp>

#include "mixedfpca/normal.hpp"
#include "mixedfpca/rng.hpp"

using namespace mfpca;

TEST_CASE("standard normal cdf basic values") {
  CHECK(std_normal_cdf(0.0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(std_normal_cdf(std::numeric_limits<double>::infinity()) == 1.0);
  CHECK(std_normal_cdf(-std::numeric_limits<double>::infinity()) == 0.0);
  // high-precision reference value (30-digit arithmetic)
  CHECK(std_normal_cdf(1.959964) ==
        Catch::Approx(0.975000000903557595697504894747).margin(1e-12));
  CHECK(std_normal_cdf(0.5) ==
        Catch::Approx(0.691462461274013103637704610608).margin(1e-13));
}

TEST_CASE("quantile boundary conventions and symmetry") {
  CHECK(std_normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-14));
  CHECK(std_normal_quantile(0.0) == -std::numeric_limits<double>::infinity());
  CHECK(std_normal_quantile(1.0) == std::numeric_limits<double>::infinity());
  CHECK(std_normal_quantile(0.975) ==
        Catch::Approx(1.95996398454005423552).margin(1e-10));
  CHECK_THROWS_AS(std_normal_quantile(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(std_normal_quantile(1.1), std::invalid_argument);
}

TEST_CASE("quantile round trip over the full probability range") {
  // spec tolerance: Phi(PhiInv(p)) = p to 1e-10 for p in (1e-12, 1-1e-12)
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    const double u = rng.uniform();
    const double p = 1e-12 + (1.0 - 2e-12) * u;
    CHECK(std_normal_cdf(std_normal_quantile(p)) == Catch::Approx(p).margin(1e-10));
  }
  for (double p : {1e-12, 1e-9, 1e-4, 0.2, 0.8, 1.0 - 1e-4, 1.0 - 1e-9}) {
    CHECK(std_normal_cdf(std_normal_quantile(p)) == Catch::Approx(p).margin(1e-10));
  }
}

TEST_CASE("named substreams are deterministic and distinct") {
  Rng a = substream(42, "sim", 3);
  Rng b = substream(42, "sim", 3);
  Rng c = substream(42, "fit", 3);
  const double va = a.normal();
  CHECK(va == b.normal());
  CHECK(va != c.normal());
}
