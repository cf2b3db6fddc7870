#pragma once

// Test-only Monte-Carlo oracle for the population Kendall's tau of a mixed
// pair: draws independent latent pairs, pushes them through the observation
// maps, and averages the sign products. Independent of the bridging code
// path it is used to check.
//
// Truncated margins use the monotone relabeling x = (v - cut) I(v > cut):
// the bridges place cutoffs on the latent Gaussian scale where they may be
// negative, and Kendall's tau is invariant to the relabeling.

#include <cmath>
#include <cstdint>
#include <vector>

#include "mixedfpca/rng.hpp"
#include "mixedfpca/types.hpp"

namespace mfpca::testoracle {

inline double observe(double v, const VariableType& t, const CutoffVector& cuts) {
  switch (t.kind) {
    case VarKind::Continuous:
      return v;
    case VarKind::Binary:
      return v > cuts[0] ? 1.0 : 0.0;
    case VarKind::Truncated:
      return v > cuts[0] ? v - cuts[0] : 0.0;
    case VarKind::Ordinal: {
      int level = 0;
      for (std::size_t k = 0; k < cuts.size(); ++k)
        if (v >= cuts[k]) level = static_cast<int>(k) + 1;
      return level;
    }
  }
  return v;
}

struct TauEstimate {
  double tau = 0.0;
  double se = 0.0;
};

inline TauEstimate population_tau(double rho, const VariableType& tj,
                                  const VariableType& tk, const CutoffVector& cj,
                                  const CutoffVector& ck, int n_pairs,
                                  std::uint64_t seed) {
  Rng rng(seed);
  const double s = std::sqrt(1.0 - rho * rho);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    const double v1 = rng.normal();
    const double w1 = rho * v1 + s * rng.normal();
    const double v2 = rng.normal();
    const double w2 = rho * v2 + s * rng.normal();
    const double x1 = observe(v1, tj, cj), x2 = observe(v2, tj, cj);
    const double y1 = observe(w1, tk, ck), y2 = observe(w2, tk, ck);
    const double dx = x1 - x2, dy = y1 - y2;
    const double sgn = static_cast<double>((dx > 0) - (dx < 0)) *
                       static_cast<double>((dy > 0) - (dy < 0));
    sum += sgn;
    sum2 += sgn * sgn;
  }
  TauEstimate out;
  out.tau = sum / n_pairs;
  const double var = (sum2 - sum * sum / n_pairs) / (n_pairs - 1.0);
  out.se = std::sqrt(var / n_pairs);
  return out;
}

}  // namespace mfpca::testoracle
