#pragma once

// Kendall's-tau bridging: closed-form maps F from the latent Gaussian
// correlation rho to the population Kendall's tau of an observed mixed-type
// pair, for all ten type combinations, plus the monotone inversion tau->rho.
//
// Conventions: every F below is expressed through orthant probabilities of
// the latent pair (V, W) ~ N2(0, rho) and an independent copy (V', W').
// Difference coordinates such as (V'-V)/sqrt(2) give the sqrt(2) factors in
// the special correlation matrices. Cutoffs live on the latent Gaussian
// scale and may be any real number.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mixedfpca/mvn.hpp"
#include "mixedfpca/types.hpp"

namespace mfpca {

// Canonical ordered pair kinds; first letter has priority c > t > o > b.
enum class PairKind { cc, bb, cb, tb, ct, tt, co, oo, ob, to };

inline std::string to_string(PairKind k) {
  switch (k) {
    case PairKind::cc: return "cc";
    case PairKind::bb: return "bb";
    case PairKind::cb: return "cb";
    case PairKind::tb: return "tb";
    case PairKind::ct: return "ct";
    case PairKind::tt: return "tt";
    case PairKind::co: return "co";
    case PairKind::oo: return "oo";
    case PairKind::ob: return "ob";
    case PairKind::to: return "to";
  }
  return "?";
}

namespace detail {
inline int kind_rank(VarKind k) {
  switch (k) {
    case VarKind::Continuous: return 0;
    case VarKind::Truncated: return 1;
    case VarKind::Ordinal: return 2;
    case VarKind::Binary: return 3;
  }
  return 4;
}
}  // namespace detail

// Canonicalizes an ordered type pair. When `swapped` comes back true the
// caller must exchange the two cutoff vectors to match the canonical slots;
// tau itself is symmetric so the bridged value is unchanged.
inline PairKind canonical_kind(VariableType a, VariableType b, bool& swapped) {
  swapped = detail::kind_rank(a.kind) > detail::kind_rank(b.kind);
  const VarKind x = swapped ? b.kind : a.kind;
  const VarKind y = swapped ? a.kind : b.kind;
  auto is = [](VarKind k, VarKind want) { return k == want; };
  using VK = VarKind;
  if (is(x, VK::Continuous) && is(y, VK::Continuous)) return PairKind::cc;
  if (is(x, VK::Continuous) && is(y, VK::Truncated)) return PairKind::ct;
  if (is(x, VK::Continuous) && is(y, VK::Ordinal)) return PairKind::co;
  if (is(x, VK::Continuous) && is(y, VK::Binary)) return PairKind::cb;
  if (is(x, VK::Truncated) && is(y, VK::Truncated)) return PairKind::tt;
  if (is(x, VK::Truncated) && is(y, VK::Ordinal)) return PairKind::to;
  if (is(x, VK::Truncated) && is(y, VK::Binary)) return PairKind::tb;
  if (is(x, VK::Ordinal) && is(y, VK::Ordinal)) return PairKind::oo;
  if (is(x, VK::Ordinal) && is(y, VK::Binary)) return PairKind::ob;
  return PairKind::bb;
}

// ---------------------------------------------------------------------------
// Special correlation matrices.
// ---------------------------------------------------------------------------

enum class SpecialCorr { S3a, S3b, S3, S4a, S4b, S5 };

inline CorrelationMatrix special_corr(SpecialCorr kind, double rho) {
  if (std::abs(rho) > 1.0)
    throw std::invalid_argument("special_corr: |rho| > 1");
  const double r = rho;
  const double q = rho / std::numbers::sqrt2;
  const double h = 1.0 / std::numbers::sqrt2;
  Eigen::MatrixXd m;
  switch (kind) {
    case SpecialCorr::S3a:
      m = Eigen::MatrixXd{{1, 0, q}, {0, 1, h}, {q, h, 1}};
      break;
    case SpecialCorr::S3b:
      m = Eigen::MatrixXd{{1, 0, -h}, {0, 1, -q}, {-h, -q, 1}};
      break;
    case SpecialCorr::S3:
      m = Eigen::MatrixXd{{1, -r, -q}, {-r, 1, h}, {-q, h, 1}};
      break;
    case SpecialCorr::S4a:
      m = Eigen::MatrixXd{
          {1, 0, h, -q}, {0, 1, -q, h}, {h, -q, 1, -r}, {-q, h, -r, 1}};
      break;
    case SpecialCorr::S4b:
      m = Eigen::MatrixXd{
          {1, r, h, q}, {r, 1, q, h}, {h, q, 1, r}, {q, h, r, 1}};
      break;
    case SpecialCorr::S5:
      m = Eigen::MatrixXd{
          {1, 0, 0, q}, {0, 1, -r, -q}, {0, -r, 1, h}, {q, -q, h, 1}};
      break;
    default:
      throw std::invalid_argument("special_corr: unknown kind");
  }
  return CorrelationMatrix(std::move(m));
}

namespace detail {

inline double safe_rho(double rho) {
  // bridging inversions probe close to the boundary; keep strictly inside
  return std::clamp(rho, -1.0 + 1e-10, 1.0 - 1e-10);
}

inline Eigen::Matrix3d mat3(const CorrelationMatrix& c) { return c.m; }
inline Eigen::Matrix4d mat4(const CorrelationMatrix& c) { return c.m; }

// Correlation of (-V_t, (V_t'-V_t)/sqrt2, (U'-U)/sqrt2): continuous/truncated.
inline Eigen::Matrix3d corr_ct(double r) {
  const double h = 1.0 / std::numbers::sqrt2;
  const double q = r / std::numbers::sqrt2;
  Eigen::Matrix3d m;
  m << 1, h, q, h, 1, r, q, r, 1;
  return m;
}

// Correlation of (V', V, (U'-U)/sqrt2): continuous/ordinal.
inline Eigen::Matrix3d corr_co(double r) {
  const double q = r / std::numbers::sqrt2;
  Eigen::Matrix3d m;
  m << 1, 0, q, 0, 1, -q, q, -q, 1;
  return m;
}

inline double phi2(double a, double b, double r) { return bvn_cdf(a, b, r); }

inline double phi3(double a, double b, double c, const Eigen::Matrix3d& R) {
  return tvn_cdf(Eigen::Vector3d(a, b, c), R);
}

inline double phi4(double a, double b, double c, double d,
                   const Eigen::Matrix4d& R) {
  return qvn_cdf(Eigen::Vector4d(a, b, c, d), R);
}

inline void expect_cuts(PairKind kind, const CutoffVector& cj,
                        const CutoffVector& ck) {
  auto need = [&](bool ok) {
    if (!ok)
      throw std::invalid_argument("bridge: cutoff vectors inconsistent with kind " +
                                  to_string(kind));
  };
  switch (kind) {
    case PairKind::cc: need(cj.empty() && ck.empty()); break;
    case PairKind::cb: need(cj.empty() && ck.size() == 1); break;
    case PairKind::ct: need(cj.empty() && ck.size() == 1); break;
    case PairKind::co: need(cj.empty() && ck.size() >= 1); break;
    case PairKind::bb: need(cj.size() == 1 && ck.size() == 1); break;
    case PairKind::tb: need(cj.size() == 1 && ck.size() == 1); break;
    case PairKind::tt: need(cj.size() == 1 && ck.size() == 1); break;
    case PairKind::ob: need(cj.size() >= 1 && ck.size() == 1); break;
    case PairKind::oo: need(cj.size() >= 1 && ck.size() >= 1); break;
    case PairKind::to: need(cj.size() == 1 && ck.size() >= 1); break;
  }
}

inline double bridge_cc(double r) { return 2.0 / std::numbers::pi * std::asin(r); }

inline double bridge_bb(double r, double dj, double dk) {
  return 2.0 * (phi2(dj, dk, r) - std_normal_cdf(dj) * std_normal_cdf(dk));
}

inline double bridge_cb(double r, double db) {
  return 4.0 * phi2(db, 0.0, r / std::numbers::sqrt2) - 2.0 * std_normal_cdf(db);
}

inline double bridge_ct(double r, double dt) {
  const double h = 1.0 / std::numbers::sqrt2;
  return -2.0 * phi2(-dt, 0.0, h) + 4.0 * phi3(-dt, 0.0, 0.0, corr_ct(r));
}

inline double bridge_tb(double r, double dt, double db) {
  const auto s3a = mat3(special_corr(SpecialCorr::S3a, r));
  const auto s3 = mat3(special_corr(SpecialCorr::S3, r));
  return 2.0 * phi3(db, -dt, 0.0, s3a) - 2.0 * phi3(db, -dt, 0.0, s3);
}

inline double bridge_tt(double r, double dj, double dk) {
  const auto s4a = mat4(special_corr(SpecialCorr::S4a, r));
  const auto s4b = mat4(special_corr(SpecialCorr::S4b, r));
  return -2.0 * phi4(-dj, -dk, 0.0, 0.0, s4a) +
         2.0 * phi4(-dj, -dk, 0.0, 0.0, s4b);
}

inline double bridge_co(double r, const CutoffVector& cuts) {
  const auto m = corr_co(r);
  double out = 0.0;
  const std::size_t L1 = cuts.size();  // levels - 1
  for (std::size_t i = 0; i < L1; ++i) {
    const double a = cuts[i];
    const double b = (i + 1 < L1) ? cuts[i + 1] : kInf;
    out += 4.0 * phi3(a, b, 0.0, m) - 2.0 * std_normal_cdf(a) * std_normal_cdf(b);
  }
  return out;
}

// Rectangle-product expansion over level pairs; needs only bivariate CDFs.
inline double bridge_oo(double r, const CutoffVector& cj, const CutoffVector& ck) {
  const std::size_t lj = cj.size() + 1, lk = ck.size() + 1;
  auto aat = [&](std::size_t i) {  // a_0 = -inf, a_lj = +inf
    if (i == 0) return -kInf;
    if (i > cj.size()) return kInf;
    return cj[i - 1];
  };
  auto bat = [&](std::size_t i) {
    if (i == 0) return -kInf;
    if (i > ck.size()) return kInf;
    return ck[i - 1];
  };
  auto B = [&](double x, double y) { return phi2(x, y, r); };
  auto P = [&](double x) { return x == -kInf ? 0.0 : (x == kInf ? 1.0 : std_normal_cdf(x)); };
  double t1 = 0.0, t2 = 0.0;
  for (std::size_t ri = 1; ri < lj; ++ri) {
    const double ar = aat(ri), ar0 = aat(ri - 1);
    for (std::size_t si = 1; si < lk; ++si) {
      const double bs = bat(si), bs0 = bat(si - 1);
      const double surv = 1.0 - P(ar) - P(bs) + B(ar, bs);
      const double rect = B(ar, bs) - B(ar0, bs) - B(ar, bs0) + B(ar0, bs0);
      t1 += surv * rect;
      const double colband = (P(bs) - B(ar, bs)) - (P(bs0) - B(ar, bs0));
      const double rowband = (P(ar) - B(ar, bs)) - (P(ar0) - B(ar0, bs));
      t2 += colband * rowband;
    }
  }
  return 2.0 * (t1 - t2);
}

inline double bridge_ob(double r, const CutoffVector& cj, double dk) {
  const std::size_t L1 = cj.size();
  double out = 0.0;
  for (std::size_t i = 0; i < L1; ++i) {
    const double a = cj[i];
    const double a1 = (i + 1 < L1) ? cj[i + 1] : kInf;
    const double pa1 = (a1 == kInf) ? 1.0 : std_normal_cdf(a1);
    const double b1 = (a1 == kInf) ? std_normal_cdf(dk) : phi2(a1, dk, r);
    out += 2.0 * (phi2(a, dk, r) * pa1 - std_normal_cdf(a) * b1);
  }
  return out;
}

inline double bridge_to(double r, double dt, const CutoffVector& ck) {
  const auto s3a = mat3(special_corr(SpecialCorr::S3a, r));
  const auto s5 = mat4(special_corr(SpecialCorr::S5, r));
  const std::size_t lk = ck.size() + 1;
  auto bat = [&](std::size_t i) {
    if (i == 0) return -kInf;
    if (i > ck.size()) return kInf;
    return ck[i - 1];
  };
  double out = 2.0 * phi3(ck[ck.size() - 1], -dt, 0.0, s3a);
  for (std::size_t ri = 1; ri < lk; ++ri) {
    out -= 2.0 * (phi4(bat(ri + 1), bat(ri), -dt, 0.0, s5) -
                  phi4(bat(ri - 1), bat(ri), -dt, 0.0, s5));
  }
  return out;
}

}  // namespace detail

// Population Kendall's tau of the observed pair as a function of the latent
// correlation. cut_j / cut_k follow the canonical slot order of `kind`.
inline double bridge_forward(double rho, PairKind kind, const CutoffVector& cut_j,
                             const CutoffVector& cut_k) {
  if (std::abs(rho) >= 1.0) rho = detail::safe_rho(rho);
  detail::expect_cuts(kind, cut_j, cut_k);
  switch (kind) {
    case PairKind::cc: return detail::bridge_cc(rho);
    case PairKind::bb: return detail::bridge_bb(rho, cut_j[0], cut_k[0]);
    case PairKind::cb: return detail::bridge_cb(rho, cut_k[0]);
    case PairKind::ct: return detail::bridge_ct(rho, cut_k[0]);
    case PairKind::tb: return detail::bridge_tb(rho, cut_j[0], cut_k[0]);
    case PairKind::tt: return detail::bridge_tt(rho, cut_j[0], cut_k[0]);
    case PairKind::co: return detail::bridge_co(rho, cut_k);
    case PairKind::oo: return detail::bridge_oo(rho, cut_j, cut_k);
    case PairKind::ob: return detail::bridge_ob(rho, cut_j, cut_k[0]);
    case PairKind::to: return detail::bridge_to(rho, cut_j[0], cut_k);
  }
  throw std::invalid_argument("bridge_forward: unknown kind");
}

// Inverse bridging: finds rho with |F(rho) - tau| <= 1e-8 by bracketed
// bisection refined with secant steps. Values of tau outside the attainable
// range [F(-1+delta), F(1-delta)] are clamped to the endpoints.
inline double bridge_inverse(double tau, PairKind kind, const CutoffVector& cut_j,
                             const CutoffVector& cut_k) {
  constexpr double delta = 1e-6;
  constexpr double tol = 1e-8;
  double lo = -1.0 + delta, hi = 1.0 - delta;
  double flo = bridge_forward(lo, kind, cut_j, cut_k);
  double fhi = bridge_forward(hi, kind, cut_j, cut_k);
  if (!(fhi > flo))
    throw std::runtime_error(
        "bridge_inverse: bridge not increasing on [-1+d, 1-d] for kind " +
        to_string(kind) + " (numerical pathology)");
  if (tau <= flo) return lo;
  if (tau >= fhi) return hi;
  double x = lo + (hi - lo) * (tau - flo) / (fhi - flo);
  for (int it = 0; it < 200; ++it) {
    const double fx = bridge_forward(x, kind, cut_j, cut_k);
    if (std::abs(fx - tau) <= tol) return x;
    if (fx < tau) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    // secant proposal, fall back to bisection when it leaves the bracket
    double prop = lo + (hi - lo) * (tau - flo) / (fhi - flo);
    if (!(prop > lo && prop < hi)) prop = 0.5 * (lo + hi);
    // keep strictly inside to guarantee progress
    const double guard = 1e-3 * (hi - lo);
    prop = std::clamp(prop, lo + guard, hi - guard);
    x = prop;
    if (hi - lo < 1e-14) return 0.5 * (lo + hi);
  }
  return x;
}

}  // namespace mfpca
