#pragma once

// Low-dimensional multivariate normal CDF kernels.
//
// - bvn_cdf: Genz's deterministic quadrature (abs err < 1e-14).
// - tvn_cdf / qvn_cdf: deterministic conditioning reduction with panelled
//   Gauss-Legendre quadrature over the pivot coordinate (abs err ~1e-10).
//   These back the bridging functions, which need smooth high-precision
//   evaluations inside root finders.
// - mvn_cdf: separation-of-variables transform integrated over a shifted
//   rank-1 lattice with a fixed seed; returns value and standard-error
//   estimate, reproducible bit-exactly for a given (upper, corr, seed).

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mixedfpca/normal.hpp"
#include "mixedfpca/rng.hpp"

namespace mfpca {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Correlation matrix for dimensions 2..4 with validation and the slack rules
// the bridging inversions rely on (off-diagonals within 1e-8 of +-1 are
// nudged to the interior; eigenvalues above -1e-10 are tolerated).
struct CorrelationMatrix {
  Eigen::MatrixXd m;

  explicit CorrelationMatrix(Eigen::MatrixXd mat) : m(std::move(mat)) {
    const auto d = m.rows();
    if (d < 2 || d > 4 || m.cols() != d)
      throw std::invalid_argument("CorrelationMatrix: dimension must be 2..4");
    if (!m.isApprox(m.transpose(), 1e-12))
      throw std::invalid_argument("CorrelationMatrix: not symmetric");
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(m(i, i) - 1.0) > 1e-12)
        throw std::invalid_argument("CorrelationMatrix: diagonal must be 1");
      for (Eigen::Index j = 0; j < d; ++j) {
        if (i == j) continue;
        if (std::abs(m(i, j)) > 1.0 + 1e-12)
          throw std::invalid_argument("CorrelationMatrix: |off-diagonal| > 1");
        if (std::abs(m(i, j)) > 1.0 - 1e-8)
          m(i, j) = std::copysign(1.0 - 1e-8, m(i, j));
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw std::invalid_argument("CorrelationMatrix: not PSD within slack");
  }

  Eigen::Index dim() const { return m.rows(); }
};

// ---------------------------------------------------------------------------
// Bivariate CDF, Genz (2004) BVND port.
// ---------------------------------------------------------------------------

namespace detail {

// Gauss-Legendre nodes/weights on [-1,1] (6/12/20 point rules as in TVPACK).
inline constexpr double kGx1[3] = {-0.9324695142031522, -0.6612093864662647,
                                   -0.2386191860831970};
inline constexpr double kGw1[3] = {0.1713244923791705, 0.3607615730481384,
                                   0.4679139345726904};
inline constexpr double kGx2[6] = {-0.9815606342467191, -0.9041172563704750,
                                   -0.7699026741943050, -0.5873179542866171,
                                   -0.3678314989981802, -0.1252334085114692};
inline constexpr double kGw2[6] = {0.04717533638651177, 0.1069393259953183,
                                   0.1600783285433464,  0.2031674267230659,
                                   0.2334925365383547,  0.2491470458134029};
inline constexpr double kGx3[10] = {-0.9931285991850949, -0.9639719272779138,
                                    -0.9122344282513259, -0.8391169718222188,
                                    -0.7463319064601508, -0.6360536807265150,
                                    -0.5108670019508271, -0.3737060887154196,
                                    -0.2277858511416451, -0.07652652113349733};
inline constexpr double kGw3[10] = {0.01761400713915212, 0.04060142980038694,
                                    0.06267204833410906, 0.08327674157670475,
                                    0.1019301198172404,  0.1181945319615184,
                                    0.1316886384491766,  0.1420961093183821,
                                    0.1491729864726037,  0.1527533871307259};

// P(X > dh, Y > dk) for standard bivariate normal with correlation r.
inline double bvnd_upper(double dh, double dk, double r) {
  const double twopi = 6.283185307179586476925286766559;
  const double* x;
  const double* w;
  int lg;
  if (std::abs(r) < 0.3) {
    lg = 3; x = kGx1; w = kGw1;
  } else if (std::abs(r) < 0.75) {
    lg = 6; x = kGx2; w = kGw2;
  } else {
    lg = 10; x = kGx3; w = kGw3;
  }
  double h = dh, k = dk;
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    if (std::abs(r) > 0.0) {
      const double hs = (h * h + k * k) / 2.0;
      const double asr = std::asin(r);
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double sn = std::sin(asr * (is * x[i] + 1.0) / 2.0);
          bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      }
      bvn = bvn * asr / (2.0 * twopi);
    }
    bvn += std_normal_cdf(-h) * std_normal_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (std::abs(r) < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0)
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 +
               c * d * as * as / 5.0);
      if (-hk < 100.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * kSqrt2Pi * std_normal_cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double xs = a * (is * x[i] + 1.0) * a * (is * x[i] + 1.0);
          const double rs = std::sqrt(1.0 - xs);
          asr = -(bs / xs + hk) / 2.0;
          if (asr > -100.0) {
            bvn += a * w[i] * std::exp(asr) *
                   (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                    (1.0 + c * xs * (1.0 + d * xs)));
          }
        }
      }
      bvn = -bvn / twopi;
    }
    if (r > 0.0) {
      bvn += std_normal_cdf(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) bvn += std_normal_cdf(k) - std_normal_cdf(h);
    }
  }
  return std::max(0.0, std::min(1.0, bvn));
}

}  // namespace detail

// P(Z1 <= a, Z2 <= b) with correlation rho.
inline double bvn_cdf(double a, double b, double rho) {
  if (std::isnan(a) || std::isnan(b) || std::isnan(rho))
    throw std::invalid_argument("bvn_cdf: NaN argument");
  if (std::abs(rho) > 1.0)
    throw std::invalid_argument("bvn_cdf: |rho| > 1");
  if (a == -kInf || b == -kInf) return 0.0;
  if (a == kInf) return std_normal_cdf(b);
  if (b == kInf) return std_normal_cdf(a);
  if (rho == 1.0) return std_normal_cdf(std::min(a, b));
  if (rho == -1.0) return std::max(0.0, std_normal_cdf(a) + std_normal_cdf(b) - 1.0);
  return detail::bvnd_upper(-a, -b, rho);
}

// ---------------------------------------------------------------------------
// Deterministic trivariate / quadrivariate CDFs via conditioning.
// ---------------------------------------------------------------------------

namespace detail {

// 12-node GL rule reused for the conditioning integrals.
inline constexpr double kPanelWidth = 2.5;
inline constexpr double kZCut = 6.8;

// Integrates f over [lo, hi] with panels that respect the supplied interior
// breakpoints. Conditional CDF factors turn step-like when a conditioning
// correlation is close to +-1; aligning panel edges with the transition
// points keeps the composite rule accurate there.
template <typename F>
double gauss_panels(double lo, double hi, const double* breaks, int n_breaks,
                    F&& f) {
  if (hi <= lo) return 0.0;
  double edges[12];
  int ne = 0;
  edges[ne++] = lo;
  for (int i = 0; i < n_breaks && ne < 10; ++i)
    if (breaks[i] > lo + 1e-12 && breaks[i] < hi - 1e-12) edges[ne++] = breaks[i];
  edges[ne++] = hi;
  std::sort(edges, edges + ne);
  double total = 0.0;
  for (int seg = 0; seg + 1 < ne; ++seg) {
    const double a = edges[seg], b = edges[seg + 1];
    const int npan = std::max(1, static_cast<int>(std::ceil((b - a) / kPanelWidth)));
    const double w = (b - a) / npan;
    for (int p = 0; p < npan; ++p) {
      const double c = a + (p + 0.5) * w;
      const double h = 0.5 * w;
      for (int i = 0; i < 6; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double z = c + h * is * kGx2[i];
          total += h * kGw2[i] * f(z);
        }
      }
    }
  }
  return total;
}

// transition location of the conditional limit (b - r z)/sqrt(1-r^2)
inline int kink_points(const double* bs, const double* rs, int n, double* out) {
  int k = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(rs[i]) > 0.8 && std::isfinite(bs[i])) out[k++] = bs[i] / rs[i];
  }
  return k;
}

}  // namespace detail

// P(Z1<=b1, Z2<=b2, Z3<=b3) under a 3x3 correlation matrix. Infinite limits
// are eliminated by marginalization before quadrature.
inline double tvn_cdf(const Eigen::Vector3d& b, const Eigen::Matrix3d& R) {
  // eliminate +inf / -inf coordinates
  for (int i = 0; i < 3; ++i) {
    if (b[i] == -kInf) return 0.0;
    if (b[i] == kInf) {
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      return bvn_cdf(b[j], b[k], R(j, k));
    }
  }
  // pivot on the smallest limit: narrowest integration range
  int p = 0;
  for (int i = 1; i < 3; ++i)
    if (b[i] < b[p]) p = i;
  const int j = (p + 1) % 3, k = (p + 2) % 3;
  const double rj = R(p, j), rk = R(p, k);
  const double sj = std::sqrt(std::max(0.0, 1.0 - rj * rj));
  const double sk = std::sqrt(std::max(0.0, 1.0 - rk * rk));
  double rc;
  if (sj < 1e-12 || sk < 1e-12) {
    rc = 0.0;  // degenerate conditional handled by limit logic below
  } else {
    rc = std::clamp((R(j, k) - rj * rk) / (sj * sk), -1.0, 1.0);
  }
  const double hi = std::min(b[p], detail::kZCut);
  auto integrand = [&](double z) {
    double cj, ck;
    if (sj < 1e-12)
      cj = (b[j] - rj * z) >= 0.0 ? kInf : -kInf;
    else
      cj = (b[j] - rj * z) / sj;
    if (sk < 1e-12)
      ck = (b[k] - rk * z) >= 0.0 ? kInf : -kInf;
    else
      ck = (b[k] - rk * z) / sk;
    return std_normal_pdf(z) * bvn_cdf(cj, ck, rc);
  };
  return detail::gauss_panels(-detail::kZCut, hi, integrand);
}

// P(Z<=b) under a 4x4 correlation matrix, by one more conditioning level.
inline double qvn_cdf(const Eigen::Vector4d& b, const Eigen::Matrix4d& R) {
  for (int i = 0; i < 4; ++i) {
    if (b[i] == -kInf) return 0.0;
    if (b[i] == kInf) {
      Eigen::Vector3d bb;
      Eigen::Matrix3d RR;
      int r = 0;
      for (int a = 0; a < 4; ++a) {
        if (a == i) continue;
        bb[r] = b[a];
        int c = 0;
        for (int bcol = 0; bcol < 4; ++bcol) {
          if (bcol == i) continue;
          RR(r, c++) = R(a, bcol);
        }
        ++r;
      }
      return tvn_cdf(bb, RR);
    }
  }
  int p = 0;
  for (int i = 1; i < 4; ++i)
    if (b[i] < b[p]) p = i;
  int idx[3], r = 0;
  for (int a = 0; a < 4; ++a)
    if (a != p) idx[r++] = a;
  double rr[3], ss[3];
  for (int a = 0; a < 3; ++a) {
    rr[a] = R(p, idx[a]);
    ss[a] = std::sqrt(std::max(0.0, 1.0 - rr[a] * rr[a]));
  }
  Eigen::Matrix3d Rc = Eigen::Matrix3d::Identity();
  for (int a = 0; a < 3; ++a) {
    for (int c = a + 1; c < 3; ++c) {
      double v;
      if (ss[a] < 1e-12 || ss[c] < 1e-12)
        v = 0.0;
      else
        v = std::clamp((R(idx[a], idx[c]) - rr[a] * rr[c]) / (ss[a] * ss[c]),
                       -1.0, 1.0);
      Rc(a, c) = Rc(c, a) = v;
    }
  }
  const double hi = std::min(b[p], detail::kZCut);
  auto integrand = [&](double z) {
    Eigen::Vector3d c3;
    for (int a = 0; a < 3; ++a) {
      if (ss[a] < 1e-12)
        c3[a] = (b[idx[a]] - rr[a] * z) >= 0.0 ? kInf : -kInf;
      else
        c3[a] = (b[idx[a]] - rr[a] * z) / ss[a];
    }
    return std_normal_pdf(z) * tvn_cdf(c3, Rc);
  };
  return detail::gauss_panels(-detail::kZCut, hi, integrand);
}

// ---------------------------------------------------------------------------
// Lattice-rule MVN CDF for d in {3,4}.
// ---------------------------------------------------------------------------

struct MvnResult {
  double value = 0.0;
  double se = 0.0;
};

// P(Z <= upper) for d-variate standard normal with the given correlation,
// via the Genz separation-of-variables transform integrated over a shifted
// Richtmyer lattice. Deterministic for fixed (upper, corr, seed).
inline MvnResult mvn_cdf(const Eigen::VectorXd& upper, const CorrelationMatrix& corr,
                         std::uint64_t seed, int n_points = 8192, int n_shifts = 12) {
  const int d = static_cast<int>(upper.size());
  if (d != 3 && d != 4)
    throw std::invalid_argument("mvn_cdf: dimension must be 3 or 4");
  if (corr.dim() != d)
    throw std::invalid_argument("mvn_cdf: limit/correlation dimension mismatch");

  // infinite-limit elimination first
  for (int i = 0; i < d; ++i) {
    if (upper[i] == -kInf) return {0.0, 0.0};
    if (upper[i] == kInf) {
      std::vector<int> keep;
      for (int a = 0; a < d; ++a)
        if (a != i) keep.push_back(a);
      if (d == 3) {
        return {bvn_cdf(upper[keep[0]], upper[keep[1]],
                        corr.m(keep[0], keep[1])),
                0.0};
      }
      Eigen::VectorXd b3(3);
      Eigen::MatrixXd R3(3, 3);
      for (int a = 0; a < 3; ++a) {
        b3[a] = upper[keep[a]];
        for (int c = 0; c < 3; ++c) R3(a, c) = corr.m(keep[a], keep[c]);
      }
      return mvn_cdf(b3, CorrelationMatrix(R3), seed, n_points, n_shifts);
    }
  }

  // sort variables by limit (ascending) for a better-conditioned transform
  std::array<int, 4> ord{0, 1, 2, 3};
  std::sort(ord.begin(), ord.begin() + d,
            [&](int a, int b) { return upper[a] < upper[b]; });
  Eigen::VectorXd b(d);
  Eigen::MatrixXd R(d, d);
  for (int i = 0; i < d; ++i) {
    b[i] = upper[ord[i]];
    for (int j = 0; j < d; ++j) R(i, j) = corr.m(ord[i], ord[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  Eigen::MatrixXd L;
  if (llt.info() == Eigen::Success) {
    L = llt.matrixL();
  } else {
    // PSD within slack: clip spectrum and refactor
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-12);
    Eigen::MatrixXd fixed =
        es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    L = Eigen::LLT<Eigen::MatrixXd>(fixed).matrixL();
  }

  // Richtmyer generators: fractional parts of sqrt(primes)
  static constexpr double primes[3] = {2.0, 3.0, 5.0};
  double gen[3];
  for (int i = 0; i < d - 1; ++i) {
    const double s = std::sqrt(primes[i]);
    gen[i] = s - std::floor(s);
  }

  Rng shift_rng(seed);
  const int nd = d - 1;
  double sum = 0.0, sum2 = 0.0;
  for (int sh = 0; sh < n_shifts; ++sh) {
    double delta[3];
    for (int i = 0; i < nd; ++i) delta[i] = shift_rng.uniform();
    double acc = 0.0;
    for (int j = 1; j <= n_points; ++j) {
      double u[3];
      for (int i = 0; i < nd; ++i) {
        double v = j * gen[i] + delta[i];
        v -= std::floor(v);
        u[i] = std::abs(2.0 * v - 1.0);  // baker's transform
      }
      double f = std_normal_cdf(b[0] / L(0, 0));
      double y[3];
      double e = f;
      for (int i = 1; i < d; ++i) {
        const double q = std::clamp(u[i - 1] * e, 1e-16, 1.0 - 1e-16);
        y[i - 1] = std_normal_quantile(q);
        double num = b[i];
        for (int k = 0; k < i; ++k) num -= L(i, k) * y[k];
        e = std_normal_cdf(num / L(i, i));
        f *= e;
      }
      acc += (f - acc) / j;
    }
    sum += acc;
    sum2 += acc * acc;
  }
  MvnResult out;
  out.value = sum / n_shifts;
  const double var = std::max(0.0, (sum2 - sum * sum / n_shifts) / (n_shifts - 1));
  out.se = std::sqrt(var / n_shifts);
  return out;
}

}  // namespace mfpca
