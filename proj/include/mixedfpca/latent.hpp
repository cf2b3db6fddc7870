#pragma once

// Subject-level latent Gaussian prediction given mixed observations: exact
// coordinates enter a closed-form Gaussian conditioning; interval-censored
// coordinates (binary, ordinal, truncated zeros) are handled by a Gibbs
// sampler whose full conditionals are univariate truncated normals. Also the
// multivariate BLUP to new time points with its conditional covariance.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mixedfpca/covfit.hpp"
#include "mixedfpca/marginals.hpp"
#include "mixedfpca/rng.hpp"

namespace mfpca {

struct LatentConstraint {
  enum class Kind { Exact, Interval };
  Kind kind = Kind::Exact;
  double value = 0.0;                // Exact
  double lo = -kInf, hi = kInf;      // Interval

  bool uninformative() const {
    return kind == Kind::Interval && lo == -kInf && hi == kInf;
  }
};

// Maps one observed value to its latent-scale constraint.
inline LatentConstraint interval_constraints(double x, const VariableType& vtype,
                                             const CutoffVector& cutoffs,
                                             const MonotoneMap* transform) {
  if (!value_consistent(vtype, x))
    throw std::invalid_argument("interval_constraints: value inconsistent with type");
  LatentConstraint c;
  switch (vtype.kind) {
    case VarKind::Continuous:
      c.kind = LatentConstraint::Kind::Exact;
      c.value = transform ? (*transform)(x) : x;
      return c;
    case VarKind::Truncated:
      if (x > 0.0) {
        c.kind = LatentConstraint::Kind::Exact;
        c.value = transform ? (*transform)(x) : x;
      } else {
        c.kind = LatentConstraint::Kind::Interval;
        c.hi = cutoffs[0];
      }
      return c;
    case VarKind::Binary:
      c.kind = LatentConstraint::Kind::Interval;
      if (x == 1.0)
        c.lo = cutoffs[0];
      else
        c.hi = cutoffs[0];
      return c;
    case VarKind::Ordinal: {
      c.kind = LatentConstraint::Kind::Interval;
      const int level = static_cast<int>(x);
      c.lo = (level == 0) ? -kInf : cutoffs[level - 1];
      c.hi = (level == static_cast<int>(cutoffs.size())) ? kInf : cutoffs[level];
      return c;
    }
  }
  throw std::invalid_argument("interval_constraints: unknown type");
}

struct SamplerSettings {
  std::uint64_t seed = 0;
  int burn_in = 100;
  int sweeps = 400;
};

struct LatentPrediction {
  std::string subject_id;
  std::vector<double> grid;
  Eigen::MatrixXd vhat;  // J x m
  Eigen::MatrixXd sd;    // J x m
  bool used_sampler = false;
  bool mixing_warning = false;
  SamplerSettings settings;
};

struct SubjectObservation {
  int component = 0;
  double time = 0.0;
  double value = 0.0;
};

namespace detail {

inline double truncated_normal_draw(Rng& rng, double mu, double sigma, double lo,
                                    double hi) {
  // inverse-CDF with tail-stable complements
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  double z;
  if (a > 0.0) {  // both bounds in the upper tail: work with survival probs
    const double sa = std_normal_sf(a);
    const double sb = (hi == kInf) ? 0.0 : std_normal_sf(b);
    const double u = sb + (sa - sb) * rng.uniform_open();
    z = -std_normal_quantile(std::clamp(u, 1e-300, 1.0));
  } else if (b < 0.0) {
    const double fa = (lo == -kInf) ? 0.0 : std_normal_cdf(a);
    const double fb = std_normal_cdf(b);
    const double u = fa + (fb - fa) * rng.uniform_open();
    z = std_normal_quantile(std::clamp(u, 1e-300, 1.0));
  } else {
    const double fa = (lo == -kInf) ? 0.0 : std_normal_cdf(a);
    const double fb = (hi == kInf) ? 1.0 : std_normal_cdf(b);
    const double u = fa + (fb - fa) * rng.uniform_open();
    z = std_normal_quantile(std::clamp(u, 1e-12, 1.0 - 1e-12));
  }
  if (std::isfinite(lo)) z = std::max(z, a);
  if (std::isfinite(hi)) z = std::min(z, b);
  return mu + sigma * z;
}

inline int snap_to_grid(const std::vector<double>& grid, double t) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), t);
  if (it == grid.begin()) return 0;
  if (it == grid.end()) return static_cast<int>(grid.size()) - 1;
  const auto prev = it - 1;
  return (t - *prev <= *it - t) ? static_cast<int>(prev - grid.begin())
                                : static_cast<int>(it - grid.begin());
}

}  // namespace detail

// Conditional mean (and sd) of the latent Gaussian vector on the model grid
// given a subject's mixed observations.
inline LatentPrediction predict_latent(const std::vector<SubjectObservation>& obs,
                                       const std::vector<VariableType>& types,
                                       const LatentCorrelationModel& model,
                                       const MarginalModel& marginals,
                                       const SamplerSettings& settings,
                                       const std::string& subject_id = "") {
  if (obs.empty())
    throw std::invalid_argument("predict_latent: empty observation set");
  const int J = model.J;
  const int m = model.m();

  // coordinate -> constraint; on snapping collisions keep the nearest time
  std::map<int, std::pair<double, LatentConstraint>> picked;  // coord -> (dist, c)
  for (const auto& o : obs) {
    if (o.component < 0 || o.component >= J)
      throw std::invalid_argument("predict_latent: component out of range");
    const int g = detail::snap_to_grid(model.grid, o.time);
    const int coord = o.component * m + g;
    const int mr = marginals.nearest_time_index(o.time);
    const auto& vt = types[o.component];
    const MonotoneMap* tr = (vt.kind == VarKind::Continuous || vt.kind == VarKind::Truncated)
                                ? (marginals.has_transform(o.component, mr)
                                       ? &marginals.transform(o.component, mr)
                                       : nullptr)
                                : nullptr;
    LatentConstraint c =
        interval_constraints(o.value, vt, marginals.cutoffs(o.component, mr), tr);
    if (c.uninformative()) continue;  // degenerate margin carries no signal
    const double dist = std::abs(model.grid[g] - o.time);
    const auto it = picked.find(coord);
    if (it == picked.end() || dist < it->second.first)
      picked[coord] = {dist, c};
  }
  if (picked.empty())
    throw std::invalid_argument("predict_latent: no informative observations");

  std::vector<int> coords;
  std::vector<LatentConstraint> cons;
  for (const auto& [coord, pc] : picked) {
    coords.push_back(coord);
    cons.push_back(pc.second);
  }
  const int nO = static_cast<int>(coords.size());

  Eigen::MatrixXd Coo(nO, nO);
  for (int a = 0; a < nO; ++a)
    for (int b = 0; b < nO; ++b) Coo(a, b) = model.assembled_pd(coords[a], coords[b]);

  Eigen::VectorXd vO(nO);
  bool any_interval = false;
  for (int a = 0; a < nO; ++a) {
    if (cons[a].kind == LatentConstraint::Kind::Exact) {
      vO[a] = cons[a].value;
    } else {
      any_interval = true;
      vO[a] = 0.0;
    }
  }

  LatentPrediction pred;
  pred.subject_id = subject_id;
  pred.grid = model.grid;
  pred.settings = settings;
  pred.used_sampler = any_interval;

  Eigen::MatrixXd SO = Eigen::MatrixXd::Zero(nO, nO);  // covariance of V_O | X
  if (any_interval) {
    const Eigen::MatrixXd Prec = Coo.llt().solve(Eigen::MatrixXd::Identity(nO, nO));
    Rng rng(settings.seed);
    // start interval coordinates at a point inside the box
    for (int a = 0; a < nO; ++a) {
      if (cons[a].kind != LatentConstraint::Kind::Interval) continue;
      double v0 = 0.0;
      if (std::isfinite(cons[a].lo) && std::isfinite(cons[a].hi))
        v0 = 0.5 * (cons[a].lo + cons[a].hi);
      else if (std::isfinite(cons[a].lo))
        v0 = cons[a].lo + 0.5;
      else if (std::isfinite(cons[a].hi))
        v0 = cons[a].hi - 0.5;
      vO[a] = v0;
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(nO);
    Eigen::VectorXd acc_half1 = Eigen::VectorXd::Zero(nO);
    Eigen::MatrixXd acc2 = Eigen::MatrixXd::Zero(nO, nO);
    const int total = settings.burn_in + settings.sweeps;
    for (int it = 0; it < total; ++it) {
      for (int a = 0; a < nO; ++a) {
        if (cons[a].kind != LatentConstraint::Kind::Interval) continue;
        const double lam = Prec(a, a);
        const double mu = vO[a] - Prec.row(a).dot(vO) / lam;
        const double sigma = std::sqrt(1.0 / lam);
        vO[a] = detail::truncated_normal_draw(rng, mu, sigma, cons[a].lo, cons[a].hi);
      }
      if (it >= settings.burn_in) {
        acc += vO;
        acc2 += vO * vO.transpose();
        if (it - settings.burn_in < settings.sweeps / 2) acc_half1 += vO;
      }
    }
    const double S = settings.sweeps;
    const Eigen::VectorXd mean = acc / S;
    SO = acc2 / S - mean * mean.transpose();
    const int h1 = settings.sweeps / 2;
    const Eigen::VectorXd m1 = acc_half1 / h1;
    const Eigen::VectorXd m2 = (acc - acc_half1) / (S - h1);
    pred.mixing_warning = ((m1 - m2).lpNorm<Eigen::Infinity>() > 0.05);
    vO = mean;
  }

  // propagate to the full grid: E[V_G | X] = C_GO Coo^-1 E[V_O | X]
  const Eigen::LLT<Eigen::MatrixXd> llt(Coo);
  const Eigen::VectorXd alpha = llt.solve(vO);
  Eigen::MatrixXd Cgo(J * m, nO);
  for (int a = 0; a < nO; ++a)
    Cgo.col(a) = model.assembled_pd.col(coords[a]);
  const Eigen::VectorXd vG = Cgo * alpha;

  // sd: conditional-on-V_O part plus the propagated sampler covariance
  const Eigen::MatrixXd W = llt.solve(Cgo.transpose());  // Coo^-1 C_OG
  Eigen::VectorXd var(J * m);
  for (int g = 0; g < J * m; ++g) {
    double v = model.assembled_pd(g, g) - Cgo.row(g).dot(W.col(g));
    if (any_interval) v += W.col(g).dot(SO * W.col(g));
    var[g] = std::max(0.0, v);
  }

  pred.vhat = Eigen::MatrixXd(J, m);
  pred.sd = Eigen::MatrixXd(J, m);
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < m; ++t) {
      pred.vhat(j, t) = vG[j * m + t];
      pred.sd(j, t) = std::sqrt(var[j * m + t]);
    }
  return pred;
}

struct CurvePoint {
  int component = 0;
  double time = 0.0;
};

struct CurvePrediction {
  std::vector<CurvePoint> points;
  Eigen::VectorXd latent;      // BLUP means
  Eigen::VectorXd latent_sd;   // sqrt of conditional variance diagonal
  Eigen::MatrixXd cond_cov;    // conditional covariance at the new points
  Eigen::VectorXd observed;    // observed-scale predictions
};

// Multivariate BLUP at new time points with conditional covariance, plus
// observed-scale predictions through the estimated cutoffs and inverse
// transforms.
inline CurvePrediction predict_curves(const std::vector<SubjectObservation>& obs,
                                      const std::vector<VariableType>& types,
                                      const std::vector<std::vector<double>>& new_times,
                                      const LatentCorrelationModel& model,
                                      const MarginalModel& marginals,
                                      const SamplerSettings& settings,
                                      const std::string& subject_id = "") {
  const int J = model.J;
  const int m = model.m();
  if (static_cast<int>(new_times.size()) != J)
    throw std::invalid_argument("predict_curves: need a time list per component");
  for (const auto& ts : new_times)
    for (double t : ts)
      if (t < 0.0 || t > 1.0)
        throw std::invalid_argument("predict_curves: new times must lie in [0,1]");

  const LatentPrediction lp =
      predict_latent(obs, types, model, marginals, settings, subject_id);

  // observed coordinates actually used by the prediction: recompute the snap
  std::vector<int> ocoords;
  {
    std::map<int, bool> seen;
    for (const auto& o : obs) {
      const int g = detail::snap_to_grid(model.grid, o.time);
      const int coord = o.component * m + g;
      if (!seen[coord]) {
        seen[coord] = true;
        ocoords.push_back(coord);
      }
    }
    std::sort(ocoords.begin(), ocoords.end());
  }
  const int nO = static_cast<int>(ocoords.size());
  Eigen::VectorXd vO(nO);
  for (int a = 0; a < nO; ++a)
    vO[a] = lp.vhat(ocoords[a] / m, ocoords[a] % m);

  CurvePrediction out;
  for (int j = 0; j < J; ++j)
    for (double t : new_times[j]) out.points.push_back({j, t});
  const int nN = static_cast<int>(out.points.size());
  out.latent = Eigen::VectorXd::Zero(nN);
  out.latent_sd = Eigen::VectorXd::Zero(nN);
  out.cond_cov = Eigen::MatrixXd::Zero(nN, nN);
  out.observed = Eigen::VectorXd::Zero(nN);

  // new points that coincide with an observed grid coordinate copy through
  std::vector<int> exact_of(nN, -1);
  std::vector<int> rest;
  for (int p = 0; p < nN; ++p) {
    const auto& pt = out.points[p];
    for (int a = 0; a < nO; ++a) {
      const int gj = ocoords[a] / m, gt = ocoords[a] % m;
      if (gj == pt.component && std::abs(model.grid[gt] - pt.time) < 1e-12) {
        exact_of[p] = a;
        break;
      }
    }
    if (exact_of[p] < 0) rest.push_back(p);
  }

  const int nR = static_cast<int>(rest.size());
  if (nR > 0) {
    // joint covariance over observed + remaining new points, spline blocks
    // for anything off the model grid, then one PD projection so the Schur
    // complement below is guaranteed PSD
    const int nJt = nO + nR;
    Eigen::MatrixXd Cj(nJt, nJt);
    auto coord_time = [&](int a) { return model.grid[ocoords[a] % m]; };
    auto coord_comp = [&](int a) { return ocoords[a] / m; };
    for (int a = 0; a < nJt; ++a) {
      for (int b = a; b < nJt; ++b) {
        double v;
        if (a < nO && b < nO) {
          v = model.assembled_pd(ocoords[a], ocoords[b]);
        } else {
          const int ca = a < nO ? coord_comp(a) : out.points[rest[a - nO]].component;
          const double ta = a < nO ? coord_time(a) : out.points[rest[a - nO]].time;
          const int cb = b < nO ? coord_comp(b) : out.points[rest[b - nO]].component;
          const double tb = b < nO ? coord_time(b) : out.points[rest[b - nO]].time;
          if (a == b) {
            v = 1.0;
          } else {
            v = model.corr_at(ca, cb, ta, tb);
          }
        }
        Cj(a, b) = v;
        Cj(b, a) = v;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Cj);
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(model.epsilon);
    Cj = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::MatrixXd Coo = Cj.topLeftCorner(nO, nO);
    const Eigen::MatrixXd Cno = Cj.bottomLeftCorner(nR, nO);
    const Eigen::MatrixXd Cnn = Cj.bottomRightCorner(nR, nR);
    const Eigen::LLT<Eigen::MatrixXd> llt(Coo);
    const Eigen::VectorXd mu = Cno * llt.solve(vO);
    const Eigen::MatrixXd cc = Cnn - Cno * llt.solve(Cno.transpose());
    for (int r = 0; r < nR; ++r) {
      out.latent[rest[r]] = mu[r];
      for (int r2 = 0; r2 < nR; ++r2) out.cond_cov(rest[r], rest[r2]) = cc(r, r2);
    }
  }
  for (int p = 0; p < nN; ++p)
    if (exact_of[p] >= 0) out.latent[p] = vO[exact_of[p]];
  for (int p = 0; p < nN; ++p)
    out.latent_sd[p] = std::sqrt(std::max(0.0, out.cond_cov(p, p)));

  // observed-scale predictions
  for (int p = 0; p < nN; ++p) {
    const auto& pt = out.points[p];
    const auto& vt = types[pt.component];
    const int mr = marginals.nearest_time_index(pt.time);
    const double v = out.latent[p];
    switch (vt.kind) {
      case VarKind::Continuous: {
        const MonotoneMap* tr = marginals.has_transform(pt.component, mr)
                                    ? &marginals.transform(pt.component, mr)
                                    : nullptr;
        out.observed[p] = tr ? tr->inverse(v) : v;
        break;
      }
      case VarKind::Truncated: {
        const auto& cuts = marginals.cutoffs(pt.component, mr);
        if (v > cuts[0]) {
          const MonotoneMap* tr = marginals.has_transform(pt.component, mr)
                                      ? &marginals.transform(pt.component, mr)
                                      : nullptr;
          out.observed[p] = tr ? tr->inverse(v) : v;
        } else {
          out.observed[p] = 0.0;
        }
        break;
      }
      case VarKind::Binary:
      case VarKind::Ordinal:
        out.observed[p] =
            apply_observation_map(v, vt, marginals.cutoffs(pt.component, mr));
        break;
    }
  }
  return out;
}

}  // namespace mfpca
