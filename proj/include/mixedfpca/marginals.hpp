#pragma once

// Per-time marginal estimation: method-of-moments cutoffs, empirical
// nonparanormal transforms, and the forward observation maps.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "mixedfpca/dataset.hpp"
#include "mixedfpca/normal.hpp"
#include "mixedfpca/types.hpp"

namespace mfpca {

// Cutoff estimates at one time point:
//   binary / truncated:  Delta = PhiInv( mean I(X == 0) )
//   ordinal:             Delta_k = PhiInv( mean I(X <= k-1) ), k = 1..L-1
// Degenerate margins (empirical proportion exactly 0 or 1) yield +-inf
// entries; downstream bridging excludes those cells.
inline CutoffVector estimate_cutoffs(const std::vector<double>& values,
                                     const VariableType& vtype) {
  if (values.empty()) throw std::invalid_argument("estimate_cutoffs: empty input");
  if (vtype.kind == VarKind::Continuous)
    throw std::invalid_argument("estimate_cutoffs: continuous margins have no cutoffs");
  const double n = static_cast<double>(values.size());
  std::vector<double> cuts;
  if (vtype.kind == VarKind::Binary || vtype.kind == VarKind::Truncated) {
    double zeros = 0;
    for (double v : values) zeros += (v == 0.0);
    cuts.push_back(std_normal_quantile(zeros / n));
  } else {
    for (int k = 1; k <= vtype.levels - 1; ++k) {
      double cnt = 0;
      for (double v : values) cnt += (v <= k - 1);
      cuts.push_back(std_normal_quantile(cnt / n));
    }
  }
  return CutoffVector(std::move(cuts));
}

// Strictly increasing empirical transform f(x) = PhiInv(G(x)) with
// G(x) = (n+1)^-1 sum I(X_i <= x), piecewise-linear between observed
// support points and clamped outside. Inverse available on the range.
class MonotoneMap {
 public:
  MonotoneMap() = default;

  static MonotoneMap fit(std::vector<double> values, const VariableType& vtype) {
    if (vtype.kind != VarKind::Continuous && vtype.kind != VarKind::Truncated)
      throw std::invalid_argument("estimate_transform: type must be continuous or truncated");
    const double n = static_cast<double>(values.size());
    std::vector<double> support = values;
    if (vtype.kind == VarKind::Truncated) {
      support.erase(std::remove_if(support.begin(), support.end(),
                                   [](double v) { return v <= 0.0; }),
                    support.end());
    }
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    if (support.size() < 2)
      throw std::invalid_argument("estimate_transform: needs >= 2 distinct values");
    MonotoneMap m;
    m.x_ = support;
    m.f_.reserve(support.size());
    std::sort(values.begin(), values.end());
    for (double s : support) {
      const auto le = std::upper_bound(values.begin(), values.end(), s) - values.begin();
      m.f_.push_back(std_normal_quantile(static_cast<double>(le) / (n + 1.0)));
    }
    return m;
  }

  double operator()(double x) const {
    if (x_.empty()) throw std::logic_error("MonotoneMap: not fitted");
    if (x <= x_.front()) return f_.front();
    if (x >= x_.back()) return f_.back();
    const auto it = std::lower_bound(x_.begin(), x_.end(), x);
    const std::size_t hi = it - x_.begin();
    const std::size_t lo = hi - 1;
    const double w = (x - x_[lo]) / (x_[hi] - x_[lo]);
    return f_[lo] + w * (f_[hi] - f_[lo]);
  }

  double inverse(double y) const {
    if (x_.empty()) throw std::logic_error("MonotoneMap: not fitted");
    if (y <= f_.front()) return x_.front();
    if (y >= f_.back()) return x_.back();
    const auto it = std::lower_bound(f_.begin(), f_.end(), y);
    const std::size_t hi = it - f_.begin();
    const std::size_t lo = hi - 1;
    const double w = (y - f_[lo]) / (f_[hi] - f_[lo]);
    return x_[lo] + w * (x_[hi] - x_[lo]);
  }

  const std::vector<double>& support() const { return x_; }
  const std::vector<double>& levels() const { return f_; }

  static MonotoneMap from_nodes(std::vector<double> x, std::vector<double> f) {
    MonotoneMap m;
    m.x_ = std::move(x);
    m.f_ = std::move(f);
    return m;
  }

 private:
  std::vector<double> x_, f_;
};

inline MonotoneMap estimate_transform(const std::vector<double>& values,
                                      const VariableType& vtype) {
  return MonotoneMap::fit(values, vtype);
}

// Forward observation map of Eq-style thresholding on the latent scale.
inline double apply_observation_map(double latent, const VariableType& vtype,
                                    const CutoffVector& cutoffs) {
  switch (vtype.kind) {
    case VarKind::Continuous:
      return latent;
    case VarKind::Truncated:
      return latent > cutoffs[0] ? latent : 0.0;
    case VarKind::Binary:
      return latent > cutoffs[0] ? 1.0 : 0.0;
    case VarKind::Ordinal: {
      int level = 0;
      for (std::size_t k = 0; k < cutoffs.size(); ++k)
        if (latent >= cutoffs[k]) level = static_cast<int>(k) + 1;
      return static_cast<double>(level);
    }
  }
  throw std::invalid_argument("apply_observation_map: unknown type");
}

// Fitted marginal state per (component, pooled-time index).
class MarginalModel {
 public:
  MarginalModel() = default;

  static MarginalModel fit(const MixedDataset& data) {
    MarginalModel m;
    const int J = data.n_components();
    const int T = static_cast<int>(data.pooled_times().size());
    m.times_ = data.pooled_times();
    m.cutoffs_.assign(static_cast<std::size_t>(J) * T, CutoffVector{});
    m.transforms_.assign(static_cast<std::size_t>(J) * T, MonotoneMap{});
    m.has_transform_.assign(static_cast<std::size_t>(J) * T, false);
    for (int j = 0; j < J; ++j) {
      const auto& vt = data.type(j);
      for (int r = 0; r < T; ++r) {
        const auto values = data.values_at(j, r);
        if (values.empty()) continue;
        if (vt.kind != VarKind::Continuous)
          m.cutoffs_[static_cast<std::size_t>(j) * T + r] =
              estimate_cutoffs(values, vt);
        if (vt.kind == VarKind::Continuous || vt.kind == VarKind::Truncated) {
          // transform needs >= 2 distinct (positive) values; otherwise the
          // cell keeps no transform and downstream falls back to identity
          try {
            m.transforms_[static_cast<std::size_t>(j) * T + r] =
                MonotoneMap::fit(values, vt);
            m.has_transform_[static_cast<std::size_t>(j) * T + r] = true;
          } catch (const std::invalid_argument&) {
          }
        }
      }
    }
    return m;
  }

  const std::vector<double>& times() const { return times_; }

  const CutoffVector& cutoffs(int j, int r) const {
    return cutoffs_.at(static_cast<std::size_t>(j) * times_.size() + r);
  }
  bool has_transform(int j, int r) const {
    return has_transform_.at(static_cast<std::size_t>(j) * times_.size() + r);
  }
  const MonotoneMap& transform(int j, int r) const {
    return transforms_.at(static_cast<std::size_t>(j) * times_.size() + r);
  }

  // nearest estimation time for out-of-grid queries
  int nearest_time_index(double t) const {
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 0;
    if (it == times_.end()) return static_cast<int>(times_.size()) - 1;
    const auto prev = it - 1;
    return (t - *prev <= *it - t) ? static_cast<int>(prev - times_.begin())
                                  : static_cast<int>(it - times_.begin());
  }

  void set_cell(int j, int r, CutoffVector cuts) {
    cutoffs_[static_cast<std::size_t>(j) * times_.size() + r] = std::move(cuts);
  }
  void set_transform(int j, int r, MonotoneMap map) {
    transforms_[static_cast<std::size_t>(j) * times_.size() + r] = std::move(map);
    has_transform_[static_cast<std::size_t>(j) * times_.size() + r] = true;
  }
  static MarginalModel empty(std::vector<double> times, int J) {
    MarginalModel m;
    m.times_ = std::move(times);
    m.cutoffs_.assign(static_cast<std::size_t>(J) * m.times_.size(), CutoffVector{});
    m.transforms_.assign(static_cast<std::size_t>(J) * m.times_.size(), MonotoneMap{});
    m.has_transform_.assign(static_cast<std::size_t>(J) * m.times_.size(), false);
    return m;
  }

 private:
  std::vector<double> times_;
  std::vector<CutoffVector> cutoffs_;
  std::vector<MonotoneMap> transforms_;
  std::vector<bool> has_transform_;
};

}  // namespace mfpca
