#pragma once

// Weighted pairwise-complete sample Kendall's-tau surfaces over all pooled
// time pairs for one component pair. Ties contribute sign 0 (tau-a), so the
// statistic matches the population bridging target.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mixedfpca/dataset.hpp"

namespace mfpca {

namespace detail {

// Merge-sort inversion count: pairs (i<j) with y[i] > y[j]. Mutates y.
inline std::int64_t count_inversions(std::vector<double>& y, std::vector<double>& buf,
                                     std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(y, buf, lo, mid) + count_inversions(y, buf, mid, hi);
  std::size_t a = lo, b = mid, o = lo;
  while (a < mid && b < hi) {
    if (y[b] < y[a]) {
      inv += static_cast<std::int64_t>(mid - a);
      buf[o++] = y[b++];
    } else {
      buf[o++] = y[a++];
    }
  }
  while (a < mid) buf[o++] = y[a++];
  while (b < hi) buf[o++] = y[b++];
  std::copy(buf.begin() + lo, buf.begin() + hi, y.begin() + lo);
  return inv;
}

template <typename Group>
std::int64_t tied_pairs(std::vector<Group>& keys) {
  std::sort(keys.begin(), keys.end());
  std::int64_t t = 0, run = 1;
  for (std::size_t i = 1; i <= keys.size(); ++i) {
    if (i < keys.size() && keys[i] == keys[i - 1]) {
      ++run;
    } else {
      t += run * (run - 1) / 2;
      run = 1;
    }
  }
  return t;
}

// Knight's O(n log n) sum of sign products over all unordered pairs.
inline double sign_sum_fast(std::vector<std::pair<double, double>>& xy) {
  const std::int64_t n = static_cast<std::int64_t>(xy.size());
  std::sort(xy.begin(), xy.end());
  const std::int64_t total = n * (n - 1) / 2;
  std::vector<std::pair<double, double>> both = xy;
  std::int64_t txy = tied_pairs(both);
  std::vector<double> xs(n), ys(n);
  for (std::int64_t i = 0; i < n; ++i) {
    xs[i] = xy[i].first;
    ys[i] = xy[i].second;
  }
  std::int64_t tx = tied_pairs(xs);
  std::vector<double> yseq(n);
  for (std::int64_t i = 0; i < n; ++i) yseq[i] = xy[i].second;
  std::vector<double> buf(n);
  const std::int64_t disc = count_inversions(yseq, buf, 0, static_cast<std::size_t>(n));
  std::int64_t ty = tied_pairs(ys);
  return static_cast<double>(total - tx - ty + txy - 2 * disc);
}

inline double sign_sum_direct(const std::vector<std::pair<double, double>>& xy) {
  double s = 0.0;
  const std::size_t n = xy.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = xy[i].first - xy[j].first;
      const double dy = xy[i].second - xy[j].second;
      const double sx = (dx > 0) - (dx < 0);
      const double sy = (dy > 0) - (dy < 0);
      s += sx * sy;
    }
  }
  return s;
}

}  // namespace detail

struct TauSurface {
  int j = 0, k = 0;
  int c0 = 10;
  // indexed over pooled-time indices; count <= c0 marks an excluded cell
  Eigen::MatrixXd tau;
  Eigen::MatrixXd count;

  bool has(int s, int t) const { return count(s, t) > c0; }

  int n_retained() const {
    int n = 0;
    for (Eigen::Index s = 0; s < count.rows(); ++s)
      for (Eigen::Index t = 0; t < count.cols(); ++t) n += (count(s, t) > c0);
    return n;
  }
};

// Sample tau-a over subject pairs observing component j at time s and
// component k at time t, for every (s,t) in the pooled grid.
inline TauSurface tau_surface(const MixedDataset& data, int j, int k, int c0 = 10) {
  const int J = data.n_components();
  if (j < 0 || j >= J || k < 0 || k >= J)
    throw std::invalid_argument("tau_surface: component index out of range");
  if (c0 < 0) throw std::invalid_argument("tau_surface: c0 must be >= 0");
  const int T = static_cast<int>(data.pooled_times().size());
  TauSurface out;
  out.j = j;
  out.k = k;
  out.c0 = c0;
  out.tau = Eigen::MatrixXd::Zero(T, T);
  out.count = Eigen::MatrixXd::Zero(T, T);

  std::vector<std::pair<double, double>> xy;
  auto compute_cell = [&](int s, int t) {
    const auto& ca = data.cell(j, s);
    const auto& cb = data.cell(k, t);
    xy.clear();
    std::size_t a = 0, b = 0;
    while (a < ca.size() && b < cb.size()) {
      if (ca[a].first < cb[b].first) {
        ++a;
      } else if (cb[b].first < ca[a].first) {
        ++b;
      } else {
        xy.push_back({ca[a].second, cb[b].second});
        ++a;
        ++b;
      }
    }
    const std::int64_t n = static_cast<std::int64_t>(xy.size());
    const std::int64_t pairs = n * (n - 1) / 2;
    if (pairs == 0) {
      out.count(s, t) = 0;
      return;
    }
    const double ssum = (n > 64) ? detail::sign_sum_fast(xy)
                                 : detail::sign_sum_direct(xy);
    out.tau(s, t) = ssum / static_cast<double>(pairs);
    out.count(s, t) = static_cast<double>(pairs);
  };

  if (j == k) {
    for (int s = 0; s < T; ++s) {
      for (int t = s; t < T; ++t) {
        compute_cell(s, t);
        out.tau(t, s) = out.tau(s, t);
        out.count(t, s) = out.count(s, t);
      }
    }
  } else {
    for (int s = 0; s < T; ++s)
      for (int t = 0; t < T; ++t) compute_cell(s, t);
  }

  if (out.n_retained() == 0)
    throw std::runtime_error("tau_surface: insufficient pairwise-complete data");
  return out;
}

}  // namespace mfpca
