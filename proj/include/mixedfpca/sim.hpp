#pragma once

// Synthetic data generators for both benchmark scenarios (stationary
// multivariate Matern with exponential kernel; non-stationary Fourier basis
// expansion with per-frequency random precision), the mixed-type observation
// layer, and the integrated squared error metric.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixedfpca/dataset.hpp"
#include "mixedfpca/marginals.hpp"
#include "mixedfpca/rng.hpp"

namespace mfpca {

enum class Scenario { Stationary, Nonstationary };

inline std::string to_string(Scenario s) {
  return s == Scenario::Stationary ? "stationary" : "nonstationary";
}

struct SimulationConfig {
  Scenario scenario = Scenario::Stationary;
  int p = 4;
  int n = 100;
  int m = 16;
  std::vector<VariableType> types = {VariableType::binary(), VariableType::ordinal(4),
                                     VariableType::truncated(),
                                     VariableType::continuous()};
  std::vector<CutoffVector> cutoffs = {CutoffVector(std::vector<double>{0.5}),
                                       CutoffVector(std::vector<double>{-0.6, 0.1, 0.6}),
                                       CutoffVector(std::vector<double>{0.5}),
                                       CutoffVector{}};
  std::uint64_t seed = 1;
  int replications = 100;

  void validate() const {
    if (p < 2) throw std::invalid_argument("simulation: p must be >= 2");
    if (n < 2) throw std::invalid_argument("simulation: n must be >= 2");
    if (m < 2) throw std::invalid_argument("simulation: m must be >= 2");
    if (static_cast<int>(types.size()) != p || static_cast<int>(cutoffs.size()) != p)
      throw std::invalid_argument("simulation: types/cutoffs must have p entries");
    for (int j = 0; j < p; ++j)
      if (static_cast<int>(cutoffs[j].size()) != types[j].n_cutoffs())
        throw std::invalid_argument("simulation: cutoff count inconsistent with type");
  }
};

struct MaternParams {
  Eigen::VectorXd marginal_scale;  // phi_ii
  Eigen::MatrixXd cross_scale;     // phi_ij
  Eigen::MatrixXd sill;            // sigma_ij (unit diagonal)
  double smoothness = 0.5;
  double base_corr = 0.5;
};

// Marginal length-scales are a seeded permutation of p equidistant values on
// [1,5]; cross parameters follow the parsimonious Matern constructions
// phi_ij = sqrt((phi_ii^2+phi_jj^2)/2), sigma_ij = R_ij sqrt(phi_ii phi_jj)/phi_ij.
inline MaternParams stationary_params(int p, Rng& rng) {
  if (p < 2) throw std::invalid_argument("stationary_params: p must be >= 2");
  MaternParams mp;
  mp.marginal_scale = Eigen::VectorXd(p);
  std::vector<double> vals(p);
  for (int i = 0; i < p; ++i)
    vals[i] = 1.0 + 4.0 * static_cast<double>(i) / (p - 1);
  rng.shuffle(vals.data(), vals.size());
  for (int i = 0; i < p; ++i) mp.marginal_scale[i] = vals[i];
  mp.cross_scale = Eigen::MatrixXd(p, p);
  mp.sill = Eigen::MatrixXd(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      const double pij = std::sqrt((mp.marginal_scale[i] * mp.marginal_scale[i] +
                                    mp.marginal_scale[j] * mp.marginal_scale[j]) /
                                   2.0);
      mp.cross_scale(i, j) = pij;
      const double rij = (i == j) ? 1.0 : mp.base_corr;
      mp.sill(i, j) =
          rij * std::sqrt(mp.marginal_scale[i] * mp.marginal_scale[j]) / pij;
    }
  }
  return mp;
}

inline double stationary_cov(double s, double t, int i, int j,
                             const MaternParams& mp) {
  return mp.sill(i, j) * std::exp(-mp.cross_scale(i, j) * std::abs(s - t));
}

inline Eigen::MatrixXd stationary_grid_cov(const MaternParams& mp,
                                           const std::vector<double>& grid) {
  const int p = static_cast<int>(mp.marginal_scale.size());
  const int m = static_cast<int>(grid.size());
  Eigen::MatrixXd C(p * m, p * m);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          C(i * m + a, j * m + b) = stationary_cov(grid[a], grid[b], i, j, mp);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::runtime_error("stationary_grid_cov: covariance not PD on grid");
  return C;
}

// Standard Fourier system on [0,1]: 1, then sqrt(2) sin/cos pairs.
inline Eigen::MatrixXd fourier_basis(int M, const std::vector<double>& grid) {
  const int m = static_cast<int>(grid.size());
  Eigen::MatrixXd B(M, m);
  for (int t = 0; t < m; ++t) B(0, t) = 1.0;
  int idx = 1, k = 1;
  const double sq2 = std::sqrt(2.0);
  while (idx < M) {
    for (int t = 0; t < m; ++t)
      B(idx, t) = sq2 * std::sin(2.0 * std::numbers::pi * k * grid[t]);
    ++idx;
    if (idx < M) {
      for (int t = 0; t < m; ++t)
        B(idx, t) = sq2 * std::cos(2.0 * std::numbers::pi * k * grid[t]);
      ++idx;
    }
    ++k;
  }
  return B;
}

// Dense PD precision with complete-graph support: symmetric off-diagonals
// uniform on 0.5*[-1,1], unit diagonal, ridged if the spectrum dips.
inline Eigen::MatrixXd random_precision(int p, Rng& rng) {
  Eigen::MatrixXd om = Eigen::MatrixXd::Identity(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) om(i, j) = om(j, i) = 0.5 * rng.uniform(-1.0, 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(om, Eigen::EigenvaluesOnly);
  const double ev = es.eigenvalues().minCoeff();
  if (ev < 0.05) om += (std::abs(ev) + 0.05) * Eigen::MatrixXd::Identity(p, p);
  return om;
}

// Non-stationary grid covariance sum_l a_l (Omega_l^-1)_{jk} phi_l(s) phi_l(t)
// with a_l = 3 l^-1.8 over M = 101 Fourier functions.
inline Eigen::MatrixXd nonstationary_cov(int p, const std::vector<double>& grid,
                                         Rng& rng, int M = 101) {
  const int m = static_cast<int>(grid.size());
  const Eigen::MatrixXd B = fourier_basis(M, grid);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p * m, p * m);
  for (int l = 1; l <= M; ++l) {
    const double a = 3.0 * std::pow(static_cast<double>(l), -1.8);
    Eigen::MatrixXd sig;
    for (int attempt = 0;; ++attempt) {
      const Eigen::MatrixXd om = random_precision(p, rng);
      const Eigen::LLT<Eigen::MatrixXd> llt(om);
      if (llt.info() == Eigen::Success) {
        sig = a * llt.solve(Eigen::MatrixXd::Identity(p, p));
        break;
      }
      if (attempt > 8)
        throw std::runtime_error("nonstationary_cov: precision sampling failed");
    }
    const Eigen::VectorXd phi = B.row(l - 1).transpose();
    const Eigen::MatrixXd outer = phi * phi.transpose();
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) C.block(i * m, j * m, m, m) += sig(i, j) * outer;
  }
  return C;
}

struct SimulatedData {
  MixedDataset dataset;
  Eigen::MatrixXd truth;  // standardized grid covariance (p*m x p*m)
  Eigen::MatrixXd latents;  // n x (p*m), standardized draws
  std::vector<double> grid;
};

// Draws the latent Gaussian sample for one replication, pushes it through
// the observation maps, and returns both dataset and scoring truth.
inline SimulatedData simulate(const SimulationConfig& cfg) {
  cfg.validate();
  const std::vector<double> grid = regular_grid(cfg.m);
  Rng cov_rng = substream(cfg.seed, "sim/cov");
  Eigen::MatrixXd C;
  if (cfg.scenario == Scenario::Stationary) {
    const MaternParams mp = stationary_params(cfg.p, cov_rng);
    C = stationary_grid_cov(mp, grid);
  } else {
    C = nonstationary_cov(cfg.p, grid, cov_rng);
  }
  // unit marginal variance at every (component, time)
  Eigen::VectorXd d = C.diagonal().cwiseSqrt();
  for (int a = 0; a < C.rows(); ++a)
    for (int b = 0; b < C.cols(); ++b) C(a, b) /= d[a] * d[b];
  C = 0.5 * (C + C.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(C + 1e-12 * Eigen::MatrixXd::Identity(C.rows(), C.cols()));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("simulate: covariance factorization failed");
  const Eigen::MatrixXd L = llt.matrixL();

  Rng draw_rng = substream(cfg.seed, "sim/draws");
  const int dim = cfg.p * cfg.m;
  Eigen::MatrixXd V(cfg.n, dim);
  for (int i = 0; i < cfg.n; ++i) {
    Eigen::VectorXd z(dim);
    for (int a = 0; a < dim; ++a) z[a] = draw_rng.normal();
    V.row(i) = (L * z).transpose();
  }

  std::vector<ComponentSpec> comps;
  for (int j = 0; j < cfg.p; ++j)
    comps.push_back({"y" + std::to_string(j + 1), cfg.types[j]});

  std::vector<Observation> obs;
  obs.reserve(static_cast<std::size_t>(cfg.n) * dim);
  char buf[24];
  for (int i = 0; i < cfg.n; ++i) {
    std::snprintf(buf, sizeof(buf), "s%06d", i + 1);
    for (int j = 0; j < cfg.p; ++j) {
      for (int t = 0; t < cfg.m; ++t) {
        Observation o;
        o.subject_id = buf;
        o.component = j;
        o.time = grid[t];
        o.value = apply_observation_map(V(i, j * cfg.m + t), cfg.types[j],
                                        cfg.cutoffs[j]);
        obs.push_back(std::move(o));
      }
    }
  }
  return SimulatedData{MixedDataset(std::move(comps), std::move(obs)), C, V, grid};
}

struct IseResult {
  Eigen::MatrixXd per_block;  // J x J
  double mean = 0.0;
};

namespace detail {
inline Eigen::VectorXd trapezoid_weights_sim(const std::vector<double>& grid) {
  const int m = static_cast<int>(grid.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (int i = 0; i + 1 < m; ++i) {
    const double h = grid[i + 1] - grid[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}
}  // namespace detail

// Trapezoidal approximation of the double integral of the squared difference
// over [0,1]^2, per block, plus the mean across blocks.
inline IseResult ise(const Eigen::MatrixXd& c_true, const Eigen::MatrixXd& c_hat,
                     const std::vector<double>& grid, int J) {
  if (c_true.rows() != c_hat.rows() || c_true.cols() != c_hat.cols())
    throw std::invalid_argument("ise: shape mismatch");
  const int m = static_cast<int>(grid.size());
  if (c_true.rows() != J * m) throw std::invalid_argument("ise: grid/shape mismatch");
  const Eigen::VectorXd w = detail::trapezoid_weights_sim(grid);
  IseResult out;
  out.per_block = Eigen::MatrixXd::Zero(J, J);
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k < J; ++k) {
      double acc = 0.0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          const double dgap = c_true(j * m + a, k * m + b) - c_hat(j * m + a, k * m + b);
          acc += w[a] * w[b] * dgap * dgap;
        }
      out.per_block(j, k) = acc;
    }
  }
  out.mean = out.per_block.mean();
  return out;
}

}  // namespace mfpca
