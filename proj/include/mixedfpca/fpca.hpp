#pragma once

// Multivariate FPCA on predicted latent trajectories, and the partially
// separable decomposition driven by the pooled marginal covariance.

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixedfpca/covfit.hpp"
#include "mixedfpca/latent.hpp"

namespace mfpca {

// Trapezoid quadrature weights on a (not necessarily uniform) grid.
inline Eigen::VectorXd trapezoid_weights(const std::vector<double>& grid) {
  const int m = static_cast<int>(grid.size());
  if (m < 2) throw std::invalid_argument("trapezoid_weights: need >= 2 points");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (int i = 0; i + 1 < m; ++i) {
    const double h = grid[i + 1] - grid[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

enum class FpcaFlavor { Full, PartiallySeparable };

struct EigenSystem {
  FpcaFlavor flavor = FpcaFlavor::Full;
  std::vector<double> grid;
  Eigen::VectorXd weights;      // temporal quadrature weights
  Eigen::VectorXd eigenvalues;  // descending, clipped at 0

  // Full flavor: eigenfunctions[l] is J x m; scores is n x L.
  // ps flavor: eigenfunctions[l] is 1 x m (shared); scores is n x (L*J),
  // column l*J+j holding xi_{i,l,j}; score_cov[l] is the J x J covariance.
  std::vector<Eigen::MatrixXd> eigenfunctions;
  Eigen::MatrixXd scores;
  int J = 0;

  Eigen::MatrixXd pooled_cov;               // ps only
  std::vector<Eigen::MatrixXd> score_cov;   // ps only

  int n_components_kept() const { return static_cast<int>(eigenfunctions.size()); }
};

namespace detail {

// sign convention: make the largest-magnitude coordinate positive
inline void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) v = -v;
}

}  // namespace detail

// Multivariate FPCA of the stacked latent predictions under the quadrature
// inner product <f,g> = sum_j sum_t w_t f_j(t) g_j(t).
inline EigenSystem mfpca_full(const std::vector<LatentPrediction>& latents,
                              const LatentCorrelationModel& model,
                              double var_threshold = 0.95) {
  const int n = static_cast<int>(latents.size());
  if (n < 2) throw std::invalid_argument("mfpca_full: need at least 2 subjects");
  const int J = model.J;
  const int m = model.m();
  const Eigen::VectorXd wt = trapezoid_weights(model.grid);

  Eigen::MatrixXd V(n, J * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < J; ++j)
      for (int t = 0; t < m; ++t) V(i, j * m + t) = latents[i].vhat(j, t);
  const Eigen::RowVectorXd mean = V.colwise().mean();
  V.rowwise() -= mean;

  Eigen::VectorXd w(J * m);
  for (int j = 0; j < J; ++j) w.segment(j * m, m) = wt;
  const Eigen::VectorXd ws = w.cwiseSqrt();

  // eigen-decompose W^1/2 Cov W^1/2; eigenfunctions are W^-1/2 u
  Eigen::MatrixXd S = (V.transpose() * V) / static_cast<double>(n);
  S = ws.asDiagonal() * S * ws.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);

  const int total = J * m;
  std::vector<int> order(total);
  for (int i = 0; i < total; ++i) order[i] = total - 1 - i;  // descending

  Eigen::VectorXd lam(total);
  for (int i = 0; i < total; ++i) lam[i] = std::max(0.0, es.eigenvalues()[order[i]]);
  const double lam_total = lam.sum();
  if (lam_total <= 0.0) throw std::runtime_error("mfpca_full: zero total variance");

  int L = total;
  double cum = 0.0;
  for (int i = 0; i < total; ++i) {
    cum += lam[i];
    if (cum / lam_total >= var_threshold) {
      L = i + 1;
      break;
    }
  }

  EigenSystem sys;
  sys.flavor = FpcaFlavor::Full;
  sys.grid = model.grid;
  sys.weights = wt;
  sys.J = J;
  sys.eigenvalues = lam.head(L);
  sys.scores = Eigen::MatrixXd(n, L);
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd phi = es.eigenvectors().col(order[l]).cwiseQuotient(ws);
    detail::fix_sign(phi);
    Eigen::MatrixXd pm(J, m);
    for (int j = 0; j < J; ++j) pm.row(j) = phi.segment(j * m, m).transpose();
    sys.eigenfunctions.push_back(pm);
    sys.scores.col(l) = V * w.asDiagonal() * phi;
  }
  return sys;
}

// Pooled marginal covariance H = J^-1 sum_j Chat_jj evaluated on the grid.
inline Eigen::MatrixXd ps_pool(const LatentCorrelationModel& model) {
  const int m = model.m();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < model.J; ++j) H += model.block_pd(j, j);
  H /= model.J;
  return 0.5 * (H + H.transpose()).eval();
}

// Partially separable decomposition: shared temporal eigenfunctions from H,
// per-component scores by quadrature projection, and per-eigenfunction
// score covariance matrices as the empirical covariance of the score vectors.
inline EigenSystem ps_decompose(const std::vector<LatentPrediction>& latents,
                                const Eigen::MatrixXd& H,
                                const std::vector<double>& grid, int L) {
  const int n = static_cast<int>(latents.size());
  if (n < 2) throw std::invalid_argument("ps_decompose: need at least 2 subjects");
  const int m = static_cast<int>(grid.size());
  if (L > m) throw std::invalid_argument("ps_decompose: L must be <= grid size");
  if (H.rows() != m || H.cols() != m)
    throw std::invalid_argument("ps_decompose: H dimension mismatch");
  const int J = static_cast<int>(latents.front().vhat.rows());
  const Eigen::VectorXd wt = trapezoid_weights(grid);
  const Eigen::VectorXd ws = wt.cwiseSqrt();

  Eigen::MatrixXd Hw = ws.asDiagonal() * H * ws.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hw);

  EigenSystem sys;
  sys.flavor = FpcaFlavor::PartiallySeparable;
  sys.grid = grid;
  sys.weights = wt;
  sys.J = J;
  sys.eigenvalues = Eigen::VectorXd(L);
  sys.pooled_cov = H;
  sys.scores = Eigen::MatrixXd(n, L * J);

  // centered latent matrix per component
  std::vector<Eigen::MatrixXd> Vc(J, Eigen::MatrixXd(n, m));
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < n; ++i) Vc[j].row(i) = latents[i].vhat.row(j);
    Vc[j].rowwise() -= Vc[j].colwise().mean().eval();
  }

  for (int l = 0; l < L; ++l) {
    const int src = m - 1 - l;
    sys.eigenvalues[l] = std::max(0.0, es.eigenvalues()[src]);
    Eigen::VectorXd phi = es.eigenvectors().col(src).cwiseQuotient(ws);
    detail::fix_sign(phi);
    Eigen::MatrixXd pm(1, m);
    pm.row(0) = phi.transpose();
    sys.eigenfunctions.push_back(pm);
    Eigen::MatrixXd xi(n, J);
    for (int j = 0; j < J; ++j) xi.col(j) = Vc[j] * wt.asDiagonal() * phi;
    for (int j = 0; j < J; ++j) sys.scores.col(l * J + j) = xi.col(j);
    const Eigen::MatrixXd Sl = (xi.transpose() * xi) / static_cast<double>(n - 1);
    sys.score_cov.push_back(0.5 * (Sl + Sl.transpose()));
  }
  return sys;
}

// lambda_l / sum(lambda) and cumulative fractions
struct VarianceFractions {
  Eigen::VectorXd fraction;
  Eigen::VectorXd cumulative;
};

inline VarianceFractions explained_variance(const EigenSystem& sys) {
  const double total = sys.eigenvalues.sum();
  if (total <= 0.0)
    throw std::invalid_argument("explained_variance: zero total variance");
  VarianceFractions out;
  out.fraction = sys.eigenvalues / total;
  out.cumulative = out.fraction;
  for (Eigen::Index i = 1; i < out.cumulative.size(); ++i)
    out.cumulative[i] += out.cumulative[i - 1];
  return out;
}

// Partially separable reconstruction of the full grid covariance:
// C_jk(s,t) = sum_l Sigma_l[j,k] phi_l(s) phi_l(t).
inline Eigen::MatrixXd ps_reconstruct(const EigenSystem& sys) {
  if (sys.flavor != FpcaFlavor::PartiallySeparable)
    throw std::invalid_argument("ps_reconstruct: needs a ps eigensystem");
  const int m = static_cast<int>(sys.grid.size());
  const int J = sys.J;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(J * m, J * m);
  for (int l = 0; l < sys.n_components_kept(); ++l) {
    const Eigen::VectorXd phi = sys.eigenfunctions[l].row(0).transpose();
    const Eigen::MatrixXd outer = phi * phi.transpose();
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < J; ++k)
        C.block(j * m, k * m, m, m) += sys.score_cov[l](j, k) * outer;
  }
  return C;
}

}  // namespace mfpca
