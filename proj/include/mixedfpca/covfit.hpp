#pragma once

// Latent correlation surface fitting (tensor-product B-splines, weighted
// nonlinear least squares in tau space), block evaluation, assembly and
// eigenvalue-clipping PD projection.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mixedfpca/bridge.hpp"
#include "mixedfpca/bspline.hpp"
#include "mixedfpca/kendall.hpp"
#include "mixedfpca/marginals.hpp"

namespace mfpca {

// g maps the spline predictor into (-1,1).
inline double link_g(double x) { return std::tanh(0.5 * x); }
inline double link_g_prime(double x) {
  const double g = std::tanh(0.5 * x);
  return 0.5 * (1.0 - g * g);
}
inline double link_g_inverse(double y) {
  if (!(std::abs(y) < 1.0))
    throw std::invalid_argument("link_g_inverse: |y| must be < 1");
  return std::log1p(y) - std::log1p(-y);
}

namespace detail {

// Chebyshev interpolant of F(rho) in the variable x = (2/pi) asin(rho).
// The substitution absorbs the arcsine-type endpoint behaviour of the
// bridges, so a modest node count reaches ~1e-9 uniform accuracy.
class ChebBridge {
 public:
  template <typename F>
  static ChebBridge build(F&& f, int n_nodes = 33) {
    ChebBridge c;
    c.vals_.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
      const double x = std::cos(std::numbers::pi * i / (n_nodes - 1));
      const double rho = std::sin(0.5 * std::numbers::pi * x);
      c.vals_[i] = f(rho);
    }
    // cosine transform for Chebyshev-Lobatto samples
    const int N = n_nodes - 1;
    c.coef_.assign(n_nodes, 0.0);
    for (int k = 0; k <= N; ++k) {
      double s = 0.5 * (c.vals_[0] + (k % 2 == 0 ? 1.0 : -1.0) * c.vals_[N]);
      for (int i = 1; i < N; ++i)
        s += c.vals_[i] * std::cos(std::numbers::pi * k * i / N);
      c.coef_[k] = 2.0 * s / N;
    }
    c.coef_[0] *= 0.5;
    c.coef_[N] *= 0.5;
    // derivative coefficients (w.r.t. x)
    c.dcoef_.assign(n_nodes + 1, 0.0);
    for (int k = N - 1; k >= 0; --k)
      c.dcoef_[k] = c.dcoef_[k + 2] + 2.0 * (k + 1) * c.coef_[k + 1];
    c.dcoef_[0] *= 0.5;
    return c;
  }

  double value(double rho) const {
    const double x = std::clamp(2.0 / std::numbers::pi * std::asin(std::clamp(rho, -1.0, 1.0)), -1.0, 1.0);
    return clenshaw(coef_, x);
  }

  // dF/drho
  double deriv(double rho) const {
    rho = std::clamp(rho, -1.0 + 1e-12, 1.0 - 1e-12);
    const double x = 2.0 / std::numbers::pi * std::asin(rho);
    const double dxdr = 2.0 / (std::numbers::pi * std::sqrt(1.0 - rho * rho));
    return clenshaw(dcoef_, x) * dxdr;
  }

 private:
  static double clenshaw(const std::vector<double>& c, double x) {
    double b1 = 0.0, b2 = 0.0;
    for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) {
      const double b0 = 2.0 * x * b1 - b2 + c[k];
      b2 = b1;
      b1 = b0;
    }
    return x * b1 - b2 + c[0];
  }

  std::vector<double> vals_, coef_, dcoef_;
};

}  // namespace detail

struct SplineSurface {
  int j = 0, k = 0;
  int K = 0;
  Eigen::MatrixXd U;  // K x K coefficients; symmetric when j == k
  BSplineBasis basis{4};

  double eval(double s, double t) const {
    return link_g(basis.eval(s).dot(U * basis.eval(t)));
  }
};

struct SurfaceFitOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-8;
  int cheb_nodes = 33;
};

struct SurfaceFitError : std::runtime_error {
  SurfaceFitError(const std::string& msg, Eigen::MatrixXd best, double obj)
      : std::runtime_error(msg), best_coefficients(std::move(best)),
        best_objective(obj) {}
  Eigen::MatrixXd best_coefficients;
  double best_objective = 0.0;
};

// Weighted nonlinear least squares of Eq.-(3) type for one block. The
// marginal case (j == k) optimizes only the upper triangle of U and skips
// the s == t cells, whose tau carries no information about the correlation
// once the unit diagonal is enforced at evaluation time.
inline SplineSurface fit_surface(const TauSurface& tau, VariableType type_j,
                                 VariableType type_k, const MarginalModel& marginals,
                                 int K, const SurfaceFitOptions& opts = {}) {
  if (K < 3) throw std::invalid_argument("fit_surface: K must be >= 3");
  const bool marginal = (tau.j == tau.k);
  bool swapped = false;
  const PairKind kind = canonical_kind(type_j, type_k, swapped);
  const auto& times = marginals.times();
  const int T = static_cast<int>(times.size());
  if (tau.tau.rows() != T)
    throw std::invalid_argument("fit_surface: tau grid does not match marginal model");

  BSplineBasis basis(K);
  Eigen::MatrixXd D(T, K);
  for (int r = 0; r < T; ++r) D.row(r) = basis.eval(times[r]).transpose();

  // parameterization: full K*K for cross blocks, upper triangle for marginals
  const int P = marginal ? K * (K + 1) / 2 : K * K;
  auto cell_design = [&](int s, int t) {
    Eigen::VectorXd phi(P);
    if (!marginal) {
      int idx = 0;
      for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) phi[idx++] = D(s, a) * D(t, b);
    } else {
      int idx = 0;
      for (int a = 0; a < K; ++a)
        for (int b = a; b < K; ++b)
          phi[idx++] = (a == b) ? D(s, a) * D(t, a)
                                : D(s, a) * D(t, b) + D(s, b) * D(t, a);
    }
    return phi;
  };

  struct Cell {
    double tau;
    double w;
    Eigen::VectorXd phi;
    detail::ChebBridge bridge;
    bool exact_cc;
  };
  std::vector<Cell> cells;
  for (int s = 0; s < T; ++s) {
    for (int t = 0; t < T; ++t) {
      if (!tau.has(s, t)) continue;
      if (marginal && s == t) continue;
      CutoffVector cj = (type_j.kind == VarKind::Continuous) ? CutoffVector{}
                                                             : marginals.cutoffs(tau.j, s);
      CutoffVector ck = (type_k.kind == VarKind::Continuous) ? CutoffVector{}
                                                             : marginals.cutoffs(tau.k, t);
      if (cj.degenerate() || ck.degenerate()) continue;
      const CutoffVector& cut1 = swapped ? ck : cj;
      const CutoffVector& cut2 = swapped ? cj : ck;
      Cell c;
      c.tau = tau.tau(s, t);
      c.w = tau.count(s, t);
      c.phi = cell_design(s, t);
      c.exact_cc = (kind == PairKind::cc);
      if (!c.exact_cc) {
        c.bridge = detail::ChebBridge::build(
            [&](double rho) { return bridge_forward(rho, kind, cut1, cut2); },
            opts.cheb_nodes);
      }
      cells.push_back(std::move(c));
    }
  }
  if (cells.empty())
    throw std::runtime_error("fit_surface: no usable cells after filtering");

  auto bridge_val = [](const Cell& c, double rho, double& dF) {
    if (c.exact_cc) {
      rho = std::clamp(rho, -1.0 + 1e-12, 1.0 - 1e-12);
      dF = 2.0 / (std::numbers::pi * std::sqrt(1.0 - rho * rho));
      return 2.0 / std::numbers::pi * std::asin(rho);
    }
    dF = c.bridge.deriv(rho);
    return c.bridge.value(rho);
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(P);
  auto objective = [&](const Eigen::VectorXd& th) {
    double obj = 0.0;
    for (const auto& c : cells) {
      const double eta = c.phi.dot(th);
      double dF;
      const double res = c.tau - bridge_val(c, link_g(eta), dF);
      obj += c.w * res * res;
    }
    return obj;
  };

  double obj = objective(theta);
  double lambda = 1e-4;
  Eigen::MatrixXd JtJ(P, P);
  Eigen::VectorXd Jtr(P);
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    JtJ.setZero();
    Jtr.setZero();
    for (const auto& c : cells) {
      const double eta = c.phi.dot(theta);
      const double rho = link_g(eta);
      double dF;
      const double res = c.tau - bridge_val(c, rho, dF);
      const double slope = dF * link_g_prime(eta);
      // residual r = sqrt(w) res, dr/dtheta = -sqrt(w) slope phi
      JtJ.selfadjointView<Eigen::Lower>().rankUpdate(c.phi, c.w * slope * slope);
      Jtr.noalias() += (c.w * slope * res) * c.phi;
    }
    JtJ = JtJ.selfadjointView<Eigen::Lower>();
    // gradient of the objective is -2 * Jtr
    if (2.0 * Jtr.lpNorm<Eigen::Infinity>() <= opts.gradient_tol) {
      converged = true;
      break;
    }
    bool accepted = false;
    for (int tries = 0; tries < 25; ++tries) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal().array() += lambda * (JtJ.diagonal().array() + 1e-12);
      const Eigen::VectorXd step = A.ldlt().solve(Jtr);
      const Eigen::VectorXd cand = theta + step;
      const double cand_obj = objective(cand);
      if (cand_obj <= obj) {
        theta = cand;
        obj = cand_obj;
        lambda = std::max(lambda / 3.0, 1e-10);
        accepted = true;
        break;
      }
      lambda *= 8.0;
    }
    if (!accepted) {
      // damping exhausted; treat as stationary if the gradient is tiny
      converged = 2.0 * Jtr.lpNorm<Eigen::Infinity>() <= 1e2 * opts.gradient_tol;
      break;
    }
  }

  Eigen::MatrixXd U(K, K);
  if (!marginal) {
    int idx = 0;
    for (int a = 0; a < K; ++a)
      for (int b = 0; b < K; ++b) U(a, b) = theta[idx++];
  } else {
    int idx = 0;
    for (int a = 0; a < K; ++a)
      for (int b = a; b < K; ++b) {
        U(a, b) = theta[idx];
        U(b, a) = theta[idx];
        ++idx;
      }
  }
  if (!converged) {
    throw SurfaceFitError("fit_surface: optimizer did not reach stationarity for block (" +
                              std::to_string(tau.j) + "," + std::to_string(tau.k) +
                              "), best objective " + std::to_string(obj),
                          U, obj);
  }
  SplineSurface out;
  out.j = tau.j;
  out.k = tau.k;
  out.K = K;
  out.U = std::move(U);
  out.basis = basis;
  return out;
}

// m x m block of surface values; marginal blocks are symmetrized and get a
// unit diagonal.
inline Eigen::MatrixXd evaluate_block(const SplineSurface& surface,
                                      const std::vector<double>& grid) {
  const int m = static_cast<int>(grid.size());
  Eigen::MatrixXd D(m, surface.K);
  for (int i = 0; i < m; ++i) D.row(i) = surface.basis.eval(grid[i]).transpose();
  Eigen::MatrixXd eta = D * surface.U * D.transpose();
  Eigen::MatrixXd block = eta.unaryExpr([](double x) { return link_g(x); });
  if (surface.j == surface.k) {
    block = 0.5 * (block + block.transpose()).eval();
    block.diagonal().setOnes();
  }
  return block;
}

struct LatentCorrelationModel {
  std::vector<double> grid;
  int J = 0;
  double epsilon = 1e-3;
  Eigen::MatrixXd assembled;     // pre-projection
  Eigen::MatrixXd assembled_pd;  // after eigenvalue clipping
  std::vector<SplineSurface> surfaces;  // upper-triangle blocks (j <= k)

  int m() const { return static_cast<int>(grid.size()); }

  Eigen::Block<const Eigen::MatrixXd> block_pd(int j, int k) const {
    return assembled_pd.block(j * m(), k * m(), m(), m());
  }

  const SplineSurface& surface(int j, int k) const {
    for (const auto& s : surfaces)
      if ((s.j == j && s.k == k) || (s.j == k && s.k == j)) return s;
    throw std::out_of_range("LatentCorrelationModel: no surface for block");
  }

  // correlation between (component j at time s) and (component k at time t)
  double corr_at(int j, int k, double s, double t) const {
    const auto& surf = surface(j, k);
    if (surf.j == j && surf.k == k) return surf.eval(s, t);
    return surf.eval(t, s);
  }
};

// Assembles the J x J grid of blocks and applies eigenvalue clipping at eps.
inline LatentCorrelationModel assemble_and_project(
    const std::vector<std::vector<Eigen::MatrixXd>>& blocks,
    const std::vector<double>& grid, double eps = 1e-3) {
  const int J = static_cast<int>(blocks.size());
  const int m = static_cast<int>(grid.size());
  for (const auto& row : blocks) {
    if (static_cast<int>(row.size()) != J)
      throw std::invalid_argument("assemble_and_project: ragged block grid");
    for (const auto& b : row)
      if (b.rows() != m || b.cols() != m)
        throw std::invalid_argument("assemble_and_project: block dimension mismatch");
  }
  LatentCorrelationModel model;
  model.grid = grid;
  model.J = J;
  model.epsilon = eps;
  Eigen::MatrixXd C(J * m, J * m);
  for (int j = 0; j < J; ++j)
    for (int k = 0; k < J; ++k) C.block(j * m, k * m, m, m) = blocks[j][k];
  C = 0.5 * (C + C.transpose()).eval();
  model.assembled = C;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(eps);
  model.assembled_pd =
      es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  model.assembled_pd = 0.5 * (model.assembled_pd + model.assembled_pd.transpose()).eval();
  return model;
}

}  // namespace mfpca
