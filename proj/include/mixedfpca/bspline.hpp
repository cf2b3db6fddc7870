#pragma once

// Clamped B-spline basis on [0,1] with equally spaced interior knots.
// K basis functions of degree min(3, K-1), evaluated by Cox-de Boor.

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace mfpca {

class BSplineBasis {
 public:
  explicit BSplineBasis(int K) : K_(K) {
    if (K < 2) throw std::invalid_argument("BSplineBasis: K must be >= 2");
    degree_ = std::min(3, K - 1);
    const int n_interior = K - degree_ - 1;
    knots_.clear();
    for (int i = 0; i <= degree_; ++i) knots_.push_back(0.0);
    for (int i = 1; i <= n_interior; ++i)
      knots_.push_back(static_cast<double>(i) / (n_interior + 1));
    for (int i = 0; i <= degree_; ++i) knots_.push_back(1.0);
  }

  int size() const { return K_; }
  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }

  // all K basis values at x in [0,1]
  Eigen::VectorXd eval(double x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(K_);
    const double t = std::clamp(x, 0.0, 1.0);
    // find knot span [knots_[mu], knots_[mu+1}) containing t
    int mu = degree_;
    const int last = K_ - 1;
    while (mu < last && t >= knots_[mu + 1]) ++mu;
    // de Boor triangular recurrence for the nonzero window
    std::vector<double> N(degree_ + 1, 0.0);
    N[0] = 1.0;
    for (int d = 1; d <= degree_; ++d) {
      double saved = 0.0;
      for (int r = 0; r < d; ++r) {
        const int i = mu - d + 1 + r;
        const double denom = knots_[i + d] - knots_[i];
        const double term = denom > 0.0 ? N[r] / denom : 0.0;
        N[r] = saved + (knots_[i + d] - t) * term;
        saved = (t - knots_[i]) * term;
      }
      N[d] = saved;
    }
    for (int r = 0; r <= degree_; ++r) {
      const int idx = mu - degree_ + r;
      if (idx >= 0 && idx < K_) out[idx] = N[r];
    }
    return out;
  }

  // design matrix: rows are eval(x_i)
  Eigen::MatrixXd design(const std::vector<double>& xs) const {
    Eigen::MatrixXd D(xs.size(), K_);
    for (std::size_t i = 0; i < xs.size(); ++i) D.row(i) = eval(xs[i]).transpose();
    return D;
  }

 private:
  int K_;
  int degree_;
  std::vector<double> knots_;
};

}  // namespace mfpca
