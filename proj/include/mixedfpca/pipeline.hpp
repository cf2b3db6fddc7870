#pragma once

// End-to-end estimation pipelines:
//  - fit_m2fpca: blockwise bridged covariance estimation, assembly, PD
//    projection, latent BLUPs, multivariate FPCA.
//  - fit_ps_m2fpca: per-component univariate estimation and BLUPs, pooled
//    eigenfunctions, per-eigenfunction score covariances.
//  - naive_mfpca_cov: the no-copula comparator (z-scored observed values,
//    empirical covariance, eigen truncation).
//  - select_k: BIC choice of the spline basis size.
//  - benchmark: Monte-Carlo ISE comparison harness.

#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mixedfpca/covfit.hpp"
#include "mixedfpca/fpca.hpp"
#include "mixedfpca/kendall.hpp"
#include "mixedfpca/latent.hpp"
#include "mixedfpca/sim.hpp"

namespace mfpca {

struct FitOptions {
  int grid_m = 16;
  int c0 = 10;
  double epsilon = 1e-3;
  std::vector<int> k_candidates = {4, 5, 6, 7, 8, 9, 10};
  double var_threshold = 0.95;
  std::uint64_t seed = 0;
  int threads = 1;
  int sampler_burn_in = 100;
  int sampler_sweeps = 400;
};

namespace detail {

inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline std::vector<SubjectObservation> subject_obs(const MixedDataset& data, int i) {
  std::vector<SubjectObservation> out;
  const auto& times = data.pooled_times();
  for (int j = 0; j < data.n_components(); ++j) {
    for (const auto& [r, v] : data.series(i, j))
      out.push_back({j, times[r], v});
  }
  return out;
}

inline std::vector<SubjectObservation> subject_obs_component(const MixedDataset& data,
                                                             int i, int j) {
  std::vector<SubjectObservation> out;
  const auto& times = data.pooled_times();
  for (const auto& [r, v] : data.series(i, j)) out.push_back({0, times[r], v});
  return out;
}

// single-block correlation model for univariate prediction
inline LatentCorrelationModel univariate_model(const SplineSurface& surf,
                                               const std::vector<double>& grid,
                                               double eps) {
  SplineSurface s = surf;
  s.j = 0;
  s.k = 0;
  Eigen::MatrixXd block = evaluate_block(s, grid);
  LatentCorrelationModel model = assemble_and_project({{block}}, grid, eps);
  model.surfaces = {s};
  return model;
}

}  // namespace detail

struct M2Fit {
  LatentCorrelationModel model;
  MarginalModel marginals;
  std::vector<LatentPrediction> latents;
  EigenSystem eigensystem;
  std::vector<int> chosen_k;  // per upper-triangle block, row-major (j<=k)
};

struct PsFit {
  std::vector<LatentCorrelationModel> univariate;  // one per component
  MarginalModel marginals;
  std::vector<LatentPrediction> latents;  // assembled J x m per subject
  Eigen::MatrixXd pooled;                 // H
  EigenSystem eigensystem;
  std::vector<int> chosen_k;  // per component
};

// BIC(K) = n log|C| + sum_i Vhat_i' C^-1 Vhat_i + K(K+1)/2 log n
inline double bic_penalty(int K, int n) {
  return 0.5 * K * (K + 1) * std::log(static_cast<double>(n));
}

namespace detail {

inline double bic_likelihood_term(const Eigen::MatrixXd& C,
                                  const std::vector<Eigen::VectorXd>& vhats) {
  const Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("bic: covariance factorization failed");
  double logdet = 0.0;
  const auto& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < C.rows(); ++i) logdet += 2.0 * std::log(L(i, i));
  double quad = 0.0;
  for (const auto& v : vhats) quad += v.dot(llt.solve(v));
  return static_cast<double>(vhats.size()) * logdet + quad;
}

}  // namespace detail

// BIC selection of the basis size for one block. Marginal blocks score a
// univariate model; cross blocks first fix the two marginal sizes, then
// score the two-component model. Candidates whose fit or factorization
// fails are skipped.
inline int select_k(const MixedDataset& data, int j, int k,
                    const std::vector<int>& candidates, const FitOptions& opts) {
  if (candidates.empty()) throw std::invalid_argument("select_k: no candidates");
  const MarginalModel marginals = MarginalModel::fit(data);
  const std::vector<double> grid = regular_grid(opts.grid_m);
  const int n = data.n_subjects();

  auto univariate_blups = [&](const LatentCorrelationModel& model, int comp) {
    std::vector<Eigen::VectorXd> vh(n);
    for (int i = 0; i < n; ++i) {
      const auto obs = detail::subject_obs_component(data, i, comp);
      SamplerSettings ss{substream_seed(opts.seed, "sampler", i),
                         opts.sampler_burn_in, opts.sampler_sweeps};
      const auto pred = predict_latent(obs, {data.type(comp)}, model, marginals, ss);
      vh[i] = pred.vhat.row(0).transpose();
    }
    return vh;
  };

  if (j == k) {
    const TauSurface tau = tau_surface(data, j, j, opts.c0);
    std::optional<int> best;
    double best_bic = 0.0;
    for (int K : candidates) {
      try {
        const SplineSurface surf =
            fit_surface(tau, data.type(j), data.type(j), marginals, K);
        const auto model = detail::univariate_model(surf, grid, opts.epsilon);
        const auto vh = univariate_blups(model, j);
        const double bic =
            detail::bic_likelihood_term(model.assembled_pd, vh) + bic_penalty(K, n);
        if (!best || bic < best_bic) {
          best = K;
          best_bic = bic;
        }
      } catch (const std::exception&) {
        continue;  // candidate skipped
      }
    }
    if (!best) throw std::runtime_error("select_k: all candidates failed");
    return *best;
  }

  const int Kj = select_k(data, j, j, candidates, opts);
  const int Kk = select_k(data, k, k, candidates, opts);
  const TauSurface tau_jj = tau_surface(data, j, j, opts.c0);
  const TauSurface tau_kk = tau_surface(data, k, k, opts.c0);
  const TauSurface tau_jk = tau_surface(data, j, k, opts.c0);
  const SplineSurface sj = fit_surface(tau_jj, data.type(j), data.type(j), marginals, Kj);
  const SplineSurface sk = fit_surface(tau_kk, data.type(k), data.type(k), marginals, Kk);
  const Eigen::MatrixXd bjj = evaluate_block(sj, grid);
  const Eigen::MatrixXd bkk = evaluate_block(sk, grid);

  std::optional<int> best;
  double best_bic = 0.0;
  for (int K : candidates) {
    try {
      const SplineSurface sjk =
          fit_surface(tau_jk, data.type(j), data.type(k), marginals, K);
      const Eigen::MatrixXd bjk = evaluate_block(sjk, grid);
      LatentCorrelationModel model = assemble_and_project(
          {{bjj, bjk}, {bjk.transpose(), bkk}}, grid, opts.epsilon);
      SplineSurface s0 = sj, s1 = sjk, s2 = sk;
      s0.j = s0.k = 0;
      s1.j = 0; s1.k = 1;
      s2.j = s2.k = 1;
      model.surfaces = {s0, s1, s2};
      std::vector<Eigen::VectorXd> vh(n);
      for (int i = 0; i < n; ++i) {
        std::vector<SubjectObservation> obs;
        const auto& times = data.pooled_times();
        for (const auto& [r, v] : data.series(i, j)) obs.push_back({0, times[r], v});
        for (const auto& [r, v] : data.series(i, k)) obs.push_back({1, times[r], v});
        SamplerSettings ss{substream_seed(opts.seed, "sampler", i),
                           opts.sampler_burn_in, opts.sampler_sweeps};
        const auto pred =
            predict_latent(obs, {data.type(j), data.type(k)}, model, marginals, ss);
        Eigen::VectorXd stacked(2 * model.m());
        stacked.head(model.m()) = pred.vhat.row(0).transpose();
        stacked.tail(model.m()) = pred.vhat.row(1).transpose();
        vh[i] = stacked;
      }
      const double bic =
          detail::bic_likelihood_term(model.assembled_pd, vh) + bic_penalty(K, n);
      if (!best || bic < best_bic) {
        best = K;
        best_bic = bic;
      }
    } catch (const std::exception&) {
      continue;
    }
  }
  if (!best) throw std::runtime_error("select_k: all candidates failed");
  return *best;
}

// Full blockwise pipeline (Stages I-IV).
inline M2Fit fit_m2fpca(const MixedDataset& data, const FitOptions& opts) {
  const int J = data.n_components();
  const std::vector<double> grid = regular_grid(opts.grid_m);
  M2Fit fit;
  fit.marginals = MarginalModel::fit(data);

  std::vector<std::vector<Eigen::MatrixXd>> blocks(
      J, std::vector<Eigen::MatrixXd>(J));
  std::vector<SplineSurface> surfaces;

  struct BlockJob {
    int j, k;
  };
  std::vector<BlockJob> jobs;
  for (int j = 0; j < J; ++j)
    for (int k = j; k < J; ++k) jobs.push_back({j, k});
  std::vector<SplineSurface> fitted(jobs.size());
  std::vector<int> ks(jobs.size());
  detail::parallel_for(
      static_cast<int>(jobs.size()), opts.threads, [&](int idx) {
        const auto [j, k] = jobs[idx];
        const TauSurface tau = tau_surface(data, j, k, opts.c0);
        int K = opts.k_candidates.front();
        if (opts.k_candidates.size() > 1)
          K = select_k(data, j, k, opts.k_candidates, opts);
        fitted[idx] = fit_surface(tau, data.type(j), data.type(k), fit.marginals, K);
        ks[idx] = K;
      });
  for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
    const auto [j, k] = jobs[idx];
    Eigen::MatrixXd b = evaluate_block(fitted[idx], grid);
    blocks[j][k] = b;
    if (j != k) blocks[k][j] = b.transpose();
    surfaces.push_back(fitted[idx]);
    fit.chosen_k.push_back(ks[idx]);
  }
  fit.model = assemble_and_project(blocks, grid, opts.epsilon);
  fit.model.surfaces = std::move(surfaces);

  const int n = data.n_subjects();
  std::vector<VariableType> types;
  for (int j = 0; j < J; ++j) types.push_back(data.type(j));
  fit.latents.resize(n);
  detail::parallel_for(n, opts.threads, [&](int i) {
    const auto obs = detail::subject_obs(data, i);
    SamplerSettings ss{substream_seed(opts.seed, "sampler", i), opts.sampler_burn_in,
                       opts.sampler_sweeps};
    fit.latents[i] = predict_latent(obs, types, fit.model, fit.marginals, ss,
                                    data.subject_ids()[i]);
  });
  fit.eigensystem = mfpca_full(fit.latents, fit.model, opts.var_threshold);
  return fit;
}

// Partially separable pipeline (univariate stages + pooled decomposition).
inline PsFit fit_ps_m2fpca(const MixedDataset& data, const FitOptions& opts) {
  const int J = data.n_components();
  const int n = data.n_subjects();
  const std::vector<double> grid = regular_grid(opts.grid_m);
  PsFit fit;
  fit.marginals = MarginalModel::fit(data);
  fit.univariate.resize(J);
  fit.chosen_k.resize(J);

  detail::parallel_for(J, opts.threads, [&](int j) {
    const TauSurface tau = tau_surface(data, j, j, opts.c0);
    int K = opts.k_candidates.front();
    if (opts.k_candidates.size() > 1)
      K = select_k(data, j, j, opts.k_candidates, opts);
    const SplineSurface surf =
        fit_surface(tau, data.type(j), data.type(j), fit.marginals, K);
    fit.univariate[j] = detail::univariate_model(surf, grid, opts.epsilon);
    fit.chosen_k[j] = K;
  });

  fit.latents.assign(n, LatentPrediction{});
  detail::parallel_for(n, opts.threads, [&](int i) {
    LatentPrediction assembled;
    assembled.subject_id = data.subject_ids()[i];
    assembled.grid = grid;
    assembled.vhat = Eigen::MatrixXd::Zero(J, grid.size());
    assembled.sd = Eigen::MatrixXd::Zero(J, grid.size());
    for (int j = 0; j < J; ++j) {
      const auto obs = detail::subject_obs_component(data, i, j);
      SamplerSettings ss{
          substream_seed(opts.seed, "sampler", static_cast<std::uint64_t>(i) * J + j),
          opts.sampler_burn_in, opts.sampler_sweeps};
      const auto pred = predict_latent(obs, {data.type(j)}, fit.univariate[j],
                                       fit.marginals, ss);
      assembled.vhat.row(j) = pred.vhat.row(0);
      assembled.sd.row(j) = pred.sd.row(0);
      assembled.used_sampler = assembled.used_sampler || pred.used_sampler;
      assembled.mixing_warning = assembled.mixing_warning || pred.mixing_warning;
    }
    fit.latents[i] = std::move(assembled);
  });

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(grid.size(), grid.size());
  for (int j = 0; j < J; ++j) H += fit.univariate[j].assembled_pd;
  H /= J;
  fit.pooled = 0.5 * (H + H.transpose()).eval();

  // truncation level from the pooled spectrum at the variance threshold
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.pooled, Eigen::EigenvaluesOnly);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  std::sort(lam.data(), lam.data() + lam.size(), std::greater<double>());
  const double total = lam.sum();
  int L = static_cast<int>(grid.size());
  double cum = 0.0;
  for (int i = 0; i < lam.size(); ++i) {
    cum += lam[i];
    if (cum / total >= opts.var_threshold) {
      L = i + 1;
      break;
    }
  }
  fit.eigensystem = ps_decompose(fit.latents, fit.pooled, grid, L);
  return fit;
}

// No-copula comparator: per-cell z-scored observed values, empirical
// covariance, eigen truncation at the variance threshold.
inline Eigen::MatrixXd naive_mfpca_cov(const MixedDataset& data,
                                       const std::vector<double>& grid,
                                       double var_threshold) {
  const int J = data.n_components();
  const int m = static_cast<int>(grid.size());
  const int n = data.n_subjects();
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, J * m);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(n, J * m);
  const auto& times = data.pooled_times();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < J; ++j) {
      for (const auto& [r, v] : data.series(i, j)) {
        const int g = detail::snap_to_grid(grid, times[r]);
        X(i, j * m + g) = v;
        count(i, j * m + g) = 1.0;
      }
    }
  }
  // mean-impute missing cells, then z-score columns
  for (int c = 0; c < J * m; ++c) {
    const double cnt = count.col(c).sum();
    if (cnt == 0) continue;
    const double mean = X.col(c).sum() / cnt;
    for (int i = 0; i < n; ++i)
      if (count(i, c) == 0.0) X(i, c) = mean;
  }
  Eigen::RowVectorXd mu = X.colwise().mean();
  X.rowwise() -= mu;
  for (int c = 0; c < J * m; ++c) {
    const double sd = std::sqrt(X.col(c).squaredNorm() / (n - 1));
    if (sd > 1e-12) X.col(c) /= sd;
  }
  Eigen::MatrixXd S = X.transpose() * X / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const double total = lam.sum();
  // eigenvalues ascending: keep the top block reaching the threshold
  double cum = 0.0;
  int keep_from = 0;
  for (int i = static_cast<int>(lam.size()) - 1; i >= 0; --i) {
    cum += lam[i];
    keep_from = i;
    if (cum / total >= var_threshold) break;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(J * m, J * m);
  for (Eigen::Index i = keep_from; i < lam.size(); ++i)
    out += lam[i] * es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark harness
// ---------------------------------------------------------------------------

enum class Method { M2fpca, PsM2fpca, NaiveMfpca };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::M2fpca: return "m2fpca";
    case Method::PsM2fpca: return "ps_m2fpca";
    case Method::NaiveMfpca: return "naive_mfpca";
  }
  return "?";
}

struct BenchmarkOptions {
  int c0 = 10;
  double epsilon = 1e-3;
  int k = 6;
  double var_threshold = 0.95;
  int threads = 1;
  int sampler_burn_in = 100;
  int sampler_sweeps = 400;
};

struct MethodSummary {
  Method method;
  std::vector<double> per_rep;  // NaN marks a failed replication
  double mean_ise = 0.0;
  double sd_ise = 0.0;
  int n_fail = 0;
};

struct BenchmarkResult {
  SimulationConfig config;
  std::vector<MethodSummary> methods;
};

inline BenchmarkResult benchmark(const SimulationConfig& config,
                                 const std::vector<Method>& methods,
                                 const BenchmarkOptions& opts) {
  config.validate();
  if (config.replications < 1)
    throw std::invalid_argument("benchmark: replications must be >= 1");
  BenchmarkResult result;
  result.config = config;
  for (Method me : methods)
    result.methods.push_back({me, std::vector<double>(config.replications,
                                                      std::numeric_limits<double>::quiet_NaN())});

  detail::parallel_for(config.replications, opts.threads, [&](int rep) {
    SimulationConfig cfg = config;
    cfg.seed = substream_seed(config.seed, "sim", rep);
    const SimulatedData sim_data = simulate(cfg);
    FitOptions fopts;
    fopts.grid_m = config.m;
    fopts.c0 = opts.c0;
    fopts.epsilon = opts.epsilon;
    fopts.k_candidates = {opts.k};
    fopts.var_threshold = opts.var_threshold;
    fopts.seed = substream_seed(config.seed, "fit", rep);
    fopts.threads = 1;  // replications already run in parallel
    fopts.sampler_burn_in = opts.sampler_burn_in;
    fopts.sampler_sweeps = opts.sampler_sweeps;

    for (auto& summary : result.methods) {
      try {
        Eigen::MatrixXd chat;
        switch (summary.method) {
          case Method::M2fpca:
            chat = fit_m2fpca(sim_data.dataset, fopts).model.assembled_pd;
            break;
          case Method::PsM2fpca:
            chat = ps_reconstruct(fit_ps_m2fpca(sim_data.dataset, fopts).eigensystem);
            break;
          case Method::NaiveMfpca:
            chat = naive_mfpca_cov(sim_data.dataset, sim_data.grid,
                                   opts.var_threshold);
            break;
        }
        summary.per_rep[rep] =
            ise(sim_data.truth, chat, sim_data.grid, config.p).mean;
      } catch (const std::exception&) {
        // failed replication: stays NaN, counted below
      }
    }
  });

  for (auto& s : result.methods) {
    double sum = 0.0;
    int good = 0;
    for (double v : s.per_rep) {
      if (std::isnan(v)) {
        ++s.n_fail;
      } else {
        sum += v;
        ++good;
      }
    }
    s.mean_ise = good > 0 ? sum / good : std::numeric_limits<double>::quiet_NaN();
    double ss = 0.0;
    for (double v : s.per_rep)
      if (!std::isnan(v)) ss += (v - s.mean_ise) * (v - s.mean_ise);
    s.sd_ise = good > 1 ? std::sqrt(ss / (good - 1)) : 0.0;
  }
  return result;
}

}  // namespace mfpca
