#pragma once

// Artifact (de)serialization: model JSON, eigensystem JSON, score/prediction
// CSV, dataset CSV + sidecar, run manifests. Doubles are written with
// shortest-round-trip formatting so reload reproduces them bit-exactly and
// reruns with identical inputs produce byte-identical files.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixedfpca/dataset.hpp"
#include "mixedfpca/fpca.hpp"
#include "mixedfpca/pipeline.hpp"

namespace mfpca {

inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

inline nlohmann::json vector_json(const std::vector<double>& v) {
  return nlohmann::json(v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Correlation model artifact
// ---------------------------------------------------------------------------

inline nlohmann::json model_to_json(const LatentCorrelationModel& model,
                                    const MarginalModel& marginals,
                                    const std::vector<VariableType>& types) {
  nlohmann::json j;
  j["grid"] = model.grid;
  j["epsilon"] = model.epsilon;
  j["n_components"] = model.J;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& s : model.surfaces) {
    nlohmann::json b;
    b["j"] = s.j;
    b["k"] = s.k;
    b["K"] = s.K;
    b["knots"] = s.basis.knots();
    b["U"] = detail::matrix_json(s.U);
    blocks.push_back(std::move(b));
  }
  j["blocks"] = std::move(blocks);
  j["C"] = detail::matrix_json(model.assembled);
  j["C_pd"] = detail::matrix_json(model.assembled_pd);

  nlohmann::json ty = nlohmann::json::array();
  for (const auto& t : types) {
    nlohmann::json e;
    switch (t.kind) {
      case VarKind::Continuous: e["type"] = "continuous"; break;
      case VarKind::Truncated: e["type"] = "truncated"; break;
      case VarKind::Binary: e["type"] = "binary"; break;
      case VarKind::Ordinal:
        e["type"] = "ordinal";
        e["levels"] = t.levels;
        break;
    }
    ty.push_back(std::move(e));
  }
  j["types"] = std::move(ty);

  nlohmann::json marg;
  marg["times"] = marginals.times();
  nlohmann::json cells = nlohmann::json::array();
  const int T = static_cast<int>(marginals.times().size());
  for (int c = 0; c < static_cast<int>(types.size()); ++c) {
    for (int r = 0; r < T; ++r) {
      nlohmann::json cell;
      cell["component"] = c;
      cell["time_index"] = r;
      if (types[c].kind != VarKind::Continuous)
        cell["cutoffs"] = marginals.cutoffs(c, r).cuts;
      if (marginals.has_transform(c, r)) {
        cell["transform_x"] = marginals.transform(c, r).support();
        cell["transform_f"] = marginals.transform(c, r).levels();
      }
      cells.push_back(std::move(cell));
    }
  }
  marg["cells"] = std::move(cells);
  j["marginals"] = std::move(marg);
  return j;
}

struct LoadedModel {
  LatentCorrelationModel model;
  MarginalModel marginals;
  std::vector<VariableType> types;
};

inline LoadedModel model_from_json(const nlohmann::json& j) {
  LoadedModel out;
  out.model.grid = j.at("grid").get<std::vector<double>>();
  out.model.epsilon = j.at("epsilon").get<double>();
  out.model.J = j.at("n_components").get<int>();
  out.model.assembled = detail::matrix_from_json(j.at("C"));
  out.model.assembled_pd = detail::matrix_from_json(j.at("C_pd"));
  for (const auto& b : j.at("blocks")) {
    SplineSurface s;
    s.j = b.at("j").get<int>();
    s.k = b.at("k").get<int>();
    s.K = b.at("K").get<int>();
    s.U = detail::matrix_from_json(b.at("U"));
    s.basis = BSplineBasis(s.K);
    out.model.surfaces.push_back(std::move(s));
  }
  for (const auto& e : j.at("types")) {
    const std::string t = e.at("type").get<std::string>();
    if (t == "continuous") out.types.push_back(VariableType::continuous());
    else if (t == "truncated") out.types.push_back(VariableType::truncated());
    else if (t == "binary") out.types.push_back(VariableType::binary());
    else out.types.push_back(VariableType::ordinal(e.at("levels").get<int>()));
  }
  const auto& marg = j.at("marginals");
  out.marginals = MarginalModel::empty(marg.at("times").get<std::vector<double>>(),
                                       out.model.J);
  for (const auto& cell : marg.at("cells")) {
    const int c = cell.at("component").get<int>();
    const int r = cell.at("time_index").get<int>();
    if (cell.contains("cutoffs"))
      out.marginals.set_cell(c, r, CutoffVector(cell.at("cutoffs").get<std::vector<double>>()));
    if (cell.contains("transform_x"))
      out.marginals.set_transform(
          c, r,
          MonotoneMap::from_nodes(cell.at("transform_x").get<std::vector<double>>(),
                                  cell.at("transform_f").get<std::vector<double>>()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eigensystem artifact
// ---------------------------------------------------------------------------

inline nlohmann::json eigensystem_to_json(const EigenSystem& sys) {
  nlohmann::json j;
  j["flavor"] = sys.flavor == FpcaFlavor::Full ? "full" : "partially_separable";
  j["grid"] = sys.grid;
  j["n_components"] = sys.J;
  std::vector<double> ev(sys.eigenvalues.data(),
                         sys.eigenvalues.data() + sys.eigenvalues.size());
  j["eigenvalues"] = ev;
  std::vector<double> w(sys.weights.data(), sys.weights.data() + sys.weights.size());
  j["weights"] = w;
  nlohmann::json fns = nlohmann::json::array();
  for (const auto& f : sys.eigenfunctions) fns.push_back(detail::matrix_json(f));
  j["eigenfunctions"] = std::move(fns);
  j["scores"] = detail::matrix_json(sys.scores);
  if (sys.flavor == FpcaFlavor::PartiallySeparable) {
    j["pooled_cov"] = detail::matrix_json(sys.pooled_cov);
    nlohmann::json sc = nlohmann::json::array();
    for (const auto& s : sys.score_cov) sc.push_back(detail::matrix_json(s));
    j["score_cov"] = std::move(sc);
  }
  return j;
}

inline EigenSystem eigensystem_from_json(const nlohmann::json& j) {
  EigenSystem sys;
  sys.flavor = j.at("flavor").get<std::string>() == "full"
                   ? FpcaFlavor::Full
                   : FpcaFlavor::PartiallySeparable;
  sys.grid = j.at("grid").get<std::vector<double>>();
  sys.J = j.at("n_components").get<int>();
  const auto ev = j.at("eigenvalues").get<std::vector<double>>();
  sys.eigenvalues = Eigen::Map<const Eigen::VectorXd>(ev.data(), ev.size());
  const auto w = j.at("weights").get<std::vector<double>>();
  sys.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  for (const auto& f : j.at("eigenfunctions"))
    sys.eigenfunctions.push_back(detail::matrix_from_json(f));
  sys.scores = detail::matrix_from_json(j.at("scores"));
  if (j.contains("pooled_cov")) {
    sys.pooled_cov = detail::matrix_from_json(j.at("pooled_cov"));
    for (const auto& s : j.at("score_cov"))
      sys.score_cov.push_back(detail::matrix_from_json(s));
  }
  return sys;
}

// ---------------------------------------------------------------------------
// CSV exports
// ---------------------------------------------------------------------------

// subject_id, l, component, score
inline std::string scores_csv(const EigenSystem& sys,
                              const std::vector<std::string>& subject_ids) {
  std::ostringstream ss;
  ss << "subject_id,l,component,score\n";
  const int n = static_cast<int>(sys.scores.rows());
  if (sys.flavor == FpcaFlavor::Full) {
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < sys.scores.cols(); ++l)
        ss << subject_ids[i] << ',' << (l + 1) << ",all,"
           << format_double(sys.scores(i, l)) << '\n';
  } else {
    const int L = sys.n_components_kept();
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < L; ++l)
        for (int j = 0; j < sys.J; ++j)
          ss << subject_ids[i] << ',' << (l + 1) << ',' << (j + 1) << ','
             << format_double(sys.scores(i, l * sys.J + j)) << '\n';
  }
  return ss.str();
}

// s, t, tau_hat, N  (retained cells only)
inline std::string tau_surface_csv(const TauSurface& tau,
                                   const std::vector<double>& times) {
  std::ostringstream ss;
  ss << "s,t,tau_hat,N\n";
  for (Eigen::Index a = 0; a < tau.tau.rows(); ++a)
    for (Eigen::Index b = 0; b < tau.tau.cols(); ++b)
      if (tau.has(static_cast<int>(a), static_cast<int>(b)))
        ss << format_double(times[a]) << ',' << format_double(times[b]) << ','
           << format_double(tau.tau(a, b)) << ','
           << format_double(tau.count(a, b)) << '\n';
  return ss.str();
}

// subject_id, component, time, latent_mean, latent_sd, observed_prediction
inline std::string predictions_csv(const std::string& subject_id,
                                   const CurvePrediction& pred) {
  std::ostringstream ss;
  ss << "subject_id,component,time,latent_mean,latent_sd,observed_prediction\n";
  for (std::size_t p = 0; p < pred.points.size(); ++p)
    ss << subject_id << ',' << (pred.points[p].component + 1) << ','
       << format_double(pred.points[p].time) << ','
       << format_double(pred.latent[p]) << ',' << format_double(pred.latent_sd[p])
       << ',' << format_double(pred.observed[p]) << '\n';
  return ss.str();
}

inline std::string dataset_csv(const MixedDataset& data) {
  std::ostringstream ss;
  ss << "subject_id,component,time,value\n";
  for (const auto& o : data.observations())
    ss << o.subject_id << ',' << data.components()[o.component].name << ','
       << format_double(o.time) << ',' << format_double(o.value) << '\n';
  return ss.str();
}

inline nlohmann::json sidecar_json(const MixedDataset& data) {
  nlohmann::json j;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : data.components()) {
    nlohmann::json e;
    e["name"] = c.name;
    switch (c.type.kind) {
      case VarKind::Continuous: e["type"] = "continuous"; break;
      case VarKind::Truncated: e["type"] = "truncated"; break;
      case VarKind::Binary: e["type"] = "binary"; break;
      case VarKind::Ordinal:
        e["type"] = "ordinal";
        e["levels"] = c.type.levels;
        break;
    }
    comps.push_back(std::move(e));
  }
  j["components"] = std::move(comps);
  j["time_range"] = {0.0, 1.0};
  return j;
}

// scenario, n, method, mean_ise, sd_ise, n_fail
inline std::string benchmark_csv(const BenchmarkResult& res) {
  std::ostringstream ss;
  ss << "scenario,n,method,mean_ise,sd_ise,n_fail\n";
  for (const auto& m : res.methods)
    ss << to_string(res.config.scenario) << ',' << res.config.n << ','
       << to_string(m.method) << ',' << format_double(m.mean_ise) << ','
       << format_double(m.sd_ise) << ',' << m.n_fail << '\n';
  return ss.str();
}

inline nlohmann::json benchmark_json(const BenchmarkResult& res) {
  nlohmann::json j;
  j["scenario"] = to_string(res.config.scenario);
  j["n"] = res.config.n;
  j["m"] = res.config.m;
  j["replications"] = res.config.replications;
  j["seed"] = res.config.seed;
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : res.methods) {
    nlohmann::json e;
    e["method"] = to_string(m.method);
    e["mean_ise"] = m.mean_ise;
    e["sd_ise"] = m.sd_ise;
    e["n_fail"] = m.n_fail;
    nlohmann::json pr = nlohmann::json::array();
    for (double v : m.per_rep) {
      if (std::isnan(v))
        pr.push_back(nullptr);
      else
        pr.push_back(v);
    }
    e["per_replication"] = std::move(pr);
    methods.push_back(std::move(e));
  }
  j["methods"] = std::move(methods);
  return j;
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace mfpca
