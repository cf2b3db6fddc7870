// Command-line front end: simulate, fit, predict, scores, benchmark, plot.
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "mixedfpca/io.hpp"
#include "mixedfpca/pipeline.hpp"
#include "mixedfpca/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw UsageError("empty integer list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw UsageError("empty number list");
  return out;
}

mfpca::Scenario parse_scenario(const std::string& s) {
  if (s == "stationary") return mfpca::Scenario::Stationary;
  if (s == "nonstationary") return mfpca::Scenario::Nonstationary;
  throw UsageError("unknown scenario '" + s + "' (stationary|nonstationary)");
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const json& params) {
  json m;
  m["version"] = kVersion;
  m["command"] = command;
  m["parameters"] = params;
  mfpca::write_json((dir / "manifest.json").string(), m);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& scenario, int n, int m, std::uint64_t seed,
                 const std::string& out) {
  mfpca::SimulationConfig cfg;
  cfg.scenario = parse_scenario(scenario);
  cfg.n = n;
  cfg.m = m;
  cfg.seed = seed;
  const auto sim = mfpca::simulate(cfg);
  fs::create_directories(out);
  mfpca::write_text((fs::path(out) / "dataset.csv").string(),
                    mfpca::dataset_csv(sim.dataset));
  mfpca::write_json((fs::path(out) / "dataset.json").string(),
                    mfpca::sidecar_json(sim.dataset));
  json truth;
  truth["grid"] = sim.grid;
  truth["n_components"] = cfg.p;
  truth["covariance"] = mfpca::detail::matrix_json(sim.truth);
  mfpca::write_json((fs::path(out) / "truth.json").string(), truth);
  json params;
  params["scenario"] = scenario;
  params["n"] = n;
  params["grid"] = m;
  params["seed"] = seed;
  params["out"] = out;
  write_manifest(out, "simulate", params);
  std::cout << "simulated " << n << " subjects (" << scenario << ") into " << out
            << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& sidecar_path,
            const std::string& method, int grid_m, int c0, double epsilon,
            const std::string& k_list, double var_threshold, std::uint64_t seed,
            int threads, const std::string& out) {
  if (method != "m2fpca" && method != "ps_m2fpca")
    throw UsageError("unknown method '" + method + "' (m2fpca|ps_m2fpca)");
  const auto sidecar = mfpca::load_sidecar(sidecar_path);
  const auto data = mfpca::load_dataset(data_path, sidecar);
  mfpca::FitOptions opts;
  opts.grid_m = grid_m;
  opts.c0 = c0;
  opts.epsilon = epsilon;
  opts.k_candidates = parse_int_list(k_list);
  opts.var_threshold = var_threshold;
  opts.seed = seed;
  opts.threads = threads;

  std::vector<mfpca::VariableType> types;
  for (int j = 0; j < data.n_components(); ++j) types.push_back(data.type(j));

  fs::create_directories(out);
  json eigen_json;
  json chosen_k = json::array();
  if (method == "m2fpca") {
    const auto fit = mfpca::fit_m2fpca(data, opts);
    mfpca::write_json((fs::path(out) / "model.json").string(),
                      mfpca::model_to_json(fit.model, fit.marginals, types));
    eigen_json = mfpca::eigensystem_to_json(fit.eigensystem);
    eigen_json["subject_ids"] = data.subject_ids();
    mfpca::write_json((fs::path(out) / "eigen.json").string(), eigen_json);
    mfpca::write_text((fs::path(out) / "scores.csv").string(),
                      mfpca::scores_csv(fit.eigensystem, data.subject_ids()));
    for (int k : fit.chosen_k) chosen_k.push_back(k);
  } else {
    const auto fit = mfpca::fit_ps_m2fpca(data, opts);
    // ps model artifact: univariate marginal surfaces + the partially
    // separable covariance reconstruction
    mfpca::LatentCorrelationModel model;
    model.grid = mfpca::regular_grid(grid_m);
    model.J = data.n_components();
    model.epsilon = epsilon;
    model.assembled = mfpca::ps_reconstruct(fit.eigensystem);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.assembled);
    model.assembled_pd = es.eigenvectors() *
                         es.eigenvalues().cwiseMax(epsilon).asDiagonal() *
                         es.eigenvectors().transpose();
    for (int j = 0; j < data.n_components(); ++j) {
      mfpca::SplineSurface s = fit.univariate[j].surfaces.front();
      s.j = s.k = j;
      model.surfaces.push_back(s);
    }
    mfpca::write_json((fs::path(out) / "model.json").string(),
                      mfpca::model_to_json(model, fit.marginals, types));
    eigen_json = mfpca::eigensystem_to_json(fit.eigensystem);
    eigen_json["subject_ids"] = data.subject_ids();
    mfpca::write_json((fs::path(out) / "eigen.json").string(), eigen_json);
    mfpca::write_text((fs::path(out) / "scores.csv").string(),
                      mfpca::scores_csv(fit.eigensystem, data.subject_ids()));
    for (int k : fit.chosen_k) chosen_k.push_back(k);
  }

  json params;
  params["data"] = data_path;
  params["sidecar"] = sidecar_path;
  params["method"] = method;
  params["grid"] = grid_m;
  params["c0"] = c0;
  params["epsilon"] = epsilon;
  params["k_candidates"] = k_list;
  params["chosen_k"] = chosen_k;
  params["var_threshold"] = var_threshold;
  params["seed"] = seed;
  params["threads"] = threads;
  params["out"] = out;
  write_manifest(out, "fit", params);
  std::cout << "fitted " << method << " on " << data.n_subjects()
            << " subjects; artifacts in " << out << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& sidecar_path, const std::string& subject,
                const std::string& times_list, std::uint64_t seed,
                const std::string& out) {
  const auto loaded = mfpca::model_from_json(mfpca::read_json(model_path));
  const auto sidecar = mfpca::load_sidecar(sidecar_path);
  const auto data = mfpca::load_dataset(data_path, sidecar);
  const auto times = parse_double_list(times_list);
  const int i = data.subject_index(subject);
  std::vector<mfpca::SubjectObservation> obs;
  for (int j = 0; j < data.n_components(); ++j)
    for (const auto& [r, v] : data.series(i, j))
      obs.push_back({j, data.pooled_times()[r], v});
  std::vector<std::vector<double>> new_times(data.n_components(), times);
  mfpca::SamplerSettings ss{mfpca::substream_seed(seed, "sampler", i), 100, 400};
  const auto pred = mfpca::predict_curves(obs, loaded.types, new_times, loaded.model,
                                          loaded.marginals, ss, subject);
  fs::create_directories(fs::path(out).parent_path().empty()
                             ? "."
                             : fs::path(out).parent_path().string());
  mfpca::write_text(out, mfpca::predictions_csv(subject, pred));
  std::cout << "wrote predictions for subject " << subject << " to " << out << "\n";
  return 0;
}

int cmd_scores(const std::string& eigen_path, const std::string& out) {
  const json j = mfpca::read_json(eigen_path);
  const auto sys = mfpca::eigensystem_from_json(j);
  std::vector<std::string> ids;
  if (j.contains("subject_ids")) {
    ids = j["subject_ids"].get<std::vector<std::string>>();
  } else {
    for (int i = 0; i < sys.scores.rows(); ++i) ids.push_back("s" + std::to_string(i + 1));
  }
  mfpca::write_text(out, mfpca::scores_csv(sys, ids));
  std::cout << "wrote scores to " << out << "\n";
  return 0;
}

int cmd_benchmark(const std::string& scenario, int n, int m, int reps,
                  std::uint64_t seed, const std::string& methods_list, int k, int c0,
                  double epsilon, double var_threshold, int threads,
                  const std::string& out) {
  if (reps < 1) throw UsageError("--reps must be >= 1");
  mfpca::SimulationConfig cfg;
  cfg.scenario = parse_scenario(scenario);
  cfg.n = n;
  cfg.m = m;
  cfg.seed = seed;
  cfg.replications = reps;
  std::vector<mfpca::Method> methods;
  {
    std::stringstream ss(methods_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok == "m2fpca") methods.push_back(mfpca::Method::M2fpca);
      else if (tok == "ps_m2fpca") methods.push_back(mfpca::Method::PsM2fpca);
      else if (tok == "naive_mfpca") methods.push_back(mfpca::Method::NaiveMfpca);
      else if (!tok.empty())
        throw UsageError("unknown method '" + tok + "'");
    }
  }
  if (methods.empty()) throw UsageError("no methods given");
  mfpca::BenchmarkOptions bopts;
  bopts.c0 = c0;
  bopts.epsilon = epsilon;
  bopts.k = k;
  bopts.var_threshold = var_threshold;
  bopts.threads = threads;
  const auto res = mfpca::benchmark(cfg, methods, bopts);
  fs::create_directories(out);
  mfpca::write_text((fs::path(out) / "benchmark.csv").string(),
                    mfpca::benchmark_csv(res));
  mfpca::write_json((fs::path(out) / "benchmark.json").string(),
                    mfpca::benchmark_json(res));
  json params;
  params["scenario"] = scenario;
  params["n"] = n;
  params["grid"] = m;
  params["reps"] = reps;
  params["seed"] = seed;
  params["methods"] = methods_list;
  params["k"] = k;
  params["c0"] = c0;
  params["epsilon"] = epsilon;
  params["var_threshold"] = var_threshold;
  params["threads"] = threads;
  params["out"] = out;
  write_manifest(out, "benchmark", params);
  std::cout << mfpca::benchmark_csv(res);
  return 0;
}

int cmd_plot(const std::string& model_path, const std::string& eigen_path,
             const std::string& out) {
  if (model_path.empty() && eigen_path.empty())
    throw UsageError("plot: need --model and/or --eigen");
  fs::create_directories(out);
  if (!model_path.empty()) {
    const auto loaded = mfpca::model_from_json(mfpca::read_json(model_path));
    std::vector<std::string> names;
    for (int j = 0; j < loaded.model.J; ++j)
      names.push_back("y" + std::to_string(j + 1));
    mfpca::write_text((fs::path(out) / "covariance.svg").string(),
                      mfpca::covariance_svg(loaded.model.assembled_pd,
                                            loaded.model.J, names));
  }
  if (!eigen_path.empty()) {
    const auto sys = mfpca::eigensystem_from_json(mfpca::read_json(eigen_path));
    mfpca::write_text((fs::path(out) / "eigenfunctions.svg").string(),
                      mfpca::eigenfunctions_svg(sys));
  }
  std::cout << "wrote plots to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-type multivariate functional PCA via a latent Gaussian copula"};
  app.require_subcommand(1);

  std::string scenario = "stationary", out = "out", method = "m2fpca";
  std::string data_path, sidecar_path, model_path, eigen_path, subject, times_list;
  std::string k_list = "4,5,6,7,8,9,10", methods_list = "m2fpca,ps_m2fpca,naive_mfpca";
  int n = 100, grid_m = 16, c0 = 10, threads = 1, reps = 0, k = 6;
  double epsilon = 1e-3, var_threshold = 0.95;
  std::uint64_t seed = 1;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic mixed-type dataset");
  sim->add_option("--scenario", scenario, "stationary|nonstationary");
  sim->add_option("--n", n, "number of subjects");
  sim->add_option("--grid", grid_m, "grid size m");
  sim->add_option("--seed", seed, "root seed");
  sim->add_option("--out", out, "output directory")->required();

  auto* fit = app.add_subcommand("fit", "fit a latent correlation model + FPCA");
  fit->add_option("--data", data_path, "long-form CSV")->required();
  fit->add_option("--sidecar", sidecar_path, "component declaration JSON")->required();
  fit->add_option("--method", method, "m2fpca|ps_m2fpca");
  fit->add_option("--grid", grid_m, "evaluation grid size m");
  fit->add_option("--c0", c0, "reliability threshold");
  fit->add_option("--epsilon", epsilon, "PD projection floor");
  fit->add_option("--k-candidates", k_list, "comma list; single value fixes K");
  fit->add_option("--var-threshold", var_threshold, "FPCA variance threshold");
  fit->add_option("--seed", seed, "root seed");
  fit->add_option("--threads", threads, "worker threads");
  fit->add_option("--out", out, "output directory")->required();

  auto* pred = app.add_subcommand("predict", "BLUP curve prediction at new times");
  pred->add_option("--model", model_path, "model.json from fit")->required();
  pred->add_option("--data", data_path, "long-form CSV")->required();
  pred->add_option("--sidecar", sidecar_path, "component declaration JSON")->required();
  pred->add_option("--subject", subject, "subject id")->required();
  pred->add_option("--times", times_list, "comma list of new times in [0,1]")->required();
  pred->add_option("--seed", seed, "root seed");
  pred->add_option("--out", out, "output CSV path")->required();

  auto* sc = app.add_subcommand("scores", "export FPC scores from an eigen artifact");
  sc->add_option("--eigen", eigen_path, "eigen.json from fit")->required();
  sc->add_option("--out", out, "output CSV path")->required();

  auto* bench = app.add_subcommand("benchmark", "Monte-Carlo ISE comparison");
  bench->add_option("--scenario", scenario, "stationary|nonstationary");
  bench->add_option("--n", n, "subjects per replication");
  bench->add_option("--grid", grid_m, "grid size m");
  bench->add_option("--reps", reps, "Monte-Carlo replications")->required();
  bench->add_option("--seed", seed, "root seed");
  bench->add_option("--methods", methods_list, "comma list of methods");
  bench->add_option("--k", k, "spline basis size");
  bench->add_option("--c0", c0, "reliability threshold");
  bench->add_option("--epsilon", epsilon, "PD projection floor");
  bench->add_option("--var-threshold", var_threshold, "eigen truncation threshold");
  bench->add_option("--threads", threads, "worker threads");
  bench->add_option("--out", out, "output directory")->required();

  auto* plot = app.add_subcommand("plot", "render SVG heatmaps / curve plots");
  plot->add_option("--model", model_path, "model.json");
  plot->add_option("--eigen", eigen_path, "eigen.json");
  plot->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(scenario, n, grid_m, seed, out);
    if (fit->parsed())
      return cmd_fit(data_path, sidecar_path, method, grid_m, c0, epsilon, k_list,
                     var_threshold, seed, threads, out);
    if (pred->parsed())
      return cmd_predict(model_path, data_path, sidecar_path, subject, times_list,
                         seed, out);
    if (sc->parsed()) return cmd_scores(eigen_path, out);
    if (bench->parsed())
      return cmd_benchmark(scenario, n, grid_m, reps, seed, methods_list, k, c0,
                           epsilon, var_threshold, threads, out);
    if (plot->parsed()) return cmd_plot(model_path, eigen_path, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
