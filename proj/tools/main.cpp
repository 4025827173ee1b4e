// funfuse command line: simulate / fit / cv / classify / evaluate / study.
// JSON for model artifacts, CSV for anything tabular. All randomness
// flows from --seed, so identical invocations produce identical files.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "funfuse/ecm.hpp"
#include "funfuse/metrics.hpp"
#include "funfuse/selection.hpp"
#include "funfuse/serialize.hpp"
#include "funfuse/simulate.hpp"
#include "funfuse/study.hpp"

namespace fs = std::filesystem;
using namespace funfuse;

namespace {

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

// ---- shared flag bundles -------------------------------------------------

struct BasisFlags {
  int q = 30;
  int order = 4;

  void attach(CLI::App* cmd) {
    cmd->add_option("--q", q, "basis dimension (q = interior knots + order)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--order", order, "B-spline order (4 = cubic)")
        ->check(CLI::PositiveNumber);
  }
  BSplineBasis build(Interval domain) const {
    if (q < order)
      throw std::runtime_error("basis dimension q must be at least the order");
    return make_basis(order, q - order, domain);
  }
};

struct DataFlags {
  std::string path;
  std::vector<double> domain;
  bool rescale01 = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", path, "input long-CSV (curve_id,t,y[,label])")
        ->required();
    cmd->add_option("--domain", domain,
                    "time domain lo,hi (default: observed range)")
        ->delimiter(',')
        ->expected(2);
    cmd->add_flag("--rescale01", rescale01,
                  "map the observed time range onto [0,1] before fitting");
  }

  // Returns the dataset to fit plus the original range when rescaled.
  std::pair<Dataset, std::optional<Interval>> load() const {
    std::optional<Interval> dom;
    if (!domain.empty()) dom = Interval{domain[0], domain[1]};
    Dataset ds = read_dataset_file(path, dom);
    if (!rescale01) return {std::move(ds), std::nullopt};
    Interval original = ds.domain;
    return {rescale_time(ds, original, {0.0, 1.0}), original};
  }
};

void write_fit_outputs(const fs::path& out_dir, const FitResult& res) {
  write_text(out_dir / "fit.json", fit_result_to_json(res));

  // plot-ready cluster means on a 200-point grid
  const BSplineBasis& basis = *res.basis;
  std::ostringstream means;
  means << "cluster,t,mu\n";
  const int n_grid = 200;
  for (int g = 0; g < res.params.n_clusters(); ++g)
    for (int i = 0; i < n_grid; ++i) {
      double t = basis.domain().lo + basis.domain().length() * i / (n_grid - 1.0);
      double mu = basis.evaluate(t).dot(res.params.means.row(g).transpose());
      means << (g + 1) << ',' << format17(t) << ',' << format17(mu) << "\n";
    }
  write_text(out_dir / "means.csv", means.str());

  std::ostringstream fused;
  fused << "g,g2,lo,hi\n";
  for (const PairIntervals& p : res.fused_pairs)
    for (const Interval& iv : p.intervals)
      fused << p.g1 << ',' << p.g2 << ',' << format17(iv.lo) << ','
            << format17(iv.hi) << "\n";
  write_text(out_dir / "fused.csv", fused.str());

  for (const std::string& w : res.warnings)
    std::cerr << "warning: " << w << "\n";
  if (!res.converged)
    std::cerr << "warning: ECM did not converge within "
              << res.config.max_ecm_iters << " iterations\n";
}

// ---- subcommands ----------------------------------------------------------

int cmd_simulate(const ScenarioSpec& spec, const std::string& out) {
  fs::path dir = prepare_out_dir(out);
  Simulated sim = generate(spec);
  write_dataset_file(sim.dataset, (dir / "dataset.csv").string());
  write_text(dir / "truth.json", ground_truth_to_json(sim.truth, spec));
  std::cout << "wrote " << (dir / "dataset.csv").string() << " ("
            << sim.dataset.n_curves() << " curves) and "
            << (dir / "truth.json").string() << "\n";
  return 0;
}

int cmd_fit(const DataFlags& data, const BasisFlags& basis_flags,
            FitConfig config, const std::string& config_path,
            const CLI::App* cmd, const std::string& out) {
  if (!config_path.empty()) {
    FitConfig from_file;  // defaults
    apply_config_json(from_file, read_text(config_path));
    // explicit flags win over the config file
    FitConfig merged = from_file;
    if (cmd->count("--g")) merged.n_clusters = config.n_clusters;
    if (cmd->count("--lambda-l")) merged.lambda_fuse = config.lambda_fuse;
    if (cmd->count("--lambda-s")) merged.lambda_smooth = config.lambda_smooth;
    if (cmd->count("--seed")) merged.seed = config.seed;
    if (cmd->count("--max-iters")) merged.max_ecm_iters = config.max_ecm_iters;
    config = merged;
  }
  auto [ds, original] = data.load();
  BSplineBasis basis = basis_flags.build(ds.domain);
  FitResult res = fit(ds, basis, config);
  res.original_domain = original;
  write_fit_outputs(prepare_out_dir(out), res);
  return 0;
}

int cmd_cv(const DataFlags& data, const BasisFlags& basis_flags,
           SelectionGrid grid, FitConfig base, bool refit, int jobs,
           const std::string& out) {
  auto [ds, original] = data.load();
  BSplineBasis basis = basis_flags.build(ds.domain);
  SelectionResult sel = select_model(ds, basis, grid, base, jobs);

  fs::path dir = prepare_out_dir(out);
  write_text(dir / "cv_table.csv", cv_table_to_csv(sel));
  write_text(dir / "chosen.json", selection_to_json(sel));
  std::cout << "chosen: G=" << sel.chosen_g
            << " lambda_s=" << sel.chosen_lambda_s
            << " lambda_l=" << sel.chosen_lambda_l << "\n";

  if (refit) {
    FitConfig config = base;
    config.n_clusters = sel.chosen_g;
    config.lambda_smooth = sel.chosen_lambda_s;
    config.lambda_fuse = sel.chosen_lambda_l;
    FitResult res = fit(ds, basis, config);
    res.original_domain = original;
    write_fit_outputs(dir, res);
  }
  return 0;
}

int cmd_classify(const std::string& model_path, const std::string& data_path,
                 const std::string& out_path) {
  FitResult model = fit_result_from_json(read_text(model_path));
  const BSplineBasis& basis = *model.basis;

  Dataset ds = read_dataset_file(data_path, basis.domain());
  if (model.original_domain)
    ds = rescale_time(read_dataset_file(data_path, *model.original_domain),
                      *model.original_domain, basis.domain());

  std::ostringstream out;
  out << "curve_id,label";
  for (int g = 1; g <= model.params.n_clusters(); ++g) out << ",posterior_" << g;
  out << "\n";
  Eigen::MatrixXd post = posteriors(ds, model.params, basis);
  for (int i = 0; i < ds.n_curves(); ++i) {
    int best = 0;
    for (int g = 1; g < post.cols(); ++g)
      if (post(i, g) > post(i, best)) best = g;
    out << ds.curves[i].id << ',' << (best + 1);
    for (int g = 0; g < post.cols(); ++g) out << ',' << format17(post(i, g));
    out << "\n";
  }
  write_text(out_path, out.str());
  return 0;
}

int cmd_evaluate(const std::string& fit_path, const std::string& truth_path,
                 const std::string& out_path) {
  FitResult res = fit_result_from_json(read_text(fit_path));
  GroundTruth truth = ground_truth_from_json(read_text(truth_path));

  double arand = adjusted_rand(res.labels, truth.true_labels);
  double rmse = std::nan("");
  double fraction = std::nan("");
  if (res.params.n_clusters() == truth.true_mean_coefficients.rows()) {
    std::vector<int> perm = align_clusters(truth.true_mean_coefficients,
                                           res.params.means, *res.basis);
    rmse = mean_rmse(truth.true_mean_coefficients, res.params.means, *res.basis);
    fraction = noninformative_fraction(res.fused_pairs, truth, perm);
  }

  std::ostringstream out;
  out << "aRand,rmse,noninf_fraction,G_selected\n"
      << format17(arand) << ',' << format17(rmse) << ',' << format17(fraction)
      << ',' << res.params.n_clusters() << "\n";
  write_text(out_path, out.str());
  std::cout << out.str();
  return 0;
}

int cmd_study(const StudySpec& spec, const std::string& out) {
  StudyResult result = run_study(spec);
  fs::path dir = prepare_out_dir(out);

  std::ostringstream csv;
  csv << "replicate,seed,chosen_g,lambda_s,lambda_l,arand,rmse,"
         "noninf_fraction,converged\n";
  for (std::size_t r = 0; r < result.replicates.size(); ++r) {
    const ReplicateOutcome& row = result.replicates[r];
    csv << r << ',' << row.seed << ',' << row.chosen_g << ','
        << format17(row.chosen_lambda_s) << ',' << format17(row.chosen_lambda_l)
        << ',' << format17(row.arand) << ',' << format17(row.rmse) << ','
        << format17(row.noninf_fraction) << ',' << (row.converged ? 1 : 0)
        << "\n";
  }
  write_text(dir / "study.csv", csv.str());

  std::ostringstream summary;
  summary << "{\n"
          << "  \"replicates\": " << result.replicates.size() << ",\n"
          << "  \"mean_g\": " << format17(result.mean_g) << ",\n"
          << "  \"mean_arand\": " << format17(result.mean_arand) << ",\n"
          << "  \"mean_rmse\": " << format17(result.mean_rmse) << ",\n"
          << "  \"mean_noninf_fraction\": "
          << format17(result.mean_noninf_fraction) << ",\n"
          << "  \"n_matching_g\": " << result.n_matching_g << "\n"
          << "}\n";
  write_text(dir / "study_summary.json", summary.str());
  std::cout << summary.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "funfuse: model-based clustering of functional data with pairwise "
      "fused cluster means"};
  app.require_subcommand(1);

  // simulate ---------------------------------------------------------------
  auto* sim_cmd = app.add_subcommand(
      "simulate", "generate a synthetic dataset with ground truth");
  ScenarioSpec scenario;
  std::string scenario_name;
  std::string sim_out = ".";
  sim_cmd->add_option("--scenario", scenario_name, "scenario: I, II or III")
      ->required();
  sim_cmd->add_option("--sigma-e", scenario.sigma_e, "noise sd (default 1.0)");
  sim_cmd->add_option("--sigma-c", scenario.sigma_c,
                      "coefficient sd (default 0.5)");
  sim_cmd->add_option("--n-per-cluster", scenario.n_per_cluster,
                      "curves per cluster (default 200)");
  sim_cmd->add_option("--n-points", scenario.n_points,
                      "points per curve (default 50)");
  sim_cmd->add_option("--seed", scenario.seed, "RNG seed");
  sim_cmd->add_option("--out", sim_out, "output directory");

  // fit ----------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "penalized ECM fit");
  DataFlags fit_data;
  BasisFlags fit_basis;
  FitConfig fit_config;
  std::string fit_config_path;
  std::string fit_out = ".";
  fit_data.attach(fit_cmd);
  fit_basis.attach(fit_cmd);
  fit_cmd->add_option("--g", fit_config.n_clusters, "number of clusters")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--lambda-l", fit_config.lambda_fuse,
                      "pairwise fusion penalty");
  fit_cmd->add_option("--lambda-s", fit_config.lambda_smooth,
                      "roughness penalty");
  fit_cmd->add_option("--seed", fit_config.seed, "RNG seed");
  fit_cmd->add_option("--max-iters", fit_config.max_ecm_iters,
                      "ECM iteration cap");
  fit_cmd->add_option("--config", fit_config_path,
                      "JSON config (explicit flags still win)");
  fit_cmd->add_option("--out", fit_out, "output directory");

  // cv -----------------------------------------------------------------
  auto* cv_cmd =
      app.add_subcommand("cv", "cross-validated hyperparameter selection");
  DataFlags cv_data;
  BasisFlags cv_basis;
  SelectionGrid grid;
  grid.g_values = {1, 2, 3};
  grid.lambda_s_values = {0.01, 0.1, 1.0, 10.0};
  grid.lambda_l_values = {0.0, 1.0, 10.0, 100.0, 1000.0};
  FitConfig cv_base;
  bool refit = false;
  int jobs = 0;
  std::string cv_out = ".";
  cv_data.attach(cv_cmd);
  cv_basis.attach(cv_cmd);
  cv_cmd->add_option("--g", grid.g_values, "cluster counts to try")
      ->delimiter(',');
  cv_cmd->add_option("--lambda-l", grid.lambda_l_values,
                     "fusion penalty grid")
      ->delimiter(',');
  cv_cmd->add_option("--lambda-s", grid.lambda_s_values,
                     "roughness penalty grid")
      ->delimiter(',');
  cv_cmd->add_option("--k", grid.k_folds, "number of folds (default 5)");
  cv_cmd->add_option("--m1", grid.m1, "stage-1 m (cluster count)");
  cv_cmd->add_option("--m2", grid.m2, "stage-2 m (lambda_s)");
  cv_cmd->add_option("--m3", grid.m3, "stage-3 m (lambda_l)");
  cv_cmd->add_option("--seed", cv_base.seed,
                     "RNG seed (fits and fold assignment)");
  cv_cmd->add_option("--max-iters", cv_base.max_ecm_iters,
                     "ECM iteration cap per fit");
  cv_cmd->add_flag("--refit", refit, "refit on the full data at the chosen cell");
  cv_cmd->add_option("--jobs", jobs, "parallel workers (0 = hardware)");
  cv_cmd->add_option("--out", cv_out, "output directory");

  // classify -------------------------------------------------------------
  auto* cls_cmd =
      app.add_subcommand("classify", "assign new curves to fitted clusters");
  std::string cls_model, cls_data, cls_out = "classified.csv";
  cls_cmd->add_option("--model", cls_model, "fit.json from a previous fit")
      ->required();
  cls_cmd->add_option("--data", cls_data, "curves CSV")->required();
  cls_cmd->add_option("--out", cls_out, "output CSV path");

  // evaluate -------------------------------------------------------------
  auto* eval_cmd =
      app.add_subcommand("evaluate", "score a fit against ground truth");
  std::string eval_fit, eval_truth, eval_out = "metrics.csv";
  eval_cmd->add_option("--fit", eval_fit, "fit.json")->required();
  eval_cmd->add_option("--truth", eval_truth, "truth.json")->required();
  eval_cmd->add_option("--out", eval_out, "output CSV path");

  // study ----------------------------------------------------------------
  auto* study_cmd = app.add_subcommand(
      "study", "replicated simulate -> cv -> fit -> evaluate pipeline");
  StudySpec study;
  study.grid.g_values = {1, 2, 3};
  study.grid.lambda_s_values = {0.01, 0.1, 1.0, 10.0};
  study.grid.lambda_l_values = {0.0, 1.0, 10.0, 100.0, 1000.0};
  std::string study_scenario_name;
  std::string study_out = ".";
  study_cmd->add_option("--scenario", study_scenario_name, "I, II or III")
      ->required();
  study_cmd->add_option("--sigma-e", study.scenario.sigma_e, "noise sd");
  study_cmd->add_option("--sigma-c", study.scenario.sigma_c, "coefficient sd");
  study_cmd->add_option("--n-per-cluster", study.scenario.n_per_cluster,
                        "curves per cluster");
  study_cmd->add_option("--replicates", study.replicates, "replicate count");
  study_cmd->add_option("--seed", study.scenario.seed, "master seed");
  study_cmd->add_option("--g", study.grid.g_values, "cluster grid")
      ->delimiter(',');
  study_cmd->add_option("--lambda-l", study.grid.lambda_l_values,
                        "fusion grid")
      ->delimiter(',');
  study_cmd->add_option("--lambda-s", study.grid.lambda_s_values,
                        "roughness grid")
      ->delimiter(',');
  study_cmd->add_option("--k", study.grid.k_folds, "folds");
  study_cmd->add_option("--m1", study.grid.m1, "stage-1 m");
  study_cmd->add_option("--m2", study.grid.m2, "stage-2 m");
  study_cmd->add_option("--m3", study.grid.m3, "stage-3 m");
  study_cmd->add_option("--max-iters", study.base_config.max_ecm_iters,
                        "ECM iteration cap per fit");
  study_cmd->add_option("--jobs", study.n_threads,
                        "parallel replicates (0 = hardware)");
  study_cmd->add_option("--out", study_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
  }

  try {
    if (sim_cmd->parsed()) {
      scenario.scenario = scenario_from_string(scenario_name);
      return cmd_simulate(scenario, sim_out);
    }
    if (fit_cmd->parsed())
      return cmd_fit(fit_data, fit_basis, fit_config, fit_config_path, fit_cmd,
                     fit_out);
    if (cv_cmd->parsed())
      return cmd_cv(cv_data, cv_basis, grid, cv_base, refit, jobs, cv_out);
    if (cls_cmd->parsed()) return cmd_classify(cls_model, cls_data, cls_out);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_fit, eval_truth, eval_out);
    if (study_cmd->parsed()) {
      study.scenario.scenario = scenario_from_string(study_scenario_name);
      return cmd_study(study, study_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
