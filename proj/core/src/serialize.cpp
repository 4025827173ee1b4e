#include "funfuse/serialize.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace funfuse {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(r, c) = rows[r][c].get<double>();
  return m;
}

json pairs_to_json(const std::vector<PairIntervals>& pairs) {
  json arr = json::array();
  for (const PairIntervals& p : pairs) {
    json ivs = json::array();
    for (const Interval& iv : p.intervals)
      ivs.push_back(json::array({iv.lo, iv.hi}));
    arr.push_back(json::array({p.g1, p.g2, std::move(ivs)}));
  }
  return arr;
}

std::vector<PairIntervals> pairs_from_json(const json& arr) {
  std::vector<PairIntervals> pairs;
  for (const json& item : arr) {
    PairIntervals p;
    p.g1 = item[0].get<int>();
    p.g2 = item[1].get<int>();
    for (const json& iv : item[2])
      p.intervals.push_back({iv[0].get<double>(), iv[1].get<double>()});
    pairs.push_back(std::move(p));
  }
  return pairs;
}

json config_to_json(const FitConfig& c, double resolved_fuse_threshold) {
  return json{{"n_clusters", c.n_clusters},
              {"lambda_fuse", c.lambda_fuse},
              {"lambda_smooth", c.lambda_smooth},
              {"deriv_order", c.deriv_order},
              {"max_ecm_iters", c.max_ecm_iters},
              {"ecm_tol", c.ecm_tol},
              {"max_lqa_iters", c.max_lqa_iters},
              {"lqa_tol", c.lqa_tol},
              {"lqa_floor", c.lqa_floor},
              {"fuse_threshold", resolved_fuse_threshold},
              {"weight_floor", c.weight_floor},
              {"seed", c.seed}};
}

void config_from_json(const json& j, FitConfig& c) {
  if (j.contains("n_clusters")) c.n_clusters = j["n_clusters"].get<int>();
  if (j.contains("lambda_fuse")) c.lambda_fuse = j["lambda_fuse"].get<double>();
  if (j.contains("lambda_smooth"))
    c.lambda_smooth = j["lambda_smooth"].get<double>();
  if (j.contains("deriv_order")) c.deriv_order = j["deriv_order"].get<int>();
  if (j.contains("max_ecm_iters"))
    c.max_ecm_iters = j["max_ecm_iters"].get<int>();
  if (j.contains("ecm_tol")) c.ecm_tol = j["ecm_tol"].get<double>();
  if (j.contains("max_lqa_iters"))
    c.max_lqa_iters = j["max_lqa_iters"].get<int>();
  if (j.contains("lqa_tol")) c.lqa_tol = j["lqa_tol"].get<double>();
  if (j.contains("lqa_floor")) c.lqa_floor = j["lqa_floor"].get<double>();
  if (j.contains("fuse_threshold") && !j["fuse_threshold"].is_null())
    c.fuse_threshold = j["fuse_threshold"].get<double>();
  if (j.contains("weight_floor")) c.weight_floor = j["weight_floor"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string fit_result_to_json(const FitResult& result) {
  if (!result.basis)
    throw std::invalid_argument("fit result has no basis attached");
  const BSplineBasis& basis = *result.basis;

  json interior = json::array();
  const std::vector<double>& knots = basis.knots();
  for (std::size_t i = 1; i + 1 < knots.size(); ++i) interior.push_back(knots[i]);

  json j{{"config", config_to_json(result.config, result.fuse_threshold)},
         {"seed", result.config.seed},
         {"basis",
          {{"order", basis.order()},
           {"domain", json::array({basis.domain().lo, basis.domain().hi})},
           {"interior_knots", std::move(interior)}}},
         {"params",
          {{"mixing", vector_to_json(result.params.mixing)},
           {"means", matrix_to_json(result.params.means)},
           {"gamma_diag", vector_to_json(result.params.gamma_diag)},
           {"noise_var", result.params.noise_var}}},
         {"labels", result.labels},
         {"posteriors", matrix_to_json(result.posteriors)},
         {"objective_trace", result.objective_trace},
         {"fused_pairs", pairs_to_json(result.fused_pairs)},
         {"converged", result.converged},
         {"n_iters", result.n_iters},
         {"fuse_threshold", result.fuse_threshold},
         {"warnings", result.warnings}};
  if (result.original_domain)
    j["original_domain"] =
        json::array({result.original_domain->lo, result.original_domain->hi});
  return j.dump(2) + "\n";
}

FitResult fit_result_from_json(const std::string& text) {
  json j = json::parse(text);

  FitResult res;
  config_from_json(j.at("config"), res.config);
  res.fuse_threshold = j.at("fuse_threshold").get<double>();

  const json& jb = j.at("basis");
  std::vector<double> interior;
  for (const json& x : jb.at("interior_knots"))
    interior.push_back(x.get<double>());
  res.basis = BSplineBasis(
      jb.at("order").get<int>(), std::move(interior),
      {jb.at("domain")[0].get<double>(), jb.at("domain")[1].get<double>()});

  const json& jp = j.at("params");
  res.params.mixing = vector_from_json(jp.at("mixing"));
  res.params.means = matrix_from_json(jp.at("means"));
  res.params.gamma_diag = vector_from_json(jp.at("gamma_diag"));
  res.params.noise_var = jp.at("noise_var").get<double>();

  res.labels = j.at("labels").get<std::vector<int>>();
  res.posteriors = matrix_from_json(j.at("posteriors"));
  res.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  res.fused_pairs = pairs_from_json(j.at("fused_pairs"));
  res.converged = j.at("converged").get<bool>();
  res.n_iters = j.at("n_iters").get<int>();
  res.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (j.contains("original_domain"))
    res.original_domain = Interval{j["original_domain"][0].get<double>(),
                                   j["original_domain"][1].get<double>()};
  return res;
}

void apply_config_json(FitConfig& config, const std::string& text) {
  config_from_json(json::parse(text), config);
}

std::string ground_truth_to_json(const GroundTruth& truth,
                                 const ScenarioSpec& spec) {
  json j{{"scenario", to_string(spec.scenario)},
         {"sigma_e", spec.sigma_e},
         {"sigma_c", spec.sigma_c},
         {"n_per_cluster", spec.n_per_cluster},
         {"n_points", spec.n_points},
         {"seed", spec.seed},
         {"true_labels", truth.true_labels},
         {"true_mean_coefficients",
          matrix_to_json(truth.true_mean_coefficients)},
         {"noninformative_intervals",
          pairs_to_json(truth.noninformative_intervals)}};
  return j.dump(2) + "\n";
}

GroundTruth ground_truth_from_json(const std::string& text) {
  json j = json::parse(text);
  GroundTruth truth;
  truth.true_labels = j.at("true_labels").get<std::vector<int>>();
  truth.true_mean_coefficients =
      matrix_from_json(j.at("true_mean_coefficients"));
  truth.noninformative_intervals =
      pairs_from_json(j.at("noninformative_intervals"));
  return truth;
}

std::string cv_table_to_csv(const SelectionResult& result) {
  std::ostringstream out;
  out << "G,lambda_s,lambda_l,cv_mean,cv_se";
  for (int k = 0; k < result.grid.k_folds; ++k) out << ",fold_" << (k + 1);
  out << "\n";
  for (const CvCell& cell : result.cv_table) {
    out << cell.g << ',' << format17(cell.lambda_s) << ','
        << format17(cell.lambda_l) << ',' << format17(cell.score.mean) << ','
        << format17(cell.score.se);
    for (double s : cell.score.per_fold) out << ',' << format17(s);
    out << "\n";
  }
  return out.str();
}

std::string selection_to_json(const SelectionResult& result) {
  json j{{"chosen",
          {{"n_clusters", result.chosen_g},
           {"lambda_smooth", result.chosen_lambda_s},
           {"lambda_fuse", result.chosen_lambda_l}}},
         {"grid",
          {{"g_values", result.grid.g_values},
           {"lambda_s_values", result.grid.lambda_s_values},
           {"lambda_l_values", result.grid.lambda_l_values},
           {"k_folds", result.grid.k_folds},
           {"m1", result.grid.m1},
           {"m2", result.grid.m2},
           {"m3", result.grid.m3},
           {"seed", result.grid.seed}}},
         {"stage1_g", result.stage1_g},
         {"stage2_lambda_s", result.stage2_lambda_s},
         {"stage3_lambda_l", result.stage3_lambda_l}};
  return j.dump(2) + "\n";
}

}  // namespace funfuse
