#include "gapcast/artifacts.hpp"

#include "gapcast/errors.hpp"
#include "gapcast/util.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace gapcast {

using nlohmann::json;

const char* kToolkitVersion = "0.1.0";

nlohmann::json to_json(const FilterReport& report) {
  json j;
  j["dropped_units"] = report.dropped_units;
  j["n_units"] = report.n_units;
  j["n_treated"] = report.n_treated;
  j["n_periods"] = report.n_periods;
  j["n_observed_cells"] = report.n_observed_cells;
  return j;
}

nlohmann::json to_json(const FactorModelFit& fit, const PanelDataset& panel) {
  json j;
  j["r"] = fit.r;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["sigma2"] = fit.sigma2;
  json beta = json::object();
  for (size_t k = 0; k < fit.covariate_names.size(); ++k)
    beta[fit.covariate_names[k]] = fit.beta(static_cast<int>(k));
  j["beta"] = beta;
  json factors = json::array();
  for (int t = 0; t < fit.factors.rows(); ++t) {
    json row = json::array();
    for (int k = 0; k < fit.r; ++k) row.push_back(fit.factors(t, k));
    factors.push_back(row);
  }
  j["factors"] = factors;
  json loadings = json::object();
  json unit_effects = json::object();
  for (int i = 0; i < panel.n_units(); ++i) {
    json row = json::array();
    for (int k = 0; k < fit.r; ++k) row.push_back(fit.loadings(i, k));
    loadings[panel.units[i]] = row;
    unit_effects[panel.units[i]] = fit.unit_effects(i);
  }
  j["loadings"] = loadings;
  j["unit_effects"] = unit_effects;
  json time_effects = json::object();
  for (int t = 0; t < panel.n_periods(); ++t) {
    const double v = fit.time_effects(t);
    if (std::isfinite(v))
      time_effects[std::to_string(panel.periods[t])] = v;
    else
      time_effects[std::to_string(panel.periods[t])] = nullptr;
  }
  j["time_effects"] = time_effects;
  j["exact_fit_units"] = fit.exact_fit_units;
  return j;
}

nlohmann::json to_json(const AttResult& att, double ci_level) {
  json j;
  j["att"] = att.att;
  if (att.se) j["se"] = *att.se;
  if (att.ci95) {
    j["ci_level"] = ci_level;
    j["lo"] = att.ci95->first;
    j["hi"] = att.ci95->second;
  }
  json by_period = json::object();
  for (const auto& [period, value] : att.att_by_period)
    by_period[std::to_string(period)] = value;
  j["att_by_period"] = by_period;
  json gaps = json::array();
  for (const auto& g : att.gaps)
    gaps.push_back({{"unit", g.unit}, {"period", g.period}, {"gap", g.gap}});
  j["gaps"] = gaps;
  if (!att.replicates.empty())
    j["n_replicates"] = att.replicates.size();
  return j;
}

nlohmann::json to_json(const CvResult& cv) {
  json j;
  j["chosen_r"] = cv.chosen_r;
  json table = json::object();
  for (const auto& [r, mspe] : cv.mspe_by_r)
    table[std::to_string(r)] = mspe;
  j["mspe_by_r"] = table;
  return j;
}

nlohmann::json to_json(const PlaceboReport& report, double ci_level) {
  json j;
  j["kind"] = report.kind;
  j["p_value"] = report.p_value;
  j["window"] = {report.window.first, report.window.second};
  j["att"] = to_json(report.att_result, ci_level);
  return j;
}

nlohmann::json to_json(const RegressionFit& fit) {
  json j;
  json coef = json::object(), se = json::object();
  for (const auto& name : fit.names) {
    coef[name] = fit.coefficients.at(name);
    se[name] = fit.standard_errors.at(name);
  }
  j["names"] = fit.names;
  j["coefficients"] = coef;
  j["standard_errors"] = se;
  j["r_squared"] = fit.r_squared;
  j["n"] = fit.n;
  return j;
}

nlohmann::json to_json(const GroundTruth& truth) {
  json j;
  j["tau_path"] = truth.tau_path;
  j["beta"] = truth.beta;
  j["sigma"] = truth.sigma;
  json factors = json::array();
  for (int t = 0; t < truth.factors.rows(); ++t) {
    json row = json::array();
    for (int k = 0; k < truth.factors.cols(); ++k)
      row.push_back(truth.factors(t, k));
    factors.push_back(row);
  }
  j["factors"] = factors;
  json loadings = json::array();
  for (int i = 0; i < truth.loadings.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < truth.loadings.cols(); ++k)
      row.push_back(truth.loadings(i, k));
    loadings.push_back(row);
  }
  j["loadings"] = loadings;
  j["unit_effects"] = std::vector<double>(
      truth.unit_effects.data(),
      truth.unit_effects.data() + truth.unit_effects.size());
  j["time_effects"] = std::vector<double>(
      truth.time_effects.data(),
      truth.time_effects.data() + truth.time_effects.size());
  return j;
}

DgpSpec dgp_spec_from_json(const nlohmann::json& j) {
  require(j.is_object(), "dgp spec: not a JSON object");
  static const std::set<std::string> known = {
      "seed", "n_units", "n_treated", "n_periods", "first_period",
      "onset_period", "r_true", "beta", "tau", "sigma", "confound",
      "biannual_fraction"};
  for (const auto& [key, value] : j.items())
    require(known.count(key) > 0, "dgp spec: unknown field '" + key + "'");
  DgpSpec spec;
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("n_units")) spec.n_units = j["n_units"].get<int>();
  if (j.contains("n_treated")) spec.n_treated = j["n_treated"].get<int>();
  if (j.contains("n_periods")) spec.n_periods = j["n_periods"].get<int>();
  if (j.contains("first_period"))
    spec.first_period = j["first_period"].get<int>();
  if (j.contains("onset_period"))
    spec.onset_period = j["onset_period"].get<int>();
  if (j.contains("r_true")) spec.r_true = j["r_true"].get<int>();
  if (j.contains("beta")) spec.beta = j["beta"].get<std::vector<double>>();
  if (j.contains("tau")) spec.tau = j["tau"].get<std::vector<double>>();
  if (j.contains("sigma")) spec.sigma = j["sigma"].get<double>();
  if (j.contains("confound")) spec.confound = j["confound"].get<double>();
  if (j.contains("biannual_fraction"))
    spec.biannual_fraction = j["biannual_fraction"].get<double>();
  return spec;
}

DgpSpec load_dgp_spec_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(path + ": invalid JSON: " + std::string(e.what()));
  }
  return dgp_spec_from_json(j);
}

std::string att_by_period_csv(const AttResult& att) {
  std::ostringstream out;
  out << "period,att,se,lo,hi\n";
  for (const auto& [period, value] : att.att_by_period) {
    out << period << ',' << fmt_double(value) << ',';
    auto pse = att.period_se.find(period);
    if (pse != att.period_se.end()) out << fmt_double(pse->second);
    out << ',';
    auto ci = att.period_ci.find(period);
    if (ci != att.period_ci.end())
      out << fmt_double(ci->second.first) << ','
          << fmt_double(ci->second.second);
    else
      out << ',';
    out << '\n';
  }
  return out.str();
}

std::string replicates_csv(const AttResult& att) {
  std::ostringstream out;
  out << "replicate,att\n";
  for (size_t b = 0; b < att.replicates.size(); ++b)
    out << b << ',' << fmt_double(att.replicates[b]) << '\n';
  return out.str();
}

std::string cv_table_csv(const McResult& mc) {
  std::ostringstream out;
  out << "lambda,mse\n";
  for (const auto& [lambda, mse] : mc.cv_table)
    out << fmt_double(lambda) << ',' << fmt_double(mse) << '\n';
  return out.str();
}

std::string venue_year_csv(const VenueYearTable& table) {
  std::ostringstream out;
  out << "venue,year,value\n";
  for (const auto& [venue, years] : table)
    for (const auto& [year, value] : years)
      out << venue << ',' << year << ',' << fmt_double(value) << '\n';
  return out.str();
}

std::string tfidf_csv(const TfidfProfile& profile) {
  std::ostringstream out;
  out << "term,score\n";
  for (const auto& [term, score] : profile.scores)
    out << term << ',' << fmt_double(score) << '\n';
  return out.str();
}

std::string observed_vs_counterfactual_csv(
    const PanelDataset& panel, const Eigen::MatrixXd& counterfactual) {
  std::ostringstream out;
  out << "period,mean_observed_treated,mean_counterfactual\n";
  const std::vector<int> treated = panel.treated_indices();
  for (int t = 0; t < panel.n_periods(); ++t) {
    double obs = 0.0, cf = 0.0;
    long n = 0;
    for (int i : treated) {
      if (!panel.observed(i, t)) continue;
      if (!std::isfinite(counterfactual(i, t))) continue;
      obs += panel.outcome(i, t);
      cf += counterfactual(i, t);
      ++n;
    }
    if (n == 0) continue;
    out << panel.periods[t] << ',' << fmt_double(obs / n) << ','
        << fmt_double(cf / n) << '\n';
  }
  return out.str();
}

std::string gap_series_csv(const PanelDataset& panel,
                           const Eigen::MatrixXd& counterfactual,
                           const AttResult& att) {
  std::ostringstream out;
  out << "period,att,lo,hi\n";
  const std::vector<int> treated = panel.treated_indices();
  for (int t = 0; t < panel.n_periods(); ++t) {
    double gap = 0.0;
    long n = 0;
    for (int i : treated) {
      if (!panel.observed(i, t)) continue;
      if (!std::isfinite(counterfactual(i, t))) continue;
      gap += panel.outcome(i, t) - counterfactual(i, t);
      ++n;
    }
    if (n == 0) continue;
    out << panel.periods[t] << ',' << fmt_double(gap / n) << ',';
    auto ci = att.period_ci.find(panel.periods[t]);
    if (ci != att.period_ci.end())
      out << fmt_double(ci->second.first) << ','
          << fmt_double(ci->second.second);
    else
      out << ',';
    out << '\n';
  }
  return out.str();
}

nlohmann::json run_manifest(const std::string& subcommand,
                            const std::vector<std::string>& args,
                            const std::vector<std::string>& input_paths,
                            const std::vector<std::string>& output_names) {
  json j;
  j["toolkit"] = "gapcast";
  j["version"] = kToolkitVersion;
  j["subcommand"] = subcommand;
  j["args"] = args;
  json inputs = json::object();
  for (const auto& path : input_paths)
    inputs[path] = hex64(fnv1a64(read_file(path)));
  j["inputs"] = inputs;
  j["outputs"] = output_names;
  return j;
}

}  // namespace gapcast
