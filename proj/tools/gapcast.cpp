#include "gapcast/artifacts.hpp"
#include "gapcast/biblio.hpp"
#include "gapcast/errors.hpp"
#include "gapcast/ife.hpp"
#include "gapcast/inference.hpp"
#include "gapcast/matrix_completion.hpp"
#include "gapcast/panel.hpp"
#include "gapcast/simgen.hpp"
#include "gapcast/text.hpp"
#include "gapcast/twfe.hpp"
#include "gapcast/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace gapcast;
using nlohmann::json;

/* Collects artifacts in memory; flush() writes them plus manifest.json so
   the manifest can list every output. Nothing is written on error paths. */
struct Run {
  std::string subcommand;
  std::vector<std::string> args;
  std::vector<std::string> inputs;
  std::string out_dir;
  std::vector<std::pair<std::string, std::string>> outputs;

  void add(const std::string& name, const std::string& bytes) {
    outputs.emplace_back(name, bytes);
  }
  void add_json(const std::string& name, const json& j) {
    add(name, j.dump(2) + "\n");
  }
  void flush() {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail("cannot create output directory: " + out_dir);
    std::vector<std::string> names;
    for (const auto& [name, bytes] : outputs) names.push_back(name);
    names.push_back("manifest.json");
    const json manifest = run_manifest(subcommand, args, inputs, names);
    add_json("manifest.json", manifest);
    for (const auto& [name, bytes] : outputs)
      write_file((fs::path(out_dir) / name).string(), bytes);
  }
};

std::string slug(const std::string& name) {
  std::string out;
  for (unsigned char c : name)
    out.push_back(std::isalnum(c) ? static_cast<char>(std::tolower(c)) : '_');
  return out;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  for (const auto& part : split_csv(csv)) {
    const std::string t = trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<std::string> default_covariates(const PanelDataset& panel) {
  std::vector<std::string> out;
  for (const auto& [name, values] : panel.covariates) out.push_back(name);
  return out;
}

std::vector<std::string> load_keyword_file(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> keywords;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty()) keywords.push_back(t);
  }
  require(!keywords.empty(), path + ": empty keyword list");
  return keywords;
}

struct EstimateArgs {
  std::string panel_path, out_dir, method, covariates_csv, compute_path;
  std::string lambda_grid_csv;
  int r = -1, r_max = 5, bootstrap = 0, cv_folds = 5;
  std::uint64_t seed = 0;
  double ci_level = 0.95;
  bool dump_replicates = false, log_compute = false;
};

void run_estimate_gsc(const EstimateArgs& a, Run& run) {
  const PanelDataset panel = load_panel_file(a.panel_path);
  const std::vector<std::string> covs = a.covariates_csv.empty()
                                            ? default_covariates(panel)
                                            : split_list(a.covariates_csv);
  int r = a.r;
  bool ran_cv = false;
  CvResult cv;
  if (r < 0) {
    cv = choose_r(panel, a.r_max, covs);
    r = cv.chosen_r;
    ran_cv = true;
  }
  const FactorModelFit fit = fit_ife(panel, r, covs);
  AttResult att;
  if (a.bootstrap > 0) {
    BootstrapSpec spec;
    spec.replicates = a.bootstrap;
    spec.seed = a.seed;
    spec.ci_level = a.ci_level;
    att = bootstrap_att(panel, r, covs, spec);
  } else {
    att = impute_and_att(fit, panel);
  }
  const Eigen::MatrixXd counterfactual = fitted_values(fit, panel);
  run.add_json("fit.json", to_json(fit, panel));
  run.add_json("att.json", to_json(att, a.ci_level));
  run.add("att_by_period.csv", att_by_period_csv(att));
  run.add("observed_vs_counterfactual.csv",
          observed_vs_counterfactual_csv(panel, counterfactual));
  run.add("gap.csv", gap_series_csv(panel, counterfactual, att));
  if (ran_cv) run.add_json("cv.json", to_json(cv));
  if (a.dump_replicates && !att.replicates.empty())
    run.add("replicates.csv", replicates_csv(att));
}

void run_estimate_mc(const EstimateArgs& a, Run& run) {
  const PanelDataset panel = load_panel_file(a.panel_path);
  std::vector<double> grid;
  if (!a.lambda_grid_csv.empty()) {
    for (const auto& part : split_list(a.lambda_grid_csv))
      grid.push_back(parse_double(part, "--lambda-grid"));
  } else {
    grid = default_lambda_grid(panel);
  }
  const McResult mc = mc_att(panel, grid, a.cv_folds, a.seed);
  run.add_json("att.json", to_json(mc.att, a.ci_level));
  run.add("att_by_period.csv", att_by_period_csv(mc.att));
  run.add("cv_table.csv", cv_table_csv(mc));
  run.add("observed_vs_counterfactual.csv",
          observed_vs_counterfactual_csv(panel, mc.completion.completed));
  run.add("gap.csv",
          gap_series_csv(panel, mc.completion.completed, mc.att));
  json extra;
  extra["chosen_lambda"] = mc.chosen_lambda;
  extra["rank"] = mc.completion.rank;
  extra["converged"] = mc.completion.converged;
  extra["iterations"] = mc.completion.iterations;
  run.add_json("completion.json", extra);
}

void run_estimate_twfe(const EstimateArgs& a, Run& run) {
  const PanelDataset panel = load_panel_file(a.panel_path);
  require(!a.compute_path.empty(),
          "estimate --method twfe needs --compute SERIES.csv");
  const ComputeSeries compute = load_compute_series_file(a.compute_path);
  const std::vector<std::string> covs = a.covariates_csv.empty()
                                            ? default_covariates(panel)
                                            : split_list(a.covariates_csv);
  const RegressionFit fit = within_ols(panel, compute, covs, a.log_compute);
  run.add_json("fit.json", to_json(fit));
  run.add("table.txt", regression_table(fit));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panel counterfactual estimation toolkit"};
  app.require_subcommand(1);

  // validate
  auto* validate = app.add_subcommand(
      "validate", "check a panel and write the canonical form plus a report");
  std::string v_panel, v_out;
  int v_min_pre = 6;
  double v_min_cell = 0.0;
  bool v_drop_units = false;
  validate->add_option("--panel", v_panel, "panel CSV")->required();
  validate->add_option("--out", v_out, "output directory")->required();
  validate->add_option("--min-pre", v_min_pre,
                       "minimum observed pre-onset periods per treated unit");
  validate->add_option("--min-cell-count", v_min_cell,
                       "drop cells whose activity measure falls below this");
  validate->add_flag("--drop-units", v_drop_units,
                     "drop whole units instead of single cells");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "fit a counterfactual model");
  EstimateArgs e;
  estimate->add_option("--method", e.method, "gsc, mc or twfe")->required();
  estimate->add_option("--panel", e.panel_path, "panel CSV")->required();
  estimate->add_option("--out", e.out_dir, "output directory")->required();
  estimate->add_option("--covariates", e.covariates_csv,
                       "comma-separated covariate names (default: all)");
  estimate->add_option("--r", e.r, "fixed factor rank (skips selection)");
  estimate->add_option("--r-max", e.r_max,
                       "largest rank tried by cross-validation");
  estimate->add_option("--bootstrap", e.bootstrap,
                       "bootstrap replicates (0 = point estimate only)");
  estimate->add_option("--seed", e.seed, "random seed");
  estimate->add_option("--ci-level", e.ci_level, "interval mass");
  estimate->add_flag("--dump-replicates", e.dump_replicates,
                     "write replicate draws as CSV");
  estimate->add_option("--lambda-grid", e.lambda_grid_csv,
                       "comma-separated penalties for --method mc");
  estimate->add_option("--cv-folds", e.cv_folds, "folds for --method mc");
  estimate->add_option("--compute", e.compute_path,
                       "period,compute CSV for --method twfe");
  estimate->add_flag("--log-compute", e.log_compute,
                     "use the natural log of the compute series");

  // placebo
  auto* placebo = app.add_subcommand(
      "placebo", "pseudo-treatment diagnostics in space or time");
  std::string p_panel, p_out, p_kind, p_pseudo, p_covs;
  int p_onset = 0, p_shift = 3, p_r = 0, p_boot = 2000, p_min_pre = 6;
  std::uint64_t p_seed = 0;
  double p_ci = 0.95;
  bool p_dump = false;
  placebo->add_option("--panel", p_panel, "panel CSV")->required();
  placebo->add_option("--out", p_out, "output directory")->required();
  placebo->add_option("--kind", p_kind, "space or time")->required();
  placebo->add_option("--pseudo-treated", p_pseudo,
                      "comma-separated control units to pseudo-treat");
  placebo->add_option("--onset", p_onset, "pseudo onset period (space)");
  placebo->add_option("--shift", p_shift, "periods to shift back (time)");
  placebo->add_option("--min-pre", p_min_pre,
                      "pre-onset floor after shifting (time)");
  placebo->add_option("--r", p_r, "factor rank")->required();
  placebo->add_option("--covariates", p_covs, "covariate names");
  placebo->add_option("--bootstrap", p_boot, "bootstrap replicates");
  placebo->add_option("--seed", p_seed, "random seed");
  placebo->add_option("--ci-level", p_ci, "interval mass");
  placebo->add_flag("--dump-replicates", p_dump, "write replicate draws");

  // counts
  auto* counts = app.add_subcommand(
      "counts", "publication counts per venue and year for defined groups");
  std::string c_records, c_groups, c_out;
  bool c_weighted = false;
  counts->add_option("--records", c_records, "records JSONL")->required();
  counts->add_option("--groups", c_groups, "group definition JSON")->required();
  counts->add_option("--out", c_out, "output directory")->required();
  counts->add_flag("--weighted", c_weighted,
                   "fractional author-affiliation weighting");

  // shares
  auto* shares = app.add_subcommand(
      "shares", "group share of papers per venue and year");
  std::string s_records, s_groups, s_out;
  shares->add_option("--records", s_records, "records JSONL")->required();
  shares->add_option("--groups", s_groups, "group definition JSON")->required();
  shares->add_option("--out", s_out, "output directory")->required();

  // filter-dl
  auto* filter = app.add_subcommand(
      "filter-dl", "keep records mentioning deep-learning phrases");
  std::string f_records, f_keywords, f_out;
  filter->add_option("--records", f_records, "records JSONL")->required();
  filter->add_option("--keywords", f_keywords,
                     "phrase list, one per line (default: bundled list)");
  filter->add_option("--out", f_out, "output directory")->required();

  // tfidf
  auto* tfidf = app.add_subcommand(
      "tfidf", "distinctive-term profiles per group");
  std::string t_records, t_groups, t_out;
  tfidf->add_option("--records", t_records, "records JSONL")->required();
  tfidf->add_option("--groups", t_groups, "group definition JSON")->required();
  tfidf->add_option("--out", t_out, "output directory")->required();

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "generate a synthetic panel with known ground truth");
  std::string g_spec, g_out;
  simulate->add_option("--spec", g_spec, "generator spec JSON")->required();
  simulate->add_option("--out", g_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  Run run;
  run.args.assign(argv + 1, argv + argc);

  try {
    if (validate->parsed()) {
      run.subcommand = "validate";
      run.inputs = {v_panel};
      run.out_dir = v_out;
      const PanelDataset raw = load_panel_file(v_panel);
      auto [panel, report] = validate_and_filter(
          raw, v_min_pre, v_min_cell,
          v_drop_units ? CellFilterMode::kDropUnit : CellFilterMode::kDropCell);
      run.add_json("report.json", to_json(report));
      std::ostringstream body;
      write_panel(body, panel);
      run.add("panel.csv", body.str());
    } else if (estimate->parsed()) {
      run.subcommand = "estimate";
      run.inputs = {e.panel_path};
      run.out_dir = e.out_dir;
      if (e.method == "gsc") {
        run_estimate_gsc(e, run);
      } else if (e.method == "mc") {
        run_estimate_mc(e, run);
      } else if (e.method == "twfe") {
        if (!e.compute_path.empty()) run.inputs.push_back(e.compute_path);
        run_estimate_twfe(e, run);
      } else {
        fail("unknown --method '" + e.method + "' (expected gsc, mc or twfe)");
      }
    } else if (placebo->parsed()) {
      run.subcommand = "placebo";
      run.inputs = {p_panel};
      run.out_dir = p_out;
      const PanelDataset panel = load_panel_file(p_panel);
      const std::vector<std::string> covs =
          p_covs.empty() ? default_covariates(panel) : split_list(p_covs);
      BootstrapSpec spec;
      spec.replicates = p_boot;
      spec.seed = p_seed;
      spec.ci_level = p_ci;
      PlaceboReport report;
      if (p_kind == "space") {
        require(!p_pseudo.empty(),
                "placebo --kind space needs --pseudo-treated");
        require(placebo->count("--onset") > 0,
                "placebo --kind space needs --onset");
        report = placebo_in_space(panel, split_list(p_pseudo), p_onset, p_r,
                                  covs, spec);
      } else if (p_kind == "time") {
        report = placebo_in_time(panel, p_shift, p_r, covs, spec, p_min_pre);
      } else {
        fail("unknown --kind '" + p_kind + "' (expected space or time)");
      }
      run.add_json("placebo.json", to_json(report, p_ci));
      if (p_dump) run.add("replicates.csv", replicates_csv(report.att_result));
    } else if (counts->parsed()) {
      run.subcommand = "counts";
      run.inputs = {c_records, c_groups};
      run.out_dir = c_out;
      const auto records = load_records_file(c_records);
      const auto groups = load_groups_file(c_groups);
      if (c_weighted) {
        const auto tables = count_weighted(records, groups);
        for (const auto& [name, table] : tables)
          run.add("counts_" + slug(name) + ".csv", venue_year_csv(table));
      } else {
        for (const auto& g : groups)
          run.add("counts_" + slug(g.name) + ".csv",
                  venue_year_csv(count_simple(records, g)));
      }
    } else if (shares->parsed()) {
      run.subcommand = "shares";
      run.inputs = {s_records, s_groups};
      run.out_dir = s_out;
      const auto records = load_records_file(s_records);
      const auto groups = load_groups_file(s_groups);
      for (const auto& g : groups)
        run.add("shares_" + slug(g.name) + ".csv",
                venue_year_csv(share_series(records, g)));
    } else if (filter->parsed()) {
      run.subcommand = "filter-dl";
      run.inputs = {f_records};
      run.out_dir = f_out;
      const auto records = load_records_file(f_records);
      std::vector<std::string> keywords;
      if (f_keywords.empty()) {
        keywords = deep_learning_keywords();
      } else {
        run.inputs.push_back(f_keywords);
        keywords = load_keyword_file(f_keywords);
      }
      const auto kept = filter_deep_learning(records, keywords);
      std::ostringstream body;
      write_records(body, kept);
      run.add("filtered.jsonl", body.str());
    } else if (tfidf->parsed()) {
      run.subcommand = "tfidf";
      run.inputs = {t_records, t_groups};
      run.out_dir = t_out;
      const auto records = load_records_file(t_records);
      const auto groups = load_groups_file(t_groups);
      for (const auto& prof : tfidf_by_group(records, groups))
        run.add("tfidf_" + slug(prof.group) + ".csv", tfidf_csv(prof));
    } else if (simulate->parsed()) {
      run.subcommand = "simulate";
      run.inputs = {g_spec};
      run.out_dir = g_out;
      const DgpSpec spec = load_dgp_spec_file(g_spec);
      auto [panel, truth] = gen_panel(spec);
      std::ostringstream body;
      write_panel(body, panel);
      run.add("panel.csv", body.str());
      run.add_json("ground_truth.json", to_json(truth));
    }
    run.flush();
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
