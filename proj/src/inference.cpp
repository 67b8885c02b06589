#include "gapcast/inference.hpp"

#include "gapcast/errors.hpp"
#include "gapcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace gapcast {

namespace {

/* Type-7 interpolated quantile of a sorted sample. */
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct ReplicateOutcome {
  double att = 0.0;
  std::map<int, double> att_by_period;
};

}  // namespace

AttResult bootstrap_att(const PanelDataset& panel, int r,
                        const std::vector<std::string>& covariate_names,
                        const BootstrapSpec& spec, ExecMode mode) {
  require(spec.replicates >= 1, "bootstrap: replicates must be positive");
  require(spec.ci_level > 0.0 && spec.ci_level < 1.0,
          "bootstrap: ci_level must lie strictly between 0 and 1");

  const FactorModelFit base_fit = fit_ife(panel, r, covariate_names);
  AttResult base = impute_and_att(base_fit, panel);
  const Eigen::MatrixXd fitted = fitted_values(base_fit, panel);

  const int n = panel.n_units();
  const int T = panel.n_periods();
  const std::vector<int> controls = panel.control_indices();
  const int nc = static_cast<int>(controls.size());

  /* Control residual blocks: a whole unit's residual series is the
     resampling atom, so cross-period dependence within a unit survives. */
  Eigen::MatrixXd resid = Eigen::MatrixXd::Zero(nc, T);
  for (int ci = 0; ci < nc; ++ci) {
    const int i = controls[ci];
    for (int t = 0; t < T; ++t)
      if (panel.observed(i, t))
        resid(ci, t) = panel.outcome(i, t) - fitted(i, t);
  }

  /* Estimated per-cell gaps, added back so replicate effects center near
     the base estimate. Zero outside treated post-onset cells. */
  Eigen::MatrixXd gap_matrix = Eigen::MatrixXd::Zero(n, T);
  for (int i : panel.treated_indices()) {
    const int onset = *panel.onset_column(i);
    for (int t = onset; t < T; ++t)
      if (panel.observed(i, t))
        gap_matrix(i, t) = panel.outcome(i, t) - fitted(i, t);
  }

  std::vector<ReplicateOutcome> outcomes(spec.replicates);
  FitOptions warm_opts;
  warm_opts.warm_start = &base_fit;

  parallel_for(spec.replicates, mode, [&](std::int64_t b) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 10) {
        std::ostringstream msg;
        msg << "bootstrap: replicate " << b
            << " failed to produce a convergent fit in 10 attempts";
        fail(msg.str());
      }
      Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(b), attempt,
                          0xb001));
      PanelDataset rep = panel;
      for (int i = 0; i < n; ++i) {
        const int donor = static_cast<int>(rng.uniform_int(nc));
        const int donor_unit = controls[donor];
        for (int t = 0; t < T; ++t) {
          if (!panel.observed(i, t)) continue;
          if (!panel.observed(donor_unit, t)) {
            rep.mask(i, t) = 0;  // donor block has no residual there
            continue;
          }
          rep.outcome(i, t) = fitted(i, t) + gap_matrix(i, t) + resid(donor, t);
        }
      }
      try {
        const FactorModelFit fit = fit_ife(rep, r, covariate_names, warm_opts);
        if (!fit.converged) continue;
        const AttResult att = impute_and_att(fit, rep);
        outcomes[b].att = att.att;
        for (const auto& [period, value] : att.att_by_period)
          outcomes[b].att_by_period[period] = value;
        return;
      } catch (const Error&) {
        continue;  // degenerate draw; redraw from the next substream
      }
    }
  });

  base.replicates.resize(spec.replicates);
  for (int b = 0; b < spec.replicates; ++b)
    base.replicates[b] = outcomes[b].att;

  if (spec.replicates >= 100) {
    double mean = 0.0;
    for (double v : base.replicates) mean += v;
    mean /= static_cast<double>(spec.replicates);
    double ss = 0.0;
    for (double v : base.replicates) ss += (v - mean) * (v - mean);
    base.se = std::sqrt(ss / static_cast<double>(spec.replicates - 1));

    std::vector<double> sorted = base.replicates;
    std::sort(sorted.begin(), sorted.end());
    const double tail = (1.0 - spec.ci_level) / 2.0;
    base.ci95 = {quantile_sorted(sorted, tail),
                 quantile_sorted(sorted, 1.0 - tail)};

    for (const auto& [period, value] : base.att_by_period) {
      std::vector<double> draws;
      draws.reserve(spec.replicates);
      for (const auto& out : outcomes) {
        auto it = out.att_by_period.find(period);
        if (it != out.att_by_period.end()) draws.push_back(it->second);
      }
      if (draws.size() < 100) continue;
      double pm = 0.0;
      for (double v : draws) pm += v;
      pm /= static_cast<double>(draws.size());
      double pss = 0.0;
      for (double v : draws) pss += (v - pm) * (v - pm);
      base.period_se[period] =
          std::sqrt(pss / static_cast<double>(draws.size() - 1));
      std::sort(draws.begin(), draws.end());
      base.period_ci[period] = {quantile_sorted(draws, tail),
                                quantile_sorted(draws, 1.0 - tail)};
    }
  }
  return base;
}

namespace {

double placebo_p_value(const AttResult& att) {
  require(!att.replicates.empty(), "placebo: no bootstrap draws");
  long extreme = 0;
  for (double v : att.replicates)
    if (std::abs(v - att.att) >= std::abs(att.att)) ++extreme;
  return static_cast<double>(extreme) /
         static_cast<double>(att.replicates.size());
}

}  // namespace

PlaceboReport placebo_in_space(const PanelDataset& panel,
                               const std::vector<std::string>& pseudo_treated,
                               int onset, int r,
                               const std::vector<std::string>& covariate_names,
                               const BootstrapSpec& spec, ExecMode mode) {
  require(!pseudo_treated.empty(),
          "placebo in space: empty pseudo-treated set");
  std::set<std::string> pseudo(pseudo_treated.begin(), pseudo_treated.end());
  for (const auto& unit : pseudo_treated) {
    auto idx = panel.unit_index(unit);
    if (!idx) fail("placebo in space: unknown unit '" + unit + "'");
    if (panel.is_treated(*idx))
      fail("placebo in space: unit '" + unit + "' is genuinely treated");
  }

  // Genuinely treated units leave the panel entirely.
  PanelDataset reduced;
  {
    std::vector<int> keep;
    for (int i = 0; i < panel.n_units(); ++i)
      if (!panel.is_treated(i)) keep.push_back(i);
    std::vector<int> all_periods(panel.n_periods());
    for (int t = 0; t < panel.n_periods(); ++t) all_periods[t] = t;
    reduced.units.reserve(keep.size());
    reduced.periods = panel.periods;
    reduced.outcome.resize(static_cast<int>(keep.size()), panel.n_periods());
    reduced.mask.resize(static_cast<int>(keep.size()), panel.n_periods());
    for (const auto& [name, values] : panel.covariates)
      reduced.covariates.emplace_back(
          name, Eigen::MatrixXd::Zero(static_cast<int>(keep.size()),
                                      panel.n_periods()));
    for (size_t a = 0; a < keep.size(); ++a) {
      reduced.units.push_back(panel.units[keep[a]]);
      reduced.outcome.row(static_cast<int>(a)) = panel.outcome.row(keep[a]);
      reduced.mask.row(static_cast<int>(a)) = panel.mask.row(keep[a]);
      for (size_t k = 0; k < panel.covariates.size(); ++k)
        reduced.covariates[k].second.row(static_cast<int>(a)) =
            panel.covariates[k].second.row(keep[a]);
    }
  }
  for (const auto& unit : pseudo_treated) reduced.treatment_onset[unit] = onset;
  require(!reduced.control_indices().empty(),
          "placebo in space: no control units remain");
  {
    auto col = std::lower_bound(reduced.periods.begin(), reduced.periods.end(),
                                onset);
    require(col != reduced.periods.end(),
            "placebo in space: onset lies past the last panel period");
  }

  PlaceboReport report;
  report.kind = "in-space";
  report.att_result = bootstrap_att(reduced, r, covariate_names, spec, mode);
  report.p_value = placebo_p_value(report.att_result);
  report.window = {onset, reduced.periods.back()};
  return report;
}

PlaceboReport placebo_in_time(const PanelDataset& panel, int shift, int r,
                              const std::vector<std::string>& covariate_names,
                              const BootstrapSpec& spec, int min_pre,
                              ExecMode mode) {
  require(shift == 2 || shift == 3 || shift == 4,
          "placebo in time: shift must be 2, 3 or 4 periods");
  const std::vector<int> treated = panel.treated_indices();
  require(!treated.empty(), "placebo in time: panel has no treated units");

  /* Truncate each treated unit at its genuine onset so the shifted window
     contains only never-treated outcomes, then move the onset label. */
  PanelDataset shifted = panel;
  int window_lo = 0, window_hi = 0;
  bool first = true;
  for (int i : treated) {
    const int true_onset = panel.treatment_onset.at(panel.units[i]);
    const int onset_col = *panel.onset_column(i);
    for (int t = onset_col; t < panel.n_periods(); ++t) shifted.mask(i, t) = 0;
    const int pseudo_onset = true_onset - shift;
    shifted.treatment_onset[panel.units[i]] = pseudo_onset;

    auto pseudo_col = std::lower_bound(panel.periods.begin(),
                                       panel.periods.end(), pseudo_onset) -
                      panel.periods.begin();
    int pre = 0, post = 0;
    for (long t = 0; t < pseudo_col; ++t)
      if (shifted.mask(i, t)) ++pre;
    for (long t = pseudo_col; t < panel.n_periods(); ++t)
      if (shifted.mask(i, t)) ++post;
    if (pre < min_pre) {
      std::ostringstream msg;
      msg << "placebo in time: unit " << panel.units[i] << " keeps only "
          << pre << " pre-onset observations after shifting by " << shift
          << " (need " << min_pre << ")";
      fail(msg.str());
    }
    if (post == 0) {
      std::ostringstream msg;
      msg << "placebo in time: unit " << panel.units[i]
          << " has no observations inside the shifted window";
      fail(msg.str());
    }
    const int true_col = onset_col < panel.n_periods()
                             ? panel.periods[onset_col]
                             : panel.periods.back() + 1;
    if (first) {
      window_lo = pseudo_onset;
      window_hi = true_col - 1;
      first = false;
    } else {
      window_lo = std::min(window_lo, pseudo_onset);
      window_hi = std::max(window_hi, true_col - 1);
    }
  }

  PlaceboReport report;
  report.kind = "in-time";
  report.att_result = bootstrap_att(shifted, r, covariate_names, spec, mode);
  report.p_value = placebo_p_value(report.att_result);
  report.window = {window_lo, window_hi};
  return report;
}

}  // namespace gapcast
