#pragma once

#include "gapcast/panel.hpp"
#include "gapcast/parallel.hpp"

#include <map>
#include <optional>

namespace gapcast {

/* Latent-factor panel fit. The outcome model is
     outcome(i, t) = x(i, t)'beta + loadings(i)'factors(t)
                     + unit_effects(i) + time_effects(t) + noise,
   estimated on the never-treated units; treated-unit loadings and levels
   come from a pre-onset regression against the control-estimated factors.
   Normalization: factors'factors / T == r-identity, and the control block
   of loadings has a diagonal cross-product with non-increasing diagonal.
   time_effects absorbs the grand level; unit_effects sums to zero over the
   control units. */
struct FactorModelFit {
  std::vector<std::string> covariate_names;
  Eigen::VectorXd beta;
  Eigen::MatrixXd factors;      // n_periods x r
  Eigen::MatrixXd loadings;     // n_units x r, rows in panel unit order
  Eigen::VectorXd unit_effects;  // n_units
  Eigen::VectorXd time_effects;  // n_periods; NaN where no control cell exists
  int r = 0;
  double sigma2 = 0.0;  // control residual variance, dof-adjusted
  int iterations = 0;
  bool converged = false;
  /* Treated units whose loading regression had zero residual degrees of
     freedom (exactly r + 1 usable pre-onset cells): the fit is exact and
     carries no information about fit quality. */
  std::vector<std::string> exact_fit_units;
};

struct GapCell {
  std::string unit;
  int period;
  double gap;  // observed minus imputed counterfactual
};

struct AttResult {
  std::vector<GapCell> gaps;  // one per observed treated post-onset cell
  std::vector<std::pair<int, double>> att_by_period;  // period label -> mean gap
  double att = 0.0;           // cell-weighted mean of gaps
  std::optional<double> se;
  std::optional<std::pair<double, double>> ci95;
  std::vector<double> replicates;  // bootstrap draws when produced by one
  /* Per-period dispersion from bootstrap draws; empty otherwise. */
  std::map<int, double> period_se;
  std::map<int, std::pair<double, double>> period_ci;
};

struct CvResult {
  std::map<int, double> mspe_by_r;
  int chosen_r = 0;  // argmin; ties resolved toward the smaller rank
};

struct FitOptions {
  double tol = 1e-8;    // relative change of the control-block objective
  int max_iter = 2000;  // outer alternation cap
  /* Optional warm start: factor structure initialized from another fit on
     a panel with the same units and periods. Used by the bootstrap. */
  const FactorModelFit* warm_start = nullptr;
};

FactorModelFit fit_ife(const PanelDataset& panel, int r,
                       const std::vector<std::string>& covariate_names,
                       const FitOptions& opts = {});

/* Model prediction x'beta + loading'factor + unit + time effect for every
   cell, treated cells included (there it is the counterfactual). NaN in
   columns whose time effect is unidentified. */
Eigen::MatrixXd fitted_values(const FactorModelFit& fit,
                              const PanelDataset& panel);

/* Treatment-effect summary over observed treated post-onset cells. */
AttResult impute_and_att(const FactorModelFit& fit, const PanelDataset& panel);

/* Same aggregation against an explicit counterfactual matrix (any imputer
   can produce one). NaN at a needed cell is an error. */
AttResult att_from_counterfactual(const PanelDataset& panel,
                                  const Eigen::MatrixXd& counterfactual);

/* Rank selection by leave-one-out prediction of observed treated pre-onset
   cells: each is held out of the loading regression in turn and predicted
   from the remaining pre-onset cells. Candidate ranks 0..r_max, fitted
   independently (parallel across ranks under kParallel). */
CvResult choose_r(const PanelDataset& panel, int r_max,
                  const std::vector<std::string>& covariate_names,
                  ExecMode mode = ExecMode::kParallel);

}  // namespace gapcast
