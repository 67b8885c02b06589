#pragma once

#include "gapcast/panel.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gapcast {

/* Period-indexed compute-cost series (petaflop/s-days of the largest
   training run known in that period). Strictly positive. */
struct ComputeSeries {
  std::map<int, double> values;
};

ComputeSeries load_compute_series(std::istream& in);
ComputeSeries load_compute_series_file(const std::string& path);

struct RegressionFit {
  std::vector<std::string> names;  // design order
  std::map<std::string, double> coefficients;
  std::map<std::string, double> standard_errors;
  double r_squared = 0.0;
  long n = 0;  // observations entering the regression
};

/* Unit-fixed-effect OLS of the outcome on [covariates..., shock, compute,
   shock x compute], where the shock regressor is the unit's treatment
   indicator. Within-unit demeaning removes the unit effects; standard
   errors are classical. Design names: covariates keep their panel names,
   the rest are "shock", "compute" and "shock_x_compute". */
RegressionFit within_ols(const PanelDataset& panel,
                         const ComputeSeries& compute,
                         const std::vector<std::string>& covariate_names,
                         bool log_compute = false);

/* Effect of a compute increase of delta_compute on the outcome of a
   shock-exposed unit: interaction coefficient times delta. */
double marginal_effect(const RegressionFit& fit, double delta_compute);

/* Plain-text coefficient table: estimate and standard error per regressor,
   observation count and R^2. */
std::string regression_table(const RegressionFit& fit);

}  // namespace gapcast
