#include "gapcast/twfe.hpp"

#include "gapcast/errors.hpp"
#include "gapcast/util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace gapcast {

ComputeSeries load_compute_series(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail("compute CSV: no rows");
  const auto header = split_csv(line);
  require(header.size() == 2 && trim(header[0]) == "period" &&
              trim(header[1]) == "compute",
          "compute CSV: header must be 'period,compute'");
  ComputeSeries series;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = "compute CSV row " + std::to_string(line_no);
    if (fields.size() != 2) fail(where + ": expected 2 fields");
    const int period =
        static_cast<int>(parse_long(fields[0], where + ", column 'period'"));
    const double value = parse_double(fields[1], where + ", column 'compute'");
    if (value <= 0.0)
      fail(where + ": compute must be positive at period " +
           std::to_string(period));
    if (!series.values.emplace(period, value).second)
      fail("compute CSV: duplicate period " + std::to_string(period));
  }
  require(!series.values.empty(), "compute CSV: no rows");
  return series;
}

ComputeSeries load_compute_series_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file: " + path);
  return load_compute_series(in);
}

RegressionFit within_ols(const PanelDataset& panel,
                         const ComputeSeries& compute,
                         const std::vector<std::string>& covariate_names,
                         bool log_compute) {
  std::vector<const Eigen::MatrixXd*> xs;
  for (const auto& name : covariate_names) {
    const Eigen::MatrixXd* x = panel.covariate(name);
    if (!x) fail("within_ols: unknown covariate '" + name + "'");
    xs.push_back(x);
  }
  const int T = panel.n_periods();
  Eigen::VectorXd compute_col(T);
  for (int t = 0; t < T; ++t) {
    auto it = compute.values.find(panel.periods[t]);
    if (it == compute.values.end())
      fail("within_ols: compute series lacks period " +
           std::to_string(panel.periods[t]));
    compute_col(t) = log_compute ? std::log(it->second) : it->second;
  }
  const TreatmentMatrix tm = treatment_matrix(panel);

  const int p = static_cast<int>(xs.size());
  const int k = p + 3;
  RegressionFit fit;
  for (const auto& name : covariate_names) fit.names.push_back(name);
  fit.names.push_back("shock");
  fit.names.push_back("compute");
  fit.names.push_back("shock_x_compute");

  const long n_cells = panel.n_observed_cells();
  Eigen::MatrixXd design(n_cells, k);
  Eigen::VectorXd y(n_cells);
  std::vector<int> cell_unit(n_cells);
  long row = 0;
  for (int i = 0; i < panel.n_units(); ++i) {
    long unit_cells = 0;
    for (int t = 0; t < T; ++t) {
      if (!panel.observed(i, t)) continue;
      ++unit_cells;
      for (int c = 0; c < p; ++c) design(row, c) = (*xs[c])(i, t);
      const double shock = tm.delta(i, t) ? 1.0 : 0.0;
      design(row, p) = shock;
      design(row, p + 1) = compute_col(t);
      design(row, p + 2) = shock * compute_col(t);
      y(row) = panel.outcome(i, t);
      cell_unit[row] = i;
      ++row;
    }
    if (unit_cells > 0 && unit_cells < 2)
      fail("within_ols: unit " + panel.units[i] +
           " has a single observed cell; unit effects need at least 2");
  }
  require(row > 0, "within_ols: panel has no observed cells");

  // Within-unit demeaning sweeps out the unit effects exactly.
  Eigen::MatrixXd unit_x_sum = Eigen::MatrixXd::Zero(panel.n_units(), k);
  Eigen::VectorXd unit_y_sum = Eigen::VectorXd::Zero(panel.n_units());
  Eigen::VectorXd unit_count = Eigen::VectorXd::Zero(panel.n_units());
  for (long c = 0; c < row; ++c) {
    unit_x_sum.row(cell_unit[c]) += design.row(c);
    unit_y_sum(cell_unit[c]) += y(c);
    unit_count(cell_unit[c]) += 1.0;
  }
  Eigen::MatrixXd xd = design;
  Eigen::VectorXd yd = y;
  for (long c = 0; c < row; ++c) {
    const int i = cell_unit[c];
    xd.row(c) -= unit_x_sum.row(i) / unit_count(i);
    yd(c) -= unit_y_sum(i) / unit_count(i);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xd);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::ostringstream msg;
    msg << "within_ols: collinear regressors after demeaning:";
    const auto perm = qr.colsPermutation().indices();
    for (int c = qr.rank(); c < k; ++c) msg << ' ' << fit.names[perm(c)];
    fail(msg.str());
  }
  const Eigen::VectorXd beta = qr.solve(yd);
  const Eigen::VectorXd resid = yd - xd * beta;
  const double ssr = resid.squaredNorm();

  const long n_units_used = (unit_count.array() > 0.0).count();
  const long dof = row - k - n_units_used;
  require(dof >= 1, "within_ols: not enough observations for the design");
  const double sigma2 = ssr / static_cast<double>(dof);
  const Eigen::MatrixXd gram_inv =
      (xd.transpose() * xd).ldlt().solve(Eigen::MatrixXd::Identity(k, k));

  const double y_mean = y.head(row).mean();
  double tss = 0.0;
  for (long c = 0; c < row; ++c) tss += (y(c) - y_mean) * (y(c) - y_mean);

  for (int c = 0; c < k; ++c) {
    fit.coefficients[fit.names[c]] = beta(c);
    fit.standard_errors[fit.names[c]] = std::sqrt(sigma2 * gram_inv(c, c));
  }
  fit.r_squared = tss > 0.0 ? 1.0 - ssr / tss : 1.0;
  fit.n = row;
  return fit;
}

double marginal_effect(const RegressionFit& fit, double delta_compute) {
  auto it = fit.coefficients.find("shock_x_compute");
  if (it == fit.coefficients.end())
    fail("marginal_effect: fit has no interaction coefficient");
  return it->second * delta_compute;
}

std::string regression_table(const RegressionFit& fit) {
  size_t width = 12;
  for (const auto& name : fit.names) width = std::max(width, name.size());
  std::ostringstream out;
  auto pad = [&](const std::string& s) {
    out << s << std::string(width + 2 - s.size(), ' ');
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  pad("regressor");
  out << "estimate      std. error\n";
  out << std::string(width + 26, '-') << '\n';
  for (const auto& name : fit.names) {
    pad(name);
    std::string est = num(fit.coefficients.at(name));
    out << est << std::string(est.size() < 14 ? 14 - est.size() : 1, ' ')
        << num(fit.standard_errors.at(name)) << '\n';
  }
  pad("observations");
  out << fit.n << '\n';
  pad("R-squared");
  out << num(fit.r_squared) << '\n';
  return out.str();
}

}  // namespace gapcast
