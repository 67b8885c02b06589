#include "gapcast/ife.hpp"

#include "gapcast/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gapcast {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/* Fixed design information for the control-block least squares step.
   Parameters are ordered [beta (p) | unit contrasts (nc-1) | eta (T)].
   Unit effects use a sum-to-zero contrast over the control units so the
   time effects absorb the grand level. Cross-products are assembled once;
   each alternation step then costs one pass over the observed cells plus
   backsolves against cached factorizations. */
struct ControlDesign {
  std::vector<int> controls;  // panel unit indices
  int nc = 0, T = 0, p = 0;
  int ka = 0;  // contrast block size: nc > 1 ? nc - 1 : 0
  int kd = 0;  // ka + T
  std::vector<std::pair<int, int>> cells;  // (control row, period col)
  std::vector<const Eigen::MatrixXd*> xs;  // covariate matrices, panel rows
  Eigen::MatrixXd y;                       // nc x T control outcomes
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> dd;  // additive Gram
  Eigen::MatrixXd proj;  // dd^+ (D'X), kd x p
  Eigen::LDLT<Eigen::MatrixXd> within;  // Gram of covariates net of effects
  bool within_ok = true;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> xx;  // raw fallback
  std::vector<char> period_identified;  // >= 1 observed control cell
  int n_identified_periods = 0;
};

double cov_value(const ControlDesign& d, int k, int panel_unit, int t) {
  return (*d.xs[k])(panel_unit, t);
}

ControlDesign build_design(const PanelDataset& panel,
                           const std::vector<std::string>& covariate_names) {
  ControlDesign d;
  d.controls = panel.control_indices();
  require(!d.controls.empty(),
          "fit: estimation requires at least one never-treated unit");
  d.nc = static_cast<int>(d.controls.size());
  d.T = panel.n_periods();
  d.p = static_cast<int>(covariate_names.size());
  d.ka = d.nc > 1 ? d.nc - 1 : 0;
  d.kd = d.ka + d.T;

  for (size_t a = 0; a < covariate_names.size(); ++a) {
    for (size_t b = a + 1; b < covariate_names.size(); ++b)
      require(covariate_names[a] != covariate_names[b],
              "fit: covariate '" + covariate_names[a] + "' listed twice");
    const Eigen::MatrixXd* x = panel.covariate(covariate_names[a]);
    if (!x) fail("fit: unknown covariate '" + covariate_names[a] + "'");
    d.xs.push_back(x);
  }

  d.y = Eigen::MatrixXd::Zero(d.nc, d.T);
  d.period_identified.assign(d.T, 0);
  for (int ci = 0; ci < d.nc; ++ci) {
    const int i = d.controls[ci];
    for (int t = 0; t < d.T; ++t) {
      if (!panel.observed(i, t)) continue;
      d.cells.emplace_back(ci, t);
      d.y(ci, t) = panel.outcome(i, t);
      d.period_identified[t] = 1;
    }
  }
  require(!d.cells.empty(), "fit: control units have no observed cells");
  for (char f : d.period_identified) d.n_identified_periods += f;

  // Additive-block Gram. The last control's contrast row is -1 everywhere.
  Eigen::MatrixXd mdd = Eigen::MatrixXd::Zero(d.kd, d.kd);
  Eigen::MatrixXd adx = Eigen::MatrixXd::Zero(d.kd, std::max(d.p, 1));
  Eigen::MatrixXd mxx = Eigen::MatrixXd::Zero(d.p, d.p);
  Eigen::VectorXd xrow(d.p);
  for (const auto& [ci, t] : d.cells) {
    const int i = d.controls[ci];
    for (int k = 0; k < d.p; ++k) xrow(k) = cov_value(d, k, i, t);
    const int et = d.ka + t;
    mdd(et, et) += 1.0;
    if (d.ka > 0) {
      if (ci < d.nc - 1) {
        mdd(ci, ci) += 1.0;
        mdd(ci, et) += 1.0;
        mdd(et, ci) += 1.0;
      } else {
        for (int a = 0; a < d.ka; ++a) {
          for (int b = 0; b < d.ka; ++b) mdd(a, b) += 1.0;
          mdd(a, et) -= 1.0;
          mdd(et, a) -= 1.0;
        }
      }
    }
    if (d.p > 0) {
      if (d.ka > 0) {
        if (ci < d.nc - 1) adx.row(ci) += xrow.transpose();
        else adx.topRows(d.ka).rowwise() -= xrow.transpose();
      }
      adx.row(et) += xrow.transpose();
      mxx += xrow * xrow.transpose();
    }
  }
  d.dd.compute(mdd);
  if (d.p > 0) {
    d.proj = d.dd.solve(adx.leftCols(d.p));
    Eigen::MatrixXd s = mxx - adx.leftCols(d.p).transpose() * d.proj;
    // Covariates that the additive effects absorb completely leave a
    // rank-deficient within Gram; fall back to a raw regression then.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    d.within_ok = top > 0.0 && es.eigenvalues().minCoeff() > 1e-10 * top;
    if (d.within_ok) d.within.compute(s);
    else d.xx.compute(mxx);
  }
  return d;
}

struct AdditiveSolution {
  Eigen::VectorXd beta;   // p
  Eigen::VectorXd alpha;  // nc
  Eigen::VectorXd eta;    // T
};

/* Joint least squares of the control residual `w` (outcome net of the
   factor term) on covariates plus additive effects, via block elimination.
   `w` is nc x T, read at observed cells only. */
AdditiveSolution solve_additive(const ControlDesign& d,
                                const Eigen::MatrixXd& w) {
  Eigen::VectorXd bx = Eigen::VectorXd::Zero(std::max(d.p, 1));
  Eigen::VectorXd bd = Eigen::VectorXd::Zero(d.kd);
  Eigen::VectorXd xrow(d.p);
  for (const auto& [ci, t] : d.cells) {
    const int i = d.controls[ci];
    const double v = w(ci, t);
    const int et = d.ka + t;
    bd(et) += v;
    if (d.ka > 0) {
      if (ci < d.nc - 1) bd(ci) += v;
      else bd.head(d.ka).array() -= v;
    }
    for (int k = 0; k < d.p; ++k) bx(k) += cov_value(d, k, i, t) * v;
  }

  AdditiveSolution out;
  if (d.p > 0) {
    if (d.within_ok)
      out.beta = d.within.solve(bx.head(d.p) - d.proj.transpose() * bd);
    else
      out.beta = d.xx.solve(bx.head(d.p));
  } else {
    out.beta.resize(0);
  }

  Eigen::VectorXd rhs = bd;
  if (d.p > 0) {
    // Subtract D'X beta without materializing D'X again.
    Eigen::VectorXd xb = Eigen::VectorXd::Zero(d.kd);
    for (const auto& [ci, t] : d.cells) {
      const int i = d.controls[ci];
      double fit = 0.0;
      for (int k = 0; k < d.p; ++k) fit += cov_value(d, k, i, t) * out.beta(k);
      const int et = d.ka + t;
      xb(et) += fit;
      if (d.ka > 0) {
        if (ci < d.nc - 1) xb(ci) += fit;
        else xb.head(d.ka).array() -= fit;
      }
    }
    rhs -= xb;
  }
  const Eigen::VectorXd gamma = d.dd.solve(rhs);

  out.alpha = Eigen::VectorXd::Zero(d.nc);
  if (d.ka > 0) {
    double sum = 0.0;
    for (int j = 0; j < d.ka; ++j) {
      out.alpha(j) = gamma(j);
      sum += gamma(j);
    }
    out.alpha(d.nc - 1) = -sum;
  }
  out.eta = gamma.tail(d.T);
  return out;
}

/* Rank-r factor structure of the control residual block by truncated SVD,
   with unobserved cells imputed from the current structure (one fill/SVD
   sweep per call; the outer alternation drives it to a fixed point).
   Returns loadings scaled so factors'factors / T == identity. */
struct FactorSolution {
  Eigen::MatrixXd lambda;  // nc x r
  Eigen::MatrixXd f;       // T x r
};

FactorSolution solve_factors(const ControlDesign& d, const Eigen::MatrixXd& w2,
                             const Eigen::MatrixXd& g_current, int r) {
  Eigen::MatrixXd filled = g_current;
  for (const auto& [ci, t] : d.cells) filled(ci, t) = w2(ci, t);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(filled,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sqrt_t = std::sqrt(static_cast<double>(d.T));
  FactorSolution out;
  out.lambda = svd.matrixU().leftCols(r) *
               svd.singularValues().head(r).asDiagonal() / sqrt_t;
  out.f = sqrt_t * svd.matrixV().leftCols(r);
  return out;
}

double objective(const ControlDesign& d, const Eigen::MatrixXd& w2,
                 const Eigen::MatrixXd& g) {
  double ssr = 0.0;
  for (const auto& [ci, t] : d.cells) {
    const double e = w2(ci, t) - g(ci, t);
    ssr += e * e;
  }
  return ssr;
}

}  // namespace

FactorModelFit fit_ife(const PanelDataset& panel, int r,
                       const std::vector<std::string>& covariate_names,
                       const FitOptions& opts) {
  require(r >= 0, "fit: rank must be non-negative");
  require(opts.max_iter >= 1, "fit: max_iter must be positive");
  ControlDesign d = build_design(panel, covariate_names);
  {
    const int bound = std::min(d.nc, d.T) - 1;
    if (r > bound) {
      std::ostringstream msg;
      msg << "fit: rank r=" << r << " too large; with " << d.nc
          << " control units and " << d.T
          << " periods the factor rank can be at most " << bound;
      fail(msg.str());
    }
  }

  // Factor term over the control block, zero when r == 0.
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d.nc, d.T);
  if (r > 0 && opts.warm_start) {
    const FactorModelFit& warm = *opts.warm_start;
    require(warm.loadings.rows() == panel.n_units() &&
                warm.factors.rows() == panel.n_periods() && warm.r == r,
            "fit: warm start shape does not match this panel");
    Eigen::MatrixXd lam(d.nc, r);
    for (int ci = 0; ci < d.nc; ++ci) lam.row(ci) = warm.loadings.row(d.controls[ci]);
    g = lam * warm.factors.transpose();
  }

  AdditiveSolution add;
  FactorSolution fs;
  fs.lambda = Eigen::MatrixXd::Zero(d.nc, std::max(r, 0));
  fs.f = Eigen::MatrixXd::Zero(d.T, std::max(r, 0));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d.nc, d.T);
  Eigen::MatrixXd w2 = Eigen::MatrixXd::Zero(d.nc, d.T);

  double prev_obj = kNan;
  bool converged = false;
  int iterations = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    iterations = it + 1;
    for (const auto& [ci, t] : d.cells) w(ci, t) = d.y(ci, t) - g(ci, t);
    add = solve_additive(d, w);
    for (const auto& [ci, t] : d.cells) {
      const int i = d.controls[ci];
      double xb = 0.0;
      for (int k = 0; k < d.p; ++k) xb += cov_value(d, k, i, t) * add.beta(k);
      w2(ci, t) = d.y(ci, t) - xb - add.alpha(ci) - add.eta(t);
    }
    if (r > 0) {
      fs = solve_factors(d, w2, g, r);
      g = fs.lambda * fs.f.transpose();
    }
    const double obj = objective(d, w2, g);
    if (it > 0) {
      const double denom = std::max(prev_obj, 1e-12);
      if (std::abs(prev_obj - obj) / denom < opts.tol) {
        converged = true;
        prev_obj = obj;
        break;
      }
    }
    prev_obj = obj;
  }

  FactorModelFit fit;
  fit.covariate_names = covariate_names;
  fit.beta = add.beta;
  fit.r = r;
  fit.iterations = iterations;
  fit.converged = converged;
  fit.factors = fs.f;
  fit.loadings = Eigen::MatrixXd::Zero(panel.n_units(), r);
  fit.unit_effects = Eigen::VectorXd::Zero(panel.n_units());
  fit.time_effects = Eigen::VectorXd::Constant(panel.n_periods(), kNan);
  for (int t = 0; t < d.T; ++t)
    if (d.period_identified[t]) fit.time_effects(t) = add.eta(t);
  for (int ci = 0; ci < d.nc; ++ci) {
    fit.unit_effects(d.controls[ci]) = add.alpha(ci);
    if (r > 0) fit.loadings.row(d.controls[ci]) = fs.lambda.row(ci);
  }

  {
    const long cells = static_cast<long>(d.cells.size());
    long dof = cells - d.p - d.ka - d.n_identified_periods -
               static_cast<long>(r) * (d.nc + d.n_identified_periods) +
               static_cast<long>(r) * r;
    if (dof < 1) dof = 1;
    fit.sigma2 = prev_obj / static_cast<double>(dof);
  }

  /* Treated units: level and loadings from the observed pre-onset cells
     regressed on [1, factors], using only periods with identified time
     effects. */
  for (int i : panel.treated_indices()) {
    const int onset = *panel.onset_column(i);
    std::vector<int> usable;
    for (int t = 0; t < onset && t < d.T; ++t)
      if (panel.observed(i, t) && d.period_identified[t]) usable.push_back(t);
    const int m = static_cast<int>(usable.size());
    if (m < r + 1) {
      std::ostringstream msg;
      msg << "fit: treated unit " << panel.units[i] << " has " << m
          << " usable pre-treatment observations but the loading regression"
          << " needs at least r + 1 = " << r + 1;
      fail(msg.str());
    }
    Eigen::MatrixXd z(m, r + 1);
    Eigen::VectorXd target(m);
    for (int row = 0; row < m; ++row) {
      const int t = usable[row];
      z(row, 0) = 1.0;
      for (int k = 0; k < r; ++k) z(row, k + 1) = fit.factors(t, k);
      double xb = 0.0;
      for (int k = 0; k < d.p; ++k) xb += cov_value(d, k, i, t) * add.beta(k);
      target(row) = panel.outcome(i, t) - xb - add.eta(t);
    }
    Eigen::VectorXd theta = z.colPivHouseholderQr().solve(target);
    fit.unit_effects(i) = theta(0);
    for (int k = 0; k < r; ++k) fit.loadings(i, k) = theta(k + 1);
    if (m == r + 1) fit.exact_fit_units.push_back(panel.units[i]);
  }
  return fit;
}

Eigen::MatrixXd fitted_values(const FactorModelFit& fit,
                              const PanelDataset& panel) {
  require(fit.loadings.rows() == panel.n_units() &&
              fit.factors.rows() == panel.n_periods(),
          "fitted_values: fit does not match the panel shape");
  std::vector<const Eigen::MatrixXd*> xs;
  for (const auto& name : fit.covariate_names) {
    const Eigen::MatrixXd* x = panel.covariate(name);
    if (!x) fail("fitted_values: panel lacks covariate '" + name + "'");
    xs.push_back(x);
  }
  Eigen::MatrixXd out(panel.n_units(), panel.n_periods());
  for (int i = 0; i < panel.n_units(); ++i)
    for (int t = 0; t < panel.n_periods(); ++t) {
      double v = fit.unit_effects(i) + fit.time_effects(t);
      for (int k = 0; k < fit.r; ++k)
        v += fit.loadings(i, k) * fit.factors(t, k);
      for (size_t k = 0; k < xs.size(); ++k)
        v += (*xs[k])(i, t) * fit.beta(k);
      out(i, t) = v;
    }
  return out;
}

AttResult att_from_counterfactual(const PanelDataset& panel,
                                  const Eigen::MatrixXd& counterfactual) {
  require(counterfactual.rows() == panel.n_units() &&
              counterfactual.cols() == panel.n_periods(),
          "impute: counterfactual does not match the panel shape");
  AttResult res;
  std::map<int, std::pair<double, long>> by_period;
  double total = 0.0;
  long count = 0;
  for (int i : panel.treated_indices()) {
    const int onset = *panel.onset_column(i);
    for (int t = onset; t < panel.n_periods(); ++t) {
      if (!panel.observed(i, t)) continue;
      if (!std::isfinite(counterfactual(i, t))) {
        std::ostringstream msg;
        msg << "impute: unit " << panel.units[i] << " at period "
            << panel.periods[t]
            << " cannot be imputed; no control observations identify that"
            << " period's time effect";
        fail(msg.str());
      }
      const double gap = panel.outcome(i, t) - counterfactual(i, t);
      res.gaps.push_back({panel.units[i], panel.periods[t], gap});
      auto& acc = by_period[panel.periods[t]];
      acc.first += gap;
      acc.second += 1;
      total += gap;
      ++count;
    }
  }
  require(count > 0, "impute: no observed treated post-onset cells");
  for (const auto& [period, acc] : by_period)
    res.att_by_period.emplace_back(period, acc.first / acc.second);
  res.att = total / static_cast<double>(count);
  return res;
}

AttResult impute_and_att(const FactorModelFit& fit, const PanelDataset& panel) {
  return att_from_counterfactual(panel, fitted_values(fit, panel));
}

CvResult choose_r(const PanelDataset& panel, int r_max,
                  const std::vector<std::string>& covariate_names,
                  ExecMode mode) {
  require(r_max >= 0, "choose_r: r_max must be non-negative");
  const std::vector<int> treated = panel.treated_indices();
  require(!treated.empty(), "choose_r: rank selection needs treated units");

  // Period identification does not depend on r; compute it once to bound
  // the usable holdout set.
  ControlDesign d = build_design(panel, covariate_names);
  int fit_bound = std::min(d.nc, d.T) - 1;
  int loo_bound = std::numeric_limits<int>::max();
  std::string binding_unit;
  for (int i : treated) {
    const int onset = *panel.onset_column(i);
    int m = 0;
    for (int t = 0; t < onset && t < d.T; ++t)
      if (panel.observed(i, t) && d.period_identified[t]) ++m;
    if (m - 2 < loo_bound) {
      loo_bound = m - 2;
      binding_unit = panel.units[i];
    }
  }
  if (r_max > fit_bound) {
    std::ostringstream msg;
    msg << "choose_r: r_max=" << r_max << " exceeds the fit bound "
        << fit_bound << " set by min(control units, periods) - 1";
    fail(msg.str());
  }
  if (r_max > loo_bound) {
    std::ostringstream msg;
    msg << "choose_r: r_max=" << r_max << " exceeds the holdout bound "
        << loo_bound << "; unit " << binding_unit
        << " keeps too few pre-treatment observations for leave-one-out at"
        << " that rank";
    fail(msg.str());
  }

  std::vector<double> mspe(r_max + 1, 0.0);
  parallel_for(r_max + 1, mode, [&](std::int64_t r) {
    const FactorModelFit fit =
        fit_ife(panel, static_cast<int>(r), covariate_names);
    double err = 0.0;
    long n = 0;
    for (int i : treated) {
      const int onset = *panel.onset_column(i);
      std::vector<int> usable;
      for (int t = 0; t < onset && t < panel.n_periods(); ++t)
        if (panel.observed(i, t) && std::isfinite(fit.time_effects(t)))
          usable.push_back(t);
      const int m = static_cast<int>(usable.size());
      Eigen::MatrixXd z(m, fit.r + 1);
      Eigen::VectorXd target(m);
      for (int row = 0; row < m; ++row) {
        const int t = usable[row];
        z(row, 0) = 1.0;
        for (int k = 0; k < fit.r; ++k) z(row, k + 1) = fit.factors(t, k);
        double xb = 0.0;
        for (size_t k = 0; k < covariate_names.size(); ++k)
          xb += (*panel.covariate(covariate_names[k]))(i, t) * fit.beta(k);
        target(row) = panel.outcome(i, t) - xb - fit.time_effects(t);
      }
      Eigen::MatrixXd z_rest(m - 1, fit.r + 1);
      Eigen::VectorXd target_rest(m - 1);
      for (int hold = 0; hold < m; ++hold) {
        int pos = 0;
        for (int row = 0; row < m; ++row) {
          if (row == hold) continue;
          z_rest.row(pos) = z.row(row);
          target_rest(pos) = target(row);
          ++pos;
        }
        const Eigen::VectorXd theta =
            z_rest.colPivHouseholderQr().solve(target_rest);
        const double pred = z.row(hold).dot(theta);
        const double e = target(hold) - pred;
        err += e * e;
        ++n;
      }
    }
    mspe[r] = err / static_cast<double>(n);
  });

  CvResult out;
  int best = 0;
  for (int r = 0; r <= r_max; ++r) {
    out.mspe_by_r[r] = mspe[r];
    if (mspe[r] < mspe[best]) best = r;
  }
  out.chosen_r = best;
  return out;
}

}  // namespace gapcast
