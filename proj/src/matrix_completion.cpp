#include "gapcast/matrix_completion.hpp"

#include "gapcast/errors.hpp"
#include "gapcast/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <utility>

namespace gapcast {

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& m, double lambda) {
  require(lambda >= 0.0, "soft_threshold: lambda must be non-negative");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU |
                                               Eigen::ComputeThinV);
  Eigen::VectorXd s = svd.singularValues();
  for (int k = 0; k < s.size(); ++k) s(k) = std::max(s(k) - lambda, 0.0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

namespace {

/* One pass of the thresholded-SVD iteration: fill unobserved cells from the
   current iterate, threshold, repeat until the relative Frobenius change
   drops below tol or the iteration budget runs out. */
struct ImputeState {
  Eigen::MatrixXd z;
  int rank = 0;
  int iterations = 0;
  bool converged = false;
};

/* Per-step movement scales with lambda when lambda is far below the junk
   singular values, so warm-up rungs stop on an absolute step bound tied to
   their own lambda (abs_tol > 0) while the caller-facing loop keeps the
   documented relative criterion (abs_tol == 0). */
void impute_loop(const Eigen::MatrixXd& y, const Mask& observed,
                 double lambda, double tol, double abs_tol, int max_iter,
                 ImputeState& st) {
  st.iterations = 0;
  st.converged = false;
  for (int it = 0; it < max_iter; ++it) {
    st.iterations = it + 1;
    Eigen::MatrixXd filled = st.z;
    for (int i = 0; i < y.rows(); ++i)
      for (int t = 0; t < y.cols(); ++t)
        if (observed(i, t)) filled(i, t) = y(i, t);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(filled, Eigen::ComputeThinU |
                                                      Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues();
    int rank = 0;
    for (int k = 0; k < s.size(); ++k) {
      s(k) = std::max(s(k) - lambda, 0.0);
      if (s(k) > 0.0) ++rank;
    }
    Eigen::MatrixXd next = svd.matrixU() * s.asDiagonal() *
                           svd.matrixV().transpose();
    const double step = (next - st.z).norm();
    const double change = step / std::max(1.0, st.z.norm());
    st.z = std::move(next);
    st.rank = rank;
    if (abs_tol > 0.0 ? step < abs_tol : change < tol) {
      st.converged = true;
      break;
    }
  }
}

}  // namespace

CompletionResult soft_impute(const Eigen::MatrixXd& y, const Mask& observed,
                             double lambda, double tol, int max_iter) {
  require(y.rows() == observed.rows() && y.cols() == observed.cols(),
          "soft_impute: value and mask shapes differ");
  require(lambda >= 0.0, "soft_impute: lambda must be non-negative");
  require(max_iter >= 1, "soft_impute: max_iter must be positive");
  for (int i = 0; i < y.rows(); ++i) {
    bool any = false;
    for (int t = 0; t < y.cols(); ++t) any = any || observed(i, t);
    if (!any) fail("soft_impute: row " + std::to_string(i) +
                   " has no observed entries");
  }
  for (int t = 0; t < y.cols(); ++t) {
    bool any = false;
    for (int i = 0; i < y.rows(); ++i) any = any || observed(i, t);
    if (!any) fail("soft_impute: column " + std::to_string(t) +
                   " has no observed entries");
  }

  ImputeState st;
  st.z = Eigen::MatrixXd::Zero(y.rows(), y.cols());

  /* Small lambdas barely threshold anything, so a cold-started iteration
     moves unobserved cells at a crawl. Warm the iterate along a decreasing
     lambda ladder first; the target-lambda loop below then starts near its
     own fixed point. The final loop alone defines iterations/converged. */
  Eigen::MatrixXd zeroed = Eigen::MatrixXd::Zero(y.rows(), y.cols());
  for (int i = 0; i < y.rows(); ++i)
    for (int t = 0; t < y.cols(); ++t)
      if (observed(i, t)) zeroed(i, t) = y(i, t);
  const double smax =
      Eigen::JacobiSVD<Eigen::MatrixXd>(zeroed).singularValues()(0);
  const double floor = std::max(lambda, smax * 1e-12);
  for (double rung = 0.5 * smax; rung > floor; rung *= 0.25)
    impute_loop(y, observed, rung, 0.0, 1e-3 * rung, 200, st);

  impute_loop(y, observed, lambda, tol, 0.0, max_iter, st);

  CompletionResult res;
  res.lambda = lambda;
  res.rank = st.rank;
  res.iterations = st.iterations;
  res.converged = st.converged;
  res.completed = std::move(st.z);
  return res;
}

std::vector<double> default_lambda_grid(const PanelDataset& panel) {
  Eigen::MatrixXd probe =
      Eigen::MatrixXd::Zero(panel.n_units(), panel.n_periods());
  const TreatmentMatrix tm = treatment_matrix(panel);
  for (int i = 0; i < panel.n_units(); ++i)
    for (int t = 0; t < panel.n_periods(); ++t)
      if (panel.observed(i, t) && !tm.delta(i, t))
        probe(i, t) = panel.outcome(i, t);
  const double smax =
      Eigen::JacobiSVD<Eigen::MatrixXd>(probe).singularValues()(0);
  std::vector<double> grid;
  for (double f : {0.5, 0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.002})
    grid.push_back(smax * f);
  return grid;
}

McResult mc_att(const PanelDataset& panel,
                const std::vector<double>& lambda_grid, int cv_folds,
                std::uint64_t seed, ExecMode mode) {
  require(!lambda_grid.empty(), "mc: empty lambda grid");
  for (double l : lambda_grid)
    require(l >= 0.0, "mc: lambda grid entries must be non-negative");
  require(cv_folds >= 2, "mc: need at least 2 folds");
  require(cv_folds <= 10, "mc: at most 10 folds of 10% each");

  const int T = panel.n_periods();

  /* Estimation mask: every observed cell except treated post-onset ones,
     which are the cells to be imputed. */
  Mask fit_mask = panel.mask;
  long n_to_impute = 0;
  for (int i : panel.treated_indices()) {
    const int onset = *panel.onset_column(i);
    for (int t = onset; t < T; ++t)
      if (panel.mask(i, t)) {
        fit_mask(i, t) = 0;
        ++n_to_impute;
      }
  }
  require(n_to_impute > 0, "mc: no observed treated post-onset cells");

  /* Holdout pool: observed control cells, shuffled once. Each fold hides
     a disjoint 10% slice. */
  std::vector<std::pair<int, int>> pool;
  for (int i : panel.control_indices())
    for (int t = 0; t < T; ++t)
      if (panel.mask(i, t)) pool.emplace_back(i, t);
  require(static_cast<long>(pool.size()) >= cv_folds * 10,
          "mc: too few observed control cells for cross-validation");
  {
    Rng rng(derive_seed(seed, 0x6d63, 0, 0));
    for (size_t k = pool.size() - 1; k > 0; --k) {
      const size_t j = static_cast<size_t>(rng.uniform_int(k + 1));
      std::swap(pool[k], pool[j]);
    }
  }
  const long fold_size =
      std::max<long>(1, static_cast<long>(pool.size()) / 10);

  const int n_lambda = static_cast<int>(lambda_grid.size());
  std::vector<double> fold_mse(static_cast<size_t>(n_lambda) * cv_folds, 0.0);
  parallel_for(static_cast<std::int64_t>(n_lambda) * cv_folds, mode,
               [&](std::int64_t task) {
                 const int li = static_cast<int>(task / cv_folds);
                 const int fold = static_cast<int>(task % cv_folds);
                 Mask cv_mask = fit_mask;
                 const long begin = fold * fold_size;
                 const long end = begin + fold_size;
                 for (long c = begin; c < end; ++c)
                   cv_mask(pool[c].first, pool[c].second) = 0;
                 const CompletionResult cr =
                     soft_impute(panel.outcome, cv_mask, lambda_grid[li]);
                 double err = 0.0;
                 for (long c = begin; c < end; ++c) {
                   const auto& [i, t] = pool[c];
                   const double e = panel.outcome(i, t) - cr.completed(i, t);
                   err += e * e;
                 }
                 fold_mse[task] = err / static_cast<double>(fold_size);
               });

  McResult res;
  int best = 0;
  for (int li = 0; li < n_lambda; ++li) {
    double mse = 0.0;
    for (int fold = 0; fold < cv_folds; ++fold)
      mse += fold_mse[static_cast<size_t>(li) * cv_folds + fold];
    mse /= cv_folds;
    res.cv_table.emplace_back(lambda_grid[li], mse);
    const double best_mse = res.cv_table[best].second;
    if (mse < best_mse ||
        (mse == best_mse && lambda_grid[li] > lambda_grid[best]))
      best = li;
  }
  res.chosen_lambda = lambda_grid[best];

  res.completion = soft_impute(panel.outcome, fit_mask, res.chosen_lambda);
  res.att = att_from_counterfactual(panel, res.completion.completed);
  return res;
}

}  // namespace gapcast
