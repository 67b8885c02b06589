#pragma once

#include "gapcast/ife.hpp"
#include "gapcast/panel.hpp"
#include "gapcast/parallel.hpp"

#include <cstdint>
#include <vector>

namespace gapcast {

/* Singular-value soft threshold: singular values are shrunk by lambda and
   clipped at zero, singular vectors kept. */
Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& m, double lambda);

struct CompletionResult {
  Eigen::MatrixXd completed;
  double lambda = 0.0;
  int rank = 0;  // surviving singular values at convergence
  int iterations = 0;
  bool converged = false;
};

/* Nuclear-norm-regularized completion: iterate
     Z <- soft_threshold(observed values | Z elsewhere, lambda)
   until the relative Frobenius change falls below tol. */
CompletionResult soft_impute(const Eigen::MatrixXd& y, const Mask& observed,
                             double lambda, double tol = 1e-7,
                             int max_iter = 500);

struct McResult {
  AttResult att;
  CompletionResult completion;
  std::vector<std::pair<double, double>> cv_table;  // lambda -> holdout mse
  double chosen_lambda = 0.0;
};

/* Decreasing grid of fractions of the top singular value of the matrix
   holding observed untreated outcomes (zeros elsewhere). */
std::vector<double> default_lambda_grid(const PanelDataset& panel);

/* Counterfactual by matrix completion: treated post-onset cells are masked,
   lambda is chosen by k-fold holdout of observed control cells (smallest
   mean squared reconstruction error; ties toward the larger lambda, the
   stronger regularizer), and gaps are observed minus completed values. */
McResult mc_att(const PanelDataset& panel,
                const std::vector<double>& lambda_grid, int cv_folds,
                std::uint64_t seed, ExecMode mode = ExecMode::kParallel);

}  // namespace gapcast
