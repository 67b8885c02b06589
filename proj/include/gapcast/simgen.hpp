#pragma once

#include "gapcast/panel.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace gapcast {

/* Synthetic panel generator with a latent-factor outcome process. Treated
   units can be confounded with the factor structure: `confound` shifts
   every treated loading component and leaks half of it into the covariate
   level, so a model that ignores the factors stays biased while a factor
   model identifies the effect. */
struct DgpSpec {
  std::uint64_t seed = 1;
  int n_units = 57;
  int n_treated = 10;
  int n_periods = 20;
  int first_period = 1;
  int onset_period = 12;  // period label of the first treated period
  int r_true = 2;
  std::vector<double> beta = {1.0};  // one covariate x1..xp per entry
  std::vector<double> tau = {5.0};   // constant, or one entry per post period
  double sigma = 1.0;
  double confound = 0.0;
  double biannual_fraction = 0.0;  // share of units observed every 2nd period
};

struct GroundTruth {
  std::vector<double> tau_path;  // per post-onset period
  std::vector<double> beta;
  Eigen::MatrixXd factors;   // n_periods x r_true
  Eigen::MatrixXd loadings;  // n_units x r_true
  Eigen::VectorXd unit_effects;
  Eigen::VectorXd time_effects;
  double sigma = 0.0;
};

/* Deterministic in `spec.seed`: every random component draws from its own
   derived stream, so results do not depend on evaluation order. Guarantees
   on the output panel: treated units keep at least 6 observed pre-onset
   periods (units whose biannual thinning would break that stay fully
   observed) and every period keeps at least one observed control cell. */
std::pair<PanelDataset, GroundTruth> gen_panel(const DgpSpec& spec);

}  // namespace gapcast
