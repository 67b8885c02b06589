#pragma once

#include "gapcast/ife.hpp"
#include "gapcast/panel.hpp"
#include "gapcast/parallel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gapcast {

struct BootstrapSpec {
  int replicates = 2000;
  std::uint64_t seed = 0;
  double ci_level = 0.95;  // percentile interval mass
};

/* Parametric bootstrap blocked at the unit level. The model is fitted
   once; each replicate rebuilds every unit's outcome series as the fitted
   value (counterfactual for treated cells) plus the estimated per-cell
   treatment gap plus the whole residual series of one control unit drawn
   with replacement. Replicate cells exist only where both the original
   unit and its donor are observed, so resampled residual blocks are never
   split. Each replicate is re-estimated (warm-started from the base fit)
   and its pooled effect recorded.

   Point estimates come from the base fit; se and the percentile interval
   come from the replicate draws and are reported only when there are at
   least 100 of them. Replicates that fail to converge are redrawn from a
   fresh substream, at most 10 attempts each. Results are bit-identical
   across execution modes and worker counts. */
AttResult bootstrap_att(const PanelDataset& panel, int r,
                        const std::vector<std::string>& covariate_names,
                        const BootstrapSpec& spec,
                        ExecMode mode = ExecMode::kParallel);

struct PlaceboReport {
  AttResult att_result;
  double p_value = 1.0;  // share of recentred draws at least as extreme
  std::pair<int, int> window{0, 0};  // period labels covered by pseudo gaps
  std::string kind;  // "in-space" or "in-time"
};

/* Pseudo-treatment assigned to chosen control units; genuinely treated
   units are removed first. A healthy design should not reject. */
PlaceboReport placebo_in_space(const PanelDataset& panel,
                               const std::vector<std::string>& pseudo_treated,
                               int onset, int r,
                               const std::vector<std::string>& covariate_names,
                               const BootstrapSpec& spec,
                               ExecMode mode = ExecMode::kParallel);

/* Treatment onset shifted earlier by `shift` periods (2, 3 or 4), with all
   genuinely post-onset cells discarded; the pseudo window covers only
   never-treated data. */
PlaceboReport placebo_in_time(const PanelDataset& panel, int shift, int r,
                              const std::vector<std::string>& covariate_names,
                              const BootstrapSpec& spec, int min_pre = 6,
                              ExecMode mode = ExecMode::kParallel);

}  // namespace gapcast
