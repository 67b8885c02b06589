#include "gapcast/simgen.hpp"

#include "gapcast/errors.hpp"
#include "gapcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace gapcast {

namespace {

enum Stream : std::uint64_t {
  kFactors = 1,
  kLoadings = 2,
  kUnitEffects = 3,
  kTimeEffects = 4,
  kNoise = 5,
  kBiannual = 6,
  kCovariateBase = 16,
};

std::string unit_name(char prefix, int index, int total) {
  std::string digits = std::to_string(index + 1);
  const size_t width = std::to_string(total).size();
  if (digits.size() < width)
    digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

}  // namespace

std::pair<PanelDataset, GroundTruth> gen_panel(const DgpSpec& spec) {
  require(spec.n_units >= 2, "simgen: need at least 2 units");
  require(spec.n_treated >= 0 && spec.n_treated < spec.n_units,
          "simgen: treated units must leave at least one control");
  require(spec.n_periods >= 1, "simgen: need at least one period");
  require(spec.r_true >= 0, "simgen: r_true must be non-negative");
  require(spec.sigma >= 0.0, "simgen: sigma must be non-negative");
  require(spec.biannual_fraction >= 0.0 && spec.biannual_fraction <= 1.0,
          "simgen: biannual_fraction must lie in [0, 1]");
  const int onset_col = spec.onset_period - spec.first_period;
  if (spec.n_treated > 0) {
    require(onset_col >= 6,
            "simgen: onset must leave at least 6 pre-onset periods");
    require(onset_col <= spec.n_periods - 1,
            "simgen: onset must leave at least one post-onset period");
  }
  const int n_post = spec.n_treated > 0 ? spec.n_periods - onset_col : 0;
  require(spec.tau.size() == 1 ||
              static_cast<int>(spec.tau.size()) == n_post,
          "simgen: tau must be a single value or one value per post period");

  const int n = spec.n_units, T = spec.n_periods, r = spec.r_true;
  const int p = static_cast<int>(spec.beta.size());

  GroundTruth truth;
  truth.beta = spec.beta;
  truth.sigma = spec.sigma;
  truth.tau_path.resize(n_post);
  for (int s = 0; s < n_post; ++s)
    truth.tau_path[s] = spec.tau.size() == 1 ? spec.tau[0] : spec.tau[s];

  truth.factors.resize(T, r);
  {
    Rng rng(derive_seed(spec.seed, kFactors));
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < r; ++k) truth.factors(t, k) = rng.normal();
  }
  truth.loadings.resize(n, r);
  {
    Rng rng(derive_seed(spec.seed, kLoadings));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < r; ++k) {
        truth.loadings(i, k) = rng.normal();
        if (i < spec.n_treated) truth.loadings(i, k) += spec.confound;
      }
  }
  truth.unit_effects.resize(n);
  {
    Rng rng(derive_seed(spec.seed, kUnitEffects));
    for (int i = 0; i < n; ++i) truth.unit_effects(i) = rng.normal();
  }
  truth.time_effects.resize(T);
  {
    Rng rng(derive_seed(spec.seed, kTimeEffects));
    for (int t = 0; t < T; ++t) truth.time_effects(t) = rng.normal();
  }

  PanelDataset panel;
  for (int i = 0; i < spec.n_treated; ++i)
    panel.units.push_back(unit_name('T', i, spec.n_treated));
  for (int i = 0; i < n - spec.n_treated; ++i)
    panel.units.push_back(unit_name('C', i, n - spec.n_treated));
  panel.periods.resize(T);
  for (int t = 0; t < T; ++t) panel.periods[t] = spec.first_period + t;
  for (int i = 0; i < spec.n_treated; ++i)
    panel.treatment_onset[panel.units[i]] = spec.onset_period;

  /* Covariates carry the loading level when confounded, which a pure
     within transformation cannot remove. */
  panel.outcome = Eigen::MatrixXd::Zero(n, T);
  panel.mask = Mask::Ones(n, T);
  for (int k = 0; k < p; ++k) {
    Eigen::MatrixXd x(n, T);
    Rng rng(derive_seed(spec.seed, kCovariateBase + k));
    for (int i = 0; i < n; ++i) {
      double loading_level = 0.0;
      if (r > 0) loading_level = truth.loadings.row(i).mean();
      for (int t = 0; t < T; ++t)
        x(i, t) = rng.normal() + 0.5 * spec.confound * loading_level;
    }
    panel.covariates.emplace_back("x" + std::to_string(k + 1), std::move(x));
  }
  {
    Rng rng(derive_seed(spec.seed, kNoise));
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < T; ++t) {
        double v = truth.unit_effects(i) + truth.time_effects(t);
        for (int k = 0; k < r; ++k)
          v += truth.loadings(i, k) * truth.factors(t, k);
        for (int k = 0; k < p; ++k)
          v += spec.beta[k] * panel.covariates[k].second(i, t);
        if (i < spec.n_treated && t >= onset_col)
          v += truth.tau_path[t - onset_col];
        v += spec.sigma * rng.normal();
        panel.outcome(i, t) = v;
      }
  }

  /* Biannual thinning. Treated units keep the parity with more pre-onset
     periods and are left fully observed if even that parity breaks the
     6-observation floor. */
  const int n_masked =
      static_cast<int>(std::lround(spec.biannual_fraction * n));
  if (n_masked > 0) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(spec.seed, kBiannual));
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(i + 1));
      std::swap(order[i], order[j]);
    }
    for (int m = 0; m < n_masked; ++m) {
      const int i = order[m];
      int parity;
      if (i < spec.n_treated) {
        const int even_pre = (onset_col + 1) / 2;
        const int odd_pre = onset_col / 2;
        if (std::max(even_pre, odd_pre) < 6) continue;
        parity = even_pre >= odd_pre ? 0 : 1;
      } else {
        parity = i % 2;
      }
      for (int t = 0; t < T; ++t)
        if (t % 2 != parity) panel.mask(i, t) = 0;
    }
    // Every period must keep an observed control cell; restore the
    // lowest-index control where thinning left a period empty.
    for (int t = 0; t < T; ++t) {
      bool covered = false;
      for (int i = spec.n_treated; i < n && !covered; ++i)
        covered = panel.mask(i, t) != 0;
      if (!covered) panel.mask(spec.n_treated, t) = 1;
    }
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < T; ++t)
        if (!panel.mask(i, t)) {
          panel.outcome(i, t) = 0.0;
          for (auto& [name, values] : panel.covariates) values(i, t) = 0.0;
        }
  }
  return {std::move(panel), std::move(truth)};
}

}  // namespace gapcast
