#include "gapcast/errors.hpp"
#include "gapcast/inference.hpp"
#include "gapcast/simgen.hpp"

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

using namespace gapcast;

namespace {

PanelDataset benchmark(std::uint64_t seed, double sigma = 1.0) {
  DgpSpec spec;
  spec.seed = seed;
  spec.sigma = sigma;
  spec.confound = 1.0;
  return gen_panel(spec).first;
}

}  // namespace

TEST_CASE("bootstrap draws are identical across execution modes") {
  PanelDataset panel = benchmark(31);
  BootstrapSpec spec{120, 7, 0.95};
  auto serial = bootstrap_att(panel, 2, {"x1"}, spec, ExecMode::kSerial);
  auto parallel = bootstrap_att(panel, 2, {"x1"}, spec, ExecMode::kParallel);

  REQUIRE(serial.replicates.size() == 120);
  REQUIRE(parallel.replicates.size() == 120);
  for (size_t b = 0; b < serial.replicates.size(); ++b)
    CHECK(serial.replicates[b] == parallel.replicates[b]);
  CHECK(*serial.se == *parallel.se);
  CHECK(serial.ci95->first == parallel.ci95->first);
  CHECK(serial.ci95->second == parallel.ci95->second);
  for (const auto& [period, se] : serial.period_se)
    CHECK(parallel.period_se.at(period) == se);
}

TEST_CASE("point estimates come from the base fit, spread from replicates") {
  PanelDataset panel = benchmark(32);
  auto base = impute_and_att(fit_ife(panel, 2, {"x1"}), panel);
  auto boot = bootstrap_att(panel, 2, {"x1"}, {150, 3, 0.95});

  CHECK(boot.att == base.att);
  REQUIRE(boot.gaps.size() == base.gaps.size());
  for (size_t k = 0; k < boot.gaps.size(); ++k)
    CHECK(boot.gaps[k].gap == base.gaps[k].gap);
  REQUIRE(boot.se.has_value());
  REQUIRE(boot.ci95.has_value());
  CHECK(boot.ci95->first < boot.ci95->second);
  CHECK(*boot.se > 0);

  // Percentile interval sits inside the replicate range.
  double lo = *std::min_element(boot.replicates.begin(), boot.replicates.end());
  double hi = *std::max_element(boot.replicates.begin(), boot.replicates.end());
  CHECK(boot.ci95->first >= lo);
  CHECK(boot.ci95->second <= hi);

  // Per-period summaries exist for every post period.
  CHECK(boot.period_se.size() == boot.att_by_period.size());
  CHECK(boot.period_ci.size() == boot.att_by_period.size());
}

TEST_CASE("the benchmark interval covers the true effect") {
  // A fixed draw on which the interval is known to cover; coverage across
  // many draws is exercised by the acceptance checks.
  PanelDataset panel = benchmark(5);
  auto boot = bootstrap_att(panel, 2, {"x1"}, {500, 5, 0.95});
  CHECK(boot.ci95->first <= 5.0);
  CHECK(5.0 <= boot.ci95->second);
}

TEST_CASE("zero-noise panels have vanishing bootstrap spread") {
  PanelDataset panel = benchmark(33, 0.0);
  auto boot = bootstrap_att(panel, 2, {"x1"}, {120, 5, 0.95});
  CHECK(*boot.se < 1e-6);
}

TEST_CASE("fewer than 100 replicates suppress se and ci") {
  PanelDataset panel = benchmark(34);
  auto boot = bootstrap_att(panel, 2, {"x1"}, {99, 5, 0.95});
  CHECK_FALSE(boot.se.has_value());
  CHECK_FALSE(boot.ci95.has_value());
  CHECK(boot.period_se.empty());
  CHECK(boot.period_ci.empty());
  CHECK(boot.replicates.size() == 99);
}

TEST_CASE("renaming units leaves the draws untouched") {
  PanelDataset panel = benchmark(35);
  auto base = bootstrap_att(panel, 2, {"x1"}, {120, 11, 0.95});

  PanelDataset renamed = panel;
  for (auto& unit : renamed.units) unit = "node-" + unit;
  std::map<std::string, int> onsets;
  for (const auto& [unit, onset] : panel.treatment_onset)
    onsets["node-" + unit] = onset;
  renamed.treatment_onset = onsets;

  auto boot = bootstrap_att(renamed, 2, {"x1"}, {120, 11, 0.95});
  REQUIRE(boot.replicates.size() == base.replicates.size());
  for (size_t b = 0; b < boot.replicates.size(); ++b)
    CHECK(boot.replicates[b] == base.replicates[b]);
}

TEST_CASE("interval width scales down with the noise level") {
  PanelDataset loud = benchmark(36, 2.0);
  PanelDataset quiet = benchmark(36, 0.5);
  auto wide = bootstrap_att(loud, 2, {"x1"}, {200, 9, 0.95});
  auto narrow = bootstrap_att(quiet, 2, {"x1"}, {200, 9, 0.95});
  CHECK(wide.ci95->second - wide.ci95->first >
        narrow.ci95->second - narrow.ci95->first);
}

TEST_CASE("ci level controls the percentile mass") {
  PanelDataset panel = benchmark(37);
  auto w95 = bootstrap_att(panel, 2, {"x1"}, {200, 2, 0.95});
  auto w50 = bootstrap_att(panel, 2, {"x1"}, {200, 2, 0.50});
  CHECK(w50.ci95->second - w50.ci95->first <
        w95.ci95->second - w95.ci95->first);
  CHECK(w50.ci95->first >= w95.ci95->first);
  CHECK(w50.ci95->second <= w95.ci95->second);
}

TEST_CASE("bootstrap spec is validated") {
  PanelDataset panel = benchmark(38);
  CHECK_THROWS_AS(bootstrap_att(panel, 2, {"x1"}, {0, 1, 0.95}), Error);
  CHECK_THROWS_AS(bootstrap_att(panel, 2, {"x1"}, {100, 1, 0.0}), Error);
  CHECK_THROWS_AS(bootstrap_att(panel, 2, {"x1"}, {100, 1, 1.0}), Error);
}

TEST_CASE("in-space placebo validates the pseudo-treated set") {
  PanelDataset panel = benchmark(39);
  BootstrapSpec spec{120, 1, 0.95};

  CHECK_THROWS_AS(placebo_in_space(panel, {}, 12, 2, {"x1"}, spec), Error);

  std::string msg;
  try {
    placebo_in_space(panel, {"T01"}, 12, 2, {"x1"}, spec);
  } catch (const Error& e) {
    msg = e.what();
  }
  CHECK(msg.find("T01") != std::string::npos);

  CHECK_THROWS_AS(placebo_in_space(panel, {"nope"}, 12, 2, {"x1"}, spec),
                  Error);
  CHECK_THROWS_AS(placebo_in_space(panel, {"C01"}, 99, 2, {"x1"}, spec),
                  Error);
}

TEST_CASE("in-space placebo on a null panel does not reject") {
  DgpSpec dgp;
  dgp.seed = 41;
  dgp.tau = {0.0};
  dgp.confound = 1.0;
  auto [panel, truth] = gen_panel(dgp);
  auto rep = placebo_in_space(panel, {"C01", "C02"}, 12, 2, {"x1"},
                              {200, 4, 0.95});
  CHECK(rep.kind == "in-space");
  CHECK(rep.p_value > 0.05);
  CHECK(rep.window.first == 12);
  CHECK(rep.window.second == 20);
  CHECK(rep.att_result.se.has_value());

  // The genuinely treated units are excluded before relabeling.
  for (const auto& cell : rep.att_result.gaps)
    CHECK(cell.unit.rfind("C", 0) == 0);
}

TEST_CASE("in-space placebo stays small when the true effect is elsewhere") {
  int small = 0;
  for (int seed = 1; seed <= 10; ++seed) {
    PanelDataset panel = benchmark(seed);
    auto rep = placebo_in_space(panel, {"C01", "C02"}, 12, 2, {"x1"},
                                {120, (std::uint64_t)seed, 0.95});
    if (std::abs(rep.att_result.att) < 5.0 / 4.0) small++;
  }
  CHECK(small >= 9);
}

TEST_CASE("in-time placebo truncates at the true onset") {
  PanelDataset panel = benchmark(42);
  auto rep = placebo_in_time(panel, 3, 2, {"x1"}, {200, 6, 0.95});
  CHECK(rep.kind == "in-time");
  CHECK(rep.window.first == 9);
  CHECK(rep.window.second == 11);
  for (const auto& cell : rep.att_result.gaps) {
    CHECK(cell.period >= 9);
    CHECK(cell.period <= 11);
  }
  CHECK(rep.p_value >= 0.0);
  CHECK(rep.p_value <= 1.0);
}

TEST_CASE("in-time placebo validates the shift and history") {
  PanelDataset panel = benchmark(43);
  BootstrapSpec spec{120, 1, 0.95};
  CHECK_THROWS_AS(placebo_in_time(panel, 0, 2, {"x1"}, spec), Error);
  CHECK_THROWS_AS(placebo_in_time(panel, 1, 2, {"x1"}, spec), Error);
  CHECK_THROWS_AS(placebo_in_time(panel, 5, 2, {"x1"}, spec), Error);

  DgpSpec tight;
  tight.seed = 44;
  tight.onset_period = 10;  // nine pre-periods
  auto [short_pre, truth] = gen_panel(tight);
  CHECK_NOTHROW(placebo_in_time(short_pre, 3, 2, {"x1"}, spec));
  std::string msg;
  try {
    placebo_in_time(short_pre, 4, 2, {"x1"}, spec);  // 5 pre < min_pre 6
  } catch (const Error& e) {
    msg = e.what();
  }
  CHECK(msg.find("T01") != std::string::npos);
}

TEST_CASE("in-time placebo rejects when the effect starts early") {
  // Data whose effect begins at period 9 while the treatment label says 12:
  // the shift-3 window straddles genuinely affected periods.
  int rejected = 0;
  for (int seed = 1; seed <= 10; ++seed) {
    DgpSpec dgp;
    dgp.seed = seed;
    dgp.confound = 1.0;
    dgp.onset_period = 9;
    auto [panel, truth] = gen_panel(dgp);
    for (auto& [unit, onset] : panel.treatment_onset) onset = 12;
    auto rep = placebo_in_time(panel, 3, 2, {"x1"},
                               {200, (std::uint64_t)seed, 0.95});
    if (rep.p_value <= 0.05) rejected++;
  }
  CHECK(rejected >= 8);
}

TEST_CASE("placebo p-values are reproducible functions of the seed") {
  PanelDataset panel = benchmark(45);
  auto a = placebo_in_time(panel, 3, 2, {"x1"}, {150, 8, 0.95});
  auto b = placebo_in_time(panel, 3, 2, {"x1"}, {150, 8, 0.95});
  CHECK(a.p_value == b.p_value);
  CHECK(a.att_result.att == b.att_result.att);
}
