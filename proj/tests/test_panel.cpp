#include "gapcast/errors.hpp"
#include "gapcast/panel.hpp"

#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

using namespace gapcast;

namespace {

PanelDataset parse(const std::string& csv) {
  std::istringstream in(csv);
  return load_panel(in);
}

std::string render(const PanelDataset& panel) {
  std::ostringstream out;
  write_panel(out, panel);
  return out.str();
}

/* 3 units x 4 periods, fully observed, no treatment. */
const char* kAllControlCsv =
    "unit,period,outcome\n"
    "a,1,1.5\na,2,2.5\na,3,3.5\na,4,4.5\n"
    "b,1,0.0\nb,2,1.0\nb,3,2.0\nb,4,3.0\n"
    "c,1,9.0\nc,2,8.0\nc,3,7.0\nc,4,6.0\n";

}  // namespace

TEST_CASE("load_panel builds an all-control panel field by field") {
  PanelDataset p = parse(kAllControlCsv);
  REQUIRE(p.units == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(p.periods == std::vector<int>{1, 2, 3, 4});
  REQUIRE(p.covariates.empty());
  REQUIRE(p.treatment_onset.empty());
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < 4; ++t) CHECK(p.observed(i, t));
  CHECK(p.outcome(0, 0) == 1.5);
  CHECK(p.outcome(1, 3) == 3.0);
  CHECK(p.outcome(2, 2) == 7.0);
  CHECK(p.n_observed_cells() == 12);
  CHECK(p.control_indices() == std::vector<int>{0, 1, 2});
  CHECK(p.treated_indices().empty());
}

TEST_CASE("load_panel reads covariates and treatment onsets") {
  PanelDataset p = parse(
      "unit,period,outcome,x1,treated_since\n"
      "u,2000,1.0,0.5,2012\n"
      "u,2001,2.0,0.6,2012\n"
      "v,2000,3.0,0.7,\n");
  REQUIRE(p.covariates.size() == 1);
  CHECK(p.covariates[0].first == "x1");
  CHECK(p.covariate("x1") != nullptr);
  CHECK(p.covariate("nope") == nullptr);
  CHECK((*p.covariate("x1"))(0, 1) == 0.6);
  REQUIRE(p.treatment_onset.count("u") == 1);
  CHECK(p.treatment_onset.at("u") == 2012);
  CHECK(p.treatment_onset.count("v") == 0);
  CHECK_FALSE(p.observed(1, 1));
  CHECK(p.unit_index("v") == 1);
  CHECK_FALSE(p.unit_index("w").has_value());
  CHECK(p.period_index(2001) == 1);
  CHECK_FALSE(p.period_index(1999).has_value());
}

TEST_CASE("load_panel rejects degenerate input") {
  std::string msg;

  SUBCASE("empty stream") {
    try {
      parse("unit,period,outcome\n");
    } catch (const Error& e) {
      msg = e.what();
    }
    CHECK(msg.find("no rows") != std::string::npos);
  }
  SUBCASE("missing header column") {
    CHECK_THROWS_AS(parse("unit,period\nu,1\n"), Error);
  }
  SUBCASE("duplicate cell names the cell") {
    try {
      parse("unit,period,outcome\nu,1,1.0\nu,1,2.0\n");
    } catch (const Error& e) {
      msg = e.what();
    }
    CHECK(msg.find("u") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }
  SUBCASE("non-numeric outcome carries the row number") {
    try {
      parse("unit,period,outcome\nu,1,1.0\nv,1,abc\n");
    } catch (const Error& e) {
      msg = e.what();
    }
    CHECK(msg.find("row 3") != std::string::npos);
  }
  SUBCASE("conflicting onsets for one unit") {
    CHECK_THROWS_AS(parse("unit,period,outcome,treated_since\n"
                          "u,1,1.0,5\nu,2,1.0,6\n"),
                    Error);
  }
}

TEST_CASE("load, write, load is identity") {
  const char* csv =
      "unit,period,outcome,x1,treated_since\n"
      "t,2000,1.0,0.25,2003\n"
      "t,2001,2.0,0.5,2003\n"
      "t,2003,4.0,1.0,2003\n"
      "c,2000,0.5,0.1,\n"
      "c,2001,0.75,0.2,\n"
      "c,2002,1.0,0.3,\n"
      "c,2003,1.25,0.4,\n";
  PanelDataset a = parse(csv);
  PanelDataset b = parse(render(a));
  CHECK(same_panel(a, b));
  CHECK(render(a) == render(b));
  CHECK_FALSE(a.observed(0, 2));
}

TEST_CASE("onset column follows period labels") {
  PanelDataset p = parse(
      "unit,period,outcome,treated_since\n"
      "w,2000,1.0,2012\nw,2005,1.0,2012\nw,2010,1.0,2012\nw,2015,1.0,2012\n"
      "z,2000,1.0,\nz,2005,1.0,\nz,2010,1.0,\nz,2015,1.0,\n");
  // 2012 is not itself a period; the first treated column is 2015's.
  REQUIRE(p.onset_column(0).has_value());
  CHECK(*p.onset_column(0) == 3);
  CHECK_FALSE(p.onset_column(1).has_value());
  CHECK(p.is_treated(0));
  CHECK(p.n_pre_cells(0) == 3);
}

TEST_CASE("treatment_matrix splits cleanly at onset") {
  std::ostringstream csv;
  csv << "unit,period,outcome,treated_since\n";
  for (int y = 2000; y < 2020; ++y) csv << "t," << y << ",1.0,2012\n";
  for (int y = 2000; y < 2020; ++y) csv << "s," << y << ",1.0,2000\n";
  for (int y = 2000; y < 2020; ++y) csv << "c," << y << ",1.0,\n";
  PanelDataset p = parse(csv.str());
  TreatmentMatrix tm = treatment_matrix(p);

  int flips = 0;
  for (int t = 0; t < 20; ++t) {
    CHECK(tm.delta(0, t) == (t >= 12 ? 1 : 0));
    CHECK(tm.delta(1, t) == 1);  // onset equal to the first period
    CHECK(tm.delta(2, t) == 0);
    if (t > 0 && tm.delta(0, t) != tm.delta(0, t - 1)) flips++;
  }
  CHECK(flips == 1);  // absorbing: exactly one 0 -> 1 switch
}

namespace {

/* One treated unit (onset 10) with `pre` observed pre-onset periods plus 2
   post periods, and two always-observed controls. */
std::string treated_fixture(int pre) {
  std::ostringstream csv;
  csv << "unit,period,outcome,treated_since\n";
  for (int y = 10 - pre; y <= 11; ++y) csv << "t," << y << ",1.0,10\n";
  for (int y = 1; y <= 11; ++y) csv << "c1," << y << "," << y << ",\n";
  for (int y = 1; y <= 11; ++y) csv << "c2," << y << "," << 2 * y << ",\n";
  return csv.str();
}

}  // namespace

TEST_CASE("validate_and_filter drops short-history treated units") {
  PanelDataset p = parse(treated_fixture(5));
  auto [out, report] = validate_and_filter(p, 6);
  CHECK(report.dropped_units == std::vector<std::string>{"t"});
  CHECK(out.n_units() == 2);
  CHECK(report.n_units == 2);
  CHECK(report.n_treated == 0);
  CHECK(out.treatment_onset.empty());
}

TEST_CASE("validate_and_filter keeps satisfying panels untouched") {
  PanelDataset p = parse(treated_fixture(6));
  auto [out, report] = validate_and_filter(p, 6);
  CHECK(report.dropped_units.empty());
  CHECK(same_panel(p, out));
  CHECK(report.n_treated == 1);
  CHECK(report.n_observed_cells == p.n_observed_cells());
}

TEST_CASE("validate_and_filter honors a caller min_pre") {
  PanelDataset p = parse(treated_fixture(2));
  auto [out, report] = validate_and_filter(p, 2);
  CHECK(report.dropped_units.empty());
  CHECK(out.n_units() == 3);
}

TEST_CASE("validate_and_filter is idempotent") {
  PanelDataset p = parse(treated_fixture(5));
  auto [once, r1] = validate_and_filter(p, 6);
  auto [twice, r2] = validate_and_filter(once, 6);
  CHECK(same_panel(once, twice));
  CHECK(r2.dropped_units.empty());
  CHECK(r1.n_observed_cells == r2.n_observed_cells);
}

TEST_CASE("validate_and_filter fails when no control survives") {
  PanelDataset p = parse(
      "unit,period,outcome,treated_since\n"
      "t1,1,1.0,8\nt1,2,1.0,8\nt1,3,1.0,8\nt1,4,1.0,8\n"
      "t1,5,1.0,8\nt1,6,1.0,8\nt1,7,1.0,8\nt1,8,1.0,8\n");
  CHECK_THROWS_AS(validate_and_filter(p, 6), Error);
}

TEST_CASE("cell filter masks low-activity cells or drops their unit") {
  // Outcome doubles as the activity measure here.
  const char* csv =
      "unit,period,outcome\n"
      "a,1,30\na,2,10\na,3,40\n"
      "b,1,50\nb,2,60\nb,3,70\n";
  PanelDataset p = parse(csv);

  SUBCASE("kDropCell masks the cell only") {
    auto [out, report] = validate_and_filter(p, 6, 25.0, CellFilterMode::kDropCell);
    CHECK(out.n_units() == 2);
    CHECK_FALSE(out.observed(0, 1));
    CHECK(out.observed(0, 0));
    CHECK(report.n_observed_cells == 5);
    CHECK(report.dropped_units.empty());
  }
  SUBCASE("kDropUnit removes the whole unit") {
    auto [out, report] = validate_and_filter(p, 6, 25.0, CellFilterMode::kDropUnit);
    CHECK(out.units == std::vector<std::string>{"b"});
    CHECK(report.dropped_units == std::vector<std::string>{"a"});
  }
}

TEST_CASE("cell filter prefers the TotalNumOfPaper covariate") {
  const char* csv =
      "unit,period,outcome,TotalNumOfPaper\n"
      "a,1,1000,10\na,2,1000,30\n"
      "b,1,1,30\nb,2,1,30\n";
  PanelDataset p = parse(csv);
  auto [out, report] = validate_and_filter(p, 6, 25.0, CellFilterMode::kDropCell);
  // a's period-1 cell fails on the covariate despite its huge outcome.
  CHECK_FALSE(out.observed(0, 0));
  CHECK(out.observed(1, 0));
  CHECK(report.n_observed_cells == 3);
}

TEST_CASE("periods with no surviving observation disappear") {
  const char* csv =
      "unit,period,outcome\n"
      "a,1,30\na,2,10\n"
      "b,1,50\nb,2,20\nb,3,90\n";
  PanelDataset p = parse(csv);
  auto [out, report] = validate_and_filter(p, 6, 25.0, CellFilterMode::kDropCell);
  // Period 2 loses both cells; period 3 keeps b's.
  CHECK(out.periods == std::vector<int>{1, 3});
  CHECK(report.n_periods == 2);
  CHECK(out.outcome(1, 1) == 90);
}
