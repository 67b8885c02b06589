#include "gapcast/panel.hpp"

#include "gapcast/errors.hpp"
#include "gapcast/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace gapcast {

std::optional<int> PanelDataset::unit_index(const std::string& unit) const {
  for (int i = 0; i < n_units(); ++i)
    if (units[i] == unit) return i;
  return std::nullopt;
}

std::optional<int> PanelDataset::period_index(int period) const {
  auto it = std::lower_bound(periods.begin(), periods.end(), period);
  if (it == periods.end() || *it != period) return std::nullopt;
  return static_cast<int>(it - periods.begin());
}

const Eigen::MatrixXd* PanelDataset::covariate(const std::string& name) const {
  for (const auto& [cov_name, values] : covariates)
    if (cov_name == name) return &values;
  return nullptr;
}

std::optional<int> PanelDataset::onset_column(int i) const {
  auto it = treatment_onset.find(units[i]);
  if (it == treatment_onset.end()) return std::nullopt;
  auto pos = std::lower_bound(periods.begin(), periods.end(), it->second);
  return static_cast<int>(pos - periods.begin());
}

std::vector<int> PanelDataset::control_indices() const {
  std::vector<int> out;
  for (int i = 0; i < n_units(); ++i)
    if (!is_treated(i)) out.push_back(i);
  return out;
}

std::vector<int> PanelDataset::treated_indices() const {
  std::vector<int> out;
  for (int i = 0; i < n_units(); ++i)
    if (is_treated(i)) out.push_back(i);
  return out;
}

long PanelDataset::n_observed_cells() const {
  long n = 0;
  for (int i = 0; i < n_units(); ++i)
    for (int t = 0; t < n_periods(); ++t)
      if (mask(i, t)) ++n;
  return n;
}

int PanelDataset::n_pre_cells(int i) const {
  auto onset = onset_column(i);
  if (!onset) return 0;
  int n = 0;
  for (int t = 0; t < *onset; ++t)
    if (mask(i, t)) ++n;
  return n;
}

bool same_panel(const PanelDataset& a, const PanelDataset& b, double tol) {
  if (a.units != b.units || a.periods != b.periods) return false;
  if (a.treatment_onset != b.treatment_onset) return false;
  if (a.covariates.size() != b.covariates.size()) return false;
  for (size_t k = 0; k < a.covariates.size(); ++k)
    if (a.covariates[k].first != b.covariates[k].first) return false;
  for (int i = 0; i < a.n_units(); ++i)
    for (int t = 0; t < a.n_periods(); ++t) {
      if (a.mask(i, t) != b.mask(i, t)) return false;
      if (!a.mask(i, t)) continue;
      if (std::abs(a.outcome(i, t) - b.outcome(i, t)) > tol) return false;
      for (size_t k = 0; k < a.covariates.size(); ++k)
        if (std::abs(a.covariates[k].second(i, t) -
                     b.covariates[k].second(i, t)) > tol)
          return false;
    }
  return true;
}

TreatmentMatrix treatment_matrix(const PanelDataset& panel) {
  TreatmentMatrix tm;
  tm.delta = Mask::Zero(panel.n_units(), panel.n_periods());
  for (int i = 0; i < panel.n_units(); ++i) {
    auto onset = panel.onset_column(i);
    if (!onset) continue;
    for (int t = *onset; t < panel.n_periods(); ++t) tm.delta(i, t) = 1;
  }
  return tm;
}

namespace {

struct RawRow {
  std::string unit;
  int period;
  double outcome;
  std::vector<double> covariates;
  std::optional<int> treated_since;
};

}  // namespace

PanelDataset load_panel(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail("panel CSV: no rows");
  const std::vector<std::string> header = split_csv(line);

  int col_unit = -1, col_period = -1, col_outcome = -1, col_treated = -1;
  std::vector<std::pair<int, std::string>> cov_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string name = trim(header[c]);
    if (name == "unit") col_unit = c;
    else if (name == "period") col_period = c;
    else if (name == "outcome") col_outcome = c;
    else if (name == "treated_since") col_treated = c;
    else if (name.empty()) fail("panel CSV: empty column name in header");
    else cov_cols.emplace_back(c, name);
  }
  require(col_unit >= 0, "panel CSV: missing required column 'unit'");
  require(col_period >= 0, "panel CSV: missing required column 'period'");
  require(col_outcome >= 0, "panel CSV: missing required column 'outcome'");
  {
    std::set<std::string> seen;
    for (const auto& [c, name] : cov_cols)
      if (!seen.insert(name).second)
        fail("panel CSV: duplicate covariate column '" + name + "'");
  }

  std::vector<RawRow> rows;
  std::set<std::pair<std::string, int>> seen_cells;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    const std::string where = "panel CSV row " + std::to_string(line_no);
    if (fields.size() != header.size())
      fail(where + ": expected " + std::to_string(header.size()) +
           " fields, got " + std::to_string(fields.size()));
    RawRow row;
    row.unit = trim(fields[col_unit]);
    require(!row.unit.empty(), where + ": empty unit id");
    row.period = static_cast<int>(parse_long(fields[col_period], where + ", column 'period'"));
    row.outcome = parse_double(fields[col_outcome], where + ", column 'outcome'");
    for (const auto& [c, name] : cov_cols)
      row.covariates.push_back(parse_double(fields[c], where + ", column '" + name + "'"));
    if (col_treated >= 0 && !trim(fields[col_treated]).empty())
      row.treated_since = static_cast<int>(
          parse_long(fields[col_treated], where + ", column 'treated_since'"));
    if (!seen_cells.insert({row.unit, row.period}).second)
      fail("panel CSV: duplicate cell (unit=" + row.unit +
           ", period=" + std::to_string(row.period) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail("panel CSV: no rows");

  PanelDataset panel;
  {
    std::set<std::string> seen;
    for (const auto& row : rows)
      if (seen.insert(row.unit).second) panel.units.push_back(row.unit);
    std::set<int> period_set;
    for (const auto& row : rows) period_set.insert(row.period);
    panel.periods.assign(period_set.begin(), period_set.end());
  }
  const int n = panel.n_units(), T = panel.n_periods();
  panel.outcome = Eigen::MatrixXd::Zero(n, T);
  panel.mask = Mask::Zero(n, T);
  for (const auto& [c, name] : cov_cols)
    panel.covariates.emplace_back(name, Eigen::MatrixXd::Zero(n, T));

  for (const auto& row : rows) {
    const int i = *panel.unit_index(row.unit);
    const int t = *panel.period_index(row.period);
    panel.outcome(i, t) = row.outcome;
    panel.mask(i, t) = 1;
    for (size_t k = 0; k < row.covariates.size(); ++k)
      panel.covariates[k].second(i, t) = row.covariates[k];
    if (row.treated_since) {
      auto it = panel.treatment_onset.find(row.unit);
      if (it == panel.treatment_onset.end())
        panel.treatment_onset[row.unit] = *row.treated_since;
      else if (it->second != *row.treated_since)
        fail("panel CSV: unit " + row.unit +
             " has conflicting treated_since values (" +
             std::to_string(it->second) + " vs " +
             std::to_string(*row.treated_since) + ")");
    }
  }
  return panel;
}

PanelDataset load_panel_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file: " + path);
  return load_panel(in);
}

void write_panel(std::ostream& out, const PanelDataset& panel) {
  out << "unit,period,outcome";
  for (const auto& [name, values] : panel.covariates) out << ',' << name;
  out << ",treated_since\n";
  for (int i = 0; i < panel.n_units(); ++i) {
    auto onset = panel.treatment_onset.find(panel.units[i]);
    for (int t = 0; t < panel.n_periods(); ++t) {
      if (!panel.mask(i, t)) continue;
      out << panel.units[i] << ',' << panel.periods[t] << ','
          << fmt_double(panel.outcome(i, t));
      for (const auto& [name, values] : panel.covariates)
        out << ',' << fmt_double(values(i, t));
      out << ',';
      if (onset != panel.treatment_onset.end()) out << onset->second;
      out << '\n';
    }
  }
}

namespace {

PanelDataset subset_panel(const PanelDataset& panel,
                          const std::vector<int>& keep_units,
                          const std::vector<int>& keep_periods,
                          const Mask& mask_override) {
  PanelDataset out;
  for (int i : keep_units) out.units.push_back(panel.units[i]);
  for (int t : keep_periods) out.periods.push_back(panel.periods[t]);
  const int n = static_cast<int>(keep_units.size());
  const int T = static_cast<int>(keep_periods.size());
  out.outcome = Eigen::MatrixXd::Zero(n, T);
  out.mask = Mask::Zero(n, T);
  for (const auto& [name, values] : panel.covariates)
    out.covariates.emplace_back(name, Eigen::MatrixXd::Zero(n, T));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < T; ++b) {
      const int i = keep_units[a], t = keep_periods[b];
      if (!mask_override(i, t)) continue;
      out.mask(a, b) = 1;
      out.outcome(a, b) = panel.outcome(i, t);
      for (size_t k = 0; k < panel.covariates.size(); ++k)
        out.covariates[k].second(a, b) = panel.covariates[k].second(i, t);
    }
  for (int i : keep_units) {
    auto it = panel.treatment_onset.find(panel.units[i]);
    if (it != panel.treatment_onset.end())
      out.treatment_onset[it->first] = it->second;
  }
  return out;
}

}  // namespace

std::pair<PanelDataset, FilterReport> validate_and_filter(
    const PanelDataset& panel, int min_pre, double min_cell_count,
    CellFilterMode mode) {
  require(min_pre >= 1, "validate: min_pre must be at least 1");
  const Eigen::MatrixXd* activity = panel.covariate("TotalNumOfPaper");

  Mask mask = panel.mask;
  std::vector<bool> drop_unit(panel.n_units(), false);
  if (min_cell_count > 0.0) {
    for (int i = 0; i < panel.n_units(); ++i)
      for (int t = 0; t < panel.n_periods(); ++t) {
        if (!mask(i, t)) continue;
        const double measure =
            activity ? (*activity)(i, t) : panel.outcome(i, t);
        if (measure < min_cell_count) {
          if (mode == CellFilterMode::kDropUnit) drop_unit[i] = true;
          else mask(i, t) = 0;
        }
      }
  }

  FilterReport report;
  std::vector<int> keep_units;
  for (int i = 0; i < panel.n_units(); ++i) {
    bool drop = drop_unit[i];
    long cells = 0;
    for (int t = 0; t < panel.n_periods(); ++t)
      if (mask(i, t)) ++cells;
    if (cells == 0) drop = true;
    if (!drop && panel.is_treated(i)) {
      int pre = 0;
      for (int t = 0; t < *panel.onset_column(i); ++t)
        if (mask(i, t)) ++pre;
      if (pre < min_pre) drop = true;
    }
    if (drop) report.dropped_units.push_back(panel.units[i]);
    else keep_units.push_back(i);
  }
  require(!keep_units.empty(), "validate: no units remain after filtering");

  std::vector<int> keep_periods;
  for (int t = 0; t < panel.n_periods(); ++t) {
    long cells = 0;
    for (int i : keep_units)
      if (mask(i, t)) ++cells;
    if (cells > 0) keep_periods.push_back(t);
  }

  PanelDataset filtered = subset_panel(panel, keep_units, keep_periods, mask);
  require(!filtered.control_indices().empty(),
          "validate: no control units remain after filtering");

  report.n_units = filtered.n_units();
  report.n_treated = static_cast<int>(filtered.treated_indices().size());
  report.n_periods = filtered.n_periods();
  report.n_observed_cells = filtered.n_observed_cells();
  return {std::move(filtered), std::move(report)};
}

}  // namespace gapcast
