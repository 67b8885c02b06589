#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gapcast {

using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/* Unbalanced unit-by-period panel. Rows are units, columns are periods
   (strictly increasing integer labels). A cell exists only where
   mask(i, t) == 1; outcome and every covariate share that mask. Entries at
   masked-out cells are zero-filled and must never be read. */
struct PanelDataset {
  std::vector<std::string> units;
  std::vector<int> periods;
  Eigen::MatrixXd outcome;  // n_units x n_periods
  Mask mask;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> covariates;
  std::map<std::string, int> treatment_onset;  // unit -> first treated period

  int n_units() const { return static_cast<int>(units.size()); }
  int n_periods() const { return static_cast<int>(periods.size()); }
  bool observed(int i, int t) const { return mask(i, t) != 0; }

  std::optional<int> unit_index(const std::string& unit) const;
  std::optional<int> period_index(int period) const;
  const Eigen::MatrixXd* covariate(const std::string& name) const;

  /* First treated column for unit i: the smallest column whose period label
     is >= the unit's onset. Empty for never-treated units; may equal
     n_periods() when the onset lies past the last period. */
  std::optional<int> onset_column(int i) const;
  bool is_treated(int i) const { return onset_column(i).has_value(); }

  std::vector<int> control_indices() const;
  std::vector<int> treated_indices() const;
  long n_observed_cells() const;

  /* Observed cells with period < onset (treated units only). */
  int n_pre_cells(int i) const;
};

/* Field-wise equality; observed outcome/covariate values compared within
   tol, masked-out entries ignored. */
bool same_panel(const PanelDataset& a, const PanelDataset& b, double tol = 0.0);

struct TreatmentMatrix {
  Mask delta;  // delta(i, t) == 1 iff unit i is treated and period t >= onset
};

TreatmentMatrix treatment_matrix(const PanelDataset& panel);

struct FilterReport {
  std::vector<std::string> dropped_units;
  int n_units = 0;
  int n_treated = 0;
  int n_periods = 0;
  long n_observed_cells = 0;
};

enum class CellFilterMode { kDropCell, kDropUnit };

/* Long-format CSV with header columns unit, period, outcome, then any
   covariate columns, then an optional treated_since column. One row per
   observed cell. */
PanelDataset load_panel(std::istream& in);
PanelDataset load_panel_file(const std::string& path);
void write_panel(std::ostream& out, const PanelDataset& panel);

/* Canonicalizes a freshly loaded panel:
     1. cells whose activity measure (covariate "TotalNumOfPaper" when
        present, otherwise the outcome) falls below min_cell_count are
        masked out (kDropCell) or condemn their unit (kDropUnit);
     2. treated units with fewer than min_pre observed pre-onset periods
        are dropped, as are units left with no observed cells;
     3. periods with no remaining observations are removed.
   Fails if no control unit survives. Idempotent. */
std::pair<PanelDataset, FilterReport> validate_and_filter(
    const PanelDataset& panel, int min_pre = 6, double min_cell_count = 0.0,
    CellFilterMode mode = CellFilterMode::kDropCell);

}  // namespace gapcast
