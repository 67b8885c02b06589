#pragma once

#include "gapcast/biblio.hpp"
#include "gapcast/ife.hpp"
#include "gapcast/inference.hpp"
#include "gapcast/matrix_completion.hpp"
#include "gapcast/panel.hpp"
#include "gapcast/simgen.hpp"
#include "gapcast/twfe.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace gapcast {

/* JSON forms of the result types. Key order is alphabetical (nlohmann
   object ordering), floats use the library's round-trip formatting, NaN
   serializes as null; output is deterministic byte for byte. */
nlohmann::json to_json(const FilterReport& report);
nlohmann::json to_json(const FactorModelFit& fit, const PanelDataset& panel);
nlohmann::json to_json(const AttResult& att, double ci_level);
nlohmann::json to_json(const CvResult& cv);
nlohmann::json to_json(const PlaceboReport& report, double ci_level);
nlohmann::json to_json(const RegressionFit& fit);
nlohmann::json to_json(const GroundTruth& truth);

DgpSpec dgp_spec_from_json(const nlohmann::json& j);
DgpSpec load_dgp_spec_file(const std::string& path);

/* CSV artifact bodies. All numbers go through fmt_double. */
std::string att_by_period_csv(const AttResult& att);
std::string replicates_csv(const AttResult& att);
std::string cv_table_csv(const McResult& mc);
std::string venue_year_csv(const VenueYearTable& table);
std::string tfidf_csv(const TfidfProfile& profile);

/* Per-period treated means against the counterfactual
   (observed_vs_counterfactual.csv) and the gap series with interval bounds
   where available (gap.csv). Covers every period with at least one
   observed treated cell, pre-onset included. */
std::string observed_vs_counterfactual_csv(const PanelDataset& panel,
                                           const Eigen::MatrixXd& counterfactual);
std::string gap_series_csv(const PanelDataset& panel,
                           const Eigen::MatrixXd& counterfactual,
                           const AttResult& att);

/* Run manifest: subcommand, arguments, content digests of every input
   file, names of the written outputs, toolkit version. No timestamps, so
   reruns are byte-identical. */
nlohmann::json run_manifest(const std::string& subcommand,
                            const std::vector<std::string>& args,
                            const std::vector<std::string>& input_paths,
                            const std::vector<std::string>& output_names);

extern const char* kToolkitVersion;

}  // namespace gapcast
