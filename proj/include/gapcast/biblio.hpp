#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gapcast {

struct Author {
  std::string name;
  std::vector<std::string> affiliations;  // at least one
};

struct PaperRecord {
  std::string id;     // unique within a record set
  std::string venue;
  int year = 0;
  std::string title;
  std::string abstract_text;
  std::vector<Author> authors;  // at least one
};

/* JSON-lines, one record per line with fields id, venue, year, title,
   abstract, authors[{name, affiliations[]}]. */
std::vector<PaperRecord> load_records(std::istream& in);
std::vector<PaperRecord> load_records_file(const std::string& path);
void write_records(std::ostream& out, const std::vector<PaperRecord>& records);

/* Named set of institutions. Matching is case-insensitive with collapsed
   whitespace; aliases map alternative spellings onto members. */
struct GroupDefinition {
  std::string name;
  std::vector<std::string> members;
  std::map<std::string, std::string> aliases;  // alias -> member

  bool matches(const std::string& affiliation) const;
};

GroupDefinition load_group_file(const std::string& path);
std::vector<GroupDefinition> load_groups_file(const std::string& path);

using YearTable = std::map<int, double>;
using VenueYearTable = std::map<std::string, YearTable>;

/* A paper counts once for the group if any author lists any matching
   affiliation, regardless of how many do. */
VenueYearTable count_simple(const std::vector<PaperRecord>& records,
                            const GroupDefinition& group);

/* Fractional counting: each author carries weight 1/n_authors, split
   evenly over that author's affiliations. Weights land on the first group
   (in the given order) matching the affiliation, or on "other". Per-paper
   weights sum to one. */
std::map<std::string, VenueYearTable> count_weighted(
    const std::vector<PaperRecord>& records,
    const std::vector<GroupDefinition>& groups);

/* Group share of papers per venue and year (counted-once numerator over
   the total paper count). Venue-years with no papers do not appear. */
VenueYearTable share_series(const std::vector<PaperRecord>& records,
                            const GroupDefinition& group);

/* Records whose title or abstract mentions any of the phrases, matched per
   contains_keyword. Input order is preserved. */
std::vector<PaperRecord> filter_deep_learning(
    const std::vector<PaperRecord>& records,
    const std::vector<std::string>& keywords);

struct TfidfProfile {
  std::string group;
  std::map<std::string, double> scores;  // normalized to sum 1 per group
};

/* Term profiles over pre-tokenized documents. `corpus` is every document
   in scope (it alone defines document frequencies); each group references
   corpus documents by index. Per group, term scores are the sum over its
   documents of term-frequency times ln(N / df), normalized to unit total
   mass over the group's terms. */
std::vector<TfidfProfile> tfidf_profiles(
    const std::vector<std::vector<std::string>>& corpus,
    const std::vector<std::pair<std::string, std::vector<int>>>& groups);

/* Record-level wrapper: abstracts are preprocessed into terms, duplicate
   ids collapse into one corpus document, and each group's documents are
   the records with at least one matching author affiliation. */
std::vector<TfidfProfile> tfidf_by_group(
    const std::vector<PaperRecord>& records,
    const std::vector<GroupDefinition>& groups);

}  // namespace gapcast
