#include "gapcast/biblio.hpp"

#include "gapcast/errors.hpp"
#include "gapcast/text.hpp"
#include "gapcast/util.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace gapcast {

namespace {

using nlohmann::json;

/* Canonical form for affiliation comparison: lowercase, trimmed, internal
   whitespace collapsed to single spaces. */
std::string normalize_name(const std::string& s) {
  std::string out;
  bool in_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_space = !out.empty();
      continue;
    }
    if (in_space) out.push_back(' ');
    in_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

PaperRecord record_from_json(const json& j, const std::string& where) {
  require(j.is_object(), where + ": record is not a JSON object");
  for (const auto& key : {"id", "venue", "year", "title", "abstract",
                          "authors"})
    require(j.contains(key), where + ": missing field '" + std::string(key) + "'");
  PaperRecord rec;
  require(j["id"].is_string(), where + ": 'id' must be a string");
  rec.id = j["id"].get<std::string>();
  require(!rec.id.empty(), where + ": empty 'id'");
  require(j["venue"].is_string(), where + ": 'venue' must be a string");
  rec.venue = j["venue"].get<std::string>();
  require(j["year"].is_number_integer(), where + ": 'year' must be an integer");
  rec.year = j["year"].get<int>();
  require(j["title"].is_string(), where + ": 'title' must be a string");
  rec.title = j["title"].get<std::string>();
  require(j["abstract"].is_string(), where + ": 'abstract' must be a string");
  rec.abstract_text = j["abstract"].get<std::string>();
  require(j["authors"].is_array() && !j["authors"].empty(),
          where + ": record needs at least one author");
  for (const auto& a : j["authors"]) {
    require(a.is_object() && a.contains("name") && a.contains("affiliations"),
            where + ": author needs 'name' and 'affiliations'");
    Author author;
    author.name = a["name"].get<std::string>();
    require(a["affiliations"].is_array() && !a["affiliations"].empty(),
            where + ": author '" + author.name +
                "' needs at least one affiliation");
    for (const auto& aff : a["affiliations"]) {
      require(aff.is_string(), where + ": affiliations must be strings");
      author.affiliations.push_back(aff.get<std::string>());
    }
    rec.authors.push_back(std::move(author));
  }
  return rec;
}

}  // namespace

std::vector<PaperRecord> load_records(std::istream& in) {
  std::vector<PaperRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "records line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(where + ": invalid JSON: " + e.what());
    }
    PaperRecord rec = record_from_json(j, where);
    if (!seen_ids.insert(rec.id).second)
      fail(where + ": duplicate record id '" + rec.id + "'");
    records.push_back(std::move(rec));
  }
  require(!records.empty(), "records: no rows");
  return records;
}

std::vector<PaperRecord> load_records_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file: " + path);
  return load_records(in);
}

void write_records(std::ostream& out,
                   const std::vector<PaperRecord>& records) {
  for (const auto& rec : records) {
    json j;
    j["id"] = rec.id;
    j["venue"] = rec.venue;
    j["year"] = rec.year;
    j["title"] = rec.title;
    j["abstract"] = rec.abstract_text;
    j["authors"] = json::array();
    for (const auto& a : rec.authors)
      j["authors"].push_back({{"name", a.name},
                              {"affiliations", a.affiliations}});
    out << j.dump() << '\n';
  }
}

bool GroupDefinition::matches(const std::string& affiliation) const {
  const std::string norm = normalize_name(affiliation);
  for (const auto& m : members)
    if (normalize_name(m) == norm) return true;
  for (const auto& [alias, member] : aliases)
    if (normalize_name(alias) == norm) return true;
  return false;
}

namespace {

GroupDefinition group_from_json(const json& j, const std::string& where) {
  require(j.is_object() && j.contains("name") && j.contains("members"),
          where + ": group needs 'name' and 'members'");
  GroupDefinition g;
  g.name = j["name"].get<std::string>();
  require(!g.name.empty(), where + ": empty group name");
  require(j["members"].is_array() && !j["members"].empty(),
          where + ": group '" + g.name + "' needs at least one member");
  for (const auto& m : j["members"]) g.members.push_back(m.get<std::string>());
  if (j.contains("aliases")) {
    require(j["aliases"].is_object(), where + ": 'aliases' must be an object");
    for (const auto& [alias, member] : j["aliases"].items()) {
      const std::string target = member.get<std::string>();
      bool known = false;
      for (const auto& m : g.members)
        if (normalize_name(m) == normalize_name(target)) known = true;
      require(known, where + ": alias '" + alias +
                         "' points at unknown member '" + target + "'");
      g.aliases[alias] = target;
    }
  }
  return g;
}

}  // namespace

GroupDefinition load_group_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(path + ": invalid JSON: " + e.what());
  }
  return group_from_json(j, path);
}

std::vector<GroupDefinition> load_groups_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(path + ": invalid JSON: " + e.what());
  }
  std::vector<GroupDefinition> groups;
  if (j.is_object()) {
    groups.push_back(group_from_json(j, path));
  } else {
    require(j.is_array() && !j.empty(), path + ": expected group objects");
    for (size_t k = 0; k < j.size(); ++k)
      groups.push_back(group_from_json(j[k], path + " entry " +
                                                  std::to_string(k)));
  }
  std::set<std::string> names;
  for (const auto& g : groups)
    require(names.insert(g.name).second,
            path + ": duplicate group name '" + g.name + "'");
  return groups;
}

VenueYearTable count_simple(const std::vector<PaperRecord>& records,
                            const GroupDefinition& group) {
  VenueYearTable table;
  for (const auto& rec : records) {
    bool member = false;
    for (const auto& a : rec.authors) {
      for (const auto& aff : a.affiliations)
        if (group.matches(aff)) {
          member = true;
          break;
        }
      if (member) break;
    }
    if (member) table[rec.venue][rec.year] += 1.0;
  }
  return table;
}

std::map<std::string, VenueYearTable> count_weighted(
    const std::vector<PaperRecord>& records,
    const std::vector<GroupDefinition>& groups) {
  require(!groups.empty(), "count_weighted: no groups given");
  std::map<std::string, VenueYearTable> tables;
  for (const auto& g : groups) tables[g.name];
  tables["other"];
  for (const auto& rec : records) {
    const double author_weight = 1.0 / static_cast<double>(rec.authors.size());
    for (const auto& a : rec.authors) {
      const double weight =
          author_weight / static_cast<double>(a.affiliations.size());
      for (const auto& aff : a.affiliations) {
        const GroupDefinition* hit = nullptr;
        for (const auto& g : groups)
          if (g.matches(aff)) {
            hit = &g;
            break;  // groups are checked in caller order; first match wins
          }
        tables[hit ? hit->name : "other"][rec.venue][rec.year] += weight;
      }
    }
  }
  return tables;
}

VenueYearTable share_series(const std::vector<PaperRecord>& records,
                            const GroupDefinition& group) {
  const VenueYearTable counts = count_simple(records, group);
  VenueYearTable totals;
  for (const auto& rec : records) totals[rec.venue][rec.year] += 1.0;
  VenueYearTable shares;
  for (const auto& [venue, years] : totals)
    for (const auto& [year, total] : years) {
      double numer = 0.0;
      auto vit = counts.find(venue);
      if (vit != counts.end()) {
        auto yit = vit->second.find(year);
        if (yit != vit->second.end()) numer = yit->second;
      }
      shares[venue][year] = numer / total;
    }
  return shares;
}

std::vector<PaperRecord> filter_deep_learning(
    const std::vector<PaperRecord>& records,
    const std::vector<std::string>& keywords) {
  require(!keywords.empty(), "filter: empty keyword list");
  std::vector<PaperRecord> out;
  for (const auto& rec : records) {
    bool hit = false;
    for (const auto& kw : keywords)
      if (contains_keyword(rec.title, kw) ||
          contains_keyword(rec.abstract_text, kw)) {
        hit = true;
        break;
      }
    if (hit) out.push_back(rec);
  }
  return out;
}

std::vector<TfidfProfile> tfidf_profiles(
    const std::vector<std::vector<std::string>>& corpus,
    const std::vector<std::pair<std::string, std::vector<int>>>& groups) {
  require(!corpus.empty(), "tfidf: empty corpus");
  require(!groups.empty(), "tfidf: no groups given");
  const double n_docs = static_cast<double>(corpus.size());

  std::map<std::string, long> df;
  for (const auto& doc : corpus) {
    std::set<std::string> uniq(doc.begin(), doc.end());
    for (const auto& term : uniq) df[term] += 1;
  }

  std::vector<TfidfProfile> profiles;
  for (const auto& [name, doc_ids] : groups) {
    require(!doc_ids.empty(), "tfidf: group '" + name + "' has no documents");
    TfidfProfile prof;
    prof.group = name;
    double mass = 0.0;
    for (int id : doc_ids) {
      require(id >= 0 && id < static_cast<int>(corpus.size()),
              "tfidf: group '" + name + "' references a document outside the"
              " corpus");
      const auto& doc = corpus[id];
      if (doc.empty()) continue;
      std::map<std::string, long> counts;
      for (const auto& term : doc) counts[term] += 1;
      const double len = static_cast<double>(doc.size());
      for (const auto& [term, count] : counts) {
        const double tf = static_cast<double>(count) / len;
        const double idf = std::log(n_docs / static_cast<double>(df[term]));
        prof.scores[term] += tf * idf;
        mass += tf * idf;
      }
    }
    if (mass <= 0.0)
      fail("tfidf: group '" + name + "' has zero total tf-idf mass; every"
           " term in its documents appears in every corpus document");
    for (auto& [term, score] : prof.scores) score /= mass;
    profiles.push_back(std::move(prof));
  }
  return profiles;
}

std::vector<TfidfProfile> tfidf_by_group(
    const std::vector<PaperRecord>& records,
    const std::vector<GroupDefinition>& groups) {
  require(!records.empty(), "tfidf: no records");
  require(!groups.empty(), "tfidf: no groups given");

  std::vector<std::vector<std::string>> corpus;
  std::map<std::string, int> doc_of_id;
  std::vector<const PaperRecord*> doc_record;
  for (const auto& rec : records) {
    if (doc_of_id.count(rec.id)) continue;
    doc_of_id[rec.id] = static_cast<int>(corpus.size());
    corpus.push_back(preprocess_text(rec.abstract_text));
    doc_record.push_back(&rec);
  }

  std::vector<std::pair<std::string, std::vector<int>>> group_docs;
  for (const auto& g : groups) {
    std::vector<int> ids;
    for (size_t d = 0; d < doc_record.size(); ++d) {
      bool member = false;
      for (const auto& a : doc_record[d]->authors) {
        for (const auto& aff : a.affiliations)
          if (g.matches(aff)) {
            member = true;
            break;
          }
        if (member) break;
      }
      if (member) ids.push_back(static_cast<int>(d));
    }
    if (ids.empty())
      fail("tfidf: group '" + g.name + "' has no documents");
    group_docs.emplace_back(g.name, std::move(ids));
  }
  return tfidf_profiles(corpus, group_docs);
}

}  // namespace gapcast
