#pragma once

#include <set>
#include <string>
#include <vector>

namespace gapcast {

/* Lowercased maximal runs of ASCII alphanumerics; everything else splits. */
std::vector<std::string> tokenize(const std::string& text);

/* Porter's suffix-stripping algorithm (1980 definition with the published
   departures). Input must already be lowercase. */
std::string porter_stem(const std::string& word);

/* English function words removed before stemming. */
const std::set<std::string>& stopwords();

/* tokenize -> drop stopwords -> stem, then emit the stemmed unigrams
   followed by bigrams of adjacent survivors joined with '_'. */
std::vector<std::string> preprocess_text(const std::string& text);

/* Deep-learning phrase list bundled with the toolkit, one phrase per line
   in data/dl_keywords.txt; this is the in-code copy. */
const std::vector<std::string>& deep_learning_keywords();

/* Case-insensitive phrase match. Phrases shorter than 5 characters only
   match at token boundaries (so "GAN" does not hit "organ"); longer ones
   match as substrings. */
bool contains_keyword(const std::string& text, const std::string& keyword);

}  // namespace gapcast
