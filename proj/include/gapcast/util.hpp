#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gapcast {

/* 17 significant digits, enough to round-trip an IEEE double. All numeric
   CSV output goes through this so artifacts are byte-stable. */
std::string fmt_double(double v);

std::string lowercase(const std::string& s);
std::string trim(const std::string& s);

/* Split one CSV line on commas. No quoting: field values must not contain
   commas. A trailing '\r' is stripped first. */
std::vector<std::string> split_csv(const std::string& line);

/* Strict numeric parsers; `context` names the location for error text. */
double parse_double(const std::string& s, const std::string& context);
long parse_long(const std::string& s, const std::string& context);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/* FNV-1a, 64 bit. Content digests for run manifests. */
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace gapcast
