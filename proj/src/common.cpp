#include "gapcast/parallel.hpp"
#include "gapcast/util.hpp"

#include "gapcast/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gapcast {

int max_threads() {
  static const int cached = [] {
    // Eigen's own threading stays off so per-task work is sequential and
    // results do not depend on the worker count.
    Eigen::setNbThreads(1);
    int n = 1;
#ifdef _OPENMP
    n = omp_get_max_threads();
#endif
    if (const char* env = std::getenv("GAPCAST_THREADS")) {
      char* end = nullptr;
      long v = std::strtol(env, &end, 10);
      if (end && *end == '\0' && v > 0 && v < 4096) n = std::min<long>(n, v);
    }
    return n < 1 ? 1 : n;
  }();
  return cached;
}

namespace detail {

void run_parallel(std::int64_t n, void* ctx, void (*call)(void*, std::int64_t)) {
  std::exception_ptr first_error;
  std::mutex error_mutex;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      call(ctx, i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::string work = line;
  if (!work.empty() && work.back() == '\r') work.pop_back();
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t pos = work.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(work.substr(start));
      break;
    }
    fields.push_back(work.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  if (t.empty()) fail(context + ": empty numeric field");
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    fail(context + ": not a number: '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  if (t.empty()) fail(context + ": empty integer field");
  char* end = nullptr;
  long v = std::strtol(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size())
    fail(context + ": not an integer: '" + s + "'");
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write file: " + path);
  out << content;
  if (!out) fail("write failed: " + path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace gapcast
