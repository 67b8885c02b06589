#include "gapcast/ife.hpp"
#include "gapcast/inference.hpp"
#include "gapcast/parallel.hpp"
#include "gapcast/simgen.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

/* Times the parallel kernels against their serial reference paths on a
   synthetic benchmark panel and checks that both produce identical bits. */

namespace {

using namespace gapcast;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  int n_units = 57, n_treated = 10, n_periods = 20, replicates = 200;
  int r = 2, r_max = 4;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (!std::strcmp(argv[i], "--units")) n_units = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--treated")) n_treated = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--periods")) n_periods = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--replicates")) replicates = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--r")) r = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--r-max")) r_max = std::atoi(argv[i + 1]);
    else {
      std::fprintf(stderr, "unknown flag %s\n", argv[i]);
      return 1;
    }
  }

  DgpSpec spec;
  spec.seed = 7;
  spec.n_units = n_units;
  spec.n_treated = n_treated;
  spec.n_periods = n_periods;
  spec.r_true = r;
  spec.confound = 1.0;
  auto [panel, truth] = gen_panel(spec);

  std::printf("panel: %d units (%d treated), %d periods, workers=%d\n",
              n_units, n_treated, n_periods, max_threads());

  BootstrapSpec boot;
  boot.replicates = replicates;
  boot.seed = 42;

  const std::vector<std::string> covs = {"x1"};

  auto t0 = clock_type::now();
  const AttResult serial_boot =
      bootstrap_att(panel, r, covs, boot, ExecMode::kSerial);
  const double boot_serial_s = seconds_since(t0);

  t0 = clock_type::now();
  const AttResult parallel_boot =
      bootstrap_att(panel, r, covs, boot, ExecMode::kParallel);
  const double boot_parallel_s = seconds_since(t0);

  bool boot_same = serial_boot.replicates.size() == parallel_boot.replicates.size();
  for (size_t b = 0; boot_same && b < serial_boot.replicates.size(); ++b)
    boot_same = serial_boot.replicates[b] == parallel_boot.replicates[b];

  std::printf("bootstrap (%d replicates): serial %.3fs, parallel %.3fs,"
              " speedup %.2fx, identical: %s\n",
              replicates, boot_serial_s, boot_parallel_s,
              boot_serial_s / boot_parallel_s, boot_same ? "yes" : "NO");

  t0 = clock_type::now();
  const CvResult serial_cv = choose_r(panel, r_max, covs, ExecMode::kSerial);
  const double cv_serial_s = seconds_since(t0);

  t0 = clock_type::now();
  const CvResult parallel_cv = choose_r(panel, r_max, covs, ExecMode::kParallel);
  const double cv_parallel_s = seconds_since(t0);

  bool cv_same = serial_cv.chosen_r == parallel_cv.chosen_r;
  for (const auto& [rr, mspe] : serial_cv.mspe_by_r)
    cv_same = cv_same && parallel_cv.mspe_by_r.at(rr) == mspe;

  std::printf("rank selection (0..%d): serial %.3fs, parallel %.3fs,"
              " speedup %.2fx, identical: %s\n",
              r_max, cv_serial_s, cv_parallel_s, cv_serial_s / cv_parallel_s,
              cv_same ? "yes" : "NO");

  return boot_same && cv_same ? 0 : 1;
}
