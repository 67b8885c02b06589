#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kWorkedPanel =
    "unit,period,outcome,treated_since\n"
    "u1,1,1,\nu1,2,2,\nu1,3,3,\nu1,4,4,\n"
    "u2,1,3,\nu2,2,4,\nu2,3,5,\nu2,4,6,\n"
    "u3,1,2,3\nu3,2,3,3\nu3,3,10,3\nu3,4,11,3\n";

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("gapcast_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/* Runs the tool from `cwd` so the command line can use relative paths; the
   manifest records arguments verbatim, so byte-stable reruns need them. */
int run_cli(const fs::path& cwd, const std::string& args,
            const std::string& env = "") {
  std::string cmd = "cd '" + cwd.string() + "' && " + env +
                    (env.empty() ? "" : " ") + "'" GAPCAST_CLI_PATH "' " +
                    args + " >cli_stdout.txt 2>cli_stderr.txt";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

std::string stderr_of(const fs::path& cwd) {
  return read_file(cwd / "cli_stderr.txt");
}

/* Byte-compares every regular file, both directions. */
void check_dirs_equal(const fs::path& a, const fs::path& b) {
  std::set<std::string> names_a, names_b;
  for (const auto& entry : fs::directory_iterator(a))
    names_a.insert(entry.path().filename().string());
  for (const auto& entry : fs::directory_iterator(b))
    names_b.insert(entry.path().filename().string());
  CHECK(names_a == names_b);
  for (const auto& name : names_a) {
    INFO("file: " << name);
    CHECK(read_file(a / name) == read_file(b / name));
  }
}

fs::path golden(const std::string& name) {
  return fs::path(GAPCAST_GOLDEN_DIR) / name;
}

}  // namespace

TEST_CASE("usage mistakes exit 1 without writing artifacts") {
  fs::path dir = fresh_dir("usage");
  CHECK(run_cli(dir, "") == 1);
  CHECK(run_cli(dir, "--frobnicate") == 1);
  CHECK(run_cli(dir, "no-such-command") == 1);
  CHECK(run_cli(dir, "estimate --method gsc") == 1);  // missing required
  CHECK(run_cli(dir, "--help") == 0);

  int artifacts = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name != "cli_stdout.txt" && name != "cli_stderr.txt") ++artifacts;
  }
  CHECK(artifacts == 0);
}

TEST_CASE("data problems exit 2 with a diagnostic") {
  fs::path dir = fresh_dir("data_errors");
  CHECK(run_cli(dir, "validate --panel missing.csv --out out") == 2);
  CHECK(stderr_of(dir).find("error:") != std::string::npos);

  write_file(dir / "panel.csv", kWorkedPanel);
  CHECK(run_cli(dir,
                "estimate --method nope --panel panel.csv --out out") == 2);
  CHECK(stderr_of(dir).find("nope") != std::string::npos);

  CHECK(run_cli(dir, "placebo --panel panel.csv --out out --kind time"
                     " --shift 7 --r 0") == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("validate filters the panel and reports what it dropped") {
  fs::path dir = fresh_dir("validate");
  write_file(dir / "panel.csv", kWorkedPanel);
  REQUIRE(run_cli(dir, "validate --panel panel.csv --out out --min-pre 2") ==
          0);

  json report = json::parse(read_file(dir / "out" / "report.json"));
  CHECK(report["n_units"].get<int>() == 3);
  CHECK(report["dropped_units"].empty());

  json manifest = json::parse(read_file(dir / "out" / "manifest.json"));
  CHECK(manifest["subcommand"] == "validate");
  CHECK(manifest["inputs"].size() == 1);
  CHECK(manifest["inputs"].contains("panel.csv"));
  CHECK(manifest["toolkit"] == "gapcast");
  std::set<std::string> outputs;
  for (const auto& o : manifest["outputs"]) outputs.insert(o.get<std::string>());
  CHECK(outputs.count("report.json") == 1);
  CHECK(outputs.count("panel.csv") == 1);
  CHECK(outputs.count("manifest.json") == 1);

  // The surviving panel is unchanged here and still loads.
  CHECK(read_file(dir / "out" / "panel.csv") == kWorkedPanel);
}

TEST_CASE("gsc estimate matches the closed-form two-way example") {
  fs::path dir = fresh_dir("gsc_worked");
  write_file(dir / "panel.csv", kWorkedPanel);
  REQUIRE(run_cli(dir,
                  "estimate --method gsc --panel panel.csv --r 0"
                  " --out gsc_worked") == 0);

  json att = json::parse(read_file(dir / "gsc_worked" / "att.json"));
  CHECK(att["att"].get<double>() == doctest::Approx(6.0).epsilon(1e-8));
  CHECK(att["att_by_period"]["3"].get<double>() ==
        doctest::Approx(6.0).epsilon(1e-8));

  std::string ovc = read_file(dir / "gsc_worked" /
                              "observed_vs_counterfactual.csv");
  CHECK(ovc.find("3,10,4\n") != std::string::npos);
  CHECK(ovc.find("4,11,5\n") != std::string::npos);

  check_dirs_equal(dir / "gsc_worked", golden("gsc_worked"));
}

TEST_CASE("simulate reproduces the bundled golden panel") {
  fs::path dir = fresh_dir("simulate");
  write_file(dir / "dgp_small.json", read_file(golden("dgp_small.json")));
  REQUIRE(run_cli(dir, "simulate --spec dgp_small.json --out simulate_small")
          == 0);
  check_dirs_equal(dir / "simulate_small", golden("simulate_small"));

  // Rerun into a sibling tree: byte-identical.
  fs::path dir2 = fresh_dir("simulate_rerun");
  write_file(dir2 / "dgp_small.json", read_file(golden("dgp_small.json")));
  REQUIRE(run_cli(dir2, "simulate --spec dgp_small.json --out simulate_small")
          == 0);
  check_dirs_equal(dir / "simulate_small", dir2 / "simulate_small");
}

TEST_CASE("bootstrap estimate is byte-stable across thread counts") {
  auto prep = [](const std::string& name) {
    fs::path dir = fresh_dir(name);
    write_file(dir / "sim_panel.csv",
               read_file(golden("simulate_small") / "panel.csv"));
    return dir;
  };
  const std::string args =
      "estimate --method gsc --panel sim_panel.csv --r-max 3 --bootstrap 150"
      " --seed 7 --dump-replicates --out gsc_boot";

  fs::path dir = prep("boot");
  REQUIRE(run_cli(dir, args) == 0);
  check_dirs_equal(dir / "gsc_boot", golden("gsc_boot"));

  fs::path serial = prep("boot_t1");
  REQUIRE(run_cli(serial, args, "GAPCAST_THREADS=1") == 0);
  check_dirs_equal(serial / "gsc_boot", golden("gsc_boot"));

  fs::path wide = prep("boot_t4");
  REQUIRE(run_cli(wide, args, "GAPCAST_THREADS=4") == 0);
  check_dirs_equal(wide / "gsc_boot", golden("gsc_boot"));

  json cv = json::parse(read_file(dir / "gsc_boot" / "cv.json"));
  CHECK(cv["chosen_r"].get<int>() == 2);
  json att = json::parse(read_file(dir / "gsc_boot" / "att.json"));
  CHECK(att["lo"].get<double>() < 5.0);
  CHECK(5.0 < att["hi"].get<double>());
  CHECK(att["n_replicates"].get<int>() == 150);
}

TEST_CASE("mc estimate is deterministic and writes its selection table") {
  auto run_once = [](const std::string& name) {
    fs::path dir = fresh_dir(name);
    write_file(dir / "sim_panel.csv",
               read_file(golden("simulate_small") / "panel.csv"));
    REQUIRE(run_cli(dir,
                    "estimate --method mc --panel sim_panel.csv --seed 3"
                    " --out out",
                    name == "mc_t4" ? "GAPCAST_THREADS=4"
                                    : "GAPCAST_THREADS=1") == 0);
    return dir;
  };
  fs::path a = run_once("mc_t1");
  fs::path b = run_once("mc_t4");
  check_dirs_equal(a / "out", b / "out");

  json completion = json::parse(read_file(a / "out" / "completion.json"));
  CHECK(completion["chosen_lambda"].get<double>() > 0.0);
  CHECK(completion["rank"].get<int>() >= 0);

  std::string table = read_file(a / "out" / "cv_table.csv");
  CHECK(table.find("lambda") != std::string::npos);
  json att = json::parse(read_file(a / "out" / "att.json"));
  CHECK(std::abs(att["att"].get<double>()) < 20.0);
}

TEST_CASE("twfe estimate emits a coefficient table") {
  fs::path dir = fresh_dir("twfe");
  write_file(dir / "panel.csv", kWorkedPanel);
  write_file(dir / "compute.csv",
             "period,compute\n1,10\n2,25\n3,55\n4,110\n");
  REQUIRE(run_cli(dir,
                  "estimate --method twfe --panel panel.csv"
                  " --compute compute.csv --out out") == 0);
  std::string table = read_file(dir / "out" / "table.txt");
  CHECK(table.find("shock_x_compute") != std::string::npos);
  json fit = json::parse(read_file(dir / "out" / "fit.json"));
  CHECK(fit["n"].get<int>() == 12);
  CHECK(fit["coefficients"].contains("compute"));
}

TEST_CASE("placebo runs produce bounded p-values") {
  fs::path dir = fresh_dir("placebo");
  write_file(dir / "sim_panel.csv",
             read_file(golden("simulate_small") / "panel.csv"));

  REQUIRE(run_cli(dir,
                  "placebo --panel sim_panel.csv --kind time --shift 3 --r 2"
                  " --bootstrap 120 --seed 4 --out out_time") == 0);
  json time_report = json::parse(read_file(dir / "out_time" / "placebo.json"));
  CHECK(time_report["kind"] == "in-time");
  double p = time_report["p_value"].get<double>();
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);

  REQUIRE(run_cli(dir,
                  "placebo --panel sim_panel.csv --kind space"
                  " --pseudo-treated C01,C02 --onset 10 --r 2"
                  " --bootstrap 120 --seed 4 --out out_space") == 0);
  json space_report =
      json::parse(read_file(dir / "out_space" / "placebo.json"));
  CHECK(space_report["kind"] == "in-space");
  CHECK(space_report["p_value"].get<double>() >= 0.0);
}

TEST_CASE("simulate feeds estimate end to end") {
  fs::path dir = fresh_dir("roundtrip");
  write_file(dir / "dgp_small.json", read_file(golden("dgp_small.json")));
  REQUIRE(run_cli(dir, "simulate --spec dgp_small.json --out sim") == 0);
  REQUIRE(run_cli(dir, "estimate --method gsc --panel sim/panel.csv --r 2"
                       " --out est") == 0);
  json att = json::parse(read_file(dir / "est" / "att.json"));
  CHECK(std::abs(att["att"].get<double>() - 5.0) < 1.0);

  json truth = json::parse(read_file(dir / "sim" / "ground_truth.json"));
  CHECK(truth["tau_path"].size() == 5);
}

TEST_CASE("bibliometric commands write per-group tables") {
  fs::path dir = fresh_dir("biblio");
  write_file(
      dir / "records.jsonl",
      R"({"id":"p1","venue":"V","year":2012,"title":"Deep learning wins","abstract":"a convolutional neural network","authors":[{"name":"A","affiliations":["Google"]}]})"
      "\n"
      R"({"id":"p2","venue":"V","year":2012,"title":"Graph cuts","abstract":"combinatorial methods","authors":[{"name":"B","affiliations":["NYU"]}]})"
      "\n"
      R"({"id":"p3","venue":"V","year":2013,"title":"More nets","abstract":"deep learning at scale","authors":[{"name":"C","affiliations":["Google","NYU"]}]})"
      "\n");
  write_file(dir / "groups.json",
             R"([{"name":"tech","members":["Google"]},)"
             R"({"name":"univ","members":["NYU"]}])");

  REQUIRE(run_cli(dir, "counts --records records.jsonl --groups groups.json"
                       " --out counts") == 0);
  std::string tech = read_file(dir / "counts" / "counts_tech.csv");
  CHECK(tech.find("venue,year,value") != std::string::npos);
  CHECK(tech.find("V,2012,1\n") != std::string::npos);
  CHECK(tech.find("V,2013,1\n") != std::string::npos);

  REQUIRE(run_cli(dir, "counts --records records.jsonl --groups groups.json"
                       " --weighted --out wcounts") == 0);
  CHECK(fs::exists(dir / "wcounts" / "counts_other.csv"));
  std::string wtech = read_file(dir / "wcounts" / "counts_tech.csv");
  CHECK(wtech.find("V,2013,0.5\n") != std::string::npos);

  REQUIRE(run_cli(dir, "shares --records records.jsonl --groups groups.json"
                       " --out shares") == 0);
  std::string shares = read_file(dir / "shares" / "shares_tech.csv");
  CHECK(shares.find("V,2012,0.5\n") != std::string::npos);
  CHECK(shares.find("V,2013,1\n") != std::string::npos);

  REQUIRE(run_cli(dir, "filter-dl --records records.jsonl --out dl") == 0);
  std::string kept = read_file(dir / "dl" / "filtered.jsonl");
  CHECK(kept.find("\"p1\"") != std::string::npos);
  CHECK(kept.find("\"p3\"") != std::string::npos);
  CHECK(kept.find("\"p2\"") == std::string::npos);

  REQUIRE(run_cli(dir, "tfidf --records records.jsonl --groups groups.json"
                       " --out tfidf") == 0);
  std::string profile = read_file(dir / "tfidf" / "tfidf_tech.csv");
  CHECK(profile.find("term,score") != std::string::npos);

  // Rerunning with identical arguments from a sibling tree is byte-identical,
  // manifest included.
  fs::path dir2 = fresh_dir("biblio_rerun");
  write_file(dir2 / "records.jsonl", read_file(dir / "records.jsonl"));
  write_file(dir2 / "groups.json", read_file(dir / "groups.json"));
  REQUIRE(run_cli(dir2, "counts --records records.jsonl --groups groups.json"
                        " --out counts") == 0);
  check_dirs_equal(dir / "counts", dir2 / "counts");
}
