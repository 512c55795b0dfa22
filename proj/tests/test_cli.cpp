#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "cpt/binary_io.hpp"
#include "cpt/grid.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(CPT_BIN_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("help and bad usage exit codes") {
  CHECK(run("--help") == 0);
  CHECK(run("train --help") == 0);
  CHECK(run("definitely-not-a-command") == 2);
  CHECK(run("train --no-such-flag") == 2);
  CHECK(run("train --inputs x.cptg --output-dir y") == 2);  // missing dates
}

TEST_CASE("missing files are data errors") {
  testutil::TempDir tmp("cpt_cli_missing");
  CHECK(run("ingest --input " + tmp.path() + "/nope.csv --output " + tmp.path() + "/o.cptg") == 3);
  CHECK(run("train --inputs " + tmp.path() + "/nope.cptg --output-dir " + tmp.path() +
            "/run --train-start 2000-01-01 --train-end 2000-03-01 --test-start 2000-03-02 "
            "--test-end 2000-03-10") == 3);
}

TEST_CASE("ingest: csv to store and back is bit-exact, with unit checks") {
  testutil::TempDir tmp("cpt_cli_ingest");
  const std::string csv = tmp.path() + "/in.csv";
  cpt::write_file(csv,
                  "time,lat,lon,field,value\n"
                  "2000-01-01T00:00:00Z,50,-4,precip,0\n"
                  "2000-01-01T00:00:00Z,50,-3.9,precip,1.25\n"
                  "2000-01-01T00:00:00Z,50.1,-4,precip,2.5\n"
                  "2000-01-01T00:00:00Z,50.1,-3.9,precip,0\n"
                  "2000-01-02T00:00:00Z,50,-4,precip,4.125\n"
                  "2000-01-02T00:00:00Z,50,-3.9,precip,0\n"
                  "2000-01-02T00:00:00Z,50.1,-4,precip,0.5\n"
                  "2000-01-02T00:00:00Z,50.1,-3.9,precip,3\n");
  const std::string store = tmp.path() + "/store.cptg";
  CHECK(run("ingest --input " + csv + " --output " + store + " --units precip=mm") == 0);
  CHECK(run("ingest --input " + store + " --output " + tmp.path() + "/out.csv") == 0);
  // the exported csv re-ingests to the identical store
  CHECK(run("ingest --input " + tmp.path() + "/out.csv --output " + tmp.path() +
            "/store2.cptg --units precip=mm") == 0);
  CHECK(cpt::read_file(store) == cpt::read_file(tmp.path() + "/store2.cptg"));

  SUBCASE("unit expectations") {
    CHECK(run("ingest --input " + store + " --output " + tmp.path() +
              "/o.cptg --expect-unit precip=mm") == 0);
    CHECK(run("ingest --input " + store + " --output " + tmp.path() +
              "/o.cptg --expect-unit precip=inches") == 3);
  }
  SUBCASE("malformed rows fail with a data error") {
    cpt::write_file(csv, "time,lat,lon,field,value\n2000-01-01T00:00:00Z,50,-4,precip\n");
    CHECK(run("ingest --input " + csv + " --output " + store) == 3);
  }
}

TEST_CASE("simulate / train / forecast / evaluate / report round trip") {
  testutil::TempDir tmp("cpt_cli_pipe");
  const std::string data_dir = tmp.path() + "/data";
  const std::string run_dir = tmp.path() + "/run";
  CHECK(run("simulate --output-dir " + data_dir +
            " --days 240 --rows 1 --cols 2 --inputs 2 --p 1 --q 1 --seed 7 --start 1995-01-01") ==
        0);
  CHECK(fs::exists(data_dir + "/data.cptg"));
  CHECK(fs::exists(data_dir + "/truth.json"));

  const std::string common =
      " --inputs " + data_dir + "/data.cptg --output-dir " + run_dir +
      " --train-start 1995-01-01 --train-end 1995-06-29 --test-start 1995-06-30 "
      "--test-end 1995-08-28 --p 1 --q 1 --n-steps 400 --burn-in 100 --members 25 "
      "--seed 11 --workers 2";
  CHECK(run("train" + common) == 0);
  CHECK(fs::exists(run_dir + "/config_used.txt"));
  CHECK(fs::exists(run_dir + "/archives/loc_r0_c0.arch"));
  CHECK(run("forecast" + common) == 0);
  CHECK(fs::exists(run_dir + "/forecasts/loc_r0_c1.ens"));
  // observations double as a perfect deterministic benchmark
  CHECK(run("evaluate" + common + " --benchmark " + data_dir + "/data.cptg --svg") == 0);
  CHECK(fs::exists(run_dir + "/evaluation/report.json"));
  CHECK(fs::exists(run_dir + "/evaluation/metrics.csv"));
  const auto report = nlohmann::json::parse(cpt::read_file(run_dir + "/evaluation/report.json"));
  CHECK(report.at("benchmark_bias").at("all").at("mab").get<double>() ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(run("report --run-dir " + run_dir) == 0);
  CHECK(fs::exists(run_dir + "/report.json"));

  SUBCASE("training is idempotent over existing archives") {
    CHECK(run("train" + common) == 0);
  }
  SUBCASE("a config file provides defaults that flags override") {
    const std::string cfg_path = tmp.path() + "/run.cfg";
    cpt::write_file(cfg_path, "[forecast]\nmembers=30\nseed=11\n");
    CHECK(run("forecast" + common + " --config " + cfg_path) == 0);
  }
}
