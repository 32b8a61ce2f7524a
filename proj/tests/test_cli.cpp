#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "spreadcert/randmodels.hpp"

#ifndef SPREADCERT_CLI_PATH
#error "SPREADCERT_CLI_PATH must point at the built binary"
#endif

namespace {

using nlohmann::json;

int run(const std::string& args) {
  const std::string cmd =
      std::string(SPREADCERT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

json run_json(const std::string& args, int expected_exit, const char* out_file) {
  const std::string cmd = std::string(SPREADCERT_CLI_PATH) + " " + args +
                          " --out " + out_file + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WEXITSTATUS(status) == expected_exit);
  std::ifstream is(out_file);
  REQUIRE(is.good());
  json j;
  is >> j;
  return j;
}

json strip_timings(json j) {
  j.erase("timings_ms");
  return j;
}

}  // namespace

TEST_CASE("certify runs end to end and reports a certificate") {
  const json j = run_json("certify --n 60 --d 3 --t 2 --seed 7", 0, "cli_c.json");
  CHECK(j["certificate"]["verdict"] == "certified");
  CHECK(j["certificate"]["alpha"].get<double>() > 0.0);
  CHECK(j.contains("version"));
  CHECK(j.contains("seed"));
  CHECK(j.contains("timings_ms"));
  std::filesystem::remove("cli_c.json");
}

TEST_CASE("certify validates the shape") {
  CHECK(run("certify --n 10 --d 20 --t 1") == 1);
}

TEST_CASE("reports are byte-identical modulo timing fields") {
  const json a = run_json("certify --n 40 --d 3 --t 1 --seed 3", 0, "cli_a.json");
  const json b = run_json("certify --n 40 --d 3 --t 1 --seed 3", 0, "cli_b.json");
  CHECK(strip_timings(a).dump() == strip_timings(b).dump());
  std::filesystem::remove("cli_a.json");
  std::filesystem::remove("cli_b.json");
}

TEST_CASE("recover reports overlap for self-generated instances") {
  const json j = run_json(
      "recover --n 300 --d 8 --t 1 --rho 0.03 --sigma 0.1 --restarts 4 --seed 3",
      0, "cli_r.json");
  CHECK(j.contains("overlap"));
  CHECK(j["result"]["score"].get<double>() > 0.0);
  CHECK(j["result"]["candidates"].size() == 4);
  std::filesystem::remove("cli_r.json");
}

TEST_CASE("recover validates restart counts") {
  CHECK(run("recover --n 100 --d 5 --t 1 --rho 0.05 --restarts 0") == 1);
}

TEST_CASE("blind instances omit the overlap but keep the score") {
  CHECK(run("recover --n 200 --d 6 --t 1 --rho 0.05 --sigma 0.1 --restarts 2 "
            "--seed 9 --save-instance cli_inst.bin --strip-eval") == 0);
  const json j = run_json("recover --instance cli_inst.bin --t 1 --restarts 2 "
                          "--seed 9",
                          0, "cli_blind.json");
  CHECK_FALSE(j.contains("overlap"));
  CHECK(j["blind"] == true);
  CHECK(j["result"].contains("score"));
  std::filesystem::remove("cli_inst.bin");
  std::filesystem::remove("cli_blind.json");
}

TEST_CASE("instances with evaluation blocks feed the post-hoc overlap") {
  CHECK(run("recover --n 200 --d 6 --t 1 --rho 0.05 --sigma 0.1 --restarts 2 "
            "--seed 9 --save-instance cli_inst2.bin") == 0);
  const json j = run_json("recover --instance cli_inst2.bin --t 1 --restarts 2 "
                          "--seed 9",
                          0, "cli_eval.json");
  CHECK(j.contains("overlap"));
  CHECK(j["blind"] == false);
  std::filesystem::remove("cli_inst2.bin");
  std::filesystem::remove("cli_eval.json");
}

TEST_CASE("trace oracle enforces even exponents") {
  CHECK(run("oracle-trace --n 50 --d 4 --t 1 --ell 3 --replicates 2") == 1);
}

TEST_CASE("trace oracle emits the sweep table row") {
  std::filesystem::remove("cli_table.tsv");
  const json j = run_json(
      "oracle-trace --n 50 --d 4 --t 1 --ell 2 --replicates 3 --seed 2 "
      "--table cli_table.tsv",
      0, "cli_t.json");
  CHECK(j["trace"]["normalized_rate"].get<double>() > 0.0);
  std::ifstream table("cli_table.tsv");
  std::string header, row;
  REQUIRE(std::getline(table, header));
  REQUIRE(std::getline(table, row));
  CHECK(header.rfind("n\td\tt\tell", 0) == 0);
  std::filesystem::remove("cli_table.tsv");
  std::filesystem::remove("cli_t.json");
}

TEST_CASE("net oracle stays inside the universal distortion range") {
  const json j =
      run_json("oracle-net --n 50 --d 2 --resolution 0.001 --seed 5", 0,
               "cli_n.json");
  const double lower = j["net"]["lower"].get<double>();
  const double upper = j["net"]["upper"].get<double>();
  CHECK(lower >= 1.0);
  CHECK(upper <= std::sqrt(50.0) + 1e-9);
  std::filesystem::remove("cli_n.json");
}

TEST_CASE("net oracle refuses high dimensions with exit 1") {
  CHECK(run("oracle-net --n 50 --d 4 --resolution 0.01") == 1);
}

TEST_CASE("ablation oracle reports ratios") {
  const json j = run_json(
      "oracle-ablation --n 60 --d 6 --t 1 --replicates 3 --seed 4", 0,
      "cli_ab.json");
  CHECK(j["ablation"]["median_ratio"].get<double>() >= 1.0);
  std::filesystem::remove("cli_ab.json");
}

TEST_CASE("a spiked basis yields exit code 2, distinct from errors") {
  // build a matrix the certifier must reject and hand it over via the
  // instance container
  spreadcert::randmodels::PlantedInstance inst;
  inst.n = 200;
  inst.d = 10;
  inst.seed = 1;
  inst.A_tilde = spreadcert::randmodels::sample_gaussian(200, 10, 1.0, 55);
  inst.A_tilde.col(0).setZero();
  inst.A_tilde(0, 0) = std::sqrt(200.0);
  spreadcert::randmodels::save_instance("cli_spiked.bin", inst,
                                        /*strip_eval=*/true);
  const json j = run_json("certify --instance cli_spiked.bin --t 2 --seed 1",
                          2, "cli_notcert.json");
  CHECK(j["certificate"]["verdict"] == "not-certified");
  std::filesystem::remove("cli_spiked.bin");
  std::filesystem::remove("cli_notcert.json");
}

TEST_CASE("relative output paths resolve under the data directory") {
  std::filesystem::create_directories("cli_data_dir");
  const std::string cmd = "SPREADCERT_DATA_DIR=cli_data_dir " +
                          std::string(SPREADCERT_CLI_PATH) +
                          " certify --n 30 --d 2 --t 1 --seed 1 "
                          "--out env_report.json > /dev/null 2>&1";
  std::system(cmd.c_str());
  CHECK(std::filesystem::exists("cli_data_dir/env_report.json"));
  std::filesystem::remove_all("cli_data_dir");
}

TEST_CASE("errors carry a machine-readable reason") {
  const std::string cmd = std::string(SPREADCERT_CLI_PATH) +
                          " certify --n 10 --d 20 --t 1 --out cli_err.json "
                          "> /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 1);
  std::ifstream is("cli_err.json");
  json j;
  is >> j;
  CHECK(j.contains("error"));
  CHECK(j["error"].contains("type"));
  CHECK(j["error"].contains("message"));
  std::filesystem::remove("cli_err.json");
}
