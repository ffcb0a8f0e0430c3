#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "vbcast/operators.hpp"
#include "vbcast/sampling.hpp"

// Drives the installed command line binary end to end. The test runner
// exports the binary location through VBCAST_CLI; see tests/CMakeLists.txt.

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

const char* cli_path() {
  const char* path = std::getenv("VBCAST_CLI");
  REQUIRE_MESSAGE(path != nullptr, "VBCAST_CLI must point at the vbcast binary");
  return path;
}

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  std::string cmd = env_prefix;
  if (!cmd.empty()) cmd += ' ';
  cmd += '"';
  cmd += cli_path();
  cmd += "\" ";
  cmd += args;
  cmd += " 2>/dev/null";

  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t got = 0;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) result.out.append(buf, got);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text) {
    if (c == '\n') ++lines;
  }
  return lines;
}

std::string write_identity_config(std::uint64_t seed) {
  Eigen::MatrixXcd plus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  Eigen::MatrixXcd pauli_z(2, 2);
  pauli_z << 1.0, 0.0, 0.0, -1.0;
  vbcast::ExperimentConfig config{vbcast::identity_decomposition(2),
                                  vbcast::MultipartiteOperator(plus, {2}),
                                  vbcast::MultipartiteOperator(pauli_z, {2})};
  config.shots = 2000;
  config.repetitions = 3;
  config.seed = seed;

  std::string path = "cli_config_" + std::to_string(::getpid()) + ".json";
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << vbcast::to_json_string(config, 2);
  return path;
}

}  // namespace

TEST_CASE("overhead prints the pinned scalar examples") {
  const CliResult exact = run_cli("overhead exact --d 2");
  CHECK(exact.exit_code == 0);
  CHECK(first_line(exact.out) == "1.66666666667");

  const CliResult heralded = run_cli("overhead pbc --d 2 --n 6 --p 1");
  CHECK(heralded.exit_code == 0);
  CHECK(first_line(heralded.out) == "2.42857142857");

  const CliResult noisy = run_cli("overhead abc --d 2 --eps1 0.1 --eps2 0.1");
  CHECK(noisy.exit_code == 0);
  CHECK(first_line(noisy.out) == "1.4");
  CHECK(noisy.out.find("method: closed_form") != std::string::npos);
}

TEST_CASE("overhead cross checks its oracles under --verify") {
  const CliResult abc = run_cli("overhead abc --d 2 --eps 0.1 --verify");
  CHECK(abc.exit_code == 0);
  CHECK(abc.out.find("oracle theta_search:") != std::string::npos);
  CHECK(abc.out.find("oracle sdp_oracle:") != std::string::npos);
  CHECK(abc.out.find("max deviation") != std::string::npos);

  const CliResult pbc = run_cli("overhead pbc --d 2 --n 2 --p 0.5 --verify --json");
  CHECK(pbc.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(pbc.out);
  CHECK(j.at("verified").get<bool>());
  CHECK(j.at("method").get<std::string>() == "closed_form");
  CHECK(j.at("oracles").size() == 2);
  CHECK(j.at("max_deviation").get<double>() < 1e-5);

  // An impossible tolerance flips the same run into a verification failure.
  const CliResult strict = run_cli("overhead pbc --d 2 --n 2 --p 0.5 --verify --tol 1e-12");
  CHECK(strict.exit_code == 1);
}

TEST_CASE("overhead rejects invalid parameters with a usage error") {
  CHECK(run_cli("overhead exact --d 1").exit_code == 2);
  CHECK(run_cli("overhead abc --d 2 --eps 0.1 --eps1 0.2").exit_code == 2);
  CHECK(run_cli("overhead pbc --d 2 --n 6 --p 1.5").exit_code == 2);
  CHECK(run_cli("overhead wat --d 2").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
}

TEST_CASE("region emits a byte stable CSV with the versioned header") {
  const std::string args = "region abc --d 2 --grid 0:0.3:4";
  const CliResult a = run_cli(args);
  const CliResult b = run_cli(args);
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);

  CHECK(first_line(a.out) == "# vbcast-region v1");
  CHECK(a.out.find("\neps1,eps2,overhead,rate,se\n") != std::string::npos);
  CHECK(count_lines(a.out) == 2 + 16);
  // Noiseless corner is inefficient, the eps = 0.3 corner is efficient.
  CHECK(a.out.find("\n0,0,1.66666666667,0.36,0\n") != std::string::npos);
  CHECK(a.out.find("\n0.3,0.3,1,0.7,1\n") != std::string::npos);
}

TEST_CASE("region routes wide grids through the solver and respects its caps") {
  const CliResult sdp = run_cli("region abc --d 2 --n 3 --grid 0:0.2:2");
  CHECK(sdp.exit_code == 0);
  CHECK(count_lines(sdp.out) == 2 + 2);

  CHECK(run_cli("region abc --d 2 --n 5 --grid 0:0.2:2").exit_code == 2);
  CHECK(run_cli("region abc --d 2 --grid 0:0.2").exit_code == 2);
  CHECK(run_cli("region abc --d 2 --grid 0.2:0.1:3").exit_code == 2);
}

TEST_CASE("region sweeps heralding probabilities for the probabilistic kind") {
  const CliResult sweep = run_cli("region pbc --d 2 --n 6 --grid 0.25:1:4");
  CHECK(sweep.exit_code == 0);
  CHECK(first_line(sweep.out) == "# vbcast-region v1");
  CHECK(sweep.out.find("\np,overhead,nprob,se\n") != std::string::npos);
  CHECK(count_lines(sweep.out) == 2 + 4);
  CHECK(sweep.out.find("\n1,2.42857142857,5.89795918367,1\n") != std::string::npos);
}

TEST_CASE("min-n tabulates the efficiency onset per dimension") {
  const CliResult table = run_cli("min-n --d 2:4 --p 1");
  CHECK(table.exit_code == 0);
  CHECK(table.out == "2 6\n3 20\n4 42\n");

  const CliResult none = run_cli("min-n --d 2 --p 0.001");
  CHECK(none.exit_code == 0);
  CHECK(none.out == "2 none\n");

  CHECK(run_cli("min-n --d 2 --p 0").exit_code == 2);
  CHECK(run_cli("min-n --d 1:3 --p 1").exit_code == 2);
}

TEST_CASE("verify reports a JSON suite and maps failures to exit codes") {
  const CliResult pass = run_cli("verify closed-forms");
  CHECK(pass.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(pass.out);
  CHECK(j.at("suite").get<std::string>() == "closed-forms");
  CHECK(j.at("passed").get<bool>());
  CHECK(j.at("criteria").size() == 5);
  CHECK(j.at("criteria")[0].at("checks")[0].contains("measured"));
  CHECK(j.at("criteria")[0].at("checks")[0].contains("tolerance"));

  CHECK(run_cli("verify nope").exit_code == 2);
}

TEST_CASE("sample echoes the seed and is byte identical for fixed seeds") {
  const std::string path = write_identity_config(7);
  const CliResult a = run_cli("sample " + path);
  const CliResult b = run_cli("sample " + path);
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);

  const nlohmann::json j = nlohmann::json::parse(a.out);
  CHECK(j.at("seed").get<std::uint64_t>() == 7);
  CHECK(j.at("pass").get<bool>());
  CHECK(j.at("truth").get<double>() == 0.0);

  // --seed overrides the config file and changes the draw stream.
  const CliResult reseeded = run_cli("sample " + path + " --seed 8");
  const nlohmann::json r = nlohmann::json::parse(reseeded.out);
  CHECK(r.at("seed").get<std::uint64_t>() == 8);
  CHECK(r.at("estimates") != j.at("estimates"));

  CHECK(run_cli("sample definitely_missing.json").exit_code == 2);
  std::remove(path.c_str());
}

TEST_CASE("the dimension limit honours the environment override") {
  const CliResult blocked = run_cli("region abc --d 2 --n 3 --grid 0:0.2:2", "VBCAST_MAX_DIM=8");
  CHECK(blocked.exit_code == 2);

  const CliResult bad_env = run_cli("overhead exact --d 2", "VBCAST_MAX_DIM=banana");
  CHECK(bad_env.exit_code == 2);

  const CliResult fine = run_cli("overhead exact --d 2", "VBCAST_MAX_DIM=4096");
  CHECK(fine.exit_code == 0);
}
