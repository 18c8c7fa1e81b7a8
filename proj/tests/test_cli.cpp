#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  const auto err_file = std::filesystem::temp_directory_path() / "svgmppi_cli_stderr.txt";
  const std::string cmd = std::string(TEST_CLI_PATH) + " " + args + " 2>" + err_file.string();
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return result;
  std::array<char, 4096> buffer;
  while (std::fgets(buffer.data(), buffer.size(), pipe) != nullptr) result.out += buffer.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream err(err_file);
  result.err.assign(std::istreambuf_iterator<char>(err), {});
  return result;
}

std::string data_config(const char* name) {
  return std::string(TEST_DATA_DIR) + "/" + name;
}

std::string fast_args() {
  return "--set laps=1 --set solver.K=64 --set solver.guide_samples=8 "
         "--set solver.guide_iterations=4";
}

std::string result_line(const std::string& out) {
  const auto pos = out.find("RESULT ");
  if (pos == std::string::npos) return "";
  std::string line = out.substr(pos, out.find('\n', pos) - pos);
  const auto out_field = line.find(" out=");  // reflects the --out argument
  if (out_field != std::string::npos) line.resize(out_field);
  return line;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

TEST(Cli, RunIsDeterministicUnderFixedSeed) {
  const auto out_a = std::filesystem::temp_directory_path() / "svgmppi_cli_a";
  const auto out_b = std::filesystem::temp_directory_path() / "svgmppi_cli_b";
  std::filesystem::remove_all(out_a);
  std::filesystem::remove_all(out_b);
  const std::string base = "run --config " + data_config("pt.cfg") + " --seed 7 " + fast_args();
  const CliResult a = run_cli(base + " --out " + out_a.string());
  const CliResult b = run_cli(base + " --out " + out_b.string());
  ASSERT_EQ(a.exit_code, 0) << a.err;
  ASSERT_EQ(b.exit_code, 0) << b.err;
  EXPECT_EQ(result_line(a.out), result_line(b.out));
  EXPECT_NE(result_line(a.out), "");
  EXPECT_EQ(slurp(out_a / "metrics.json"), slurp(out_b / "metrics.json"));
  EXPECT_EQ(slurp(out_a / "trajectory.csv"), slurp(out_b / "trajectory.csv"));
  std::filesystem::remove_all(out_a);
  std::filesystem::remove_all(out_b);
}

TEST(Cli, MissingConfigNamesPath) {
  const CliResult r = run_cli("run --config /no/such/file.cfg");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("/no/such/file.cfg"), std::string::npos) << r.err;
}

TEST(Cli, SetOverrideLandsInManifest) {
  const auto out = std::filesystem::temp_directory_path() / "svgmppi_cli_set";
  std::filesystem::remove_all(out);
  const CliResult r = run_cli("run --config " + data_config("pt.cfg") + " " + fast_args() +
                              " --set solver.K=100 --out " + out.string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::ifstream manifest(out / "manifest.json");
  const nlohmann::json doc = nlohmann::json::parse(manifest);
  EXPECT_EQ(doc.at("config").at("solver.K").get<std::string>(), "100");
  EXPECT_EQ(doc.at("config").at("laps").get<std::string>(), "1");
  std::filesystem::remove_all(out);
}

TEST(Cli, UnknownOverrideKeyRejected) {
  const CliResult r =
      run_cli("run --config " + data_config("pt.cfg") + " --set solver.bogus=1");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("solver.bogus"), std::string::npos) << r.err;
}

TEST(Cli, BenchRejectsZeroSolves) {
  const CliResult r = run_cli("bench --config " + data_config("pt.cfg") + " --n 0");
  EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, BenchReportsExactCallFormula) {
  // K + L * K_g * N = 64 + 4 * 2 * 8 = 128 for the guided solver.
  const CliResult r = run_cli("bench --config " + data_config("pt.cfg") + " --n 3 " +
                              fast_args() + " --set solver.guide_particles=2");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("calls_per_solve=128"), std::string::npos) << r.out;
}

TEST(Cli, BenchVanillaCallsEqualK) {
  const CliResult r = run_cli("bench --config " + data_config("pt.cfg") + " --n 3 " +
                              fast_args() + " --set solver=mppi");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("calls_per_solve=64"), std::string::npos) << r.out;
}

TEST(Cli, FitDemoRunsThreeCases) {
  const CliResult r = run_cli("fit-demo");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("exact gaussian"), std::string::npos);
  EXPECT_NE(r.out.find("flat density"), std::string::npos);
  EXPECT_NE(r.out.find("RESULT subcmd=fit-demo"), std::string::npos);
}

TEST(Cli, VersionPrintsSchemaInfo) {
  const CliResult r = run_cli("version");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("svgmppi"), std::string::npos);
  EXPECT_NE(r.out.find("schema"), std::string::npos);
}

TEST(Cli, HelpListsConfigKeysWithUnits) {
  const CliResult r = run_cli("--help");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("solver.sigma [rad]"), std::string::npos);
  EXPECT_NE(r.out.find("vehicle.wheelbase [m]"), std::string::npos);
  EXPECT_NE(r.out.find("OMP_NUM_THREADS"), std::string::npos);
}

}  // namespace
