#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "helpers.hpp"
#include "scenefit/config.hpp"

using namespace scenefit;
using scenefit::testing::TempDir;

namespace {

const std::string kCli = SCENEFIT_CLI_PATH;
const std::string kRoot = SCENEFIT_SOURCE_DIR;

/// Runs the CLI from the repository root (the example config uses relative
/// paths) and returns its exit status; output is captured into `log`.
int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd =
      "cd \"" + kRoot + "\" && \"" + kCli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  REQUIRE(raw != -1);
  REQUIRE(WIFEXITED(raw));
  return WEXITSTATUS(raw);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string kExample = "data/example/config.json";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("optimize produces a well-formed result from the shipped example") {
  TempDir dir("cli_opt");
  const int code = run_cli("optimize -c " + kExample + " --out \"" + (dir / "run").string() +
                               "\" --set stage.n_sam=150",
                           dir / "log.txt");
  CHECK(code == 0);
  const std::filesystem::path result = dir / "run" / "result.json";
  REQUIRE(std::filesystem::exists(result));
  const nlohmann::json doc = nlohmann::json::parse(slurp(result));
  CHECK(doc["format"] == "scenefit.result");
  CHECK(doc["h"].is_number());
  CHECK(doc["h"].get<double>() >= 0.5);
  CHECK(doc["h"].get<double>() <= 2.0);
  CHECK(doc["states"]["phi_ref"].size() == 5);
  CHECK(doc["states"]["phi_opt"].size() == 5);
  CHECK(doc["diagnostics"]["gamma"].get<int>() == 5);
  const std::string log = slurp(dir / "log.txt");
  CHECK(log.find("optimized 5 frames") != std::string::npos);
}

TEST_CASE("optimize is reproducible byte for byte, even multithreaded") {
  TempDir dir("cli_det");
  const std::string common =
      "optimize -c " + kExample + " --seed 777 --set stage.n_sam=120 --set stage.T=5";
  CHECK(run_cli(common + " --out \"" + (dir / "a").string() + "\"", dir / "a.log") == 0);
  CHECK(run_cli(common + " --out \"" + (dir / "b").string() + "\"", dir / "b.log") == 0);
  CHECK(run_cli(common + " --threads 4 --out \"" + (dir / "c").string() + "\"", dir / "c.log") ==
        0);
  const std::string a = slurp(dir / "a" / "result.json");
  CHECK(a == slurp(dir / "b" / "result.json"));
  CHECK(a == slurp(dir / "c" / "result.json"));
}

TEST_CASE("optimize can dump per-frame surface meshes") {
  TempDir dir("cli_ply");
  const int code = run_cli("optimize -c " + kExample + " --out \"" + (dir / "run").string() +
                               "\" --set stage.n_sam=60 --set dump_surfaces=true",
                           dir / "log.txt");
  CHECK(code == 0);
  CHECK(std::filesystem::exists(dir / "run" / "surface_000.ply"));
  CHECK(std::filesystem::exists(dir / "run" / "surface_004.ply"));
  const std::string header = slurp(dir / "run" / "surface_000.ply").substr(0, 3);
  CHECK(header == "ply");
}

TEST_CASE("annotate regenerates the shipped contact labels exactly") {
  TempDir dir("cli_ann");
  const int code = run_cli("annotate -c " + kExample + " --out \"" + (dir / "run").string() + "\"",
                           dir / "log.txt");
  CHECK(code == 0);
  CHECK(slurp(dir / "run" / "contacts.json") ==
        slurp(std::filesystem::path(kRoot) / "data" / "example" / "contacts.json"));
}

TEST_CASE("annotate can also dump the frustum occupancy grid") {
  TempDir dir("cli_grid");
  const int code = run_cli("annotate -c " + kExample + " --out \"" + (dir / "run").string() +
                               "\" --set annotate.grid=true",
                           dir / "log.txt");
  CHECK(code == 0);
  const std::filesystem::path grid = dir / "run" / "scene_grid.bin";
  REQUIRE(std::filesystem::exists(grid));
  CHECK(slurp(grid).substr(0, 8) == "SFGRID01");
}

TEST_CASE("bench writes a csv table and a summary") {
  TempDir dir("cli_bench");
  const int code = run_cli(
      "bench -c " + kExample + " --out \"" + (dir / "run").string() +
          "\" --set bench.scenarios=1 --set bench.runs=1 --set bench.frames=3" +
          " --set stage.n_sam=40 --set stage.optimizer.max_iterations=300",
      dir / "log.txt");
  CHECK(code == 0);
  const std::string csv = slurp(dir / "run" / "bench.csv");
  CHECK(csv.find("scenario,seed,h_pred,h_err") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one run
  const nlohmann::json summary =
      nlohmann::json::parse(slurp(dir / "run" / "bench_summary.json"));
  CHECK(summary["format"] == "scenefit.bench_summary");
  CHECK(summary["rows"] == 1);
  CHECK(summary["metrics"].contains("mpjpe_mm"));
}

TEST_CASE("bench reruns are byte-identical") {
  TempDir dir("cli_bench_det");
  const std::string common =
      "bench -c " + kExample +
      " --seed 31 --set bench.scenarios=1 --set bench.runs=1 --set bench.frames=3" +
      " --set stage.n_sam=40 --set stage.optimizer.max_iterations=300";
  CHECK(run_cli(common + " --out \"" + (dir / "a").string() + "\"", dir / "a.log") == 0);
  CHECK(run_cli(common + " --threads 3 --out \"" + (dir / "b").string() + "\"", dir / "b.log") ==
        0);
  CHECK(slurp(dir / "a" / "bench.csv") == slurp(dir / "b" / "bench.csv"));
  CHECK(slurp(dir / "a" / "bench_summary.json") == slurp(dir / "b" / "bench_summary.json"));
}

TEST_CASE("ablate runs a suite and reports each variant") {
  TempDir dir("cli_abl");
  const int code = run_cli(
      "ablate -c " + kExample + " --out \"" + (dir / "run").string() +
          "\" --set bench.scenarios=1 --set bench.runs=1 --set bench.frames=3" +
          " --set bench.suite=no_Lcon --set stage.n_sam=40" +
          " --set stage.optimizer.max_iterations=300",
      dir / "log.txt");
  CHECK(code == 0);
  const std::string csv = slurp(dir / "run" / "ablation.csv");
  CHECK(csv.find("suite,variant,scenario,seed") == 0);
  CHECK(csv.find("no_Lcon") != std::string::npos);
  const nlohmann::json summary =
      nlohmann::json::parse(slurp(dir / "run" / "ablation_summary.json"));
  CHECK(summary["suite"] == "no_Lcon");
  CHECK(summary["variants"].size() >= 2);  // the ablation plus its baseline
}

TEST_CASE("a missing config file is an input error") {
  TempDir dir("cli_noconf");
  CHECK(run_cli("optimize -c no/such/config.json", dir / "log.txt") == 2);
}

TEST_CASE("a config without a seed is an input error") {
  TempDir dir("cli_noseed");
  RunConfig cfg = load_run_config(std::filesystem::path(kRoot) / kExample);
  cfg.seed.reset();
  save_run_config(cfg, dir / "noseed.json");
  CHECK(run_cli("optimize -c \"" + (dir / "noseed.json").string() + "\" --out \"" +
                    (dir / "run").string() + "\"",
                dir / "log.txt") == 2);
  CHECK(slurp(dir / "log.txt").find("seed") != std::string::npos);
}

TEST_CASE("a malformed scene file is an input error") {
  TempDir dir("cli_badscene");
  std::ofstream(dir / "garbage.ply") << "not a point cloud at all\n";
  CHECK(run_cli("optimize -c " + kExample + " --set paths.scene=\"" +
                    (dir / "garbage.ply").string() + "\" --out \"" + (dir / "run").string() + "\"",
                dir / "log.txt") == 2);
  CHECK(slurp(dir / "log.txt").find("input error") != std::string::npos);
}

TEST_CASE("an unknown override key is an input error") {
  TempDir dir("cli_badset");
  CHECK(run_cli("optimize -c " + kExample + " --set stage.warp_speed=9", dir / "log.txt") == 2);
}

TEST_CASE("usage problems exit with the input-error code") {
  TempDir dir("cli_usage");
  CHECK(run_cli("--help", dir / "a.log") == 0);
  CHECK(run_cli("teleport -c " + kExample, dir / "b.log") == 2);  // unknown subcommand
  CHECK(run_cli("optimize", dir / "c.log") == 2);                 // --config required
}

}  // TEST_SUITE
