#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#ifndef FRAUDFUSE_CLI_PATH
#error "FRAUDFUSE_CLI_PATH must point at the fraudfuse binary"
#endif

namespace {

namespace fs = std::filesystem;

const fs::path kBin = FRAUDFUSE_CLI_PATH;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fraudfuse_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct RunResult {
  int rc = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  static int counter = 0;
  const fs::path log =
      fs::temp_directory_path() / ("fraudfuse_cli_log_" + std::to_string(counter++) + ".txt");
  const std::string cmd = "\"" + kBin.string() + "\" " + args + " > \"" + log.string() +
                          "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.rc = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  fs::remove(log);
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << body;
  return p;
}

const char* kSmallConfig = R"({
  "synth": {"preset": "complementary", "n_rows": 700, "train_size": 420,
             "train_fraud_rate": 0.10, "test_fraud_rate": 0.08},
  "split": {"train_size": 420},
  "params": {"n_trees": 12, "max_depth": 3, "learning_rate": 0.3},
  "grid": {"n_trees": [12]},
  "holdout_fraction": 0.25,
  "n_bootstrap": 10,
  "scenarios": ["S", "S+M"],
  "seed": 5
})";

size_t count_lines(const std::string& s) {
  size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// every line with its final comma-separated cell removed
std::string drop_last_column(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << '\n';
  return out.str();
}

}  // namespace

TEST_CASE("usage errors exit with 2, help with 0") {
  CHECK(run("").rc == 2);
  CHECK(run("--help").rc == 0);
  CHECK(run("definitely-not-a-command").rc == 2);
  CHECK(run("compare").rc == 2);  // no config anywhere
  CHECK(run("explain --rows 0").rc == 2);  // --model is required

  const auto dir = temp_dir("usage");
  CHECK(run("compare --config " + (dir / "nope.json").string()).rc == 2);
  const auto bad = write_config(dir, "{broken");
  CHECK(run("compare --config " + bad.string()).rc == 2);
  const auto cfg = write_config(temp_dir("usage2"), kSmallConfig);
  CHECK(run("compare --config " + cfg.string() + " --out " + (dir / "o").string() +
            " --threads 0")
            .rc == 2);
  CHECK(run("compare --config " + cfg.string() + " --out " + (dir / "o2").string() +
            " --scenarios NOPE")
            .rc == 2);
}

TEST_CASE("generate writes a dataset and is seed-deterministic") {
  const auto dir = temp_dir("generate");
  const auto cfg = write_config(dir, kSmallConfig);
  const auto out_a = dir / "a";
  const auto out_b = dir / "b";
  const auto out_c = dir / "c";

  const RunResult a = run("generate --config " + cfg.string() + " --seed 7 --out " +
                          out_a.string());
  CHECK(a.rc == 0);
  CHECK(a.output.find("train:") != std::string::npos);
  CHECK(fs::exists(out_a / "dataset.csv"));
  CHECK(fs::exists(out_a / "schema.json"));

  CHECK(run("generate --config " + cfg.string() + " --seed 7 --out " + out_b.string()).rc == 0);
  CHECK(slurp(out_a / "dataset.csv") == slurp(out_b / "dataset.csv"));
  CHECK(slurp(out_a / "schema.json") == slurp(out_b / "schema.json"));

  CHECK(run("generate --config " + cfg.string() + " --seed 8 --out " + out_c.string()).rc == 0);
  CHECK(slurp(out_a / "dataset.csv") != slurp(out_c / "dataset.csv"));
}

TEST_CASE("the config file can come from the environment") {
  const auto dir = temp_dir("envvar");
  const auto cfg = write_config(dir, kSmallConfig);
  const fs::path out = dir / "out";
  const std::string cmd = "FRAUDFUSE_CONFIG=\"" + cfg.string() + "\" \"" + kBin.string() +
                          "\" generate --out \"" + out.string() + "\" > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(raw) == 0);
  CHECK(fs::exists(out / "dataset.csv"));
}

TEST_CASE("compare runs the pipeline and honors scenario filters") {
  const auto dir = temp_dir("compare");
  const auto cfg = write_config(dir, kSmallConfig);
  const auto out = dir / "out";
  const RunResult r = run("compare --config " + cfg.string() + " --out " + out.string());
  CHECK(r.rc == 0);
  CHECK(r.output.find("Scenario") != std::string::npos);
  CHECK(r.output.find("S+M") != std::string::npos);
  for (const char* name : {"report.csv", "report.txt", "loss_plot.csv", "manifest.json",
                           "model_S.json", "model_S+M.json"}) {
    CHECK(fs::exists(out / name));
  }
  CHECK(count_lines(slurp(out / "report.csv")) == 3);  // header + 2 scenarios

  const auto solo = dir / "solo";
  CHECK(run("compare --config " + cfg.string() + " --out " + solo.string() +
            " --scenarios S+M")
            .rc == 0);
  CHECK(count_lines(slurp(solo / "report.csv")) == 2);
  CHECK(!fs::exists(solo / "model_S.json"));
  CHECK(fs::exists(solo / "model_S+M.json"));
}

TEST_CASE("compare with the same seed is byte-identical across runs") {
  const auto dir = temp_dir("deterministic");
  const auto cfg = write_config(dir, kSmallConfig);
  const auto a = dir / "a";
  const auto b = dir / "b";
  CHECK(run("compare --config " + cfg.string() + " --out " + a.string()).rc == 0);
  CHECK(run("compare --config " + cfg.string() + " --out " + b.string() + " --threads 4").rc == 0);
  for (const char* name :
       {"report.csv", "report.txt", "loss_plot.csv", "manifest.json", "model_S+M.json"}) {
    CHECK(slurp(a / name) == slurp(b / name));
  }
}

TEST_CASE("train then evaluate reuses the persisted models") {
  const auto dir = temp_dir("train_eval");
  const auto cfg = write_config(dir, kSmallConfig);
  const auto out = dir / "out";
  const RunResult t = run("train --config " + cfg.string() + " --out " + out.string());
  CHECK(t.rc == 0);
  CHECK(t.output.find("trained S+M") != std::string::npos);
  CHECK(fs::exists(out / "model_S.json"));

  const RunResult e = run("evaluate --config " + cfg.string() + " --out " + out.string());
  CHECK(e.rc == 0);
  CHECK(fs::exists(out / "report.csv"));
  CHECK(e.output.find("Scenario") != std::string::npos);

  // changing costs changes only the financial loss column
  const std::string before = slurp(out / "report.csv");
  CHECK(run("evaluate --config " + cfg.string() + " --out " + out.string() + " --acl 9999").rc ==
        0);
  const std::string after = slurp(out / "report.csv");
  CHECK(before != after);
  CHECK(drop_last_column(before) == drop_last_column(after));

  const auto fresh = dir / "fresh";
  CHECK(run("evaluate --config " + cfg.string() + " --out " + fresh.string()).rc == 1);
}

TEST_CASE("explain resolves models, rows and failure modes") {
  const auto dir = temp_dir("explain");
  const auto cfg = write_config(dir, kSmallConfig);
  const auto out = dir / "out";
  REQUIRE(run("train --config " + cfg.string() + " --out " + out.string() +
              " --scenarios S+M")
              .rc == 0);
  const std::string model = (out / "model_S+M.json").string();

  const RunResult all = run("explain --config " + cfg.string() + " --out " + out.string() +
                            " --model \"" + model + "\"");
  CHECK(all.rc == 0);
  CHECK(fs::exists(out / "importance.csv"));
  CHECK(fs::exists(out / "importance_by_source.csv"));

  const RunResult one = run("explain --config " + cfg.string() + " --out " + out.string() +
                            " --model \"" + model + "\" --rows 3");
  CHECK(one.rc == 0);
  CHECK(one.output.find("efficiency") != std::string::npos);
  CHECK(fs::exists(out / "explanation_row_3.csv"));

  CHECK(run("explain --config " + cfg.string() + " --out " + out.string() + " --model \"" +
            model + "\" --rows bogus")
            .rc == 2);
  CHECK(run("explain --config " + cfg.string() + " --out " + out.string() + " --model \"" +
            model + "\" --rows 99999999")
            .rc == 2);
  CHECK(run("explain --config " + cfg.string() + " --out " + out.string() + " --model \"" +
            model + "\" --scenarios C")
            .rc == 2);
  CHECK(run("explain --config " + cfg.string() + " --out " + out.string() +
            " --model does_not_exist.json")
            .rc == 1);
}
