#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

// End-to-end checks of the command-line front end: byte determinism,
// worker-count invariance and the documented exit codes.

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RANDBIN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const char* kThm1Config = R"({
  "kind": "thm1",
  "payload": {
    "source": {"axis_sizes": [2, 2], "probs": [0.3, 0.2, 0.1, 0.4]},
    "spec": [[2, 2]],
    "gamma_grid": [0.5, 1.0, 2.0],
    "t_z": "marginal",
    "mc_trials": 4000
  },
  "seed": 12345,
  "workers": 1,
  "output_path": "%OUT%"
})";

std::string config_with(const std::string& text, const std::string& out_path,
                        const std::string& workers = "1") {
  std::string cfg = text;
  cfg.replace(cfg.find("%OUT%"), 5, out_path);
  const auto w = cfg.find("\"workers\": 1");
  cfg.replace(w, 12, "\"workers\": " + workers);
  return cfg;
}

}  // namespace

TEST_CASE("identical config and seed give byte-identical output") {
  const std::string dir = "/tmp/randbin_cli_test";
  if (std::system(("mkdir -p " + dir).c_str()) != 0) FAIL("mkdir failed");
  write_file(dir + "/a.json", config_with(kThm1Config, dir + "/a.csv"));
  write_file(dir + "/b.json", config_with(kThm1Config, dir + "/b.csv"));
  REQUIRE(run_cli("run " + dir + "/a.json") == 0);
  REQUIRE(run_cli("run " + dir + "/b.json") == 0);
  const std::string a = slurp(dir + "/a.csv");
  const std::string b = slurp(dir + "/b.csv");
  CHECK(!a.empty());
  CHECK(a == b);
  CHECK(a.find("gamma") != std::string::npos);
  CHECK(a.find("exact_tv") != std::string::npos);
}

TEST_CASE("worker count does not change the bytes") {
  const std::string dir = "/tmp/randbin_cli_test";
  if (std::system(("mkdir -p " + dir).c_str()) != 0) FAIL("mkdir failed");
  write_file(dir + "/w1.json", config_with(kThm1Config, dir + "/w1.csv", "1"));
  write_file(dir + "/w4.json", config_with(kThm1Config, dir + "/w4.csv", "4"));
  REQUIRE(run_cli("run " + dir + "/w1.json") == 0);
  REQUIRE(run_cli("run " + dir + "/w4.json") == 0);
  // Worker count is excluded from the config hash; full bytes must match.
  const std::string a = slurp(dir + "/w1.csv");
  const std::string b = slurp(dir + "/w4.csv");
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("exit codes") {
  const std::string dir = "/tmp/randbin_cli_test";
  if (std::system(("mkdir -p " + dir).c_str()) != 0) FAIL("mkdir failed");
  SUBCASE("well-formed config validates cleanly") {
    write_file(dir + "/ok.json", config_with(kThm1Config, dir + "/ok.csv"));
    CHECK(run_cli("validate " + dir + "/ok.json") == 0);
  }
  SUBCASE("schema violation exits 2") {
    write_file(dir + "/bad.json",
               R"({"kind": "thm1", "payload": {"source": {"axis_sizes": [2],
                   "probs": [0.5, 0.48]}, "spec": [[2, 2]], "gamma_grid": [1.0]},
                   "seed": 5})");
    CHECK(run_cli("validate " + dir + "/bad.json") == 2);
    CHECK(run_cli("run " + dir + "/bad.json") == 2);
  }
  SUBCASE("enumeration guard pre-detected and raised") {
    // 4^20 assignments is far beyond the exact-oracle guard.
    std::string cfg = R"({"kind": "thm1", "payload": {"source": {"axis_sizes": [20],
        "probs": [0.05,0.05,0.05,0.05,0.05,0.05,0.05,0.05,0.05,0.05,
                  0.05,0.05,0.05,0.05,0.05,0.05,0.05,0.05,0.05,0.05]},
        "spec": [[20, 4]], "gamma_grid": [1.0]}, "seed": 5})";
    write_file(dir + "/guard.json", cfg);
    CHECK(run_cli("validate " + dir + "/guard.json") == 2);
    CHECK(run_cli("run " + dir + "/guard.json") == 3);
  }
  SUBCASE("unreadable file exits 4") {
    CHECK(run_cli("run " + dir + "/definitely_missing.json") == 4);
  }
}

TEST_CASE("inline subcommands emit the documented columns") {
  const std::string dir = "/tmp/randbin_cli_test";
  if (std::system(("mkdir -p " + dir).c_str()) != 0) FAIL("mkdir failed");
  REQUIRE(run_cli("p2p --n 1000 --eps 0.01 --bsc 0.11 --eps-adjust none --seed 3 --out " + dir +
                  "/p2p.csv") == 0);
  const std::string p2p = slurp(dir + "/p2p.csv");
  CHECK(p2p.find("rate") != std::string::npos);
  CHECK(p2p.find("dispersion_bits") != std::string::npos);

  write_file(dir + "/src.json", R"({"axis_sizes": [2], "probs": [0.5, 0.5]})");
  REQUIRE(run_cli("thm2 --source " + dir + "/src.json --bins 2 --trials 2000 --seed 9 --out " +
                  dir + "/thm2.csv") == 0);
  const std::string thm2 = slurp(dir + "/thm2.csv");
  CHECK(thm2.find("lower_bound") != std::string::npos);
  CHECK(thm2.find("exact_correct") != std::string::npos);
}

TEST_CASE("broadcast and wiretap kinds run end to end") {
  const std::string dir = "/tmp/randbin_cli_test";
  if (std::system(("mkdir -p " + dir).c_str()) != 0) FAIL("mkdir failed");
  // U1 = U2 = X uniform binary; one shared noisy output pair.
  write_file(dir + "/q3.json",
             R"({"axis_sizes": [2, 2, 2],
                 "probs": [0.5, 0, 0, 0, 0, 0, 0, 0.5]})");
  write_file(dir + "/bc_channel.json",
             R"({"input_size": 2, "output_sizes": [2, 2],
                 "rows": [[0.75, 0, 0, 0.25], [0.25, 0, 0, 0.75]]})");
  REQUIRE(run_cli("bc-region --q " + dir + "/q3.json --channel " + dir +
                  "/bc_channel.json --n 10000 --eps 0.05 --directions 4 "
                  "--eps-adjust none --seed 2 --out " + dir + "/bc.csv") == 0);
  CHECK(slurp(dir + "/bc.csv").find("r1") != std::string::npos);

  write_file(dir + "/q2.json", R"({"axis_sizes": [2, 2], "probs": [0.5, 0, 0, 0.5]})");
  write_file(dir + "/wt_channel.json",
             R"({"input_size": 2, "output_sizes": [2, 2],
                 "rows": [[0.675, 0.225, 0.025, 0.075],
                          [0.075, 0.025, 0.225, 0.675]]})");
  REQUIRE(run_cli("wiretap --q " + dir + "/q2.json --channel " + dir +
                  "/wt_channel.json --n 10000 --eps-adjust none --seed 2 --out " + dir +
                  "/wt.csv") == 0);
  const std::string wt = slurp(dir + "/wt.csv");
  CHECK(wt.find("secrecy_budget_bits") != std::string::npos);

  // JSON record format carries the decomposed components.
  std::string cfg = R"({"kind": "p2p", "payload": {"channel": {"input_size": 2,
      "output_sizes": [2], "rows": [[0.89, 0.11], [0.11, 0.89]]},
      "eps": 0.001, "n_grid": [10000], "format": "json",
      "policy": {"eps_adjust": "none"}}, "seed": 1, "output_path": "%OUT%"})";
  cfg.replace(cfg.find("%OUT%"), 5, dir + "/p2p.json.out");
  write_file(dir + "/p2p_json.json", cfg);
  REQUIRE(run_cli("run " + dir + "/p2p_json.json") == 0);
  const std::string rec = slurp(dir + "/p2p.json.out");
  CHECK(rec.find("dispersion_term") != std::string::npos);
  CHECK(rec.find("components") != std::string::npos);
}
