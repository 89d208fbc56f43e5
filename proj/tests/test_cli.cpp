#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "phiftrl/commands.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CmdResult run_cli(const std::string& args) {
  const std::string out_file = "cli_stdout.tmp";
  const std::string err_file = "cli_stderr.tmp";
  const std::string cmd =
      std::string(PHIFTRL_BIN) + " " + args + " >" + out_file + " 2>" + err_file;
  const int rc = std::system(cmd.c_str());
  CmdResult res;
  res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.out = slurp(out_file);
  res.err = slurp(err_file);
  std::remove(out_file.c_str());
  std::remove(err_file.c_str());
  return res;
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path);
  out << doc.dump(2);
}

json minimal_config(const std::string& out_path) {
  return json{
      {"seed", 1},
      {"stream",
       {{"kind", "adversarial-experts"}, {"T", 1}, {"experts", 1}, {"loss_cap", 1.0}}},
      {"learners",
       json::array({{{"name", "solo"},
                     {"family", "kl"},
                     {"prior", {{"kind", "experts"}, {"count", 1}}},
                     {"eta", {{"kind", "fixed"}, {"value", 0.5}}}}})},
      {"output", {{"path", out_path}, {"format", "csv"}}},
  };
}

json three_learner_config(const std::string& out_path) {
  const json prior = {{"kind", "experts"}, {"count", 4}};
  const json eta = {{"kind", "inv-sqrt-T"}};
  return json{
      {"seed", 3},
      {"stream",
       {{"kind", "adversarial-experts"}, {"T", 200}, {"experts", 4}, {"loss_cap", 1.0}}},
      {"learners",
       json::array({{{"name", "ewa"}, {"family", "kl"}, {"prior", prior}, {"eta", eta}},
                    {{"name", "chi2"}, {"family", "chi2"}, {"prior", prior}, {"eta", eta}},
                    {{"name", "cubic"},
                     {"family", "power"},
                     {"p", 3.0},
                     {"prior", prior},
                     {"eta", eta}}})},
      {"output", {{"path", out_path}, {"format", "csv"}}},
  };
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) {
    if (c == '\n') ++n;
  }
  return n;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("run: minimal config produces one zero-regret row") {
  write_json("cfg_min.json", minimal_config("out_min.csv"));
  const auto res = run_cli("run --config cfg_min.json");
  CHECK(res.code == 0);
  const std::string out = slurp("out_min.csv");
  REQUIRE(!out.empty());
  std::stringstream ss(out);
  std::string header, row, extra;
  std::getline(ss, header);
  CHECK(header == "learner,t,inst_loss,cum_loss,best_cum_loss,regret,lambda,bound,diag");
  REQUIRE(std::getline(ss, row));
  CHECK(row.rfind("solo,1,", 0) == 0);
  CHECK_FALSE(std::getline(ss, extra));
  // regret field (6th column) is exactly 0
  std::stringstream cols(row);
  std::string tok;
  for (int i = 0; i < 6; ++i) std::getline(cols, tok, ',');
  CHECK(tok == "0");
  std::remove("cfg_min.json");
  std::remove("out_min.csv");
}

TEST_CASE("run: byte-identical outputs for identical config and seed") {
  write_json("cfg_det.json", three_learner_config("out_det_a.csv"));
  CHECK(run_cli("run --config cfg_det.json --out out_det_a.csv").code == 0);
  CHECK(run_cli("run --config cfg_det.json --out out_det_b.csv").code == 0);
  const std::string a = slurp("out_det_a.csv");
  const std::string b = slurp("out_det_b.csv");
  CHECK(!a.empty());
  CHECK(a == b);

  CHECK(run_cli("run --config cfg_det.json --seed 99 --out out_det_c.csv").code == 0);
  CHECK(slurp("out_det_c.csv") != a);

  std::remove("cfg_det.json");
  std::remove("out_det_a.csv");
  std::remove("out_det_b.csv");
  std::remove("out_det_c.csv");
}

TEST_CASE("run: config errors name the offending key and write nothing") {
  json bad = minimal_config("out_should_not_exist.csv");
  bad["learners"][0]["family"] = "renyi";
  write_json("cfg_bad.json", bad);
  const auto res = run_cli("run --config cfg_bad.json");
  CHECK(res.code == 2);
  CHECK(res.err.find("learners[0].family") != std::string::npos);
  CHECK_FALSE(fs::exists("out_should_not_exist.csv"));
  std::remove("cfg_bad.json");

  json bad_eta = minimal_config("out_should_not_exist.csv");
  bad_eta["learners"][0]["eta"] = {{"kind", "fixed"}, {"value", -1.0}};
  write_json("cfg_bad.json", bad_eta);
  const auto res2 = run_cli("run --config cfg_bad.json");
  CHECK(res2.code == 2);
  CHECK(res2.err.find("learners[0].eta.value") != std::string::npos);
  CHECK_FALSE(fs::exists("out_should_not_exist.csv"));
  std::remove("cfg_bad.json");

  const auto res3 = run_cli("run --config no_such_config.json");
  CHECK(res3.code == 2);
}

TEST_CASE("run: negative loss in a CSV stream fails at runtime with exit 3") {
  {
    std::ofstream out("bad_losses.csv");
    out << "t,atom_0,atom_1\n1,0.5,0.5\n2,0.1,-0.3\n";
  }
  const json cfg = {
      {"stream", {{"kind", "csv-file"}, {"path", "bad_losses.csv"}}},
      {"learners",
       json::array({{{"family", "kl"},
                     {"prior", {{"kind", "experts"}, {"count", 2}}},
                     {"eta", {{"kind", "fixed"}, {"value", 0.5}}}}})},
      {"output", {{"path", "out_bad.csv"}, {"format", "csv"}}},
  };
  write_json("cfg_csv.json", cfg);
  const auto res = run_cli("run --config cfg_csv.json");
  CHECK(res.code == 3);
  CHECK(res.err.find("line 3") != std::string::npos);
  CHECK_FALSE(fs::exists("out_bad.csv"));
  std::remove("cfg_csv.json");
  std::remove("bad_losses.csv");
}

TEST_CASE("run: json format carries the same keys") {
  json cfg = minimal_config("out_min.json");
  cfg["output"]["format"] = "json";
  write_json("cfg_json.json", cfg);
  CHECK(run_cli("run --config cfg_json.json").code == 0);
  const json records = json::parse(slurp("out_min.json"));
  REQUIRE(records.is_array());
  REQUIRE(records.size() == 1);
  for (const char* key : {"learner", "t", "inst_loss", "cum_loss", "best_cum_loss", "regret",
                          "lambda", "bound", "diag"}) {
    CHECK(records[0].contains(key));
  }
  CHECK(records[0]["regret"].get<double>() == 0.0);
  std::remove("cfg_json.json");
  std::remove("out_min.json");
}

TEST_CASE("compare: summary rows with an empty bound for power(3)") {
  write_json("cfg_cmp.json", three_learner_config(""));
  const auto res = run_cli("compare --config cfg_cmp.json");
  CHECK(res.code == 0);
  std::stringstream ss(res.out);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "learner,final_regret,final_bound,L_estimate");
  int rows = 0;
  bool power_bound_empty = false;
  while (std::getline(ss, line)) {
    ++rows;
    if (line.rfind("cubic,", 0) == 0) {
      // bound column (third) must be empty
      std::stringstream cols(line);
      std::string tok;
      std::getline(cols, tok, ',');
      std::getline(cols, tok, ',');
      std::getline(cols, tok, ',');
      power_bound_empty = tok.empty();
    }
  }
  CHECK(rows == 3);
  CHECK(power_bound_empty);
  std::remove("cfg_cmp.json");

  // fewer than two learners is a config error
  write_json("cfg_one.json", minimal_config(""));
  CHECK(run_cli("compare --config cfg_one.json").code == 2);
  std::remove("cfg_one.json");
}

TEST_CASE("bound: countable terms match the worked examples") {
  const auto kl = run_cli("bound --T 100 --eta 0.1 --L 1 --family kl --pi-j 0.1");
  CHECK(kl.code == 0);
  CHECK(kl.out.find("countable_bound_term = 2.302585092994046") != std::string::npos);

  const auto chi2 = run_cli("bound --T 100 --eta 0.1 --L 1 --family chi2 --pi-j 0.1");
  CHECK(chi2.code == 0);
  CHECK(chi2.out.find("countable_bound_term = 9") != std::string::npos);

  // T = 0: the bound collapses to D/eta = 9/0.1 = 90
  const auto zero = run_cli("bound --T 0 --eta 0.1 --L 1 --family chi2 --pi-j 0.1");
  CHECK(zero.code == 0);
  CHECK(zero.out.find("theoretical_bound = 90") != std::string::npos);

  CHECK(run_cli("bound --T 100 --eta 0.1 --L 1 --family nope --pi-j 0.1").code == 2);
  CHECK(run_cli("bound --T 100 --eta 0.1 --L 1 --family kl --pi-j 1.5").code == 2);
  // power(3) has no strong-convexity constant unless --alpha is supplied
  CHECK(run_cli("bound --T 100 --eta 0.1 --L 1 --family power --p 3 --pi-j 0.1").code == 2);
  CHECK(run_cli("bound --T 100 --eta 0.1 --L 1 --family power --p 3 --pi-j 0.1 --alpha 1").code ==
        0);
}

TEST_CASE("appendix-a: T rows per learner on both streams") {
  const auto res = run_cli("appendix-a --T 100 --C 1 --seed 5 --out apxa.csv");
  CHECK(res.code == 0);
  const std::string bounded = slurp("apxa.csv");
  const std::string shifted = slurp("apxa_shifted.csv");
  REQUIRE(!bounded.empty());
  REQUIRE(!shifted.empty());
  // header + 3 learners x T rows
  CHECK(count_lines(bounded) == 1 + 3 * 100);
  CHECK(count_lines(shifted) == 1 + 3 * 100);
  for (const char* label : {"kl-uniform", "chi2-student", "nested-ewa-chi2"}) {
    CHECK(bounded.find(label) != std::string::npos);
    CHECK(shifted.find(label) != std::string::npos);
  }
  std::remove("apxa.csv");
  std::remove("apxa_shifted.csv");

  CHECK(run_cli("appendix-a --T 50").code == 2);  // T < 100
}

TEST_CASE("selfcheck: clean build exits 0 and names its groups") {
  const auto res = run_cli("selfcheck");
  CHECK(res.code == 0);
  for (const char* group : {"fenchel", "softmax", "chi2-cases", "dual-primal"}) {
    CHECK(res.out.find(std::string("ok ") + group) != std::string::npos);
  }
}

TEST_SUITE_END();
