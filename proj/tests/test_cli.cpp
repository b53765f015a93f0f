#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  std::string cmd = std::string(GRAPHREC_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Popularity-skewed interaction log, raw string IDs, tab separated.
fs::path write_log(const fs::path& dir) {
  graphrec::Rng rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto path = dir / "log.tsv";
  std::ofstream out(path);
  for (int u = 0; u < 80; ++u) {
    int n = 0;
    for (int i = 0; i < 40; ++i) {
      if (unif(rng) < 0.6 * std::exp(-i / 6.0) + 0.03) {
        out << "user" << u << '\t' << "item" << i << '\n';
        ++n;
      }
    }
    if (n < 3) {
      for (int i = 0; i < 3; ++i) out << "user" << u << '\t' << "item" << (u + i * 11) % 40 << '\n';
    }
  }
  return path;
}

double results_recall(const fs::path& p, const std::string& model) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string dataset, name, recall;
    std::getline(ss, dataset, '\t');
    std::getline(ss, name, '\t');
    std::getline(ss, recall, '\t');
    if (name == model) return std::stod(recall);
  }
  return -1.0;
}

}  // namespace

TEST_CASE("end-to-end pipeline through the command line") {
  auto dir = graphrec::test::scratch_dir("cli");
  auto log = write_log(dir);
  const std::string d = dir.string();

  CHECK(run("--version") == 0);
  CHECK(run("stats --input " + log.string() + " --out " + d + "/stats.tsv") == 0);
  auto stats = slurp(dir / "stats.tsv");
  CHECK(stats.find("80") != std::string::npos);
  CHECK(fs::exists(dir / "stats.tsv.manifest.json"));

  REQUIRE(run("split --input " + log.string() + " --ratio 0.8 --validation 0.3 --seed 3 --out " + d + "/split") == 0);
  auto first_train = slurp(dir / "split" / "train.tsv");
  auto first_meta = slurp(dir / "split" / "split.json");
  REQUIRE(run("split --input " + log.string() + " --ratio 0.8 --validation 0.3 --seed 3 --out " + d + "/split") == 0);
  CHECK(slurp(dir / "split" / "train.tsv") == first_train);
  CHECK(slurp(dir / "split" / "split.json") == first_meta);
  {
    std::ofstream ini(dir / "run.ini");
    ini << "[split]\nratio = 0.8\nvalidation = 0.3\nseed = 4\n";
  }
  // flags override the configuration file
  REQUIRE(run("--config " + d + "/run.ini split --input " + log.string() + " --seed 3 --out " + d + "/cfgsplit") == 0);
  CHECK(slurp(dir / "cfgsplit" / "train.tsv") == first_train);
  auto manifest = json::parse(slurp(dir / "split" / "manifest.json"));
  CHECK(manifest["command"] == "split");
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest["seeds"].is_object());

  CHECK(run("evaluate --split " + d + "/split --model MostPop --model Random --dataset toy --out " + d + "/eval") == 0);
  auto results = dir / "eval" / "results.tsv";
  REQUIRE(fs::exists(results));
  CHECK(results_recall(results, "MostPop") >= results_recall(results, "Random"));
  CHECK(fs::exists(dir / "eval" / "MostPop.tsv"));

  REQUIRE(run("train --split " + d + "/split --model LightGCN --dim 8 --epochs 4 --batch-size 64 --lr 0.01 --eval-every 2 --out " + d +
              "/lightgcn") == 0);
  CHECK(fs::exists(dir / "lightgcn" / "meta.json"));
  CHECK(fs::exists(dir / "lightgcn" / "curve.tsv"));

  REQUIRE(run("tune --split " + d + "/split --model EASE --trials 3 --engine tpe --out " + d + "/tune") == 0);
  auto best = json::parse(slurp(dir / "tune" / "best.json"));
  CHECK(best.contains("config"));
  std::ifstream hist(dir / "tune" / "history.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(hist, line)) ++lines;
  CHECK(lines == 3);

  {
    std::ofstream gf(dir / "gfcf.json");
    gf << R"({"rank": 16, "alpha": 0.3})";
  }
  CHECK(run("evaluate --split " + d + "/split --checkpoint LightGCN=" + d + "/lightgcn --params EASE=" + d +
            "/tune/best.json --model EASE --model GFCF --params GFCF=" + d + "/gfcf.json --dataset toy --out " + d + "/eval2") == 0);
  CHECK(run("evaluate --split " + d + "/split --model GFCF --out " + d + "/eval3") == 1);
  CHECK(results_recall(dir / "eval2" / "results.tsv", "LightGCN") >= 0.0);
  CHECK(results_recall(dir / "eval2" / "results.tsv", "EASE") >= 0.0);

  CHECK(run("flow --split " + d + "/split --reports " + d + "/eval --model MostPop --model Random --out " + d + "/flow") == 0);
  CHECK(slurp(dir / "flow" / "quartiles.tsv").find("# hop 3") != std::string::npos);
  CHECK(slurp(dir / "flow" / "flow_profile.tsv").rfind("user\thop1\thop2\thop3", 0) == 0);

  CHECK(run("report --results " + results.string() + " --results " + (dir / "eval2" / "results.tsv").string() + " --out " + d +
            "/board.tsv") == 0);
  CHECK(slurp(dir / "board.tsv").find("recall_rank") != std::string::npos);
}

TEST_CASE("exit codes") {
  auto dir = graphrec::test::scratch_dir("cli_codes");
  const std::string d = dir.string();
  CHECK(run("") == 1);
  CHECK(run("bogus") == 1);
  CHECK(run("train --model LightGCN --out " + d + "/x") == 1);
  CHECK(run("stats --input " + d + "/missing.tsv") == 2);
  {
    std::ofstream bad(dir / "bad.tsv");
    bad << "u1\ti1\nbroken\n";
  }
  CHECK(run("stats --input " + d + "/bad.tsv") == 2);
  CHECK(run("evaluate --split " + d + "/nosplit --model MostPop --out " + d + "/e") == 2);
  CHECK(run("report --results " + d + "/none.tsv") == 2);
  CHECK(run("evaluate --split " + d + "/nosplit --model Nope --out " + d + "/e") != 0);

  auto log = write_log(dir);
  REQUIRE(run("split --input " + log.string() + " --ratio 0.8 --seed 1 --out " + d + "/plain") == 0);
  CHECK(run("tune --split " + d + "/plain --model EASE --trials 2 --out " + d + "/t") == 2);
  CHECK(run("train --split " + d + "/plain --model LightGCN --epochs 2 --lr 1e300 --init-std 1e200 --out " + d + "/nan") == 3);
}
