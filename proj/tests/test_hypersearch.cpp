#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "graphrec/error.hpp"
#include "graphrec/hypersearch.hpp"
#include "support.hpp"

using namespace graphrec;
using nlohmann::json;

TEST_CASE("domains sample inside their bounds") {
  Rng rng(1);
  auto u = Domain::uniform(-2.0, 3.0);
  auto lu = Domain::log_uniform(1.0, 1e4);
  auto iu = Domain::int_uniform(5, 9);
  auto ch = Domain::choice({"a", 2, true});
  std::vector<double> logs;
  std::set<long long> ints;
  for (int k = 0; k < 4000; ++k) {
    CHECK(u.contains(u.sample(rng)));
    auto x = lu.sample(rng);
    CHECK(lu.contains(x));
    logs.push_back(std::log10(x.get<double>()));
    auto n = iu.sample(rng);
    CHECK(n.is_number_integer());
    ints.insert(n.get<long long>());
    CHECK(ch.contains(ch.sample(rng)));
  }
  CHECK(ints == std::set<long long>{5, 6, 7, 8, 9});
  // log-uniform on [1, 1e4]: log10 is uniform on [0, 4]
  double mean = 0.0;
  for (double l : logs) mean += l;
  mean /= static_cast<double>(logs.size());
  CHECK(mean == doctest::Approx(2.0).epsilon(0.03));
  CHECK_FALSE(iu.contains(6.5));
  CHECK_FALSE(u.contains("x"));
  CHECK_FALSE(ch.contains(3));
  CHECK_THROWS_AS(Domain::uniform(1.0, 1.0), UsageError);
  CHECK_THROWS_AS(Domain::log_uniform(0.0, 1.0), UsageError);
  CHECK_THROWS_AS(Domain::choice({}), UsageError);
}

TEST_CASE("search space parsing") {
  auto j = json::parse(R"({"l2": {"type": "log_uniform", "low": 1, "high": 10000},
                           "k": {"type": "int_uniform", "low": 5, "high": 1000},
                           "beta": {"type": "uniform", "low": 0, "high": 2},
                           "mode": {"type": "choice", "values": ["a", "b"]}})");
  auto space = parse_search_space(j);
  CHECK(space.size() == 4);
  CHECK(space.at("l2").kind == Domain::Kind::log_uniform);
  CHECK(space.at("k").hi == 1000.0);
  CHECK(search_space_to_json(space) == j);
  CHECK_THROWS_AS(parse_search_space(json::parse(R"({"x": {"type": "gaussian", "low": 0, "high": 1}})")), UsageError);
  CHECK_THROWS_AS(parse_search_space(json::parse(R"({"x": {"type": "uniform", "low": 2, "high": 1}})")), UsageError);
  CHECK(default_search_space("EASE").count("l2") == 1);
  CHECK(default_search_space("RP3beta").at("k").kind == Domain::Kind::int_uniform);
  CHECK(default_search_space("ItemKNN").at("k").kind == Domain::Kind::log_uniform);
  CHECK_THROWS_AS(default_search_space("LightGCN"), UsageError);
}

TEST_CASE("random search bookkeeping") {
  SearchSpace space{{"x", Domain::uniform(0.0, 1.0)}, {"y", Domain::int_uniform(1, 50)}};
  auto f = [](const json& c) { return -std::pow(c["x"].get<double>() - 0.3, 2) + 0.001 * c["y"].get<double>(); };
  auto a = random_search(space, 20, 7, f);
  auto b = random_search(space, 20, 7, f);
  auto c = random_search(space, 20, 8, f);
  REQUIRE(a.history.size() == 20);
  for (std::size_t t = 0; t < 20; ++t) {
    CHECK(a.history[t].config == b.history[t].config);
    CHECK(a.history[t].index == t);
  }
  CHECK(a.history[0].config != c.history[0].config);
  double best = -1e9;
  for (const auto& t : a.history) best = std::max(best, t.objective);
  CHECK(a.history[static_cast<std::size_t>(a.best)].objective == best);

  // ties keep the earliest trial
  auto flat = random_search(space, 5, 1, [](const json&) { return 1.0; });
  CHECK(flat.best == 0);

  auto failing = random_search(space, 6, 1, [](const json& c) -> double {
    if (c["y"].get<long long>() % 2 == 0) throw DataError("even");
    return c["x"].get<double>();
  });
  for (const auto& t : failing.history) {
    if (t.config["y"].get<long long>() % 2 == 0) {
      CHECK(t.status == Trial::Status::failed);
      CHECK(t.error == "even");
      CHECK(t.to_json()["objective"].is_null());
    }
  }
  if (failing.best >= 0) CHECK(failing.history[static_cast<std::size_t>(failing.best)].status == Trial::Status::complete);
  auto dead = random_search(space, 3, 1, [](const json&) -> double { throw DataError("no"); });
  CHECK(dead.best == -1);
  auto nan = random_search(space, 2, 1, [](const json&) { return std::nan(""); });
  CHECK(nan.history[0].status == Trial::Status::failed);
  CHECK_THROWS_AS(random_search(space, 0, 1, f), UsageError);
}

TEST_CASE("duplicate configurations are redrawn") {
  SearchSpace space{{"m", Domain::choice({1, 2, 3})}};
  auto r = random_search(space, 3, 2, [](const json& c) { return c["m"].get<double>(); });
  std::set<int> seen;
  for (const auto& t : r.history) seen.insert(t.config["m"].get<int>());
  CHECK(seen.size() == 3);
}

TEST_CASE("TPE proposals") {
  SearchSpace space{{"x", Domain::uniform(0.0, 1.0)}, {"l", Domain::log_uniform(1e-3, 1e3)}, {"c", Domain::choice({"p", "q", "r"})}};
  Rng rng(3);
  std::vector<Trial> history;
  auto first = tpe_suggest(history, space, rng);
  for (const auto& [name, d] : space) CHECK(d.contains(first[name]));
  for (int t = 0; t < 12; ++t) {
    Trial trial;
    trial.index = static_cast<std::size_t>(t);
    trial.config = tpe_suggest(history, space, rng);
    trial.objective = trial.config["c"] == "q" ? 1.0 : 0.0;
    history.push_back(trial);
  }
  for (const auto& t : history) {
    for (const auto& [name, d] : space) CHECK(d.contains(t.config[name]));
  }

  // Over several seeds TPE reaches a lower regret than random sampling on a smooth objective.
  SearchSpace one{{"x", Domain::uniform(0.0, 1.0)}, {"y", Domain::uniform(0.0, 1.0)}};
  auto f = [](const json& c) {
    return -std::pow(c["x"].get<double>() - 0.3, 2) - std::pow(c["y"].get<double>() - 0.8, 2);
  };
  double tpe_regret = 0.0, rnd_regret = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto a = tpe_search(one, 40, seed, f);
    auto b = random_search(one, 40, seed, f);
    tpe_regret -= a.history[static_cast<std::size_t>(a.best)].objective;
    rnd_regret -= b.history[static_cast<std::size_t>(b.best)].objective;
  }
  CHECK(tpe_regret < rnd_regret);
  auto again = tpe_search(one, 15, 4, f);
  auto same = tpe_search(one, 15, 4, f);
  for (std::size_t t = 0; t < 15; ++t) CHECK(again.history[t].config == same.history[t].config);
}

TEST_CASE("history is written as JSON lines") {
  SearchSpace space{{"x", Domain::uniform(0.0, 1.0)}};
  auto r = random_search(space, 4, 1, [](const json& c) { return c["x"].get<double>(); });
  auto dir = test::scratch_dir("search_history");
  write_history(r.history, dir / "h.jsonl");
  std::ifstream in(dir / "h.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    auto j = json::parse(line);
    CHECK(j["trial"] == n);
    CHECK(j["status"] == "complete");
    ++n;
  }
  CHECK(n == 4);
}

TEST_CASE("TPE follows a separating dimension") {
  SearchSpace space{{"x", Domain::uniform(0.0, 1.0)}, {"noise", Domain::uniform(0.0, 1.0)}};
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::vector<Trial> history;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t t = 0; t < 16; ++t) {
      Trial trial;
      trial.index = t;
      const bool good = t % 4 == 0;
      trial.config = {{"x", good ? 0.2 * unif(rng) : 0.5 + 0.5 * unif(rng)}, {"noise", unif(rng)}};
      trial.objective = good ? 1.0 : 0.0;
      history.push_back(trial);
    }
    auto next = tpe_suggest(history, space, rng);
    if (next["x"].get<double>() <= 0.25) ++inside;
  }
  CHECK(inside > 90);
}

TEST_CASE("random search best objective grows with the budget") {
  SearchSpace space{{"x", Domain::uniform(0.0, 1.0)}};
  auto f = [](const json& c) { return std::sin(7.0 * c["x"].get<double>()); };
  double last = -2.0;
  for (std::size_t n : {1, 2, 5, 10, 20}) {
    auto r = random_search(space, n, 9, f);
    CHECK(r.history.size() == n);
    double best = r.history[static_cast<std::size_t>(r.best)].objective;
    CHECK(best >= last);
    last = best;
  }
}
