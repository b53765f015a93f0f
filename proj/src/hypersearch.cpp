#include "graphrec/hypersearch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "graphrec/error.hpp"

namespace graphrec {

namespace {

void require_range(double lo, double hi) {
  if (!(lo < hi)) throw UsageError("search domain needs low < high");
}

// Unit-free coordinate used by the density estimators.
double encode(const Domain& d, double v) { return d.kind == Domain::Kind::log_uniform ? std::log(v) : v; }

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// Parzen estimator over one numeric dimension, bounded to [lo, hi] in the
// encoded space with a uniform prior component.
struct Parzen {
  std::vector<double> centers;
  std::vector<double> widths;
  double lo, hi;

  Parzen(std::vector<double> points, double lo_, double hi_) : lo(lo_), hi(hi_) {
    std::sort(points.begin(), points.end());
    centers = points;
    const double span = hi - lo;
    for (std::size_t k = 0; k < points.size(); ++k) {
      double left = k == 0 ? lo : points[k - 1];
      double right = k + 1 == points.size() ? hi : points[k + 1];
      double w = std::max(points[k] - left, right - points[k]);
      widths.push_back(std::clamp(w, span / std::min<double>(100.0, 1.0 + static_cast<double>(points.size())), span));
    }
  }

  double density(double x) const {
    double p = 1.0 / (hi - lo);  // prior
    for (std::size_t k = 0; k < centers.size(); ++k) p += normal_pdf(x, centers[k], widths[k]);
    return p / static_cast<double>(centers.size() + 1);
  }

  double sample(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, centers.size());
    std::size_t k = pick(rng);
    if (k == centers.size()) return std::uniform_real_distribution<double>(lo, hi)(rng);
    std::normal_distribution<double> n(centers[k], widths[k]);
    for (int attempt = 0; attempt < 32; ++attempt) {
      double x = n(rng);
      if (x >= lo && x <= hi) return x;
    }
    return std::clamp(centers[k], lo, hi);
  }
};

nlohmann::json decode(const Domain& d, double x) {
  switch (d.kind) {
    case Domain::Kind::log_uniform:
      return std::clamp(std::exp(x), d.lo, d.hi);
    case Domain::Kind::int_uniform:
      return static_cast<long long>(std::clamp(std::round(x), d.lo, d.hi));
    default:
      return std::clamp(x, d.lo, d.hi);
  }
}

nlohmann::json sample_config(const SearchSpace& space, Rng& rng) {
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [name, d] : space) c[name] = d.sample(rng);
  return c;
}

SearchResult run_search(std::size_t trials, const Objective& objective,
                        const std::function<nlohmann::json(const std::vector<Trial>&, std::size_t)>& propose) {
  if (trials < 1) throw UsageError("search needs at least one trial");
  SearchResult result;
  std::set<std::string> seen;
  for (std::size_t t = 0; t < trials; ++t) {
    nlohmann::json config = propose(result.history, t);
    for (int redraw = 0; seen.count(config.dump()) && redraw < kMaxDuplicateRedraws; ++redraw) {
      config = propose(result.history, t);
    }
    seen.insert(config.dump());
    Trial trial;
    trial.index = t;
    trial.config = config;
    try {
      trial.objective = objective(config);
      if (!std::isfinite(trial.objective)) throw NumericalError("objective is not finite");
    } catch (const std::exception& e) {
      trial.status = Trial::Status::failed;
      trial.error = e.what();
      trial.objective = 0.0;
    }
    if (trial.status == Trial::Status::complete &&
        (result.best < 0 || trial.objective > result.history[static_cast<std::size_t>(result.best)].objective)) {
      result.best = static_cast<std::ptrdiff_t>(t);
    }
    result.history.push_back(std::move(trial));
  }
  return result;
}

}  // namespace

Domain Domain::uniform(double lo, double hi) {
  require_range(lo, hi);
  return {Kind::uniform, lo, hi, {}};
}

Domain Domain::log_uniform(double lo, double hi) {
  require_range(lo, hi);
  if (!(lo > 0.0)) throw UsageError("log-uniform domain needs a positive lower bound");
  return {Kind::log_uniform, lo, hi, {}};
}

Domain Domain::int_uniform(long long lo, long long hi) {
  require_range(static_cast<double>(lo), static_cast<double>(hi));
  return {Kind::int_uniform, static_cast<double>(lo), static_cast<double>(hi), {}};
}

Domain Domain::choice(std::vector<nlohmann::json> values) {
  if (values.empty()) throw UsageError("choice domain needs at least one value");
  return {Kind::choice, 0.0, 0.0, std::move(values)};
}

nlohmann::json Domain::sample(Rng& rng) const {
  switch (kind) {
    case Kind::uniform:
      return std::uniform_real_distribution<double>(lo, hi)(rng);
    case Kind::log_uniform:
      return std::clamp(std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng)), lo, hi);
    case Kind::int_uniform:
      return std::uniform_int_distribution<long long>(static_cast<long long>(lo), static_cast<long long>(hi))(rng);
    case Kind::choice:
      return values[std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng)];
  }
  return nullptr;
}

bool Domain::contains(const nlohmann::json& v) const {
  if (kind == Kind::choice) return std::find(values.begin(), values.end(), v) != values.end();
  if (!v.is_number()) return false;
  if (kind == Kind::int_uniform && !v.is_number_integer()) return false;
  double x = v.get<double>();
  return x >= lo && x <= hi;
}

SearchSpace parse_search_space(const nlohmann::json& j) {
  SearchSpace space;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& d = it.value();
    const std::string type = d.at("type").get<std::string>();
    if (type == "uniform") {
      space[it.key()] = Domain::uniform(d.at("low").get<double>(), d.at("high").get<double>());
    } else if (type == "log_uniform") {
      space[it.key()] = Domain::log_uniform(d.at("low").get<double>(), d.at("high").get<double>());
    } else if (type == "int_uniform") {
      space[it.key()] = Domain::int_uniform(d.at("low").get<long long>(), d.at("high").get<long long>());
    } else if (type == "choice") {
      space[it.key()] = Domain::choice(d.at("values").get<std::vector<nlohmann::json>>());
    } else {
      throw UsageError("unknown domain type '" + type + "' for " + it.key());
    }
  }
  return space;
}

nlohmann::json search_space_to_json(const SearchSpace& space) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, d] : space) {
    switch (d.kind) {
      case Domain::Kind::uniform:
        j[name] = {{"type", "uniform"}, {"low", d.lo}, {"high", d.hi}};
        break;
      case Domain::Kind::log_uniform:
        j[name] = {{"type", "log_uniform"}, {"low", d.lo}, {"high", d.hi}};
        break;
      case Domain::Kind::int_uniform:
        j[name] = {{"type", "int_uniform"}, {"low", static_cast<long long>(d.lo)}, {"high", static_cast<long long>(d.hi)}};
        break;
      case Domain::Kind::choice:
        j[name] = {{"type", "choice"}, {"values", d.values}};
        break;
    }
  }
  return j;
}

nlohmann::json Trial::to_json() const {
  nlohmann::json j = {{"trial", index},
                      {"config", config},
                      {"status", status == Status::complete ? "complete" : "failed"},
                      {"objective", status == Status::complete ? nlohmann::json(objective) : nlohmann::json(nullptr)}};
  if (!error.empty()) j["error"] = error;
  return j;
}

SearchResult random_search(const SearchSpace& space, std::size_t trials, std::uint64_t seed, const Objective& objective) {
  Rng rng(derive_seed(seed, "search"));
  return run_search(trials, objective, [&](const std::vector<Trial>&, std::size_t) { return sample_config(space, rng); });
}

nlohmann::json tpe_suggest(const std::vector<Trial>& history, const SearchSpace& space, Rng& rng,
                           const TpeOptions& options) {
  std::vector<const Trial*> done;
  for (const auto& t : history) {
    if (t.status == Trial::Status::complete) done.push_back(&t);
  }
  if (done.size() < 2) return sample_config(space, rng);
  std::stable_sort(done.begin(), done.end(), [](const Trial* a, const Trial* b) { return a->objective > b->objective; });
  auto n_good = static_cast<std::size_t>(std::ceil(options.gamma * static_cast<double>(done.size())));
  n_good = std::clamp<std::size_t>(n_good, 1, done.size() - 1);

  // Candidates are drawn from the good-group model; each is scored by the
  // summed log density ratio over dimensions.
  std::vector<nlohmann::json> candidates(std::max<std::size_t>(options.candidates, 1), nlohmann::json::object());
  std::vector<double> score(candidates.size(), 0.0);
  for (const auto& [name, d] : space) {
    std::vector<const nlohmann::json*> good, bad;
    for (std::size_t k = 0; k < done.size(); ++k) {
      const auto& cfg = done[k]->config;
      if (!cfg.contains(name) || !d.contains(cfg.at(name))) continue;
      (k < n_good ? good : bad).push_back(&cfg.at(name));
    }
    if (good.empty() || bad.empty()) {
      for (auto& c : candidates) c[name] = d.sample(rng);
      continue;
    }
    if (d.kind == Domain::Kind::choice) {
      const auto m = static_cast<double>(d.values.size());
      auto weights = [&](const std::vector<const nlohmann::json*>& obs) {
        std::vector<double> w(d.values.size(), 1.0);  // add-one prior
        for (const auto* v : obs) w[static_cast<std::size_t>(std::find(d.values.begin(), d.values.end(), *v) - d.values.begin())] += 1.0;
        for (auto& x : w) x /= static_cast<double>(obs.size()) + m;
        return w;
      };
      auto wg = weights(good);
      auto wb = weights(bad);
      std::discrete_distribution<std::size_t> pick(wg.begin(), wg.end());
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        std::size_t k = pick(rng);
        candidates[c][name] = d.values[k];
        score[c] += std::log(wg[k]) - std::log(wb[k]);
      }
      continue;
    }
    const double lo = encode(d, d.lo);
    const double hi = encode(d, d.hi);
    auto points = [&](const std::vector<const nlohmann::json*>& obs) {
      std::vector<double> p;
      for (const auto* v : obs) p.push_back(encode(d, v->get<double>()));
      return p;
    };
    Parzen pg(points(good), lo, hi);
    Parzen pb(points(bad), lo, hi);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      double x = pg.sample(rng);
      nlohmann::json v = decode(d, x);
      double xe = encode(d, v.get<double>());
      candidates[c][name] = v;
      score[c] += std::log(pg.density(xe)) - std::log(pb.density(xe));
    }
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    if (score[c] > score[best]) best = c;
  }
  if (!std::isfinite(score[best])) return sample_config(space, rng);
  return candidates[best];
}

SearchResult tpe_search(const SearchSpace& space, std::size_t trials, std::uint64_t seed, const Objective& objective,
                        const TpeOptions& options) {
  Rng rng(derive_seed(seed, "search"));
  return run_search(trials, objective, [&](const std::vector<Trial>& history, std::size_t) {
    return tpe_suggest(history, space, rng, options);
  });
}

void write_history(const std::vector<Trial>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& t : history) out << t.to_json().dump() << '\n';
}

SearchSpace default_search_space(const std::string& model) {
  if (model == "UserKNN" || model == "ItemKNN") {
    return {{"k", Domain::log_uniform(5.0, 1000.0)}, {"shrink", Domain::uniform(0.0, 1000.0)}};
  }
  if (model == "RP3beta") return {{"k", Domain::int_uniform(5, 1000)}, {"beta", Domain::uniform(0.0, 2.0)}};
  if (model == "EASE") return {{"l2", Domain::log_uniform(1.0, 1e4)}};
  throw UsageError("no default search space for '" + model + "'");
}

}  // namespace graphrec
