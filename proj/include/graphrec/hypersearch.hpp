#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "graphrec/rng.hpp"

namespace graphrec {

struct Domain {
  enum class Kind { uniform, log_uniform, int_uniform, choice };
  Kind kind = Kind::uniform;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<nlohmann::json> values;  // choice only

  static Domain uniform(double lo, double hi);
  static Domain log_uniform(double lo, double hi);
  static Domain int_uniform(long long lo, long long hi);
  static Domain choice(std::vector<nlohmann::json> values);

  nlohmann::json sample(Rng& rng) const;
  bool contains(const nlohmann::json& v) const;
};

/// Ordered by parameter name so sampling order is stable.
using SearchSpace = std::map<std::string, Domain>;

/// Parses {"name": {"type": "log_uniform", "low": 1, "high": 1e4}, ...} or
/// {"name": {"type": "choice", "values": [...]}}.
SearchSpace parse_search_space(const nlohmann::json& j);
nlohmann::json search_space_to_json(const SearchSpace& space);

struct Trial {
  std::size_t index = 0;
  nlohmann::json config;
  double objective = 0.0;
  enum class Status { complete, failed } status = Status::complete;
  std::string error;

  nlohmann::json to_json() const;
};

struct SearchResult {
  std::vector<Trial> history;
  std::ptrdiff_t best = -1;  // index into history; -1 when every trial failed
};

using Objective = std::function<double(const nlohmann::json& config)>;

inline constexpr int kMaxDuplicateRedraws = 100;

/// Seeded i.i.d. configurations (duplicates redrawn up to kMaxDuplicateRedraws
/// times). A throwing objective marks the trial failed. Best = highest
/// objective, earliest trial on ties.
SearchResult random_search(const SearchSpace& space, std::size_t trials, std::uint64_t seed, const Objective& objective);

struct TpeOptions {
  double gamma = 0.25;
  std::size_t candidates = 24;
};

/// Tree-structured Parzen estimator proposal. Falls back to a random draw
/// with fewer than two completed trials or degenerate densities.
nlohmann::json tpe_suggest(const std::vector<Trial>& history, const SearchSpace& space, Rng& rng,
                           const TpeOptions& options = {});

/// TPE-driven loop with the same bookkeeping as random_search.
SearchResult tpe_search(const SearchSpace& space, std::size_t trials, std::uint64_t seed, const Objective& objective,
                        const TpeOptions& options = {});

/// One JSON object per line.
void write_history(const std::vector<Trial>& history, const std::filesystem::path& path);

/// Default spaces for the tunable baselines: kNN (user/item), RP3beta, EASE^R.
SearchSpace default_search_space(const std::string& model);

}  // namespace graphrec
