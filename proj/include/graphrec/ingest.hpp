#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace graphrec {

using UserId = std::int32_t;
using ItemId = std::int32_t;

struct Interaction {
  UserId user;
  ItemId item;
  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Bijection between raw identifiers and contiguous indices, in first-appearance order.
class IdMap {
 public:
  std::int32_t intern(std::string_view raw);
  std::int32_t find(std::string_view raw) const;  // -1 when absent
  const std::string& raw(std::int32_t index) const { return raw_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const noexcept { return raw_.size(); }
  const std::vector<std::string>& raws() const noexcept { return raw_; }

 private:
  std::vector<std::string> raw_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Remapped implicit-feedback pairs. Parts of a split share the index maps and
/// the full user/item counts; only the loaded source set guarantees that every
/// user and item has at least one pair.
struct InteractionSet {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<Interaction> pairs;
  std::shared_ptr<const IdMap> user_map;
  std::shared_ptr<const IdMap> item_map;

  bool empty() const noexcept { return pairs.empty(); }
  // Items per user, in pair order.
  std::vector<std::vector<ItemId>> items_by_user() const;
  // Same shape and maps, different pairs.
  InteractionSet with_pairs(std::vector<Interaction> new_pairs) const;
};

struct Split {
  InteractionSet train;
  InteractionSet validation;
  InteractionSet test;
  std::uint64_t seed = 0;
  std::uint64_t validation_seed = 0;
  double train_ratio = 0.8;
  double validation_ratio = 0.0;
};

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t edges = 0;
  double density = 0.0;
  double avg_deg_u = 0.0;
  double avg_deg_i = 0.0;
};

struct ColumnFormat {
  enum class Layout {
    pairs,      // one interaction per line: user<delim>item[<delim>...]
    adjacency,  // one user per line: user item item ...
  };
  Layout layout = Layout::pairs;
  char delimiter = 0;  // 0 = auto-detect tab, comma, or whitespace
  std::size_t user_column = 0;
  std::size_t item_column = 1;
  bool skip_header = false;
};

/// Parses an interaction log. When maps are provided, raw IDs are resolved
/// through them (and appended when new), so separately stored train and test
/// files share one index space.
InteractionSet load_interactions(const std::filesystem::path& path, const ColumnFormat& format = {});
InteractionSet load_interactions(const std::filesystem::path& path, const ColumnFormat& format,
                                 std::shared_ptr<IdMap> user_map, std::shared_ptr<IdMap> item_map);

/// Loads a pre-split train/test pair (e.g. the published LightGCN-format files).
Split load_published_split(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                           const ColumnFormat& format);

Split holdout_split(const InteractionSet& ds, double train_ratio, std::uint64_t seed);

/// Per-user carve-out; returns (sub_train, validation).
std::pair<InteractionSet, InteractionSet> validation_carveout(const InteractionSet& train, double ratio,
                                                              std::uint64_t seed);

DatasetStats compute_stats(const InteractionSet& ds);

/// Number of items kept on the larger side of a per-user split: ceil(n * ratio).
std::size_t kept_count(std::size_t n, double ratio);

// Split persistence: train/validation/test TSVs with raw IDs plus split.json.
void save_split(const Split& split, const std::filesystem::path& dir);
Split load_split(const std::filesystem::path& dir);

void write_interactions(const InteractionSet& ds, const std::filesystem::path& path);

}  // namespace graphrec
