#include "graphrec/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "graphrec/error.hpp"
#include "graphrec/rng.hpp"

namespace graphrec {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  if (delimiter == 0) {
    if (line.find('\t') != std::string_view::npos) {
      delimiter = '\t';
    } else if (line.find(',') != std::string_view::npos) {
      delimiter = ',';
    }
  }
  if (delimiter == 0 || delimiter == ' ') {
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
      if (end > pos) fields.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    return fields;
  }
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(delimiter, start);
    std::string_view field = line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    while (!field.empty() && (field.front() == ' ')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ')) field.remove_suffix(1);
    fields.push_back(field);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return fields;
}

std::uint64_t pair_key(UserId u, ItemId i) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) | static_cast<std::uint32_t>(i);
}

std::pair<std::vector<Interaction>, std::vector<Interaction>> split_per_user(const InteractionSet& ds,
                                                                             double keep_ratio,
                                                                             std::uint64_t seed) {
  Rng rng(seed);
  auto by_user = ds.items_by_user();
  std::vector<Interaction> kept;
  std::vector<Interaction> held;
  kept.reserve(ds.pairs.size());
  for (std::size_t u = 0; u < by_user.size(); ++u) {
    auto& items = by_user[u];
    if (items.empty()) continue;
    std::shuffle(items.begin(), items.end(), rng);
    std::size_t n_keep = kept_count(items.size(), keep_ratio);
    for (std::size_t k = 0; k < items.size(); ++k) {
      Interaction it{static_cast<UserId>(u), items[k]};
      (k < n_keep ? kept : held).push_back(it);
    }
  }
  return {std::move(kept), std::move(held)};
}

}  // namespace

std::int32_t IdMap::intern(std::string_view raw) {
  std::string key(raw);
  auto [it, inserted] = index_.try_emplace(key, static_cast<std::int32_t>(raw_.size()));
  if (inserted) raw_.push_back(std::move(key));
  return it->second;
}

std::int32_t IdMap::find(std::string_view raw) const {
  auto it = index_.find(std::string(raw));
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::vector<ItemId>> InteractionSet::items_by_user() const {
  std::vector<std::vector<ItemId>> out(num_users);
  for (const auto& p : pairs) out[static_cast<std::size_t>(p.user)].push_back(p.item);
  return out;
}

InteractionSet InteractionSet::with_pairs(std::vector<Interaction> new_pairs) const {
  InteractionSet out;
  out.num_users = num_users;
  out.num_items = num_items;
  out.pairs = std::move(new_pairs);
  out.user_map = user_map;
  out.item_map = item_map;
  return out;
}

InteractionSet load_interactions(const std::filesystem::path& path, const ColumnFormat& format) {
  return load_interactions(path, format, std::make_shared<IdMap>(), std::make_shared<IdMap>());
}

InteractionSet load_interactions(const std::filesystem::path& path, const ColumnFormat& format,
                                 std::shared_ptr<IdMap> user_map, std::shared_ptr<IdMap> item_map) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction file: " + path.string());

  std::vector<Interaction> pairs;
  std::unordered_set<std::uint64_t> seen;
  auto add = [&](std::string_view user, std::string_view item) {
    UserId u = user_map->intern(user);
    ItemId i = item_map->intern(item);
    if (seen.insert(pair_key(u, i)).second) pairs.push_back({u, i});
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (format.skip_header && line_no == 1) continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_fields(line, format.delimiter);
    if (format.layout == ColumnFormat::Layout::adjacency) {
      // A user with no items still fixes its index in the map.
      if (fields.empty() || fields[0].empty()) throw ParseError(path.string(), line_no, "missing user id");
      user_map->intern(fields[0]);
      for (std::size_t k = 1; k < fields.size(); ++k) {
        if (fields[k].empty()) throw ParseError(path.string(), line_no, "empty item id");
        add(fields[0], fields[k]);
      }
      continue;
    }
    std::size_t needed = std::max(format.user_column, format.item_column) + 1;
    if (fields.size() < std::max<std::size_t>(needed, 2)) {
      throw ParseError(path.string(), line_no, "expected at least " + std::to_string(needed) + " columns");
    }
    auto user = fields[format.user_column];
    auto item = fields[format.item_column];
    if (user.empty() || item.empty()) throw ParseError(path.string(), line_no, "empty user or item id");
    add(user, item);
  }
  if (pairs.empty()) throw DataError("empty dataset: " + path.string());

  InteractionSet ds;
  ds.pairs = std::move(pairs);
  ds.num_users = user_map->size();
  ds.num_items = item_map->size();
  ds.user_map = std::move(user_map);
  ds.item_map = std::move(item_map);
  return ds;
}

Split load_published_split(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                           const ColumnFormat& format) {
  auto users = std::make_shared<IdMap>();
  auto items = std::make_shared<IdMap>();
  InteractionSet train = load_interactions(train_path, format, users, items);
  InteractionSet test = load_interactions(test_path, format, users, items);
  // Test may introduce new ids; resize every part to the final maps.
  train.num_users = test.num_users = users->size();
  train.num_items = test.num_items = items->size();
  train.user_map = test.user_map;
  train.item_map = test.item_map;
  Split split;
  split.train = std::move(train);
  split.test = std::move(test);
  split.validation = split.train.with_pairs({});
  split.train_ratio = 0.0;
  return split;
}

std::size_t kept_count(std::size_t n, double ratio) {
  // The epsilon absorbs representation error in products such as 10 * 0.9.
  double raw = static_cast<double>(n) * ratio;
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::min(n, k);
}

Split holdout_split(const InteractionSet& ds, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw UsageError("train_ratio must lie in (0, 1)");
  auto [train, test] = split_per_user(ds, train_ratio, seed);
  Split split;
  split.train = ds.with_pairs(std::move(train));
  split.test = ds.with_pairs(std::move(test));
  split.validation = ds.with_pairs({});
  split.seed = seed;
  split.train_ratio = train_ratio;
  return split;
}

std::pair<InteractionSet, InteractionSet> validation_carveout(const InteractionSet& train, double ratio,
                                                              std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("validation ratio must lie in (0, 1)");
  auto [kept, held] = split_per_user(train, 1.0 - ratio, seed);
  return {train.with_pairs(std::move(kept)), train.with_pairs(std::move(held))};
}

DatasetStats compute_stats(const InteractionSet& ds) {
  if (ds.pairs.empty()) throw DataError("cannot compute statistics of an empty interaction set");
  std::vector<char> user_seen(ds.num_users, 0);
  std::vector<char> item_seen(ds.num_items, 0);
  for (const auto& p : ds.pairs) {
    user_seen[static_cast<std::size_t>(p.user)] = 1;
    item_seen[static_cast<std::size_t>(p.item)] = 1;
  }
  DatasetStats s;
  s.users = static_cast<std::size_t>(std::count(user_seen.begin(), user_seen.end(), 1));
  s.items = static_cast<std::size_t>(std::count(item_seen.begin(), item_seen.end(), 1));
  s.edges = ds.pairs.size();
  s.density = static_cast<double>(s.edges) / (static_cast<double>(s.users) * static_cast<double>(s.items));
  s.avg_deg_u = static_cast<double>(s.edges) / static_cast<double>(s.users);
  s.avg_deg_i = static_cast<double>(s.edges) / static_cast<double>(s.items);
  return s;
}

void write_interactions(const InteractionSet& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : ds.pairs) {
    out << ds.user_map->raw(p.user) << '\t' << ds.item_map->raw(p.item) << '\n';
  }
}

void save_split(const Split& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_interactions(split.train, dir / "train.tsv");
  write_interactions(split.validation, dir / "validation.tsv");
  write_interactions(split.test, dir / "test.tsv");
  nlohmann::json meta;
  meta["seed"] = split.seed;
  meta["validation_seed"] = split.validation_seed;
  meta["train_ratio"] = split.train_ratio;
  meta["validation_ratio"] = split.validation_ratio;
  meta["num_users"] = split.train.num_users;
  meta["num_items"] = split.train.num_items;
  meta["user_map"] = split.train.user_map->raws();
  meta["item_map"] = split.train.item_map->raws();
  std::ofstream out(dir / "split.json");
  out << meta.dump(1) << '\n';
}

Split load_split(const std::filesystem::path& dir) {
  auto meta_path = dir / "split.json";
  if (!std::filesystem::exists(meta_path)) {
    throw DependencyError("no split found in " + dir.string() + " (run `split` first)");
  }
  std::ifstream in(meta_path);
  nlohmann::json meta = nlohmann::json::parse(in);
  auto users = std::make_shared<IdMap>();
  auto items = std::make_shared<IdMap>();
  for (const auto& raw : meta.at("user_map")) users->intern(raw.get<std::string>());
  for (const auto& raw : meta.at("item_map")) items->intern(raw.get<std::string>());

  auto read_part = [&](const std::string& name) {
    InteractionSet part;
    part.num_users = users->size();
    part.num_items = items->size();
    part.user_map = users;
    part.item_map = items;
    std::ifstream f(dir / name);
    if (!f) throw DependencyError("missing split part " + (dir / name).string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto fields = split_fields(line, '\t');
      if (fields.size() < 2) throw ParseError((dir / name).string(), line_no, "expected user<TAB>item");
      UserId u = users->find(fields[0]);
      ItemId i = items->find(fields[1]);
      if (u < 0 || i < 0) throw ParseError((dir / name).string(), line_no, "id not present in split.json maps");
      part.pairs.push_back({u, i});
    }
    return part;
  };

  Split split;
  split.train = read_part("train.tsv");
  split.validation = read_part("validation.tsv");
  split.test = read_part("test.tsv");
  split.seed = meta.at("seed").get<std::uint64_t>();
  split.validation_seed = meta.at("validation_seed").get<std::uint64_t>();
  split.train_ratio = meta.at("train_ratio").get<double>();
  split.validation_ratio = meta.at("validation_ratio").get<double>();
  return split;
}

}  // namespace graphrec
