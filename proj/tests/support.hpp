#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "graphrec/ingest.hpp"
#include "graphrec/rng.hpp"
#include "graphrec/sparse.hpp"

namespace graphrec::test {

using Pairs = std::vector<std::pair<int, int>>;

inline InteractionSet make_set(std::size_t users, std::size_t items, const Pairs& pairs) {
  auto umap = std::make_shared<IdMap>();
  auto imap = std::make_shared<IdMap>();
  for (std::size_t u = 0; u < users; ++u) umap->intern("u" + std::to_string(u));
  for (std::size_t i = 0; i < items; ++i) imap->intern("i" + std::to_string(i));
  InteractionSet s;
  s.num_users = users;
  s.num_items = items;
  s.user_map = umap;
  s.item_map = imap;
  for (auto [u, i] : pairs) s.pairs.push_back({u, i});
  return s;
}

// The four-user, five-item example graph: u1 {i1,i2,i4}, u2 {i2}, u3 {i3,i5},
// u4 {i2,i3,i4,i5}; zero-based here.
inline InteractionSet toy_graph() {
  return make_set(4, 5, {{0, 0}, {0, 1}, {0, 3}, {1, 1}, {2, 2}, {2, 4}, {3, 1}, {3, 2}, {3, 3}, {3, 4}});
}

inline SparseMatrix toy_matrix() { return build_interaction_matrix(toy_graph()); }

// Random bipartite edge set; every user keeps at least one item.
inline InteractionSet random_set(std::uint64_t seed, std::size_t users, std::size_t items, double density) {
  Rng rng(seed);
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<int> any(0, static_cast<int>(items) - 1);
  Pairs pairs;
  for (std::size_t u = 0; u < users; ++u) {
    bool some = false;
    for (std::size_t i = 0; i < items; ++i) {
      if (keep(rng)) {
        pairs.emplace_back(static_cast<int>(u), static_cast<int>(i));
        some = true;
      }
    }
    if (!some) pairs.emplace_back(static_cast<int>(u), any(rng));
  }
  return make_set(users, items, pairs);
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("graphrec_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace graphrec::test
