#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "graphrec/error.hpp"
#include "graphrec/ingest.hpp"
#include "support.hpp"

using namespace graphrec;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::map<UserId, std::multiset<ItemId>> profile(const InteractionSet& s) {
  std::map<UserId, std::multiset<ItemId>> out;
  for (auto p : s.pairs) out[p.user].insert(p.item);
  return out;
}

}  // namespace

TEST_CASE("load_interactions remaps ids in first-appearance order") {
  auto dir = test::scratch_dir("ingest_load");
  auto ds = load_interactions(write_file(dir, "a.tsv", "a\tx\na\ty\nb\tx\n"));
  CHECK(ds.num_users == 2);
  CHECK(ds.num_items == 2);
  CHECK(ds.pairs.size() == 3);
  CHECK(ds.user_map->raw(0) == "a");
  CHECK(ds.item_map->raw(1) == "y");
  CHECK(ds.pairs[2] == Interaction{1, 0});
}

TEST_CASE("duplicate lines collapse to the first occurrence") {
  auto dir = test::scratch_dir("ingest_dup");
  auto ds = load_interactions(write_file(dir, "d.csv", "a,x,5,100\na,x,3,200\n"));
  CHECK(ds.pairs.size() == 1);
  CHECK(ds.num_users == 1);
}

TEST_CASE("malformed lines name their line number; empty files are rejected") {
  auto dir = test::scratch_dir("ingest_bad");
  try {
    load_interactions(write_file(dir, "bad.tsv", "a\tx\nlonely\nb\ty\n"));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_interactions(write_file(dir, "empty.tsv", "")), DataError);
  CHECK_THROWS_AS(load_interactions(dir / "missing.tsv"), DataError);
}

TEST_CASE("adjacency layout and header skipping") {
  auto dir = test::scratch_dir("ingest_adj");
  ColumnFormat adj;
  adj.layout = ColumnFormat::Layout::adjacency;
  auto ds = load_interactions(write_file(dir, "train.txt", "0 1 2 3\n1 2\n"), adj);
  CHECK(ds.num_users == 2);
  CHECK(ds.num_items == 3);
  CHECK(ds.pairs.size() == 4);

  ColumnFormat hdr;
  hdr.skip_header = true;
  hdr.user_column = 1;
  hdr.item_column = 0;
  auto h = load_interactions(write_file(dir, "h.csv", "item,user\nx,a\ny,a\n"), hdr);
  CHECK(h.num_users == 1);
  CHECK(h.num_items == 2);
}

TEST_CASE("published train/test files share one index space") {
  auto dir = test::scratch_dir("ingest_pub");
  ColumnFormat adj;
  adj.layout = ColumnFormat::Layout::adjacency;
  auto s = load_published_split(write_file(dir, "train.txt", "0 1 2\n1 2\n"), write_file(dir, "test.txt", "0 3\n1 1\n"), adj);
  CHECK(s.train.pairs.size() == 3);
  CHECK(s.test.pairs.size() == 2);
  CHECK(s.train.num_items == s.test.num_items);
  CHECK(s.train.item_map == s.test.item_map);
  CHECK(s.test.item_map->raw(s.test.pairs[0].item) == "3");
}

TEST_CASE("holdout split sizes, degenerate users and determinism") {
  test::Pairs pairs;
  for (int i = 0; i < 10; ++i) pairs.emplace_back(0, i);
  pairs.emplace_back(1, 3);
  auto ds = test::make_set(2, 10, pairs);
  auto s = holdout_split(ds, 0.8, 7);
  auto tr = profile(s.train);
  auto te = profile(s.test);
  CHECK(tr[0].size() == 8);
  CHECK(te[0].size() == 2);
  CHECK(tr[1].size() == 1);
  CHECK(te.count(1) == 0);
  auto again = holdout_split(ds, 0.8, 7);
  CHECK(again.train.pairs == s.train.pairs);
  CHECK(again.test.pairs == s.test.pairs);
}

TEST_CASE("holdout split partition and ratio properties") {
  auto ds = test::random_set(11, 60, 40, 0.3);
  auto s = holdout_split(ds, 0.8, 99);
  auto full = profile(ds);
  auto tr = profile(s.train);
  auto te = profile(s.test);
  for (auto& [u, items] : full) {
    std::multiset<ItemId> joined = tr[u];
    joined.insert(te[u].begin(), te[u].end());
    CHECK(joined == items);
    for (auto i : te[u]) CHECK(tr[u].count(i) == 0);
    if (items.size() >= 5) CHECK(tr[u].size() == static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(items.size()) - 1e-9)));
  }
  CHECK(s.train.user_map == ds.user_map);
  CHECK(kept_count(10, 0.8) == 8);
  CHECK(kept_count(10, 0.9) == 9);
  CHECK(kept_count(1, 0.8) == 1);
}

TEST_CASE("validation carve-out") {
  test::Pairs pairs;
  for (int i = 0; i < 10; ++i) pairs.emplace_back(0, i);
  pairs.emplace_back(1, 2);
  auto train = test::make_set(2, 10, pairs);
  auto [sub, val] = validation_carveout(train, 0.1, 3);
  auto sp = profile(sub);
  auto vp = profile(val);
  CHECK(sp[0].size() == 9);
  CHECK(vp[0].size() == 1);
  CHECK(sp[1].size() == 1);
  CHECK(vp.count(1) == 0);
  auto joined = sp;
  for (auto& [u, items] : vp) joined[u].insert(items.begin(), items.end());
  CHECK(joined == profile(train));
}

TEST_CASE("dataset statistics") {
  auto st = compute_stats(test::toy_graph());
  CHECK(st.users == 4);
  CHECK(st.items == 5);
  CHECK(st.edges == 10);
  CHECK(st.density == doctest::Approx(0.5));
  CHECK(st.avg_deg_u == doctest::Approx(2.5));
  CHECK(st.avg_deg_i == doctest::Approx(2.0));
  CHECK_THROWS_AS(compute_stats(test::make_set(1, 1, {})), DataError);
}

TEST_CASE("published training-set statistics are internally consistent") {
  // Gowalla training set: 29,858 users, 40,981 items, 810,128 edges.
  const double users = 29858, items = 40981, edges = 810128;
  CHECK(std::round(edges / users * 1e4) / 1e4 == doctest::Approx(27.1327));
  CHECK(std::round(edges / items * 1e4) / 1e4 == doctest::Approx(19.7684));
  CHECK(std::round(edges / (users * items) * 1e4) / 1e4 == doctest::Approx(0.0007));
  // BookCrossing: 6,754 users, 13,670 items, 234,762 edges.
  CHECK(std::round(234762.0 / (6754.0 * 13670.0) * 1e4) / 1e4 == doctest::Approx(0.0025));
}

TEST_CASE("id maps are bijections") {
  IdMap m;
  for (std::string raw : {"z", "a", "z", "q"}) m.intern(raw);
  CHECK(m.size() == 3);
  for (std::int32_t k = 0; k < 3; ++k) CHECK(m.find(m.raw(k)) == k);
  CHECK(m.find("nope") == -1);
}

TEST_CASE("split persistence round trip") {
  auto dir = test::scratch_dir("ingest_split");
  auto ds = test::random_set(5, 12, 9, 0.4);
  auto s = holdout_split(ds, 0.8, 1);
  auto [sub, val] = validation_carveout(s.train, 0.1, 2);
  s.train = sub;
  s.validation = val;
  s.validation_seed = 2;
  s.validation_ratio = 0.1;
  save_split(s, dir / "split");
  auto back = load_split(dir / "split");
  CHECK(back.train.pairs == s.train.pairs);
  CHECK(back.validation.pairs == s.validation.pairs);
  CHECK(back.test.pairs == s.test.pairs);
  CHECK(back.seed == 1);
  CHECK(back.validation_seed == 2);
  CHECK(back.train.num_items == s.train.num_items);
  CHECK_THROWS_AS(load_split(dir / "nothing"), DependencyError);
}
