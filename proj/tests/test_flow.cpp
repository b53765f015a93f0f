#include <doctest.h>

#include <fstream>
#include <sstream>

#include "graphrec/error.hpp"
#include "graphrec/flow.hpp"
#include "support.hpp"

using namespace graphrec;

TEST_CASE("walk counts on the example graph") {
  auto r = test::toy_matrix();
  CHECK(info_flow(r, 1) == Vector((Vector(4) << 3, 1, 2, 4).finished()));
  CHECK(info_flow(r, 2) == Vector((Vector(4) << 6, 3, 4, 9).finished()));
  CHECK(info_flow(r, 3) == Vector((Vector(4) << 18, 8, 12, 27).finished()));
  CHECK_THROWS_AS(info_flow(r, 0), UsageError);
  CHECK_THROWS_AS(info_flow(r, 4), UsageError);
}

TEST_CASE("walk counts against dense powers") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = build_interaction_matrix(test::random_set(seed, 15, 12, 0.25));
    Matrix d = r.to_dense();
    Vector ones = Vector::Ones(12);
    Vector h1 = d * ones;
    Vector h2 = d * (d.transpose() * Vector::Ones(15));
    Vector h3 = d * (d.transpose() * (d * ones));
    CHECK((info_flow(r, 1) - h1).cwiseAbs().maxCoeff() == 0.0);
    CHECK((info_flow(r, 2) - h2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((info_flow(r, 3) - h3).cwiseAbs().maxCoeff() == 0.0);
    // longer walks never shrink for users with at least one interaction
    CHECK(((info_flow(r, 2) - h1).array() >= 0.0).all());
    CHECK(((info_flow(r, 3) - info_flow(r, 2)).array() >= 0.0).all());
  }
}

TEST_CASE("type-7 quartiles") {
  std::vector<double> toy{3, 1, 2, 4};
  auto q = quartile_partition(toy);
  CHECK(q.q25 == 1.75);
  CHECK(q.q50 == 2.5);
  CHECK(q.q75 == 3.25);
  CHECK(q.group == std::vector<int>{3, 1, 2, 4});

  std::vector<double> v{7, 1, 3, 9, 4, 10, 2};
  auto p = quartile_partition(v);
  CHECK(p.q25 == 2.5);
  CHECK(p.q50 == 4.0);
  CHECK(p.q75 == 8.0);
  CHECK(p.group == std::vector<int>{3, 1, 2, 4, 3, 4, 1});

  std::vector<double> flat(6, 5.0);
  auto f = quartile_partition(flat);
  CHECK(f.degenerate);
  CHECK(f.group == std::vector<int>(6, 4));

  std::vector<double> few{1, 2, 3};
  CHECK_THROWS_AS(quartile_partition(few), DataError);
}

TEST_CASE("quartile rows and variation") {
  std::vector<double> metric{0.2, 0.4, 0.1, 0.3};
  std::vector<int> groups{1, 1, 3, 4};
  auto rows = quartile_report(metric, groups, 0.25);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].members == 2);
  CHECK(*rows[0].mean == doctest::Approx(0.3));
  CHECK(*rows[0].variation == doctest::Approx(20.0));
  CHECK(rows[1].members == 0);
  CHECK_FALSE(rows[1].mean.has_value());
  CHECK(*rows[2].variation == doctest::Approx(-60.0));
  auto zero = quartile_row(1, metric, groups, 0.0);
  CHECK(zero.mean.has_value());
  CHECK_FALSE(zero.variation.has_value());
  std::vector<int> short_groups{1};
  CHECK_THROWS_AS(quartile_row(1, metric, short_groups, 0.25), DataError);
}

TEST_CASE("flow table layout") {
  std::vector<double> metric{0.2, 0.4, 0.1, 0.3};
  std::vector<int> groups{1, 1, 3, 4};
  FlowTable t{2, {"A", "B"}, {quartile_report(metric, groups, 0.25), quartile_report(metric, groups, 0.5)}};
  auto dir = test::scratch_dir("flow_tsv");
  write_flow_tsv({t}, dir / "f.tsv");
  std::ifstream in(dir / "f.tsv");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() ==
        "# hop 2\nQuartiles\tA\tB\n"
        "i\t20.000000\t-40.000000\n"
        "ii\tnull\tnull\n"
        "iii\t-60.000000\t-80.000000\n"
        "iv\t20.000000\t-40.000000\n");
}
