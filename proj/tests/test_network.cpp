#include <doctest.h>

#include <cmath>
#include <vector>

#include "pnrt/network.hpp"
#include "support/reference.hpp"

using namespace pnrt;

namespace {

ProximityStructure hexagon() { return ProximityStructure::dense(ref::hex_distances(), 6); }

AssignmentVector single(std::size_t k) {
  AssignmentVector d(6);
  d.set(k, true);
  return d;
}

std::vector<std::size_t> indices(const UnitSet& s) { return s.to_indices(); }

}  // namespace

TEST_CASE("hexagon exposure profiles") {
  auto G = hexagon();
  CHECK(G.exposure_profile(single(0)) == std::vector<double>{0, 1, 2, 3, 2, 1});
  CHECK(G.exposure_profile(single(2)) == std::vector<double>{2, 1, 0, 1, 2, 3});
  CHECK(G.exposure_profile(single(4)) == std::vector<double>{2, 3, 2, 1, 0, 1});
}

TEST_CASE("exposure with no treated units is infinite") {
  auto G = hexagon();
  AssignmentVector none(6);
  for (double e : G.exposure_profile(none)) CHECK(std::isinf(e));
}

TEST_CASE("exposure matches the brute force reference on random assignments") {
  auto G = hexagon();
  auto dist = ref::hex_distances();
  for (unsigned mask = 0; mask < 64; ++mask) {
    AssignmentVector d(6);
    std::vector<std::uint8_t> bits(6, 0);
    for (std::size_t i = 0; i < 6; ++i)
      if (mask & (1u << i)) {
        d.set(i, true);
        bits[i] = 1;
      }
    CHECK(G.exposure_profile(d) == ref::exposure(dist, 6, bits));
  }
}

TEST_CASE("imputable set shrinks as the threshold grows") {
  auto G = hexagon();
  auto d = single(0);
  CHECK(indices(G.imputable_set(d, -1.0)) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  CHECK(indices(G.imputable_set(d, 0.0)) == std::vector<std::size_t>{1, 2, 3, 4, 5});
  CHECK(indices(G.imputable_set(d, 1.0)) == std::vector<std::size_t>{2, 3, 4});
  CHECK(indices(G.imputable_set(d, 2.0)) == std::vector<std::size_t>{3});
  CHECK(indices(G.imputable_set(d, 3.0)).empty());
}

TEST_CASE("exposure sets partition the imputable units") {
  auto G = hexagon();
  auto d = single(0);
  auto sets = G.exposure_sets(d, 0.0, 1.0);
  CHECK(indices(sets.spill) == std::vector<std::size_t>{1, 5});
  CHECK(indices(sets.ctrl) == std::vector<std::size_t>{2, 3, 4});
  CHECK((sets.spill & sets.ctrl).empty());
  auto both = sets.spill;
  sets.ctrl.for_each([&](std::size_t i) { both.add(i); });
  CHECK(both == sets.imputable);
}

TEST_CASE("interval members on the hexagon") {
  auto G = hexagon();
  auto d = single(0);
  CHECK(indices(G.interval_members(d, 0.0, 1.0)) == std::vector<std::size_t>{1, 5});
  CHECK(indices(G.interval_members(d, 1.0, 2.0)) == std::vector<std::size_t>{2, 4});
  CHECK(indices(G.interval_members(d, 2.0, kInf)) == std::vector<std::size_t>{3});
}

TEST_CASE("dense matrix validation") {
  std::vector<double> bad = ref::hex_distances();
  bad[1] = -1.0;  // negative off-diagonal
  CHECK_THROWS_AS(ProximityStructure::dense(bad, 6), InputError);

  bad = ref::hex_distances();
  bad[0] = 0.5;  // nonzero diagonal
  CHECK_THROWS_AS(ProximityStructure::dense(bad, 6), InputError);

  bad = ref::hex_distances();
  bad[1] = 1.5;  // breaks symmetry
  CHECK_THROWS_AS(ProximityStructure::dense(bad, 6), InputError);

  bad = ref::hex_distances();
  bad[2] = std::nan("");
  CHECK_THROWS_AS(ProximityStructure::dense(bad, 6), InputError);

  CHECK_THROWS_AS(ProximityStructure::dense(std::vector<double>(10, 0.0), 6), InputError);
}

TEST_CASE("infinite off diagonal entries mark isolated units") {
  std::vector<double> m = {0, 1, kInf, 1, 0, kInf, kInf, kInf, 0};
  auto G = ProximityStructure::dense(m, 3);
  CHECK(G.isolated_units() == std::vector<std::size_t>{2});
  AssignmentVector d(3);
  d.set(0, true);
  CHECK(G.exposure_profile(d) == std::vector<double>{0, 1, kInf});
}

TEST_CASE("coordinate distances are euclidean") {
  auto G = ProximityStructure::coordinates({0, 3, 0}, {0, 0, 4});
  CHECK(G.distance(0, 1) == doctest::Approx(3.0));
  CHECK(G.distance(0, 2) == doctest::Approx(4.0));
  CHECK(G.distance(1, 2) == doctest::Approx(5.0));
  AssignmentVector d(3);
  d.set(1, true);
  auto e = G.exposure_profile(d);
  CHECK(e[0] == doctest::Approx(3.0));
  CHECK(e[1] == 0.0);
  CHECK(e[2] == doctest::Approx(5.0));
}

TEST_CASE("default unit ids are generated") {
  auto G = hexagon();
  CHECK(G.unit_ids() == std::vector<std::string>{"u1", "u2", "u3", "u4", "u5", "u6"});
}

TEST_CASE("membership tables answer the grid and refuse the rest") {
  auto G = hexagon();
  std::vector<AssignmentVector> pool;
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < 6; ++k) {
    pool.push_back(single(k));
    ids.push_back("a" + std::to_string(k + 1));
  }
  MembershipTable table;
  {
    // Category index per unit per assignment: interval of the unit's exposure
    // on the grid (0,1,2,3).
    table.thresholds = {0, 1, 2, 3};
    table.unit_ids = G.unit_ids();
    table.assignment_ids = ids;
    table.pool = pool;
    for (const auto& d : pool) {
      auto e = G.exposure_profile(d);
      std::vector<std::uint8_t> cat(6);
      for (std::size_t i = 0; i < 6; ++i) {
        std::uint8_t c = 0;
        while (c <= 3 && e[i] > table.thresholds[c]) ++c;
        cat[i] = c;
      }
      table.category.push_back(cat);
    }
  }
  auto M = ProximityStructure::membership(table);
  CHECK(M.has_exposure() == false);
  for (std::size_t k = 0; k < 6; ++k) {
    for (double eps : {-1.0, 0.0, 1.0, 2.0, 3.0}) {
      CHECK(indices(M.imputable_set(pool[k], eps)) == indices(G.imputable_set(pool[k], eps)));
    }
    CHECK(indices(M.interval_members(pool[k], 0.0, 1.0)) ==
          indices(G.interval_members(pool[k], 0.0, 1.0)));
    CHECK(indices(M.interval_members(pool[k], 1.0, kInf)) ==
          indices(G.interval_members(pool[k], 1.0, kInf)));
    auto ms = M.exposure_sets(pool[k], 0.0, 2.0);
    auto gs = G.exposure_sets(pool[k], 0.0, 2.0);
    CHECK(indices(ms.spill) == indices(gs.spill));
    CHECK(indices(ms.ctrl) == indices(gs.ctrl));
  }
  CHECK_THROWS_AS(M.imputable_set(pool[0], 0.5), UnsupportedQuery);
  CHECK_THROWS_AS(M.exposure_profile(pool[0]), UnsupportedQuery);
  AssignmentVector outside(6);
  outside.set(0, true);
  outside.set(1, true);
  CHECK_THROWS_AS(M.imputable_set(outside, 0.0), UnsupportedQuery);
}

TEST_CASE("membership rejects a treated unit outside the innermost class") {
  MembershipTable table;
  table.thresholds = {0, 1};
  table.unit_ids = {"u1", "u2"};
  table.assignment_ids = {"a1"};
  AssignmentVector d(2);
  d.set(0, true);
  table.pool = {d};
  table.category = {{1, 1}};  // u1 is treated yet claims exposure in (0,1]
  CHECK_THROWS_AS(ProximityStructure::membership(table), InputError);
}

TEST_CASE("threshold grids must be strictly increasing and nonnegative") {
  CHECK_THROWS_AS(DistanceThresholds({0.0}), InputError);
  CHECK_THROWS_AS(DistanceThresholds({1.0, 1.0}), InputError);
  CHECK_THROWS_AS(DistanceThresholds({-1.0, 1.0}), InputError);
  CHECK_THROWS_AS(DistanceThresholds({0.0, kInf}), InputError);
  CHECK_NOTHROW(DistanceThresholds({0.0, 0.1, 0.2}));
}
