#include <gtest/gtest.h>

#include "dbsa/error.hpp"
#include "dbsa/query.hpp"
#include "dbsa/workload.hpp"
#include "oracles.hpp"

using namespace dbsa;

namespace {

const GridConfig kUnit{{0, 0}, 1.0, 0};
const Engine kEngines[] = {Engine::Act, Engine::PointIndex, Engine::Canvas};

AggregationQuery count_query(double eps, RasterMode mode = RasterMode::Conservative) {
  return {Aggregate::parse("count"), eps, mode, std::nullopt};
}

Workload small_workload(std::uint64_t seed, std::size_t points = 10000, std::size_t regions = 10) {
  SyntheticConfig cfg;
  cfg.seed = seed;
  cfg.points = points;
  cfg.regions = regions;
  return synthetic_workload(cfg);
}

}  // namespace

TEST(Query, WholeDomainRegionSevenPoints) {
  PointSet ps;
  Rng rng(1);
  for (int i = 0; i < 7; ++i) ps.add({{rng.uniform(), rng.uniform()}, {}});
  const std::vector<RegionRecord> regions{oracle::region(4, oracle::square(0, 0, 1, 1))};
  for (Engine e : kEngines) {
    const auto res = run_join(e, ps, regions, kUnit, count_query(0.01));
    ASSERT_EQ(res.size(), 1u);
    EXPECT_EQ(res[0].region_id, 4);
    EXPECT_EQ(res[0].alpha, 7.0) << to_string(e);
    EXPECT_EQ(res[0].beta, 0.0);
    ASSERT_TRUE(res[0].range.has_value());
    EXPECT_EQ(*res[0].range, (ResultRange{7, 7}));
  }
}

TEST(Query, ResultRangeFormula) {
  RegionResult rr;
  rr.total = {10, 0};
  rr.boundary = {3, 0};
  finalize(rr, count_query(0.1));
  EXPECT_EQ(rr.alpha, 10.0);
  EXPECT_EQ(rr.beta, 3.0);
  EXPECT_EQ(*rr.range, (ResultRange{7, 10}));
  rr.boundary = {0, 0};
  finalize(rr, count_query(0.1));
  EXPECT_EQ(*rr.range, (ResultRange{10, 10}));
  finalize(rr, count_query(0.1, RasterMode::CenterSampled));
  EXPECT_FALSE(rr.range.has_value());
  AggregationQuery avg{Aggregate::parse("avg:v"), 0.1, RasterMode::Conservative, std::nullopt};
  finalize(rr, avg);
  EXPECT_FALSE(rr.range.has_value());
  AggregationQuery sum{Aggregate::parse("sum:v"), 0.1, RasterMode::Conservative, std::nullopt};
  rr.total = {4, 12.5L};
  rr.boundary = {1, 2.5L};
  rr.sum_nonnegative = true;
  finalize(rr, sum);
  EXPECT_EQ(*rr.range, (ResultRange{10, 12.5}));
  rr.sum_nonnegative = false;
  finalize(rr, sum);
  EXPECT_FALSE(rr.range.has_value());
}

TEST(Query, RangeContainsExactCount) {
  const Workload w = small_workload(2, 20000, 15);
  for (double eps : {0.05, 0.02, 0.005}) {
    const auto q = count_query(eps);
    const auto res = join_pointindex(w.points, w.regions, w.domain, q);
    const auto exact = oracle::counts(w.points, w.regions);
    for (std::size_t r = 0; r < res.size(); ++r) {
      ASSERT_TRUE(res[r].range);
      EXPECT_LE(res[r].range->lo, static_cast<double>(exact[r]));
      EXPECT_GE(res[r].range->hi, static_cast<double>(exact[r]));
    }
  }
}

TEST(Query, AlphaEqualsCoveringLoop) {
  const Workload w = small_workload(3);
  for (auto mode : {RasterMode::Conservative, RasterMode::CenterSampled}) {
    const auto q = count_query(0.01, mode);
    const auto res = join_act(w.points, w.regions, w.domain, q);
    for (std::size_t r = 0; r < w.regions.size(); ++r) {
      const auto cov = rasterize_hierarchical(w.regions[r], w.domain, 0.01, mode);
      std::uint64_t in = 0, edge = 0;
      for (const auto& p : w.points.locs) {
        const auto k = cov.locate(leaf_code(cov.grid(), p));
        if (!k) continue;
        ++in;
        if (*k == CellKind::Boundary) ++edge;
      }
      EXPECT_EQ(res[r].total.count, in);
      EXPECT_EQ(res[r].boundary.count, edge);
    }
  }
}

TEST(Query, BoundaryCellPointCountsInAlphaAndBeta) {
  // Point just outside the square edge, inside its boundary cell.
  PointSet ps;
  ps.add({{0.502, 0.3}, {}});
  ps.add({{0.3, 0.3}, {}});
  const std::vector<RegionRecord> regions{oracle::region(0, oracle::square(0.2, 0.2, 0.501, 0.5))};
  for (Engine e : kEngines) {
    const auto res = run_join(e, ps, regions, kUnit, count_query(0.01));
    EXPECT_EQ(res[0].alpha, 2.0);
    EXPECT_EQ(res[0].beta, 1.0);
    EXPECT_EQ(*res[0].range, (ResultRange{1, 2}));
  }
}

TEST(Query, EmptyCoverings) {
  PointSet ps;
  ps.add({{0.5, 0.5}, {}});
  std::vector<RegionRecord> regions{RegionRecord{7, {}}};
  for (Engine e : kEngines) {
    const auto res = run_join(e, ps, regions, kUnit, count_query(0.1));
    EXPECT_EQ(res[0].alpha, 0.0);
    EXPECT_EQ(*res[0].range, (ResultRange{0, 0}));
  }
  // A sliver far smaller than a cell, between cell centers, vanishes in center mode.
  regions = {oracle::region(1, Polygon({{0.51, 0.51}, {0.52, 0.51}, {0.51, 0.52}}))};
  for (Engine e : kEngines) {
    const auto res = run_join(e, ps, regions, kUnit, count_query(0.3, RasterMode::CenterSampled));
    EXPECT_EQ(res[0].alpha, 0.0);
    EXPECT_FALSE(res[0].range.has_value());
  }
}

TEST(Query, EnginesAgreeOnSeededWorkloads) {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    const Workload w = small_workload(seed, 5000, 8);
    for (auto mode : {RasterMode::Conservative, RasterMode::CenterSampled})
      for (const char* agg : {"count", "sum:value", "avg:score"}) {
        AggregationQuery q{Aggregate::parse(agg), 0.004 * static_cast<double>(seed - 9), mode, std::nullopt};
        if (seed % 2) q.filter = AttributeFilter::parse("value>=20");
        JoinOptions opts;
        opts.canvas_tile_level = 6;  // force tiling
        const auto a = join_act(w.points, w.regions, w.domain, q, opts);
        const auto b = join_pointindex(w.points, w.regions, w.domain, q, opts);
        const auto c = join_canvas(w.points, w.regions, w.domain, q, opts);
        for (std::size_t r = 0; r < a.size(); ++r) {
          ASSERT_EQ(a[r].total.count, b[r].total.count);
          ASSERT_EQ(a[r].total.count, c[r].total.count);
          ASSERT_EQ(a[r].boundary.count, b[r].boundary.count);
          ASSERT_EQ(a[r].boundary.count, c[r].boundary.count);
          if (q.agg.needs_attr()) {
            ASSERT_NEAR(static_cast<double>(a[r].total.sum), static_cast<double>(b[r].total.sum), 1e-6);
            ASSERT_NEAR(static_cast<double>(a[r].total.sum), static_cast<double>(c[r].total.sum), 1e-6);
          }
        }
      }
  }
}

TEST(Query, ParallelJoinsMatchSequential) {
  const Workload w = small_workload(20, 30000, 12);
  AggregationQuery q{Aggregate::parse("sum:value"), 0.01, RasterMode::Conservative, std::nullopt};
  JoinOptions one, four;
  four.threads = 4;
  for (Engine e : kEngines) {
    const auto a = run_join(e, w.points, w.regions, w.domain, q, one);
    const auto b = run_join(e, w.points, w.regions, w.domain, q, four);
    for (std::size_t r = 0; r < a.size(); ++r) {
      EXPECT_EQ(a[r].total.count, b[r].total.count);
      EXPECT_NEAR(static_cast<double>(a[r].total.sum), static_cast<double>(b[r].total.sum), 1e-6);
    }
  }
}

TEST(Query, SplineAndBinarySearchGiveSameResults) {
  const Workload w = small_workload(21);
  const auto q = count_query(0.005);
  JoinOptions bs;
  bs.use_spline = false;
  const auto a = join_pointindex(w.points, w.regions, w.domain, q);
  const auto b = join_pointindex(w.points, w.regions, w.domain, q, bs);
  for (std::size_t r = 0; r < a.size(); ++r) EXPECT_EQ(a[r].total, b[r].total);
}

TEST(Query, FinerPointIndexIsAccepted) {
  const Workload w = small_workload(22);
  const auto q = count_query(0.02);
  const auto want = join_act(w.points, w.regions, w.domain, q);
  const auto lps = lps_build(w.points, w.domain.with_level(level_for_bound(w.domain, q.epsilon) + 3));
  const auto got = join_pointindex(lps, nullptr, w.regions, q);
  for (std::size_t r = 0; r < want.size(); ++r) EXPECT_EQ(got[r].total, want[r].total);
  const auto coarse = lps_build(w.points, w.domain.with_level(2));
  try {
    join_pointindex(coarse, nullptr, w.regions, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Configuration);
  }
}

TEST(Query, PrebuiltTrieOverload) {
  const Workload w = small_workload(23);
  const auto q = count_query(0.01);
  const auto covs = rasterize_regions(w.regions, w.domain, q.epsilon, q.mode);
  const auto trie = AdaptiveCellTrie::build(covs);
  std::vector<std::int64_t> ids;
  for (auto it = w.regions.rbegin(); it != w.regions.rend(); ++it) ids.push_back(it->id);
  const auto got = join_act(w.points, trie, ids, q);
  const auto want = join_act(w.points, w.regions, w.domain, q);
  for (std::size_t r = 0; r < want.size(); ++r) {
    EXPECT_EQ(got[want.size() - 1 - r].region_id, want[r].region_id);
    EXPECT_EQ(got[want.size() - 1 - r].total, want[r].total);
  }
  std::vector<std::int64_t> missing(ids.begin() + 1, ids.end());
  EXPECT_THROW(join_act(w.points, trie, missing, q), Error);
  std::vector<std::int64_t> dup{ids[0], ids[0]};
  EXPECT_THROW(join_act(w.points, trie, dup, q), Error);
}

TEST(Query, ValidationErrors) {
  const Workload w = small_workload(24, 100, 2);
  EXPECT_THROW(join_act(w.points, w.regions, w.domain, count_query(0.0)), Error);
  AggregationQuery q{Aggregate::parse("sum:nope"), 0.1, RasterMode::Conservative, std::nullopt};
  try {
    join_pointindex(w.points, w.regions, w.domain, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Schema);
  }
  EXPECT_THROW(Aggregate::parse("median:value"), Error);
  EXPECT_THROW(AttributeFilter::parse("value~3"), Error);
  EXPECT_THROW(parse_engine("gpu"), Error);
  JoinOptions opts;
  opts.canvas_tile_level = 14;
  EXPECT_THROW(join_canvas(w.points, w.regions, w.domain, count_query(0.1), opts), Error);
  PointSet far;
  far.add({{2, 2}, {}});
  try {
    join_act(far, w.regions, w.domain, count_query(0.1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Domain);
  }
}

TEST(Query, JsonLine) {
  RegionResult rr;
  rr.region_id = 3;
  rr.total = {10, 0};
  rr.boundary = {3, 0};
  const auto q = count_query(0.25);
  finalize(rr, q);
  EXPECT_EQ(to_json_line(rr, q, Engine::Act),
            "{\"region_id\":3,\"alpha\":10,\"beta\":3,\"lo\":7,\"hi\":10,\"agg\":\"count\",\"epsilon\":0.25,"
            "\"mode\":\"conservative\",\"engine\":\"act\"}");
  AggregationQuery avg{Aggregate::parse("avg:v"), 0.25, RasterMode::CenterSampled, std::nullopt};
  RegionResult empty;
  finalize(empty, avg);
  EXPECT_EQ(to_json_line(empty, avg, Engine::Canvas, 50.0),
            "{\"region_id\":0,\"alpha\":null,\"beta\":null,\"lo\":null,\"hi\":null,\"agg\":\"avg:v\",\"epsilon\":50.0,"
            "\"mode\":\"center\",\"engine\":\"canvas\"}");
}
