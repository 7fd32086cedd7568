#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dbsa/error.hpp"
#include "dbsa/pointindex.hpp"
#include "dbsa/raster.hpp"
#include "dbsa/workload.hpp"
#include "oracles.hpp"

using namespace dbsa;

namespace {

const GridConfig kUnit{{0, 0}, 1.0, 0};

LinearizedPointSet from_codes(std::vector<std::uint64_t> codes) {
  LinearizedPointSet lps;
  lps.grid = kUnit.with_level(4);
  lps.codes = std::move(codes);
  lps.count_prefix.assign(lps.codes.size() + 1, 0);
  for (std::size_t i = 0; i < lps.codes.size(); ++i) lps.count_prefix[i + 1] = i + 1;
  return lps;
}

// Points whose leaf codes at `level` follow the given per-code counts.
PointSet points_with_counts(const std::vector<int>& per_code, int level) {
  PointSet ps;
  ps.attr_names = {"v"};
  const double side = std::ldexp(1.0, -level);
  double v = 1.0;
  for (std::size_t code = 0; code < per_code.size(); ++code) {
    const auto xy = z_decode({level, code});
    for (int i = 0; i < per_code[code]; ++i) ps.add({{(xy.ix + 0.5) * side, (xy.iy + 0.5) * side}, {v++}});
  }
  return ps;
}

void audit_spline(const std::vector<std::uint64_t>& keys, const RadixSpline& rs, int tau) {
  // stored keys plus every neighbour, including absent keys
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::uint64_t k : {keys[i], keys[i] + 1, keys[i] > 0 ? keys[i] - 1 : 0}) {
      const auto truth = static_cast<double>(std::lower_bound(keys.begin(), keys.end(), k) - keys.begin());
      ASSERT_LE(std::abs(rs.predict(k) - truth), tau + 1e-6) << "key " << k;
      const auto sb = rs.search_bound(k);
      ASSERT_LE(sb.begin, truth);
      ASSERT_GE(sb.end, truth);
      ASSERT_EQ(rs.lower_bound(keys, k), truth);
    }
  }
}

}  // namespace

TEST(PointIndex, EmptyInput) {
  const auto lps = lps_build(PointSet{}, kUnit.with_level(8));
  EXPECT_TRUE(lps.codes.empty());
  EXPECT_EQ(lps.count_prefix, std::vector<std::uint64_t>{0});
  const auto rs = rs_build(lps);
  const CellInterval all{0, std::uint64_t{1} << 16};
  EXPECT_EQ(bounds_lookup(lps, &rs, all), (std::pair<std::size_t, std::size_t>{0, 0}));
}

TEST(PointIndex, CountPrefixIsRunningSum) {
  const auto ps = points_with_counts({1, 2, 0, 3}, 1);
  const auto lps = lps_build(ps, kUnit.with_level(1));
  EXPECT_EQ(lps.codes, (std::vector<std::uint64_t>{0, 1, 1, 3, 3, 3}));
  // per-code view of the prefix: value at the first position of each code
  std::vector<std::uint64_t> per_code{0};
  for (std::uint64_t c = 0; c < 4; ++c) {
    const auto [lo, hi] = bounds_lookup(lps, nullptr, {c, c + 1});
    per_code.push_back(per_code.back() + (lps.count_prefix[hi] - lps.count_prefix[lo]));
  }
  EXPECT_EQ(per_code, (std::vector<std::uint64_t>{0, 1, 3, 3, 6}));
  EXPECT_EQ(lps.count_prefix.size(), 7u);
  EXPECT_EQ(lps.count_prefix.back(), 6u);
}

TEST(PointIndex, PermMapsBackToInputRows) {
  Rng rng(1);
  PointSet ps;
  ps.attr_names = {"v"};
  for (int i = 0; i < 1000; ++i) ps.add({{rng.uniform(), rng.uniform()}, {double(i)}});
  const auto g = kUnit.with_level(12);
  const auto lps = lps_build(ps, g, std::vector<std::string>{"v"});
  ASSERT_TRUE(std::is_sorted(lps.codes.begin(), lps.codes.end()));
  std::vector<std::uint32_t> seen(lps.perm);
  std::sort(seen.begin(), seen.end());
  for (std::uint32_t i = 0; i < seen.size(); ++i) ASSERT_EQ(seen[i], i);
  for (std::size_t i = 0; i < lps.size(); ++i) {
    ASSERT_EQ(lps.codes[i], leaf_code(g, ps.locs[lps.perm[i]]));
    ASSERT_EQ(lps.sum_prefix[0][i + 1] - lps.sum_prefix[0][i], static_cast<long double>(lps.perm[i]));
  }
}

TEST(PointIndex, DuplicateLocationsAreAdjacent) {
  PointSet ps;
  ps.add({{0.3, 0.3}, {}});
  ps.add({{0.9, 0.1}, {}});
  ps.add({{0.3, 0.3}, {}});
  const auto lps = lps_build(ps, kUnit.with_level(10));
  const auto c = leaf_code(lps.grid, {0.3, 0.3});
  const auto it = std::find(lps.codes.begin(), lps.codes.end(), c);
  ASSERT_NE(it, lps.codes.end());
  ASSERT_NE(it + 1, lps.codes.end());
  EXPECT_EQ(*(it + 1), c);
}

TEST(PointIndex, OutOfDomainPointNamesRow) {
  PointSet ps;
  ps.add({{0.3, 0.3}, {}});
  ps.add({{1.3, 0.3}, {}});
  try {
    lps_build(ps, kUnit.with_level(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Domain);
    EXPECT_NE(std::string(e.what()).find("point 1"), std::string::npos);
  }
}

TEST(PointIndex, BoundsLookupExample) {
  const auto lps = from_codes({2, 4, 4, 7, 9, 12});
  const auto rs = rs_build(lps, 4, 1);
  for (const RadixSpline* r : {static_cast<const RadixSpline*>(nullptr), &rs}) {
    EXPECT_EQ(bounds_lookup(lps, r, {4, 8}), (std::pair<std::size_t, std::size_t>{1, 4}));
    EXPECT_EQ(bounds_lookup(lps, r, {0, 256}), (std::pair<std::size_t, std::size_t>{0, 6}));
    const auto e = bounds_lookup(lps, r, {5, 5});
    EXPECT_EQ(e.first, e.second);
  }
}

TEST(PointIndex, RangeAggregateExamples) {
  const auto ps = points_with_counts({1, 2, 0, 3}, 1);
  const auto lps = lps_build(ps, kUnit.with_level(1), std::vector<std::string>{"v"});
  const std::vector<CellInterval> mid{{1, 3}};
  EXPECT_EQ(range_aggregate(lps, nullptr, mid, Aggregate::parse("count")), 2.0);
  const std::vector<CellInterval> all{{0, 4}};
  EXPECT_EQ(range_aggregate(lps, nullptr, all, Aggregate::parse("count")), 6.0);
  EXPECT_EQ(range_aggregate(lps, nullptr, all, Aggregate::parse("sum:v")), 21.0);
  EXPECT_EQ(range_aggregate(lps, nullptr, mid, Aggregate::parse("avg:v")), 2.5);
  const std::vector<CellInterval> hole{{2, 3}};
  EXPECT_FALSE(range_aggregate(lps, nullptr, hole, Aggregate::parse("avg:v")).has_value());
  EXPECT_THROW(range_aggregate(lps, nullptr, all, Aggregate::parse("sum:nope")), Error);
}

TEST(PointIndex, FilterBecomesZeroWeight) {
  Rng rng(2);
  PointSet ps;
  ps.attr_names = {"v"};
  for (int i = 0; i < 500; ++i) ps.add({{rng.uniform(), rng.uniform()}, {rng.uniform(0, 10)}});
  const auto f = AttributeFilter::parse("v>=5");
  const auto lps = lps_build(ps, kUnit.with_level(9), std::vector<std::string>{"v"}, f);
  EXPECT_EQ(lps.size(), 500u);
  std::uint64_t want = 0;
  long double sum = 0;
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps.attr(i, 0) >= 5) {
      ++want;
      sum += ps.attr(i, 0);
    }
  EXPECT_EQ(lps.count_prefix.back(), want);
  EXPECT_NEAR(static_cast<double>(lps.sum_prefix[0].back()), static_cast<double>(sum), 1e-9);
}

TEST(PointIndex, CoveringCountEqualsApproxContainsLoop) {
  Rng rng(3);
  PointSet ps;
  for (int i = 0; i < 20000; ++i) ps.add({{rng.uniform(), rng.uniform()}, {}});
  for (int k = 0; k < 20; ++k) {
    const Polygon poly = random_polygon(rng, {0.5, 0.5}, rng.uniform(0.1, 0.4), 12, k % 3 == 0);
    const auto cov = rasterize_hierarchical(poly, kUnit, 0.01, RasterMode::Conservative);
    const auto lps = lps_build(ps, cov.grid());
    const auto rs = rs_build(lps);
    std::uint64_t loop = 0;
    for (const auto& p : ps.locs) loop += approx_contains(cov, p) ? 1 : 0;
    const auto ivs = cov.intervals();
    EXPECT_EQ(range_partial(lps, &rs, ivs).count, loop);
    EXPECT_EQ(range_partial(lps, nullptr, ivs).count, loop);
  }
}

TEST(RadixSpline, SingleDistinctKey) {
  const std::vector<std::uint64_t> keys(100, 77);
  const auto rs = RadixSpline::build(keys);
  EXPECT_LE(rs.knots().size(), 2u);
  EXPECT_EQ(rs.lower_bound(keys, 77), 0u);
  EXPECT_EQ(rs.lower_bound(keys, 78), 100u);
  EXPECT_EQ(rs.lower_bound(keys, 3), 0u);
  EXPECT_EQ(rs.lower_bound(keys, 1000), 100u);
}

TEST(RadixSpline, UniformKeysWithinTau) {
  std::vector<std::uint64_t> keys(1000000);
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = i;
  const auto rs = RadixSpline::build(keys, 18, 32);
  for (std::size_t i = 0; i < keys.size(); i += 7)
    ASSERT_LE(std::abs(rs.predict(keys[i]) - static_cast<double>(i)), 32.0);
}

TEST(RadixSpline, ClusteredKeysAuditExhaustive) {
  Rng rng(4);
  std::vector<std::uint64_t> keys;
  for (int c = 0; c < 40; ++c) {
    const std::uint64_t base = rng.below(std::uint64_t{1} << 40);
    const auto len = rng.below(4000);
    for (std::uint64_t i = 0; i < len; ++i) keys.push_back(base + rng.below(1 + rng.below(5000)));
    for (int d = 0; d < 50; ++d) keys.push_back(base);  // duplicate runs
  }
  std::sort(keys.begin(), keys.end());
  for (int tau : {0, 4, 32}) {
    const auto rs = RadixSpline::build(keys, 20, tau);
    audit_spline(keys, rs, tau);
  }
}

TEST(RadixSpline, RadixBitsAreClampedOrRejected) {
  std::vector<std::uint64_t> keys{1, 5, 9, 200};
  const auto rs = RadixSpline::build(keys, 40, 2);
  EXPECT_EQ(rs.requested_radix_bits(), 40);
  EXPECT_LE(rs.radix_bits(), 3);  // ceil(log2 4) + 1
  try {
    RadixSpline::build(keys, 63, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Configuration);
  }
  std::vector<std::uint64_t> unsorted{3, 1};
  EXPECT_THROW(RadixSpline::build(unsorted), Error);
}

TEST(RadixSpline, SplineAndBinarySearchAgree) {
  Rng rng(5);
  PointSet ps;
  for (int i = 0; i < 200000; ++i) {
    const double cx = (i % 5) * 0.2 + 0.1;
    ps.add({{std::clamp(cx + 0.01 * rng.normal(), 0.0, 0.999), std::clamp(0.5 + 0.2 * rng.normal(), 0.0, 0.999)}, {}});
  }
  const auto lps = lps_build(ps, kUnit.with_level(20));
  const auto rs = rs_build(lps, 16, 32);
  const std::uint64_t top = std::uint64_t{1} << 40;
  for (int i = 0; i < 200000; ++i) {
    std::uint64_t a = rng.below(top), b = rng.below(top);
    if (a > b) std::swap(a, b);
    ASSERT_EQ(bounds_lookup(lps, &rs, {a, b}), bounds_lookup(lps, nullptr, {a, b}));
  }
}

TEST(PointIndex, SaveLoadRoundTrip) {
  Rng rng(6);
  PointSet ps;
  ps.attr_names = {"v", "w"};
  for (int i = 0; i < 3000; ++i) ps.add({{rng.uniform(), rng.uniform()}, {rng.uniform(0, 100), 1e12 + i * 0.1}});
  const auto lps = lps_build(ps, kUnit.with_level(14), std::vector<std::string>{"v", "w"}, AttributeFilter::parse("v<90"));
  const auto rs = rs_build(lps, 12, 8);
  std::stringstream ss;
  save_point_index(ss, lps, &rs, "{\"k\":1}");
  const auto back = load_point_index(ss);
  EXPECT_EQ(back.metadata, "{\"k\":1}");
  EXPECT_EQ(back.lps.grid, lps.grid);
  EXPECT_EQ(back.lps.codes, lps.codes);
  EXPECT_EQ(back.lps.perm, lps.perm);
  EXPECT_EQ(back.lps.count_prefix, lps.count_prefix);
  EXPECT_EQ(back.lps.sum_attrs, lps.sum_attrs);
  EXPECT_EQ(back.lps.filter, lps.filter);
  // the double-double encoding keeps the wide prefix exactly
  EXPECT_EQ(back.lps.sum_prefix, lps.sum_prefix);
  ASSERT_TRUE(back.rs.has_value());
  EXPECT_TRUE(std::equal(back.rs->knots().begin(), back.rs->knots().end(), rs.knots().begin(), rs.knots().end()));
  EXPECT_EQ(back.rs->radix_bits(), rs.radix_bits());

  std::stringstream junk("DBSAPIX1 garbage");
  EXPECT_THROW(load_point_index(junk), Error);
}
