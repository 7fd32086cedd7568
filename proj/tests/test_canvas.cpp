#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "dbsa/canvas.hpp"
#include "dbsa/error.hpp"
#include "dbsa/workload.hpp"
#include "oracles.hpp"

using namespace dbsa;

namespace {

const GridConfig kUnit{{0, 0}, 1.0, 0};

// 2x2 canvas from a matrix of counts; row r is iy = r, 0 means empty.
Canvas counts2x2(std::array<std::array<std::uint64_t, 2>, 2> m) {
  Canvas c(kUnit, 1);
  for (std::uint32_t r = 0; r < 2; ++r)
    for (std::uint32_t col = 0; col < 2; ++col)
      if (m[r][col]) {
        Pixel& p = c.at(col, r);
        p.filled = true;
        p.count = m[r][col];
        p.sum = 0.5 * static_cast<double>(m[r][col]);
      }
  return c;
}

std::array<std::array<std::uint64_t, 2>, 2> counts_of(const Canvas& c) {
  std::array<std::array<std::uint64_t, 2>, 2> m{};
  for (std::uint32_t r = 0; r < 2; ++r)
    for (std::uint32_t col = 0; col < 2; ++col) m[r][col] = c.at(col, r).filled ? c.at(col, r).count : 0;
  return m;
}

Canvas random_canvas(Rng& rng, int level) {
  Canvas c(kUnit, level);
  for (auto& p : c.pixels())
    if (rng.uniform() < 0.5) {
      p.filled = true;
      p.count = rng.below(10);
      p.sum = static_cast<double>(rng.below(100));
      if (rng.uniform() < 0.5) p.region_id = static_cast<std::int64_t>(rng.below(4));
      p.boundary = rng.uniform() < 0.3;
    }
  return c;
}

RegionRecord random_region(Rng& rng, std::int64_t id) {
  RegionRecord r;
  r.id = id;
  const int parts = rng.uniform() < 0.15 ? 2 : 1;
  for (int i = 0; i < parts; ++i) {
    const double radius = rng.uniform(0.03, 0.3);
    const Point2D c{rng.uniform(radius, 1 - radius), rng.uniform(radius, 1 - radius)};
    r.parts.push_back(random_polygon(rng, c, radius, 5 + rng.below(20), rng.uniform() < 0.3));
  }
  return r;
}

// leaf code -> boundary flag
std::map<std::uint64_t, bool> pixel_map(const Canvas& c, std::int64_t id) {
  std::map<std::uint64_t, bool> out;
  for (std::uint32_t iy = 0; iy < c.height(); ++iy)
    for (std::uint32_t ix = 0; ix < c.width(); ++ix) {
      const Pixel& p = c.at(ix, iy);
      if (!p.filled) continue;
      EXPECT_EQ(p.region_id, id);
      out[c.leaf_code(ix, iy)] = p.boundary;
    }
  return out;
}

std::map<std::uint64_t, bool> covering_map(const RasterApprox& u) {
  std::map<std::uint64_t, bool> out;
  for (const auto& c : u.cells()) out[c.cell.code] = c.kind == CellKind::Boundary;
  return out;
}

}  // namespace

TEST(Canvas, RenderPointsBasics) {
  PointSet none;
  EXPECT_EQ(render_points(none, kUnit, 5).filled_count(), 0u);
  PointSet three;
  for (int i = 0; i < 3; ++i) three.add({{0.41 + i * 0.001, 0.62}, {}});
  const Canvas c = render_points(three, kUnit, 4);
  EXPECT_EQ(c.filled_count(), 1u);
  EXPECT_EQ(c.at(6, 9).count, 3u);
  PointSet out;
  out.add({{1.2, 0.5}, {}});
  EXPECT_THROW(render_points(out, kUnit, 4), Error);
}

TEST(Canvas, ColumnSumsEqualDirectHistogram) {
  Rng rng(1);
  PointSet ps;
  ps.attr_names = {"v"};
  for (int i = 0; i < 20000; ++i) ps.add({{rng.uniform(), rng.uniform()}, {rng.uniform()}});
  const int level = 7;
  const Canvas c = render_points(ps, kUnit, level, {std::string("v"), std::nullopt});
  std::vector<std::uint64_t> hist(1u << level, 0);
  for (const auto& p : ps.locs) ++hist[static_cast<std::size_t>(p.x * (1u << level))];
  for (std::uint32_t ix = 0; ix < c.width(); ++ix) {
    std::uint64_t col = 0;
    for (std::uint32_t iy = 0; iy < c.height(); ++iy) col += c.at(ix, iy).count;
    ASSERT_EQ(col, hist[ix]);
  }
  EXPECT_EQ(c.total_count(), ps.size());
  long double sum = 0, want = 0;
  for (const auto& p : c.pixels()) sum += p.sum;
  for (std::size_t i = 0; i < ps.size(); ++i) want += ps.attr(i, 0);
  EXPECT_NEAR(static_cast<double>(sum), static_cast<double>(want), 1e-6);
}

TEST(Canvas, RenderPointsFilterAndWindow) {
  PointSet ps;
  ps.attr_names = {"v"};
  ps.add({{0.1, 0.1}, {1}});
  ps.add({{0.1, 0.1}, {5}});
  ps.add({{0.9, 0.9}, {5}});
  const Canvas f = render_points(ps, kUnit, 3, {std::nullopt, AttributeFilter::parse("v>2")});
  EXPECT_EQ(f.total_count(), 2u);
  const Canvas w = render_points(ps, kUnit, 3, {}, {4, 4, 4});
  EXPECT_EQ(w.total_count(), 1u);
  EXPECT_EQ(w.at(3, 3).count, 1u);
  EXPECT_EQ(w.leaf_code(3, 3), z_encode(7, 7, 3).code);
}

TEST(Canvas, CapAndWindowChecks) {
  EXPECT_THROW(Canvas(kUnit, 14), Error);
  EXPECT_NO_THROW(Canvas(kUnit, 14, {0, 0, 16}));
  EXPECT_THROW(Canvas(kUnit, 6, {0, 0, 64}, 5), Error);
  EXPECT_THROW(Canvas(kUnit, 3, {6, 0, 4}), Error);
}

TEST(Canvas, RenderPolygonMatchesUniformCovering) {
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const RegionRecord r = random_region(rng, k);
    const double eps = rng.uniform(0.006, 0.06);
    const int level = level_for_bound(kUnit, eps);
    for (auto mode : {RasterMode::Conservative, RasterMode::CenterSampled}) {
      const Canvas c = render_polygon(r, kUnit, level, mode);
      const auto u = rasterize_uniform(r, kUnit, eps, mode);
      ASSERT_EQ(u.grid().max_level, level);
      ASSERT_EQ(pixel_map(c, k), covering_map(u)) << "region " << k << " mode " << to_string(mode);
    }
  }
}

TEST(Canvas, TiledRenderEqualsFullRender) {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const RegionRecord r = random_region(rng, k);
    const int level = 7;
    for (auto mode : {RasterMode::Conservative, RasterMode::CenterSampled}) {
      const auto want = covering_map(rasterize_uniform(r, kUnit, std::sqrt(2.0) / 128, mode));
      std::map<std::uint64_t, bool> got;
      const std::uint32_t tile = 32;
      for (std::uint32_t y0 = 0; y0 < 128; y0 += tile)
        for (std::uint32_t x0 = 0; x0 < 128; x0 += tile) {
          const auto part = pixel_map(render_polygon(r, kUnit, level, mode, {x0, y0, tile}, 5), k);
          got.insert(part.begin(), part.end());
        }
      ASSERT_EQ(got, want);
    }
  }
}

TEST(Canvas, RenderPolygonTrivialCases) {
  const Canvas all = render_polygon(oracle::square(0, 0, 1, 1), kUnit, 5, RasterMode::Conservative, 1);
  EXPECT_EQ(all.filled_count(), 32u * 32u);
  // Half-pixel offset square in center mode keeps exactly the covered centers.
  const double s = 1.0 / 16;
  const Polygon sq = oracle::square(2.5 * s, 3.5 * s, 6.5 * s, 9.5 * s);
  const Canvas c = render_polygon(sq, kUnit, 4, RasterMode::CenterSampled, 7);
  for (std::uint32_t iy = 0; iy < 16; ++iy)
    for (std::uint32_t ix = 0; ix < 16; ++ix) {
      const bool want = oracle::pip({(ix + 0.5) * s, (iy + 0.5) * s}, sq);
      ASSERT_EQ(c.at(ix, iy).filled, want) << ix << "," << iy;
    }
  // edges pass through centers, which count as inside
  EXPECT_EQ(c.filled_count(), 5u * 7u);
}

TEST(Canvas, BlendSumExample) {
  const Canvas a = counts2x2({{{1, 2}, {3, 4}}});
  const Canvas b = counts2x2({{{10, 0}, {0, 1}}});
  EXPECT_EQ(counts_of(blend(a, b, BlendFn::Sum)), (std::array<std::array<std::uint64_t, 2>, 2>{{{11, 2}, {3, 5}}}));
  EXPECT_EQ(blend(a, Canvas(kUnit, 1), BlendFn::Sum), a);
  EXPECT_EQ(blend(Canvas(kUnit, 1), a, BlendFn::Sum), a);
  EXPECT_THROW(blend(a, Canvas(kUnit, 2), BlendFn::Sum), Error);
}

TEST(Canvas, BlendProperties) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const Canvas a = random_canvas(rng, 3), b = random_canvas(rng, 3), c = random_canvas(rng, 3);
    EXPECT_EQ(blend(a, b, BlendFn::Sum), blend(b, a, BlendFn::Sum));
    // integer-valued channels, so associativity is exact here
    EXPECT_EQ(blend(blend(a, b, BlendFn::Sum), c, BlendFn::Sum), blend(a, blend(b, c, BlendFn::Sum), BlendFn::Sum));
    EXPECT_EQ(blend(a, b, BlendFn::Max), blend(b, a, BlendFn::Max));
    const Canvas empty(kUnit, 3);
    for (auto fn : {BlendFn::Sum, BlendFn::Max, BlendFn::Overwrite}) {
      EXPECT_EQ(blend(a, empty, fn), a);
      EXPECT_EQ(blend(empty, a, fn), a);
    }
    const Canvas o = blend(a, b, BlendFn::Overwrite);
    for (std::size_t k = 0; k < o.pixels().size(); ++k)
      EXPECT_EQ(o.pixels()[k], b.pixels()[k].filled ? b.pixels()[k] : a.pixels()[k]);
  }
}

TEST(Canvas, MaskExamples) {
  const Canvas a = counts2x2({{{1, 2}, {3, 4}}});
  EXPECT_EQ(counts_of(mask(a, MaskPredicate::count_greater(2))),
            (std::array<std::array<std::uint64_t, 2>, 2>{{{0, 0}, {3, 4}}}));
  EXPECT_EQ(mask(a, MaskPredicate::always()), a);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const Canvas x = random_canvas(rng, 3);
    for (auto m : {MaskPredicate::nonempty(), MaskPredicate::region_eq(2), MaskPredicate::boundary_only(),
                   MaskPredicate::count_greater(4)}) {
      const Canvas once = mask(x, m);
      EXPECT_EQ(mask(once, m), once);
      for (const auto& p : once.pixels()) EXPECT_TRUE(!p.filled || m(p));
    }
  }
}

TEST(Canvas, AffineTransforms) {
  Rng rng(6);
  const Canvas x = random_canvas(rng, 3);
  EXPECT_EQ(affine(x, AffineTransform{}), x);
  const Canvas t = affine(x, AffineTransform::translate(1, 0));
  for (std::uint32_t iy = 0; iy < 8; ++iy) {
    EXPECT_FALSE(t.at(0, iy).filled);
    for (std::uint32_t ix = 1; ix < 8; ++ix) EXPECT_EQ(t.at(ix, iy), x.at(ix - 1, iy));
  }
  EXPECT_EQ(affine(affine(x, AffineTransform::flip_x(8)), AffineTransform::flip_x(8)), x);
  EXPECT_EQ(affine(affine(x, AffineTransform::flip_y(8)), AffineTransform::flip_y(8)), x);
  EXPECT_EQ(affine(x, AffineTransform::flip_x(8)).at(0, 2), x.at(7, 2));
  try {
    affine(x, AffineTransform::translate(0.5, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unsupported);
  }
  EXPECT_THROW(affine(x, AffineTransform{0.0, 1.0, 1.0, 0.0, 0, 0}), Error);
}

TEST(Canvas, ReduceSplitsBoundary) {
  Canvas c(kUnit, 1);
  c.at(0, 0) = Pixel{3, 1.5, 1, true, true};
  c.at(1, 0) = Pixel{2, 2.0, 1, false, true};
  const auto t = reduce(c);
  EXPECT_EQ(t.all.count, 5u);
  EXPECT_EQ(t.boundary.count, 3u);
  EXPECT_EQ(static_cast<double>(t.all.sum), 3.5);
}

TEST(Canvas, ExportTopRowFirst) {
  const Canvas a = counts2x2({{{1, 2}, {3, 4}}});
  std::ostringstream csv;
  write_csv(csv, a, CanvasChannel::Count);
  EXPECT_EQ(csv.str(), "3,4\n1,2\n");
  std::ostringstream pgm;
  write_pgm(pgm, a, CanvasChannel::Count);
  EXPECT_EQ(pgm.str(), "P2\n2 2\n255\n170 255\n1 86\n");
  EXPECT_THROW(parse_canvas_channel("alpha"), Error);
}
