#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbsa/aggregate.hpp"
#include "dbsa/geometry.hpp"
#include "dbsa/grid.hpp"
#include "dbsa/raster.hpp"

namespace dbsa {

// Largest canvas side, as a level. Finer resolutions are processed in tiles.
inline constexpr int kCanvasMaxLevel = 13;

struct Pixel {
  std::uint64_t count = 0;
  double sum = 0.0;
  std::optional<std::int64_t> region_id;
  bool boundary = false;
  bool filled = false;  // false is the empty marker; other fields are then zero

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Square block of leaf pixels [x0, x0 + side) x [y0, y0 + side) at some
// level. side == 0 means the whole 2^level grid.
struct CanvasWindow {
  std::uint32_t x0 = 0;
  std::uint32_t y0 = 0;
  std::uint32_t side = 0;

  friend bool operator==(const CanvasWindow&, const CanvasWindow&) = default;
};

// Pixel grid over the leaf cells of a grid level (or a tile of it). Local
// pixel (ix, iy) is the leaf cell z_encode(x0 + ix, y0 + iy, level).
class Canvas {
 public:
  Canvas() = default;
  Canvas(const GridConfig& grid, int level, CanvasWindow window = {}, int max_side_level = kCanvasMaxLevel);

  const GridConfig& grid() const { return grid_; }
  int level() const { return grid_.max_level; }
  std::uint32_t width() const { return side_; }
  std::uint32_t height() const { return side_; }
  std::uint32_t x0() const { return x0_; }
  std::uint32_t y0() const { return y0_; }
  CanvasWindow window() const { return {x0_, y0_, side_}; }

  Pixel& at(std::uint32_t ix, std::uint32_t iy) { return pixels_[static_cast<std::size_t>(iy) * side_ + ix]; }
  const Pixel& at(std::uint32_t ix, std::uint32_t iy) const {
    return pixels_[static_cast<std::size_t>(iy) * side_ + ix];
  }
  std::span<Pixel> pixels() { return pixels_; }
  std::span<const Pixel> pixels() const { return pixels_; }

  std::uint64_t leaf_code(std::uint32_t ix, std::uint32_t iy) const;
  bool same_shape(const Canvas& other) const;
  std::size_t filled_count() const;
  std::uint64_t total_count() const;

  friend bool operator==(const Canvas&, const Canvas&) = default;

 private:
  GridConfig grid_{};
  std::uint32_t x0_ = 0;
  std::uint32_t y0_ = 0;
  std::uint32_t side_ = 0;
  std::vector<Pixel> pixels_;
};

// What render_points accumulates besides COUNT.
struct PointChannels {
  std::optional<std::string> sum_attr;
  std::optional<AttributeFilter> filter;  // failing points are not drawn
};

// Out-of-domain points are an error; in-domain points outside the window are skipped.
Canvas render_points(const PointSet& points, const GridConfig& grid, int level, const PointChannels& channels = {},
                     CanvasWindow window = {}, int max_side_level = kCanvasMaxLevel);

// Scanline rasterization of a region. The pixel set equals the uniform
// covering at the same level and mode; pixels the boundary passes through
// carry boundary = true.
Canvas render_polygon(const Polygon& poly, const GridConfig& grid, int level, RasterMode mode, std::int64_t id,
                      CanvasWindow window = {}, int max_side_level = kCanvasMaxLevel);
Canvas render_polygon(const RegionRecord& region, const GridConfig& grid, int level, RasterMode mode,
                      CanvasWindow window = {}, int max_side_level = kCanvasMaxLevel);

enum class BlendFn : std::uint8_t {
  Sum,        // counts and sums add; region of a, else of b; boundary flags or-ed
  Overwrite,  // b where b is filled
  Max,        // channel-wise maximum
};

// Empty pixels are the identity for every blend function.
Canvas blend(const Canvas& a, const Canvas& b, BlendFn fn);

struct MaskPredicate {
  enum class Kind : std::uint8_t { Always, NonEmpty, RegionEq, BoundaryOnly, CountGreater };

  Kind kind = Kind::Always;
  std::int64_t region_id = 0;
  std::uint64_t threshold = 0;

  static MaskPredicate always() { return {}; }
  static MaskPredicate nonempty() { return {Kind::NonEmpty}; }
  static MaskPredicate region_eq(std::int64_t id) { return {Kind::RegionEq, id}; }
  static MaskPredicate boundary_only() { return {Kind::BoundaryOnly}; }
  static MaskPredicate count_greater(std::uint64_t k) { return {Kind::CountGreater, 0, k}; }

  bool operator()(const Pixel& p) const;
};

Canvas mask(const Canvas& a, const MaskPredicate& m);

// Pixel-space map (ix, iy) -> (a*ix + b*iy + tx, c*ix + d*iy + ty). Only
// integer translations combined with axis flips are supported.
struct AffineTransform {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
  double tx = 0.0, ty = 0.0;

  static AffineTransform translate(double dx, double dy) { return {1.0, 0.0, 0.0, 1.0, dx, dy}; }
  // Mirror within a canvas of the given width / height.
  static AffineTransform flip_x(std::uint32_t width) { return {-1.0, 0.0, 0.0, 1.0, width - 1.0, 0.0}; }
  static AffineTransform flip_y(std::uint32_t height) { return {1.0, 0.0, 0.0, -1.0, 0.0, height - 1.0}; }
};

// Pixels mapped outside the canvas are dropped.
Canvas affine(const Canvas& src, const AffineTransform& t);

// COUNT/SUM over all filled pixels and over boundary pixels only.
struct CanvasTotals {
  Partial all;
  Partial boundary;
};
CanvasTotals reduce(const Canvas& c);

enum class CanvasChannel : std::uint8_t { Count, Sum, Region, Boundary };
CanvasChannel parse_canvas_channel(const std::string& text);

// Debug views, top row first (highest y). PGM is ASCII, scaled to 0..255.
void write_pgm(std::ostream& os, const Canvas& c, CanvasChannel channel);
void write_csv(std::ostream& os, const Canvas& c, CanvasChannel channel);

}  // namespace dbsa
