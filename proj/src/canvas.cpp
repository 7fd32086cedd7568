#include "dbsa/canvas.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "dbsa/error.hpp"

namespace dbsa {

Canvas::Canvas(const GridConfig& grid, int level, CanvasWindow window, int max_side_level) {
  grid.validate();
  if (max_side_level < 0 || max_side_level > kCanvasMaxLevel)
    fail(ErrorCode::Configuration, "canvas side level must lie in [0, 13]");
  grid_ = grid.with_level(level);
  const std::uint64_t full = std::uint64_t{1} << level;
  const std::uint64_t cap = std::uint64_t{1} << max_side_level;
  if (window.side == 0) {
    if (full > cap)
      fail(ErrorCode::Capacity, "canvas of 2^" + std::to_string(level) + " pixels per side exceeds the cap of 2^" +
                                    std::to_string(max_side_level) + "; tile the domain");
    window = {0, 0, static_cast<std::uint32_t>(full)};
  }
  if (window.side > cap) fail(ErrorCode::Capacity, "canvas tile exceeds the resolution cap");
  if (std::uint64_t{window.x0} + window.side > full || std::uint64_t{window.y0} + window.side > full)
    fail(ErrorCode::Domain, "canvas window lies outside the grid");
  x0_ = window.x0;
  y0_ = window.y0;
  side_ = window.side;
  pixels_.assign(static_cast<std::size_t>(side_) * side_, Pixel{});
}

std::uint64_t Canvas::leaf_code(std::uint32_t ix, std::uint32_t iy) const {
  return z_encode(x0_ + ix, y0_ + iy, level()).code;
}

bool Canvas::same_shape(const Canvas& other) const {
  return grid_ == other.grid_ && x0_ == other.x0_ && y0_ == other.y0_ && side_ == other.side_;
}

std::size_t Canvas::filled_count() const {
  return static_cast<std::size_t>(std::count_if(pixels_.begin(), pixels_.end(), [](const Pixel& p) { return p.filled; }));
}

std::uint64_t Canvas::total_count() const {
  std::uint64_t n = 0;
  for (const auto& p : pixels_) n += p.count;
  return n;
}

Canvas render_points(const PointSet& points, const GridConfig& grid, int level, const PointChannels& channels,
                     CanvasWindow window, int max_side_level) {
  Canvas canvas(grid, level, window, max_side_level);
  std::optional<std::size_t> column;
  if (channels.sum_attr) column = points.attr_index(*channels.sum_attr);
  const BoundFilter keep(channels.filter, points);
  const std::uint64_t x0 = canvas.x0(), y0 = canvas.y0(), side = canvas.width();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!grid.in_domain(points.locs[i]))
      fail(ErrorCode::Domain, "point " + std::to_string(i) + " lies outside the canvas domain");
    if (!keep(points, i)) continue;
    const auto [ix, iy] = z_decode(point_to_cell(grid, points.locs[i], level));
    if (ix < x0 || iy < y0 || ix - x0 >= side || iy - y0 >= side) continue;
    Pixel& px = canvas.at(static_cast<std::uint32_t>(ix - x0), static_cast<std::uint32_t>(iy - y0));
    px.filled = true;
    px.count += 1;
    if (column) px.sum += points.attr(i, *column);
  }
  return canvas;
}

namespace {

constexpr std::uint8_t kCenterIn = 1;
constexpr std::uint8_t kCrossed = 2;

// Pixel rectangle of one polygon part inside a canvas, in local coordinates.
class PartFrame {
 public:
  PartFrame(const Canvas& canvas, const MBR& bounds) : grid_(canvas.grid()), level_(canvas.level()) {
    side_ = grid_.cell_side(level_);
    base_x_ = canvas.x0();
    base_y_ = canvas.y0();
    n_ = canvas.width();
    valid_ = span(bounds.min.x, bounds.max.x, true, col_lo_, col_hi_) &&
             span(bounds.min.y, bounds.max.y, false, row_lo_, row_hi_);
  }

  bool valid() const { return valid_; }
  std::int64_t col_lo() const { return col_lo_; }
  std::int64_t col_hi() const { return col_hi_; }
  std::int64_t row_lo() const { return row_lo_; }
  std::int64_t row_hi() const { return row_hi_; }
  std::size_t cols() const { return static_cast<std::size_t>(col_hi_ - col_lo_ + 1); }
  std::size_t rows() const { return static_cast<std::size_t>(row_hi_ - row_lo_ + 1); }
  std::size_t slot(std::int64_t col, std::int64_t row) const {
    return static_cast<std::size_t>(row - row_lo_) * cols() + static_cast<std::size_t>(col - col_lo_);
  }

  MBR rect(std::int64_t col, std::int64_t row) const {
    return cell_rect(grid_, level_, static_cast<std::uint32_t>(base_x_ + col), static_cast<std::uint32_t>(base_y_ + row));
  }
  Point2D center(std::int64_t col, std::int64_t row) const {
    return cell_center(grid_, level_, static_cast<std::uint32_t>(base_x_ + col),
                       static_cast<std::uint32_t>(base_y_ + row));
  }

  // Local columns (or rows) whose pixels may touch [lo, hi], one pixel of
  // slack on both sides, clamped to this frame. False if none.
  bool span(double lo, double hi, bool x_axis, std::int64_t& first, std::int64_t& last) const {
    const double origin = x_axis ? grid_.origin.x : grid_.origin.y;
    const double base = static_cast<double>(x_axis ? base_x_ : base_y_);
    double a = std::floor((lo - origin) / side_) - base - 1.0;
    double b = std::floor((hi - origin) / side_) - base + 1.0;
    double min_i = 0.0;
    double max_i = static_cast<double>(n_) - 1.0;
    if (valid_) {
      min_i = static_cast<double>(x_axis ? col_lo_ : row_lo_);
      max_i = static_cast<double>(x_axis ? col_hi_ : row_hi_);
    }
    if (b < min_i || a > max_i) return false;
    first = static_cast<std::int64_t>(std::max(a, min_i));
    last = static_cast<std::int64_t>(std::min(b, max_i));
    return true;
  }

 private:
  const GridConfig& grid_;
  int level_;
  double side_ = 0.0;
  std::int64_t base_x_ = 0;
  std::int64_t base_y_ = 0;
  std::uint32_t n_ = 0;
  bool valid_ = false;
  std::int64_t col_lo_ = 0, col_hi_ = -1, row_lo_ = 0, row_hi_ = -1;
};

double crossing_x(Point2D a, Point2D b, double y) { return a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y); }

// Marks pixels whose center passes the point-in-polygon test, mirroring its
// bounds check, the on-boundary rule and per-ring crossing parity.
void mark_centers(const Polygon& poly, const PartFrame& f, std::vector<std::uint8_t>& flags) {
  const MBR& bb = poly.bounds();
  std::vector<const Ring*> rings{&poly.outer()};
  for (const auto& h : poly.holes()) rings.push_back(&h);
  std::vector<std::vector<double>> xs(rings.size());
  std::vector<std::size_t> seen(rings.size());

  for (std::int64_t row = f.row_lo(); row <= f.row_hi(); ++row) {
    const double yc = f.center(f.col_lo(), row).y;
    if (yc < bb.min.y || yc > bb.max.y) continue;
    for (std::size_t r = 0; r < rings.size(); ++r) {
      const Ring& ring = *rings[r];
      xs[r].clear();
      seen[r] = 0;
      for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        const Point2D a = ring[j];
        const Point2D b = ring[i];
        if ((a.y > yc) != (b.y > yc)) xs[r].push_back(crossing_x(a, b, yc));
      }
      std::sort(xs[r].begin(), xs[r].end());
    }
    for (std::int64_t col = f.col_lo(); col <= f.col_hi(); ++col) {
      const double xc = f.center(col, row).x;
      bool inside = true;
      for (std::size_t r = 0; r < rings.size(); ++r) {
        while (seen[r] < xs[r].size() && xs[r][seen[r]] <= xc) ++seen[r];
        const bool odd = ((xs[r].size() - seen[r]) & 1) != 0;
        if (r == 0 ? !odd : odd) inside = false;
      }
      if (inside && xc >= bb.min.x && xc <= bb.max.x) flags[f.slot(col, row)] |= kCenterIn;
    }
    // Centers lying on a ring edge count as inside.
    for (const Ring* ring : rings) {
      for (std::size_t i = 0, j = ring->size() - 1; i < ring->size(); j = i++) {
        const Point2D a = (*ring)[j];
        const Point2D b = (*ring)[i];
        if (yc < std::min(a.y, b.y) || yc > std::max(a.y, b.y)) continue;
        std::int64_t c0 = 0, c1 = -1;
        const bool any = a.y == b.y ? f.span(std::min(a.x, b.x), std::max(a.x, b.x), true, c0, c1)
                                    : f.span(crossing_x(a, b, yc), crossing_x(a, b, yc), true, c0, c1);
        if (!any) continue;
        for (std::int64_t col = c0; col <= c1; ++col) {
          const Point2D c = f.center(col, row);
          if (bb.contains(c) && on_segment(c, a, b)) flags[f.slot(col, row)] |= kCenterIn;
        }
      }
    }
  }
}

// Marks pixels whose open square the edge passes through. Candidates are
// enumerated along the edge's major axis so the interpolated minor-axis
// range stays accurate; the shared predicate then decides.
void mark_crossings(const Polygon& poly, const PartFrame& f, std::vector<std::uint8_t>& flags) {
  poly.for_each_edge([&](Point2D a, Point2D b) {
    const bool steep = std::abs(b.y - a.y) >= std::abs(b.x - a.x);
    // Major axis coordinate u, minor coordinate v.
    auto u = [&](Point2D p) { return steep ? p.y : p.x; };
    auto v = [&](Point2D p) { return steep ? p.x : p.y; };
    const double u0 = std::min(u(a), u(b));
    const double u1 = std::max(u(a), u(b));
    std::int64_t m0 = 0, m1 = -1;
    if (!f.span(u0, u1, !steep, m0, m1)) return;
    for (std::int64_t m = m0; m <= m1; ++m) {
      const MBR slab = steep ? f.rect(f.col_lo(), m) : f.rect(m, f.row_lo());
      const double s0 = std::max(steep ? slab.min.y : slab.min.x, u0);
      const double s1 = std::min(steep ? slab.max.y : slab.max.x, u1);
      if (s0 > s1) continue;
      double v0 = 0.0, v1 = 0.0;
      if (u(a) == u(b)) {
        v0 = std::min(v(a), v(b));
        v1 = std::max(v(a), v(b));
      } else {
        const double t = (v(b) - v(a)) / (u(b) - u(a));
        const double va = v(a) + (s0 - u(a)) * t;
        const double vb = v(a) + (s1 - u(a)) * t;
        v0 = std::min(va, vb);
        v1 = std::max(va, vb);
      }
      std::int64_t k0 = 0, k1 = -1;
      if (!f.span(v0, v1, steep, k0, k1)) continue;
      for (std::int64_t k = k0; k <= k1; ++k) {
        const std::int64_t col = steep ? k : m;
        const std::int64_t row = steep ? m : k;
        if (segment_crosses_open_box(a, b, f.rect(col, row))) flags[f.slot(col, row)] |= kCrossed;
      }
    }
  });
}

void check_part_in_domain(const GridConfig& grid, const MBR& box) {
  if (box.min.x < grid.origin.x || box.min.y < grid.origin.y || box.max.x > grid.origin.x + grid.extent ||
      box.max.y > grid.origin.y + grid.extent)
    fail(ErrorCode::Domain, "polygon extends outside the grid domain");
}

// 0 = not covered, 1 = boundary pixel, 2 = interior pixel.
void rasterize_part(const Polygon& poly, const Canvas& canvas, RasterMode mode, std::vector<std::uint8_t>& state) {
  check_part_in_domain(canvas.grid(), poly.bounds());
  const PartFrame f(canvas, poly.bounds());
  if (!f.valid()) return;
  std::vector<std::uint8_t> flags(f.cols() * f.rows(), 0);
  mark_centers(poly, f, flags);
  mark_crossings(poly, f, flags);
  const std::size_t n = canvas.width();
  for (std::int64_t row = f.row_lo(); row <= f.row_hi(); ++row) {
    for (std::int64_t col = f.col_lo(); col <= f.col_hi(); ++col) {
      const std::uint8_t fl = flags[f.slot(col, row)];
      std::uint8_t s = 0;
      if (fl & kCrossed) {
        if (mode == RasterMode::Conservative || (fl & kCenterIn)) s = 1;
      } else if (fl & kCenterIn) {
        s = 2;
      }
      auto& dst = state[static_cast<std::size_t>(row) * n + static_cast<std::size_t>(col)];
      dst = std::max(dst, s);
    }
  }
}

Canvas paint(Canvas canvas, const std::vector<std::uint8_t>& state, std::int64_t id) {
  auto px = canvas.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (state[i] == 0) continue;
    px[i].filled = true;
    px[i].region_id = id;
    px[i].boundary = state[i] == 1;
  }
  return canvas;
}

}  // namespace

Canvas render_polygon(const Polygon& poly, const GridConfig& grid, int level, RasterMode mode, std::int64_t id,
                      CanvasWindow window, int max_side_level) {
  Canvas canvas(grid, level, window, max_side_level);
  std::vector<std::uint8_t> state(canvas.pixels().size(), 0);
  rasterize_part(poly, canvas, mode, state);
  return paint(std::move(canvas), state, id);
}

Canvas render_polygon(const RegionRecord& region, const GridConfig& grid, int level, RasterMode mode,
                      CanvasWindow window, int max_side_level) {
  Canvas canvas(grid, level, window, max_side_level);
  std::vector<std::uint8_t> state(canvas.pixels().size(), 0);
  for (const auto& part : region.parts) rasterize_part(part, canvas, mode, state);
  return paint(std::move(canvas), state, region.id);
}

namespace {

std::optional<std::int64_t> pick_region(const std::optional<std::int64_t>& a, const std::optional<std::int64_t>& b,
                                        bool larger) {
  if (!a) return b;
  if (!b) return a;
  return larger ? std::max(*a, *b) : std::min(*a, *b);
}

}  // namespace

Canvas blend(const Canvas& a, const Canvas& b, BlendFn fn) {
  if (!a.same_shape(b)) fail(ErrorCode::Shape, "blend operands differ in size, level or window");
  Canvas out = a;
  auto dst = out.pixels();
  auto src = b.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const Pixel& q = src[i];
    if (!q.filled) continue;
    Pixel& p = dst[i];
    if (!p.filled || fn == BlendFn::Overwrite) {
      p = q;
      continue;
    }
    switch (fn) {
      case BlendFn::Sum:
        p.count += q.count;
        p.sum += q.sum;
        p.region_id = pick_region(p.region_id, q.region_id, false);
        break;
      case BlendFn::Max:
        p.count = std::max(p.count, q.count);
        p.sum = std::max(p.sum, q.sum);
        p.region_id = pick_region(p.region_id, q.region_id, true);
        break;
      case BlendFn::Overwrite:
        break;
    }
    p.boundary = p.boundary || q.boundary;
  }
  return out;
}

bool MaskPredicate::operator()(const Pixel& p) const {
  switch (kind) {
    case Kind::Always:
      return true;
    case Kind::NonEmpty:
      return p.filled;
    case Kind::RegionEq:
      return p.filled && p.region_id == region_id;
    case Kind::BoundaryOnly:
      return p.filled && p.boundary;
    case Kind::CountGreater:
      return p.filled && p.count > threshold;
  }
  return false;
}

Canvas mask(const Canvas& a, const MaskPredicate& m) {
  Canvas out = a;
  for (auto& p : out.pixels())
    if (!m(p)) p = Pixel{};
  return out;
}

Canvas affine(const Canvas& src, const AffineTransform& t) {
  auto unit = [](double v) { return v == 1.0 || v == -1.0; };
  auto integral = [](double v) { return std::isfinite(v) && std::floor(v) == v; };
  if (t.b != 0.0 || t.c != 0.0 || !unit(t.a) || !unit(t.d) || !integral(t.tx) || !integral(t.ty))
    fail(ErrorCode::Unsupported, "only integer translations and axis flips are supported");
  Canvas out(src.grid(), src.level(), src.window());
  const auto n = static_cast<std::int64_t>(src.width());
  const auto sx = static_cast<std::int64_t>(t.a), sy = static_cast<std::int64_t>(t.d);
  const auto tx = static_cast<std::int64_t>(t.tx), ty = static_cast<std::int64_t>(t.ty);
  for (std::int64_t iy = 0; iy < n; ++iy) {
    for (std::int64_t ix = 0; ix < n; ++ix) {
      const Pixel& p = src.at(static_cast<std::uint32_t>(ix), static_cast<std::uint32_t>(iy));
      if (!p.filled) continue;
      const std::int64_t jx = sx * ix + tx;
      const std::int64_t jy = sy * iy + ty;
      if (jx < 0 || jy < 0 || jx >= n || jy >= n) continue;
      out.at(static_cast<std::uint32_t>(jx), static_cast<std::uint32_t>(jy)) = p;
    }
  }
  return out;
}

CanvasTotals reduce(const Canvas& c) {
  CanvasTotals t;
  for (const auto& p : c.pixels()) {
    if (!p.filled) continue;
    const Partial part{p.count, static_cast<long double>(p.sum)};
    t.all += part;
    if (p.boundary) t.boundary += part;
  }
  return t;
}

CanvasChannel parse_canvas_channel(const std::string& text) {
  if (text == "count") return CanvasChannel::Count;
  if (text == "sum") return CanvasChannel::Sum;
  if (text == "region") return CanvasChannel::Region;
  if (text == "boundary") return CanvasChannel::Boundary;
  fail(ErrorCode::InvalidArgument, "unknown canvas channel '" + text + "'");
}

namespace {

double channel_value(const Pixel& p, CanvasChannel ch) {
  switch (ch) {
    case CanvasChannel::Count:
      return static_cast<double>(p.count);
    case CanvasChannel::Sum:
      return p.sum;
    case CanvasChannel::Region:
      return p.region_id ? static_cast<double>(*p.region_id) : 0.0;
    case CanvasChannel::Boundary:
      return p.boundary ? 1.0 : 0.0;
  }
  return 0.0;
}

}  // namespace

void write_pgm(std::ostream& os, const Canvas& c, CanvasChannel channel) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& p : c.pixels()) {
    if (!p.filled) continue;
    const double v = channel_value(p, channel);
    lo = first ? v : std::min(lo, v);
    hi = first ? v : std::max(hi, v);
    first = false;
  }
  const double range = hi > lo ? hi - lo : 1.0;
  os << "P2\n" << c.width() << ' ' << c.height() << "\n255\n";
  for (std::uint32_t r = 0; r < c.height(); ++r) {
    const std::uint32_t iy = c.height() - 1 - r;
    for (std::uint32_t ix = 0; ix < c.width(); ++ix) {
      const Pixel& p = c.at(ix, iy);
      // Empty pixels are black; filled ones map to 1..255.
      int g = 0;
      if (p.filled) g = 1 + static_cast<int>(std::lround(254.0 * (channel_value(p, channel) - lo) / range));
      os << g << (ix + 1 == c.width() ? '\n' : ' ');
    }
  }
  if (!os) fail(ErrorCode::Io, "failed writing PGM");
}

void write_csv(std::ostream& os, const Canvas& c, CanvasChannel channel) {
  for (std::uint32_t r = 0; r < c.height(); ++r) {
    const std::uint32_t iy = c.height() - 1 - r;
    for (std::uint32_t ix = 0; ix < c.width(); ++ix) {
      const Pixel& p = c.at(ix, iy);
      if (ix) os << ',';
      if (p.filled) {
        if (channel == CanvasChannel::Region && !p.region_id) continue;
        os << channel_value(p, channel);
      }
    }
    os << '\n';
  }
  if (!os) fail(ErrorCode::Io, "failed writing CSV");
}

}  // namespace dbsa
