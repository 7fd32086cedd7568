#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dbsa {

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

using Ring = std::vector<Point2D>;

struct MBR {
  Point2D min;
  Point2D max;

  bool contains(Point2D p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  void expand(Point2D p);
  void expand(const MBR& other);

  friend bool operator==(const MBR&, const MBR&) = default;
};

// A simple polygon with optional holes. Rings are implicitly closed (the
// last vertex is not repeated). Construction validates and reorients: the
// outer ring is stored counter-clockwise, holes clockwise.
class Polygon {
 public:
  Polygon() = default;
  explicit Polygon(Ring outer, std::vector<Ring> holes = {});

  const Ring& outer() const { return outer_; }
  const std::vector<Ring>& holes() const { return holes_; }
  const MBR& bounds() const { return bounds_; }

  // Number of edges over all rings.
  std::size_t edge_count() const;

  // Calls fn(a, b) for every ring edge.
  template <typename Fn>
  void for_each_edge(Fn&& fn) const {
    visit_ring(outer_, fn);
    for (const auto& h : holes_) visit_ring(h, fn);
  }

  double area() const;

 private:
  template <typename Fn>
  static void visit_ring(const Ring& r, Fn& fn) {
    const std::size_t n = r.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) fn(r[j], r[i]);
  }

  Ring outer_;
  std::vector<Ring> holes_;
  MBR bounds_{};
};

struct PointRecord {
  Point2D loc;
  std::vector<double> attrs;
};

// Columnar point dataset; all records share `attr_names`.
struct PointSet {
  std::vector<std::string> attr_names;
  std::vector<Point2D> locs;
  std::vector<double> values;  // row-major, locs.size() * attr_names.size()

  std::size_t size() const { return locs.size(); }
  bool empty() const { return locs.empty(); }
  std::size_t attr_count() const { return attr_names.size(); }
  double attr(std::size_t row, std::size_t col) const { return values[row * attr_names.size() + col]; }
  // Index of the named attribute, or throws a schema error.
  std::size_t attr_index(const std::string& name) const;

  void add(const PointRecord& rec);
  PointRecord record(std::size_t row) const;
};

struct RegionRecord {
  std::int64_t id = 0;
  std::vector<Polygon> parts;  // a multi-polygon is the union of its parts
};

double signed_area(const Ring& ring);

// Exact orientation sign of (b - a) x (c - a) evaluated in double precision.
double orient(Point2D a, Point2D b, Point2D c);

bool on_segment(Point2D p, Point2D a, Point2D b);

// True iff the segment [a, b] meets the open box (x0, x1) x (y0, y1).
bool segment_crosses_open_box(Point2D a, Point2D b, const MBR& box);

// Boundary points count as inside.
bool point_in_polygon(Point2D p, const Polygon& poly);
bool point_in_region(Point2D p, const RegionRecord& region);

double point_segment_distance(Point2D p, Point2D a, Point2D b);
double distance_to_boundary(Point2D p, const Polygon& poly);
double distance_to_boundary(Point2D p, const RegionRecord& region);

MBR mbr_of(const Polygon& poly);
MBR mbr_of(const RegionRecord& region);

// Lattice samples {anchor + (i, j) * step} lying inside `bounds` for which
// `inside` holds. The lattice is anchored at the origin, so two regions
// sampled with the same step share lattice points.
std::vector<Point2D> sample_lattice(const MBR& bounds, double step,
                                    const std::function<bool(Point2D)>& inside);

// Symmetric Hausdorff distance between two finite point samples, exact over
// the samples. `step` is the sampling pitch and only sizes the search buckets.
double hausdorff_distance(std::span<const Point2D> a, std::span<const Point2D> b, double step);

}  // namespace dbsa
