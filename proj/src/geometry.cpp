#include "dbsa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "dbsa/error.hpp"

namespace dbsa {

void MBR::expand(Point2D p) {
  min.x = std::min(min.x, p.x);
  min.y = std::min(min.y, p.y);
  max.x = std::max(max.x, p.x);
  max.y = std::max(max.y, p.y);
}

void MBR::expand(const MBR& other) {
  expand(other.min);
  expand(other.max);
}

double signed_area(const Ring& ring) {
  double twice = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++)
    twice += ring[j].x * ring[i].y - ring[i].x * ring[j].y;
  return 0.5 * twice;
}

double orient(Point2D a, Point2D b, Point2D c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool on_segment(Point2D p, Point2D a, Point2D b) {
  if (p.x < std::min(a.x, b.x) || p.x > std::max(a.x, b.x)) return false;
  if (p.y < std::min(a.y, b.y) || p.y > std::max(a.y, b.y)) return false;
  return orient(a, b, p) == 0.0;
}

namespace {

bool strictly_inside(Point2D p, const MBR& box) {
  return p.x > box.min.x && p.x < box.max.x && p.y > box.min.y && p.y < box.max.y;
}

// Liang-Barsky edge test; narrows [t0, t1].
bool clip(double p, double q, double& t0, double& t1) {
  if (p == 0.0) return q >= 0.0;
  const double r = q / p;
  if (p < 0.0) {
    if (r > t1) return false;
    t0 = std::max(t0, r);
  } else {
    if (r < t0) return false;
    t1 = std::min(t1, r);
  }
  return true;
}

bool segments_intersect(Point2D p1, Point2D p2, Point2D q1, Point2D q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  return (d1 == 0 && on_segment(p1, q1, q2)) || (d2 == 0 && on_segment(p2, q1, q2)) ||
         (d3 == 0 && on_segment(q1, p1, p2)) || (d4 == 0 && on_segment(q2, p1, p2));
}

bool crossing_parity(Point2D p, const Ring& ring) {
  bool in = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2D a = ring[j];
    const Point2D b = ring[i];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xi = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xi) in = !in;
    }
  }
  return in;
}

bool on_ring(Point2D p, const Ring& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++)
    if (on_segment(p, ring[j], ring[i])) return true;
  return false;
}

void validate_ring(const Ring& ring, const char* what) {
  if (ring.size() < 3) fail(ErrorCode::Structure, std::string(what) + " ring needs at least 3 vertices");
  for (const auto& p : ring)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      fail(ErrorCode::Structure, std::string(what) + " ring has a non-finite coordinate");
  if (signed_area(ring) == 0.0) fail(ErrorCode::Structure, std::string(what) + " ring has zero area");
  // Non-adjacent edges must not touch.
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 2; k < n; ++k) {
      if (i == 0 && k == n - 1) continue;
      if (segments_intersect(ring[i], ring[(i + 1) % n], ring[k], ring[(k + 1) % n]))
        fail(ErrorCode::Structure, std::string(what) + " ring is self-intersecting");
    }
  }
}

}  // namespace

bool segment_crosses_open_box(Point2D a, Point2D b, const MBR& box) {
  if (std::max(a.x, b.x) <= box.min.x || std::min(a.x, b.x) >= box.max.x) return false;
  if (std::max(a.y, b.y) <= box.min.y || std::min(a.y, b.y) >= box.max.y) return false;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  double t0 = 0.0;
  double t1 = 1.0;
  if (!clip(-dx, a.x - box.min.x, t0, t1) || !clip(dx, box.max.x - a.x, t0, t1) ||
      !clip(-dy, a.y - box.min.y, t0, t1) || !clip(dy, box.max.y - a.y, t0, t1))
    return false;
  if (t0 > t1) return false;
  // A segment inside the closed box reaches the open interior iff it does not
  // lie along one side; its midpoint tells which.
  const double tm = 0.5 * (t0 + t1);
  return strictly_inside({a.x + tm * dx, a.y + tm * dy}, box);
}

Polygon::Polygon(Ring outer, std::vector<Ring> holes) : outer_(std::move(outer)), holes_(std::move(holes)) {
  validate_ring(outer_, "outer");
  if (signed_area(outer_) < 0) std::reverse(outer_.begin(), outer_.end());
  bounds_ = {outer_.front(), outer_.front()};
  for (const auto& p : outer_) bounds_.expand(p);
  for (auto& h : holes_) {
    validate_ring(h, "hole");
    if (signed_area(h) > 0) std::reverse(h.begin(), h.end());
    for (const auto& p : h) {
      if (!crossing_parity(p, outer_) && !on_ring(p, outer_))
        fail(ErrorCode::Structure, "hole vertex lies outside the outer ring");
    }
  }
}

std::size_t Polygon::edge_count() const {
  std::size_t n = outer_.size();
  for (const auto& h : holes_) n += h.size();
  return n;
}

double Polygon::area() const {
  double a = signed_area(outer_);
  for (const auto& h : holes_) a += signed_area(h);
  return a;
}

std::size_t PointSet::attr_index(const std::string& name) const {
  for (std::size_t i = 0; i < attr_names.size(); ++i)
    if (attr_names[i] == name) return i;
  fail(ErrorCode::Schema, "unknown attribute '" + name + "'");
}

void PointSet::add(const PointRecord& rec) {
  if (rec.attrs.size() != attr_names.size())
    fail(ErrorCode::Schema, "point record does not match the dataset schema");
  locs.push_back(rec.loc);
  values.insert(values.end(), rec.attrs.begin(), rec.attrs.end());
}

PointRecord PointSet::record(std::size_t row) const {
  const auto k = attr_names.size();
  return {locs[row], std::vector<double>(values.begin() + row * k, values.begin() + (row + 1) * k)};
}

bool point_in_polygon(Point2D p, const Polygon& poly) {
  if (!poly.bounds().contains(p)) return false;
  if (on_ring(p, poly.outer())) return true;
  for (const auto& h : poly.holes())
    if (on_ring(p, h)) return true;
  if (!crossing_parity(p, poly.outer())) return false;
  for (const auto& h : poly.holes())
    if (crossing_parity(p, h)) return false;
  return true;
}

bool point_in_region(Point2D p, const RegionRecord& region) {
  return std::any_of(region.parts.begin(), region.parts.end(),
                     [&](const Polygon& poly) { return point_in_polygon(p, poly); });
}

double point_segment_distance(Point2D p, Point2D a, Point2D b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

double distance_to_boundary(Point2D p, const Polygon& poly) {
  double best = std::numeric_limits<double>::infinity();
  poly.for_each_edge([&](Point2D a, Point2D b) { best = std::min(best, point_segment_distance(p, a, b)); });
  return best;
}

double distance_to_boundary(Point2D p, const RegionRecord& region) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& poly : region.parts) best = std::min(best, distance_to_boundary(p, poly));
  return best;
}

MBR mbr_of(const Polygon& poly) { return poly.bounds(); }

MBR mbr_of(const RegionRecord& region) {
  if (region.parts.empty()) fail(ErrorCode::Structure, "region has no polygons");
  MBR box = region.parts.front().bounds();
  for (const auto& poly : region.parts) box.expand(poly.bounds());
  return box;
}

std::vector<Point2D> sample_lattice(const MBR& bounds, double step,
                                    const std::function<bool(Point2D)>& inside) {
  if (!(step > 0.0)) fail(ErrorCode::InvalidArgument, "sampling step must be positive");
  std::vector<Point2D> out;
  const auto i0 = static_cast<std::int64_t>(std::ceil(bounds.min.x / step));
  const auto i1 = static_cast<std::int64_t>(std::floor(bounds.max.x / step));
  const auto j0 = static_cast<std::int64_t>(std::ceil(bounds.min.y / step));
  const auto j1 = static_cast<std::int64_t>(std::floor(bounds.max.y / step));
  for (auto j = j0; j <= j1; ++j) {
    for (auto i = i0; i <= i1; ++i) {
      const Point2D p{static_cast<double>(i) * step, static_cast<double>(j) * step};
      if (inside(p)) out.push_back(p);
    }
  }
  return out;
}

namespace {

struct BucketKey {
  std::int64_t i;
  std::int64_t j;
  friend bool operator==(const BucketKey&, const BucketKey&) = default;
};

struct BucketHash {
  std::size_t operator()(const BucketKey& k) const noexcept {
    return std::hash<std::int64_t>()(k.i * 0x9E3779B97F4A7C15LL ^ k.j);
  }
};

// Exact nearest-neighbour distances against a bucketed point set.
class BucketIndex {
 public:
  BucketIndex(std::span<const Point2D> pts, double cell) : cell_(cell) {
    for (const auto& p : pts) buckets_[key(p)].push_back(p);
    bounds_ = {pts.front(), pts.front()};
    for (const auto& p : pts) bounds_.expand(p);
  }

  double nearest(Point2D q) const {
    const BucketKey c = key(q);
    double best = std::numeric_limits<double>::infinity();
    // Distance from q to the sample bounds caps the radius we must scan.
    const double reach = std::hypot(std::max({bounds_.min.x - q.x, q.x - bounds_.max.x, 0.0}),
                                    std::max({bounds_.min.y - q.y, q.y - bounds_.max.y, 0.0}));
    const double span = std::hypot(bounds_.width(), bounds_.height());
    const auto max_ring = static_cast<std::int64_t>(std::ceil((reach + span) / cell_)) + 1;
    for (std::int64_t r = 0; r <= max_ring; ++r) {
      // Any point in ring r is at least (r - 1) * cell away.
      if (r > 0 && static_cast<double>(r - 1) * cell_ > best) break;
      auto scan = [&](std::int64_t di, std::int64_t dj) {
        auto it = buckets_.find({c.i + di, c.j + dj});
        if (it == buckets_.end()) return;
        for (const auto& p : it->second) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
      };
      if (r == 0) {
        scan(0, 0);
        continue;
      }
      for (std::int64_t d = -r; d <= r; ++d) {
        scan(d, -r);
        scan(d, r);
      }
      for (std::int64_t d = -r + 1; d <= r - 1; ++d) {
        scan(-r, d);
        scan(r, d);
      }
    }
    return best;
  }

 private:
  BucketKey key(Point2D p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / cell_)), static_cast<std::int64_t>(std::floor(p.y / cell_))};
  }

  double cell_;
  MBR bounds_{};
  std::unordered_map<BucketKey, std::vector<Point2D>, BucketHash> buckets_;
};

double directed(std::span<const Point2D> from, const BucketIndex& to) {
  double worst = 0.0;
  for (const auto& p : from) worst = std::max(worst, to.nearest(p));
  return worst;
}

}  // namespace

double hausdorff_distance(std::span<const Point2D> a, std::span<const Point2D> b, double step) {
  if (a.empty() || b.empty()) fail(ErrorCode::Domain, "Hausdorff distance of an empty sample");
  if (!(step > 0.0)) fail(ErrorCode::InvalidArgument, "sampling step must be positive");
  const double cell = 4.0 * step;
  const BucketIndex ia(a, cell);
  const BucketIndex ib(b, cell);
  return std::max(directed(a, ib), directed(b, ia));
}

}  // namespace dbsa
