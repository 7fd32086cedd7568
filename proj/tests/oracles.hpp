// Reference implementations used only by tests. Each one is written
// independently of the library code it checks: different algorithm where
// possible, brute force otherwise.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "dbsa/geometry.hpp"
#include "dbsa/grid.hpp"
#include "dbsa/workload.hpp"

namespace oracle {

using dbsa::Point2D;
using dbsa::Polygon;
using dbsa::RegionRecord;
using dbsa::Ring;

inline bool on_edge(Point2D p, Point2D a, Point2D b) {
  const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  if (cross != 0.0) return false;
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

// Winding number of a closed ring around p (p not on the ring).
inline int winding(Point2D p, const Ring& r) {
  int w = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Point2D a = r[i], b = r[(i + 1) % r.size()];
    const double side = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (a.y <= p.y) {
      if (b.y > p.y && side > 0) ++w;
    } else if (b.y <= p.y && side < 0) {
      --w;
    }
  }
  return w;
}

inline bool ring_boundary(Point2D p, const Ring& r) {
  for (std::size_t i = 0; i < r.size(); ++i)
    if (on_edge(p, r[i], r[(i + 1) % r.size()])) return true;
  return false;
}

// Closed polygon membership: boundary points are inside.
inline bool pip(Point2D p, const Polygon& poly) {
  if (ring_boundary(p, poly.outer())) return true;
  for (const auto& h : poly.holes())
    if (ring_boundary(p, h)) return true;
  if (winding(p, poly.outer()) == 0) return false;
  for (const auto& h : poly.holes())
    if (winding(p, h) != 0) return false;
  return true;
}

inline bool pip(Point2D p, const RegionRecord& r) {
  return std::any_of(r.parts.begin(), r.parts.end(), [&](const Polygon& q) { return pip(p, q); });
}

inline double seg_dist(Point2D p, Point2D a, Point2D b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

inline double boundary_dist(Point2D p, const RegionRecord& r) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& poly : r.parts) {
    auto ring = [&](const Ring& ring) {
      for (std::size_t i = 0; i < ring.size(); ++i) best = std::min(best, seg_dist(p, ring[i], ring[(i + 1) % ring.size()]));
    };
    ring(poly.outer());
    for (const auto& h : poly.holes()) ring(h);
  }
  return best;
}

// Liang-Barsky against the open box (x0, x1) x (y0, y1).
inline bool clips_open_box(Point2D a, Point2D b, double x0, double y0, double x1, double y1) {
  double lo = 0.0, hi = 1.0;
  auto axis = [&](double p, double d, double mn, double mx) {
    if (d == 0.0) return mn < p && p < mx;
    double t0 = (mn - p) / d, t1 = (mx - p) / d;
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    return true;
  };
  if (!axis(a.x, b.x - a.x, x0, x1)) return false;
  if (!axis(a.y, b.y - a.y, y0, y1)) return false;
  return lo < hi;
}

// Brute-force uniform covering: every leaf cell at `level`, classified
// directly. Returns the set of (ix, iy) kept.
inline std::set<std::pair<std::uint32_t, std::uint32_t>> uniform_cover(const RegionRecord& r, double extent, int level,
                                                                        bool conservative) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> out;
  const std::uint32_t n = 1u << level;
  const double side = extent / n;
  for (std::uint32_t iy = 0; iy < n; ++iy)
    for (std::uint32_t ix = 0; ix < n; ++ix) {
      const double x0 = ix * side, y0 = iy * side;
      const Point2D c{x0 + side / 2, y0 + side / 2};
      bool keep = pip(c, r);
      if (!keep && conservative) {
        for (const auto& poly : r.parts) {
          auto ring = [&](const Ring& ring) {
            for (std::size_t i = 0; i < ring.size() && !keep; ++i)
              keep = clips_open_box(ring[i], ring[(i + 1) % ring.size()], x0, y0, x0 + side, y0 + side);
          };
          ring(poly.outer());
          for (const auto& h : poly.holes()) ring(h);
        }
      }
      if (keep) out.insert({ix, iy});
    }
  return out;
}

// Morton code by looping over bits one at a time.
inline std::uint64_t morton(std::uint32_t ix, std::uint32_t iy, int level) {
  std::uint64_t code = 0;
  for (int b = 0; b < level; ++b) {
    code |= static_cast<std::uint64_t>((ix >> b) & 1u) << (2 * b);
    code |= static_cast<std::uint64_t>((iy >> b) & 1u) << (2 * b + 1);
  }
  return code;
}

inline std::size_t linear_lower_bound(const std::vector<std::uint64_t>& keys, std::uint64_t k) {
  std::size_t i = 0;
  while (i < keys.size() && keys[i] < k) ++i;
  return i;
}

// Exact symmetric Hausdorff distance by all pairs.
inline double hausdorff(const std::vector<Point2D>& a, const std::vector<Point2D>& b) {
  auto directed = [](const std::vector<Point2D>& from, const std::vector<Point2D>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

// Exact per-region count by scanning all points.
inline std::vector<std::uint64_t> counts(const dbsa::PointSet& pts, const std::vector<RegionRecord>& regions) {
  std::vector<std::uint64_t> out(regions.size(), 0);
  for (std::size_t r = 0; r < regions.size(); ++r)
    for (const auto& p : pts.locs)
      if (pip(p, regions[r])) ++out[r];
  return out;
}

inline Polygon square(double x0, double y0, double x1, double y1) { return Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}); }

inline RegionRecord region(std::int64_t id, Polygon p) {
  RegionRecord r;
  r.id = id;
  r.parts.push_back(std::move(p));
  return r;
}

}  // namespace oracle
