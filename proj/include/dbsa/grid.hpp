#pragma once

#include <array>
#include <cstdint>

#include "dbsa/geometry.hpp"

namespace dbsa {

inline constexpr int kMaxLevel = 31;

// Quadtree over the square [origin, origin + extent)^2. Cells are half-open,
// so every in-domain point belongs to exactly one cell per level.
struct GridConfig {
  Point2D origin{0.0, 0.0};
  double extent = 1.0;
  int max_level = 0;

  double cell_side(int level) const;
  bool in_domain(Point2D p) const;
  // Same domain, different leaf level.
  GridConfig with_level(int level) const;
  void validate() const;

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

// One grid cell: Z-order code at a quadtree level. Codes interleave x bits
// into the even positions and y bits into the odd positions.
struct CellId {
  int level = 0;
  std::uint64_t code = 0;

  friend auto operator<=>(const CellId&, const CellId&) = default;
};

// Half-open range [lo, hi) of leaf codes.
struct CellInterval {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  bool contains(std::uint64_t code) const { return code >= lo && code < hi; }
  bool empty() const { return lo >= hi; }
  std::uint64_t size() const { return hi - lo; }

  friend bool operator==(const CellInterval&, const CellInterval&) = default;
};

// Smallest level whose cell diagonal is at most epsilon.
int level_for_bound(const GridConfig& cfg, double epsilon);
// The same rule for a bare domain extent.
int level_for_bound(double extent, double epsilon);

std::uint64_t spread_bits(std::uint32_t v);
std::uint32_t compact_bits(std::uint64_t v);

CellId z_encode(std::uint32_t ix, std::uint32_t iy, int level);

struct CellCoord {
  std::uint32_t ix = 0;
  std::uint32_t iy = 0;
};
CellCoord z_decode(const CellId& c);

CellId point_to_cell(const GridConfig& cfg, Point2D p, int level);
// Leaf code of p at cfg.max_level.
inline std::uint64_t leaf_code(const GridConfig& cfg, Point2D p) { return point_to_cell(cfg, p, cfg.max_level).code; }

CellInterval cell_interval(const CellId& c, int max_level);

std::array<CellId, 4> children(const CellId& c, int max_level);
CellId parent(const CellId& c);

// Closed square covered by a cell (membership itself is half-open).
MBR cell_rect(const GridConfig& cfg, const CellId& c);
Point2D cell_center(const GridConfig& cfg, const CellId& c);
// The same quantities from cell coordinates at a level.
MBR cell_rect(const GridConfig& cfg, int level, std::uint32_t ix, std::uint32_t iy);
Point2D cell_center(const GridConfig& cfg, int level, std::uint32_t ix, std::uint32_t iy);

}  // namespace dbsa
