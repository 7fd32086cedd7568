#include "dbsa/grid.hpp"

#include <cmath>
#include <string>

#include "dbsa/error.hpp"

namespace dbsa {

namespace {

void check_level(int level) {
  if (level < 0 || level > kMaxLevel)
    fail(ErrorCode::Domain, "cell level " + std::to_string(level) + " outside [0, 31]");
}

}  // namespace

double GridConfig::cell_side(int level) const { return std::ldexp(extent, -level); }

bool GridConfig::in_domain(Point2D p) const {
  return p.x >= origin.x && p.y >= origin.y && p.x - origin.x < extent && p.y - origin.y < extent;
}

GridConfig GridConfig::with_level(int level) const {
  check_level(level);
  GridConfig g = *this;
  g.max_level = level;
  return g;
}

void GridConfig::validate() const {
  if (!(extent > 0.0) || !std::isfinite(extent)) fail(ErrorCode::Configuration, "grid extent must be positive");
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y))
    fail(ErrorCode::Configuration, "grid origin must be finite");
  if (max_level < 0 || max_level > kMaxLevel) fail(ErrorCode::Configuration, "grid max_level outside [0, 31]");
}

int level_for_bound(double extent, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (!(extent > 0.0)) fail(ErrorCode::Configuration, "grid extent must be positive");
  const double root2 = std::sqrt(2.0);
  for (int level = 0; level <= kMaxLevel; ++level) {
    if (std::ldexp(extent, -level) * root2 <= epsilon) return level;
  }
  fail(ErrorCode::Capacity, "epsilon " + std::to_string(epsilon) + " needs a grid finer than level 31");
}

int level_for_bound(const GridConfig& cfg, double epsilon) { return level_for_bound(cfg.extent, epsilon); }

std::uint64_t spread_bits(std::uint32_t v) {
  std::uint64_t x = v;
  x = (x | (x << 16)) & 0x0000FFFF0000FFFFULL;
  x = (x | (x << 8)) & 0x00FF00FF00FF00FFULL;
  x = (x | (x << 4)) & 0x0F0F0F0F0F0F0F0FULL;
  x = (x | (x << 2)) & 0x3333333333333333ULL;
  x = (x | (x << 1)) & 0x5555555555555555ULL;
  return x;
}

std::uint32_t compact_bits(std::uint64_t v) {
  v &= 0x5555555555555555ULL;
  v = (v | (v >> 1)) & 0x3333333333333333ULL;
  v = (v | (v >> 2)) & 0x0F0F0F0F0F0F0F0FULL;
  v = (v | (v >> 4)) & 0x00FF00FF00FF00FFULL;
  v = (v | (v >> 8)) & 0x0000FFFF0000FFFFULL;
  v = (v | (v >> 16)) & 0x00000000FFFFFFFFULL;
  return static_cast<std::uint32_t>(v);
}

CellId z_encode(std::uint32_t ix, std::uint32_t iy, int level) {
  check_level(level);
  const std::uint64_t limit = std::uint64_t{1} << level;
  if (ix >= limit || iy >= limit)
    fail(ErrorCode::Domain, "cell coordinate out of range for level " + std::to_string(level));
  return {level, spread_bits(ix) | (spread_bits(iy) << 1)};
}

CellCoord z_decode(const CellId& c) { return {compact_bits(c.code), compact_bits(c.code >> 1)}; }

CellId point_to_cell(const GridConfig& cfg, Point2D p, int level) {
  check_level(level);
  if (!cfg.in_domain(p)) fail(ErrorCode::Domain, "point outside the grid domain");
  const double side = cfg.cell_side(level);
  const std::uint64_t limit = std::uint64_t{1} << level;
  auto index = [&](double offset) {
    auto i = static_cast<std::uint64_t>(std::floor(offset / side));
    // offset < extent can still round up to the last boundary.
    return static_cast<std::uint32_t>(i >= limit ? limit - 1 : i);
  };
  return z_encode(index(p.x - cfg.origin.x), index(p.y - cfg.origin.y), level);
}

CellInterval cell_interval(const CellId& c, int max_level) {
  check_level(max_level);
  if (c.level > max_level) fail(ErrorCode::Domain, "cell is finer than the interval level");
  const int shift = 2 * (max_level - c.level);
  return {c.code << shift, (c.code + 1) << shift};
}

std::array<CellId, 4> children(const CellId& c, int max_level) {
  if (c.level >= max_level || c.level >= kMaxLevel) fail(ErrorCode::Domain, "leaf cell has no children");
  const std::uint64_t base = c.code << 2;
  const int l = c.level + 1;
  return {CellId{l, base}, CellId{l, base | 1}, CellId{l, base | 2}, CellId{l, base | 3}};
}

CellId parent(const CellId& c) {
  if (c.level <= 0) fail(ErrorCode::Domain, "root cell has no parent");
  return {c.level - 1, c.code >> 2};
}

MBR cell_rect(const GridConfig& cfg, int level, std::uint32_t ix, std::uint32_t iy) {
  const double side = cfg.cell_side(level);
  return {{cfg.origin.x + ix * side, cfg.origin.y + iy * side},
          {cfg.origin.x + (ix + 1.0) * side, cfg.origin.y + (iy + 1.0) * side}};
}

Point2D cell_center(const GridConfig& cfg, int level, std::uint32_t ix, std::uint32_t iy) {
  const double side = cfg.cell_side(level);
  return {cfg.origin.x + (ix + 0.5) * side, cfg.origin.y + (iy + 0.5) * side};
}

MBR cell_rect(const GridConfig& cfg, const CellId& c) {
  const auto [ix, iy] = z_decode(c);
  return cell_rect(cfg, c.level, ix, iy);
}

Point2D cell_center(const GridConfig& cfg, const CellId& c) {
  const auto [ix, iy] = z_decode(c);
  return cell_center(cfg, c.level, ix, iy);
}

}  // namespace dbsa
