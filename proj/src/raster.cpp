#include "dbsa/raster.hpp"

#include <algorithm>
#include <string>
#include <thread>

#include "dbsa/error.hpp"

namespace dbsa {

std::string_view to_string(RasterMode mode) {
  return mode == RasterMode::Conservative ? "conservative" : "center";
}

RasterMode parse_raster_mode(std::string_view text) {
  if (text == "conservative") return RasterMode::Conservative;
  if (text == "center" || text == "center_sampled") return RasterMode::CenterSampled;
  fail(ErrorCode::InvalidArgument, "unknown raster mode '" + std::string(text) + "'");
}

CellClass classify_cell(const GridConfig& cfg, const CellId& c, const Polygon& poly) {
  const MBR box = cell_rect(cfg, c);
  bool partial = false;
  poly.for_each_edge([&](Point2D a, Point2D b) {
    if (!partial && segment_crosses_open_box(a, b, box)) partial = true;
  });
  if (partial) return CellClass::Partial;
  return point_in_polygon(cell_center(cfg, c), poly) ? CellClass::Inside : CellClass::Outside;
}

RasterApprox::RasterApprox(std::int64_t region_id, GridConfig grid, double epsilon, RasterMode mode,
                           std::vector<CoveringCell> cells)
    : region_id_(region_id), grid_(grid), epsilon_(epsilon), mode_(mode), cells_(std::move(cells)) {
  const int L = grid_.max_level;
  for (const auto& c : cells_) {
    if (c.cell.level > L) fail(ErrorCode::Configuration, "covering cell finer than the grid level");
    if (c.kind == CellKind::Boundary && c.cell.level != L)
      fail(ErrorCode::Configuration, "boundary cells must be leaves");
  }
  std::sort(cells_.begin(), cells_.end(), [L](const CoveringCell& a, const CoveringCell& b) {
    return cell_interval(a.cell, L).lo < cell_interval(b.cell, L).lo;
  });
  starts_.reserve(cells_.size());
  std::uint64_t prev_hi = 0;
  for (const auto& c : cells_) {
    const auto iv = cell_interval(c.cell, L);
    if (!starts_.empty() && iv.lo < prev_hi) fail(ErrorCode::Configuration, "covering cells overlap");
    starts_.push_back(iv.lo);
    prev_hi = iv.hi;
  }
}

std::vector<CellId> RasterApprox::interior() const {
  std::vector<CellId> out;
  for (const auto& c : cells_)
    if (c.kind == CellKind::Interior) out.push_back(c.cell);
  return out;
}

std::vector<CellId> RasterApprox::boundary() const {
  std::vector<CellId> out;
  for (const auto& c : cells_)
    if (c.kind == CellKind::Boundary) out.push_back(c.cell);
  return out;
}

std::optional<CellKind> RasterApprox::locate(std::uint64_t leaf) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), leaf);
  if (it == starts_.begin()) return std::nullopt;
  const auto& c = cells_[static_cast<std::size_t>(it - starts_.begin()) - 1];
  if (!cell_interval(c.cell, grid_.max_level).contains(leaf)) return std::nullopt;
  return c.kind;
}

std::vector<CellInterval> RasterApprox::intervals() const {
  std::vector<CellInterval> out;
  out.reserve(cells_.size());
  for (const auto& c : cells_) out.push_back(cell_interval(c.cell, grid_.max_level));
  return out;
}

namespace {

struct Edge {
  Point2D a;
  Point2D b;
};

class Coverer {
 public:
  Coverer(const GridConfig& grid, const Polygon& poly, RasterMode mode, std::vector<CoveringCell>& out)
      : grid_(grid), poly_(poly), mode_(mode), out_(out) {
    poly.for_each_edge([&](Point2D a, Point2D b) { edges_.push_back({a, b}); });
  }

  void run() {
    std::vector<std::uint32_t> all(edges_.size());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    visit({0, 0}, all);
  }

 private:
  // `candidates` are the edges crossing the parent; no other edge can cross this cell.
  void visit(const CellId& c, const std::vector<std::uint32_t>& candidates) {
    const MBR box = cell_rect(grid_, c);
    std::vector<std::uint32_t> crossing;
    for (auto i : candidates)
      if (segment_crosses_open_box(edges_[i].a, edges_[i].b, box)) crossing.push_back(i);
    if (crossing.empty()) {
      if (point_in_polygon(cell_center(grid_, c), poly_)) out_.push_back({c, CellKind::Interior});
      return;
    }
    if (c.level == grid_.max_level) {
      if (mode_ == RasterMode::Conservative || point_in_polygon(cell_center(grid_, c), poly_))
        out_.push_back({c, CellKind::Boundary});
      return;
    }
    for (const auto& child : children(c, grid_.max_level)) visit(child, crossing);
  }

  const GridConfig& grid_;
  const Polygon& poly_;
  RasterMode mode_;
  std::vector<Edge> edges_;
  std::vector<CoveringCell>& out_;
};

void check_inside_domain(const GridConfig& cfg, const MBR& box) {
  const double hi_x = cfg.origin.x + cfg.extent;
  const double hi_y = cfg.origin.y + cfg.extent;
  if (box.min.x < cfg.origin.x || box.min.y < cfg.origin.y || box.max.x > hi_x || box.max.y > hi_y)
    fail(ErrorCode::Domain, "polygon extends outside the grid domain");
}

std::vector<CoveringCell> cover_polygon(const Polygon& poly, const GridConfig& grid, RasterMode mode) {
  check_inside_domain(grid, poly.bounds());
  std::vector<CoveringCell> cells;
  Coverer(grid, poly, mode, cells).run();
  return cells;
}

// Union of per-part coverings: where cells nest, the coarser one wins; on a
// tie interior wins over boundary.
std::vector<CoveringCell> merge_cells(std::vector<CoveringCell> cells, int L) {
  std::sort(cells.begin(), cells.end(), [L](const CoveringCell& a, const CoveringCell& b) {
    const auto ia = cell_interval(a.cell, L);
    const auto ib = cell_interval(b.cell, L);
    if (ia.lo != ib.lo) return ia.lo < ib.lo;
    if (ia.hi != ib.hi) return ia.hi > ib.hi;
    return a.kind < b.kind;
  });
  std::vector<CoveringCell> out;
  std::uint64_t covered_to = 0;
  for (const auto& c : cells) {
    const auto iv = cell_interval(c.cell, L);
    if (!out.empty() && iv.lo < covered_to) continue;
    out.push_back(c);
    covered_to = iv.hi;
  }
  return out;
}

GridConfig grid_for(const GridConfig& cfg, double epsilon) {
  cfg.validate();
  return cfg.with_level(level_for_bound(cfg, epsilon));
}

}  // namespace

RasterApprox rasterize_hierarchical(const Polygon& poly, const GridConfig& cfg, double epsilon, RasterMode mode,
                                    std::int64_t region_id) {
  const GridConfig grid = grid_for(cfg, epsilon);
  return RasterApprox(region_id, grid, epsilon, mode, cover_polygon(poly, grid, mode));
}

RasterApprox rasterize_hierarchical(const RegionRecord& region, const GridConfig& cfg, double epsilon,
                                    RasterMode mode) {
  const GridConfig grid = grid_for(cfg, epsilon);
  if (region.parts.size() == 1)
    return RasterApprox(region.id, grid, epsilon, mode, cover_polygon(region.parts.front(), grid, mode));
  std::vector<CoveringCell> all;
  for (const auto& poly : region.parts) {
    auto part = cover_polygon(poly, grid, mode);
    all.insert(all.end(), part.begin(), part.end());
  }
  return RasterApprox(region.id, grid, epsilon, mode, merge_cells(std::move(all), grid.max_level));
}

RasterApprox expand_to_leaves(const RasterApprox& approx) {
  const int L = approx.grid().max_level;
  constexpr std::uint64_t kMaxLeaves = std::uint64_t{1} << 28;
  std::uint64_t total = 0;
  for (const auto& c : approx.cells()) total += cell_interval(c.cell, L).size();
  if (total > kMaxLeaves) fail(ErrorCode::Capacity, "uniform covering would exceed 2^28 leaf cells");
  std::vector<CoveringCell> leaves;
  leaves.reserve(total);
  for (const auto& c : approx.cells()) {
    const auto iv = cell_interval(c.cell, L);
    for (auto code = iv.lo; code < iv.hi; ++code) leaves.push_back({{L, code}, c.kind});
  }
  return RasterApprox(approx.region_id(), approx.grid(), approx.epsilon(), approx.mode(), std::move(leaves));
}

RasterApprox rasterize_uniform(const Polygon& poly, const GridConfig& cfg, double epsilon, RasterMode mode,
                               std::int64_t region_id) {
  return expand_to_leaves(rasterize_hierarchical(poly, cfg, epsilon, mode, region_id));
}

RasterApprox rasterize_uniform(const RegionRecord& region, const GridConfig& cfg, double epsilon,
                               RasterMode mode) {
  return expand_to_leaves(rasterize_hierarchical(region, cfg, epsilon, mode));
}

bool approx_contains(const RasterApprox& r, Point2D p) {
  return r.locate(leaf_code(r.grid(), p)).has_value();
}

std::vector<RasterApprox> rasterize_regions(std::span<const RegionRecord> regions, const GridConfig& cfg,
                                            double epsilon, RasterMode mode, unsigned threads) {
  std::vector<RasterApprox> out(regions.size());
  if (threads <= 1 || regions.size() < 2) {
    for (std::size_t i = 0; i < regions.size(); ++i) out[i] = rasterize_hierarchical(regions[i], cfg, epsilon, mode);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < regions.size(); i += threads)
          out[i] = rasterize_hierarchical(regions[i], cfg, epsilon, mode);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace dbsa
