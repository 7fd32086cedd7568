#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dbsa/geometry.hpp"
#include "dbsa/grid.hpp"

namespace dbsa {

enum class RasterMode : std::uint8_t {
  Conservative,   // every cell touched by the boundary is kept; false positives only
  CenterSampled,  // a boundary cell is kept iff its center lies in the polygon
};

std::string_view to_string(RasterMode mode);
RasterMode parse_raster_mode(std::string_view text);

enum class CellClass : std::uint8_t { Inside, Outside, Partial };

enum class CellKind : std::uint8_t { Interior, Boundary };

inline char kind_letter(CellKind k) { return k == CellKind::Interior ? 'I' : 'B'; }

struct CoveringCell {
  CellId cell;
  CellKind kind = CellKind::Interior;

  friend bool operator==(const CoveringCell&, const CoveringCell&) = default;
};

// Partial iff the polygon boundary passes through the open cell square.
// Otherwise the cell center decides between Inside and Outside.
CellClass classify_cell(const GridConfig& cfg, const CellId& c, const Polygon& poly);

// Distance-bounded covering of one region. Interior cells may sit at any
// level; boundary cells are always leaves (level grid().max_level), so their
// diagonal is at most epsilon. Cells are pairwise disjoint.
class RasterApprox {
 public:
  RasterApprox() = default;
  RasterApprox(std::int64_t region_id, GridConfig grid, double epsilon, RasterMode mode,
               std::vector<CoveringCell> cells);

  std::int64_t region_id() const { return region_id_; }
  const GridConfig& grid() const { return grid_; }
  double epsilon() const { return epsilon_; }
  RasterMode mode() const { return mode_; }

  // All cells sorted by Z-order interval.
  std::span<const CoveringCell> cells() const { return cells_; }
  std::vector<CellId> interior() const;
  std::vector<CellId> boundary() const;
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  // Kind of the covering cell that contains the given leaf code, if any.
  std::optional<CellKind> locate(std::uint64_t leaf) const;
  std::vector<CellInterval> intervals() const;

 private:
  std::int64_t region_id_ = 0;
  GridConfig grid_{};
  double epsilon_ = 0.0;
  RasterMode mode_ = RasterMode::Conservative;
  std::vector<CoveringCell> cells_;
  std::vector<std::uint64_t> starts_;  // interval lo per cell, for lookup
};

RasterApprox rasterize_hierarchical(const RegionRecord& region, const GridConfig& cfg, double epsilon,
                                    RasterMode mode);
RasterApprox rasterize_hierarchical(const Polygon& poly, const GridConfig& cfg, double epsilon, RasterMode mode,
                                    std::int64_t region_id = 0);

// Same point set as the hierarchical covering, with interior cells split to leaves.
RasterApprox rasterize_uniform(const RegionRecord& region, const GridConfig& cfg, double epsilon, RasterMode mode);
RasterApprox rasterize_uniform(const Polygon& poly, const GridConfig& cfg, double epsilon, RasterMode mode,
                               std::int64_t region_id = 0);

// Expands every cell of `approx` to leaf level.
RasterApprox expand_to_leaves(const RasterApprox& approx);

bool approx_contains(const RasterApprox& r, Point2D p);

// Hierarchical coverings for every region; threads <= 1 runs inline.
std::vector<RasterApprox> rasterize_regions(std::span<const RegionRecord> regions, const GridConfig& cfg,
                                            double epsilon, RasterMode mode, unsigned threads = 1);

}  // namespace dbsa
