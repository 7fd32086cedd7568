#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbsa/act.hpp"
#include "dbsa/aggregate.hpp"
#include "dbsa/canvas.hpp"
#include "dbsa/geometry.hpp"
#include "dbsa/grid.hpp"
#include "dbsa/pointindex.hpp"
#include "dbsa/raster.hpp"

namespace dbsa {

// SELECT agg FROM points, regions WHERE contains(region, point) [AND filter] GROUP BY region id.
struct AggregationQuery {
  Aggregate agg;
  double epsilon = 0.0;
  RasterMode mode = RasterMode::Conservative;
  std::optional<AttributeFilter> filter;

  void validate() const;
};

struct ResultRange {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const ResultRange&, const ResultRange&) = default;
};

struct RegionResult {
  std::int64_t region_id = 0;
  Partial total;     // points in any covering cell
  Partial boundary;  // points in boundary cells only
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<ResultRange> range;
  bool sum_nonnegative = true;  // every aggregated attribute value was >= 0
};

enum class Engine : std::uint8_t { Act, PointIndex, Canvas };
std::string_view to_string(Engine e);
Engine parse_engine(std::string_view text);

struct JoinOptions {
  unsigned threads = 1;
  int radix_width = AdaptiveCellTrie::kDefaultRadixWidth;
  bool use_spline = true;
  int radix_bits = RadixSpline::kDefaultRadixBits;
  int spline_error = RadixSpline::kDefaultMaxError;
  // Tile side of the canvas engine, as a level; at most kCanvasMaxLevel.
  int canvas_tile_level = 10;
};

// [alpha - beta, alpha] for CONSERVATIVE COUNT and for CONSERVATIVE SUM over
// non-negative values; unavailable otherwise.
std::optional<ResultRange> result_range(const RegionResult& rr, const AggregationQuery& q);

// Fills alpha, beta and range from the partials.
void finalize(RegionResult& rr, const AggregationQuery& q);

// Index nested loop: one trie lookup per point, no point-in-polygon tests.
std::vector<RegionResult> join_act(const PointSet& points, std::span<const RegionRecord> regions,
                                   const GridConfig& domain, const AggregationQuery& q, const JoinOptions& opts = {});
// Same over a prebuilt trie; results follow the order of `region_ids`.
std::vector<RegionResult> join_act(const PointSet& points, const AdaptiveCellTrie& trie,
                                   std::span<const std::int64_t> region_ids, const AggregationQuery& q,
                                   const JoinOptions& opts = {});

// Covering intervals against sorted point codes. The point index may be
// built at any level at least as fine as the one epsilon requires.
std::vector<RegionResult> join_pointindex(const LinearizedPointSet& lps, const RadixSpline* rs,
                                          std::span<const RegionRecord> regions, const AggregationQuery& q,
                                          const JoinOptions& opts = {});
// Builds the point index (and spline, per opts) first.
std::vector<RegionResult> join_pointindex(const PointSet& points, std::span<const RegionRecord> regions,
                                          const GridConfig& domain, const AggregationQuery& q,
                                          const JoinOptions& opts = {});

// Bounded raster join: points and regions drawn on canvases, combined with
// blend and mask, reduced per region. Tiled when the level exceeds the tile cap.
std::vector<RegionResult> join_canvas(const PointSet& points, std::span<const RegionRecord> regions,
                                      const GridConfig& domain, const AggregationQuery& q,
                                      const JoinOptions& opts = {});

std::vector<RegionResult> run_join(Engine engine, const PointSet& points, std::span<const RegionRecord> regions,
                                   const GridConfig& domain, const AggregationQuery& q, const JoinOptions& opts = {});

// One JSON object per line: region_id, alpha, beta, lo, hi, agg, epsilon, mode, engine.
// `epsilon` overrides q.epsilon in the output, e.g. to report data units.
std::string to_json_line(const RegionResult& rr, const AggregationQuery& q, Engine engine,
                         std::optional<double> epsilon = std::nullopt);

}  // namespace dbsa
