#include "dbsa/query.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <unordered_map>

#include "dbsa/error.hpp"
#include "json.hpp"

namespace dbsa {

void AggregationQuery::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (agg.needs_attr() && agg.attr.empty()) fail(ErrorCode::InvalidArgument, "aggregate needs an attribute");
}

std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::Act: return "act";
    case Engine::PointIndex: return "pointindex";
    case Engine::Canvas: return "canvas";
  }
  return "act";
}

Engine parse_engine(std::string_view text) {
  if (text == "act") return Engine::Act;
  if (text == "pointindex") return Engine::PointIndex;
  if (text == "canvas") return Engine::Canvas;
  fail(ErrorCode::InvalidArgument, "unknown engine '" + std::string(text) + "' (act | pointindex | canvas)");
}

std::optional<ResultRange> result_range(const RegionResult& rr, const AggregationQuery& q) {
  if (q.mode != RasterMode::Conservative) return std::nullopt;
  if (q.agg.kind == AggKind::Count) {
    return ResultRange{static_cast<double>(rr.total.count - rr.boundary.count), static_cast<double>(rr.total.count)};
  }
  if (q.agg.kind == AggKind::Sum && rr.sum_nonnegative) {
    return ResultRange{static_cast<double>(rr.total.sum - rr.boundary.sum), static_cast<double>(rr.total.sum)};
  }
  return std::nullopt;
}

void finalize(RegionResult& rr, const AggregationQuery& q) {
  rr.alpha = finish(rr.total, q.agg.kind);
  rr.beta = finish(rr.boundary, q.agg.kind);
  rr.range = result_range(rr, q);
}

namespace {

// Maps region ids to result slots; ids must be unique.
class SlotMap {
 public:
  explicit SlotMap(std::span<const std::int64_t> ids) {
    slots_.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (!slots_.emplace(ids[i], i).second)
        fail(ErrorCode::InvalidArgument, "duplicate region id " + std::to_string(ids[i]));
  }
  std::size_t at(std::int64_t id) const {
    auto it = slots_.find(id);
    if (it == slots_.end()) fail(ErrorCode::Configuration, "index holds region " + std::to_string(id) + " not in the query");
    return it->second;
  }

 private:
  std::unordered_map<std::int64_t, std::size_t> slots_;
};

std::vector<std::int64_t> ids_of(std::span<const RegionRecord> regions) {
  std::vector<std::int64_t> ids;
  ids.reserve(regions.size());
  for (const auto& r : regions) ids.push_back(r.id);
  return ids;
}

std::vector<RegionResult> empty_results(std::span<const std::int64_t> ids) {
  std::vector<RegionResult> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out[i].region_id = ids[i];
  return out;
}

// Column aggregated by the query, if any.
std::optional<std::size_t> value_column(const PointSet& points, const AggregationQuery& q) {
  if (!q.agg.needs_attr()) return std::nullopt;
  return points.attr_index(q.agg.attr);
}

bool nonnegative_values(const PointSet& points, const AggregationQuery& q) {
  const auto col = value_column(points, q);
  if (!col) return true;
  const BoundFilter keep(q.filter, points);
  for (std::size_t i = 0; i < points.size(); ++i)
    if (keep(points, i) && points.attr(i, *col) < 0.0) return false;
  return true;
}

void finish_all(std::vector<RegionResult>& out, const AggregationQuery& q, bool nonneg) {
  for (auto& rr : out) {
    rr.sum_nonnegative = nonneg;
    finalize(rr, q);
  }
}

// Runs fn(begin, end, worker) over [0, n) split into contiguous chunks, one
// per worker, and rethrows the first failure.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    fn(std::size_t{0}, n, 0u);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        const std::size_t b = std::min(n, t * chunk);
        fn(b, std::min(n, b + chunk), t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_regions_in_domain(std::span<const RegionRecord> regions, const GridConfig& domain) {
  for (const auto& r : regions) {
    if (r.parts.empty()) continue;
    const MBR b = mbr_of(r);
    if (b.min.x < domain.origin.x || b.min.y < domain.origin.y || b.max.x > domain.origin.x + domain.extent ||
        b.max.y > domain.origin.y + domain.extent)
      fail(ErrorCode::Domain, "region " + std::to_string(r.id) + " extends outside the grid domain");
  }
}

}  // namespace

std::vector<RegionResult> join_act(const PointSet& points, std::span<const RegionRecord> regions,
                                   const GridConfig& domain, const AggregationQuery& q, const JoinOptions& opts) {
  q.validate();
  value_column(points, q);
  const auto coverings = rasterize_regions(regions, domain, q.epsilon, q.mode, opts.threads);
  const GridConfig grid = domain.with_level(level_for_bound(domain, q.epsilon));
  const auto trie = AdaptiveCellTrie::build(grid, coverings, opts.radix_width);
  const auto ids = ids_of(regions);
  return join_act(points, trie, ids, q, opts);
}

std::vector<RegionResult> join_act(const PointSet& points, const AdaptiveCellTrie& trie,
                                   std::span<const std::int64_t> region_ids, const AggregationQuery& q,
                                   const JoinOptions& opts) {
  q.validate();
  const SlotMap slots(region_ids);
  const auto column = value_column(points, q);
  const BoundFilter keep(q.filter, points);
  const std::size_t n_regions = region_ids.size();
  const unsigned workers = std::max(1u, opts.threads);
  // acc[worker][slot * 2 + {0: total, 1: boundary}]
  std::vector<std::vector<Partial>> acc(workers, std::vector<Partial>(2 * n_regions));
  std::vector<char> nonneg(workers, 1);

  parallel_chunks(points.size(), workers, [&](std::size_t begin, std::size_t end, unsigned w) {
    auto& mine = acc[w];
    for (std::size_t i = begin; i < end; ++i) {
      const Point2D p = points.locs[i];
      if (!trie.grid().in_domain(p))
        fail(ErrorCode::Domain, "point " + std::to_string(i) + " lies outside the grid domain");
      if (!keep(points, i)) continue;
      Partial one{1, 0.0L};
      if (column) {
        const double v = points.attr(i, *column);
        one.sum = v;
        if (v < 0.0) nonneg[w] = 0;
      }
      trie.visit_leaf(leaf_code(trie.grid(), p), [&](const ActEntry& e, int) {
        const std::size_t s = slots.at(e.region_id);
        mine[2 * s] += one;
        if (e.kind == CellKind::Boundary) mine[2 * s + 1] += one;
      });
    }
  });

  auto out = empty_results(region_ids);
  for (unsigned w = 0; w < workers; ++w) {
    for (std::size_t s = 0; s < n_regions; ++s) {
      out[s].total += acc[w][2 * s];
      out[s].boundary += acc[w][2 * s + 1];
    }
  }
  finish_all(out, q, std::all_of(nonneg.begin(), nonneg.end(), [](char c) { return c != 0; }));
  return out;
}

std::vector<RegionResult> join_pointindex(const LinearizedPointSet& lps, const RadixSpline* rs,
                                          std::span<const RegionRecord> regions, const AggregationQuery& q,
                                          const JoinOptions& opts) {
  q.validate();
  if (lps.filter != q.filter)
    fail(ErrorCode::Configuration, "point index was built with a different attribute filter");
  const int slot = q.agg.needs_attr() ? static_cast<int>(lps.sum_slot(q.agg.attr)) : -1;
  const int L = level_for_bound(lps.grid, q.epsilon);
  const int leaf = lps.grid.max_level;
  if (L > leaf)
    fail(ErrorCode::Configuration, "point index level " + std::to_string(leaf) + " is coarser than level " +
                                       std::to_string(L) + " required by epsilon");
  const auto ids = ids_of(regions);
  SlotMap{ids};
  bool nonneg = true;
  if (slot >= 0) {
    const auto& p = lps.sum_prefix[static_cast<std::size_t>(slot)];
    for (std::size_t i = 1; i < p.size() && nonneg; ++i) nonneg = p[i] >= p[i - 1];
  }

  auto out = empty_results(ids);
  parallel_chunks(regions.size(), std::max(1u, opts.threads), [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto cover = rasterize_hierarchical(regions[r], lps.grid, q.epsilon, q.mode);
      std::vector<CellInterval> all, edge;
      all.reserve(cover.size());
      for (const auto& c : cover.cells()) {
        const auto iv = cell_interval(c.cell, leaf);
        all.push_back(iv);
        if (c.kind == CellKind::Boundary) edge.push_back(iv);
      }
      out[r].total = range_partial(lps, rs, all, slot);
      out[r].boundary = range_partial(lps, rs, edge, slot);
    }
  });
  finish_all(out, q, nonneg);
  return out;
}

std::vector<RegionResult> join_pointindex(const PointSet& points, std::span<const RegionRecord> regions,
                                          const GridConfig& domain, const AggregationQuery& q,
                                          const JoinOptions& opts) {
  q.validate();
  const GridConfig grid = domain.with_level(level_for_bound(domain, q.epsilon));
  std::vector<std::string> attrs;
  if (q.agg.needs_attr()) attrs.push_back(q.agg.attr);
  const auto lps = lps_build(points, grid, attrs, q.filter);
  if (!opts.use_spline) return join_pointindex(lps, nullptr, regions, q, opts);
  const auto rs = rs_build(lps, opts.radix_bits, opts.spline_error);
  return join_pointindex(lps, &rs, regions, q, opts);
}

std::vector<RegionResult> join_canvas(const PointSet& points, std::span<const RegionRecord> regions,
                                      const GridConfig& domain, const AggregationQuery& q,
                                      const JoinOptions& opts) {
  q.validate();
  domain.validate();
  if (opts.canvas_tile_level < 0 || opts.canvas_tile_level > kCanvasMaxLevel)
    fail(ErrorCode::Configuration, "canvas tile level must lie in [0, 13]");
  const auto ids = ids_of(regions);
  SlotMap{ids};
  check_regions_in_domain(regions, domain);
  const int L = level_for_bound(domain, q.epsilon);
  const int tile_level = std::min(L, opts.canvas_tile_level);
  const std::uint32_t tiles = std::uint32_t{1} << (L - tile_level);
  const std::uint32_t side = std::uint32_t{1} << tile_level;
  if (static_cast<std::uint64_t>(tiles) * tiles > (std::uint64_t{1} << 24))
    fail(ErrorCode::Capacity, "epsilon needs more than 2^24 canvas tiles");

  PointChannels channels;
  if (q.agg.needs_attr()) channels.sum_attr = q.agg.attr;
  channels.filter = q.filter;
  value_column(points, q);

  // Bucket rows by tile so each point is drawn once overall.
  std::vector<std::vector<std::uint32_t>> rows_of_tile;
  if (tiles > 1) {
    rows_of_tile.resize(static_cast<std::size_t>(tiles) * tiles);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!domain.in_domain(points.locs[i]))
        fail(ErrorCode::Domain, "point " + std::to_string(i) + " lies outside the grid domain");
      const auto [ix, iy] = z_decode(point_to_cell(domain, points.locs[i], L));
      rows_of_tile[static_cast<std::size_t>(iy / side) * tiles + ix / side].push_back(static_cast<std::uint32_t>(i));
    }
  }

  std::vector<MBR> boxes;
  for (const auto& r : regions) boxes.push_back(r.parts.empty() ? MBR{} : mbr_of(r));
  const double pixel = domain.cell_side(L);

  auto out = empty_results(ids);
  for (std::uint32_t ty = 0; ty < tiles; ++ty) {
    for (std::uint32_t tx = 0; tx < tiles; ++tx) {
      const CanvasWindow window{tx * side, ty * side, tiles > 1 ? side : 0};
      Canvas point_canvas;
      if (tiles > 1) {
        const auto& rows = rows_of_tile[static_cast<std::size_t>(ty) * tiles + tx];
        if (rows.empty()) continue;
        PointSet subset;
        subset.attr_names = points.attr_names;
        for (auto row : rows) subset.add(points.record(row));
        point_canvas = render_points(subset, domain, L, channels, window, tile_level);
      } else {
        point_canvas = render_points(points, domain, L, channels, window, tile_level);
      }
      const MBR tile_box{{domain.origin.x + (window.x0 - 1.0) * pixel, domain.origin.y + (window.y0 - 1.0) * pixel},
                         {domain.origin.x + (window.x0 + side + 1.0) * pixel,
                          domain.origin.y + (window.y0 + side + 1.0) * pixel}};
      for (std::size_t r = 0; r < regions.size(); ++r) {
        if (regions[r].parts.empty()) continue;
        const MBR& b = boxes[r];
        if (b.max.x < tile_box.min.x || b.min.x > tile_box.max.x || b.max.y < tile_box.min.y ||
            b.min.y > tile_box.max.y)
          continue;
        const Canvas region_canvas = render_polygon(regions[r], domain, L, q.mode, window, tile_level);
        const Canvas joined = mask(blend(point_canvas, region_canvas, BlendFn::Sum), MaskPredicate::region_eq(regions[r].id));
        const CanvasTotals t = reduce(joined);
        out[r].total += t.all;
        out[r].boundary += t.boundary;
      }
    }
  }
  finish_all(out, q, nonnegative_values(points, q));
  return out;
}

std::vector<RegionResult> run_join(Engine engine, const PointSet& points, std::span<const RegionRecord> regions,
                                   const GridConfig& domain, const AggregationQuery& q, const JoinOptions& opts) {
  switch (engine) {
    case Engine::Act: return join_act(points, regions, domain, q, opts);
    case Engine::PointIndex: return join_pointindex(points, regions, domain, q, opts);
    case Engine::Canvas: return join_canvas(points, regions, domain, q, opts);
  }
  fail(ErrorCode::InvalidArgument, "unknown engine");
}

std::string to_json_line(const RegionResult& rr, const AggregationQuery& q, Engine engine,
                         std::optional<double> epsilon) {
  using json = nlohmann::ordered_json;
  const bool integral = q.agg.kind == AggKind::Count;
  auto value = [&](const std::optional<double>& v) -> json {
    if (!v) return nullptr;
    if (integral) return static_cast<std::uint64_t>(*v);
    return *v;
  };
  json j;
  j["region_id"] = rr.region_id;
  j["alpha"] = value(rr.alpha);
  j["beta"] = value(rr.beta);
  j["lo"] = rr.range ? value(rr.range->lo) : json(nullptr);
  j["hi"] = rr.range ? value(rr.range->hi) : json(nullptr);
  j["agg"] = q.agg.to_string();
  j["epsilon"] = epsilon.value_or(q.epsilon);
  j["mode"] = std::string(to_string(q.mode));
  j["engine"] = std::string(to_string(engine));
  return j.dump();
}

}  // namespace dbsa
