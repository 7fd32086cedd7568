#include "dbsa/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <istream>
#include <ostream>
#include <thread>

#include "dbsa/error.hpp"
#include "json.hpp"

namespace dbsa {

using json = nlohmann::ordered_json;

std::vector<Partial> exact_partials(const PointSet& points, std::span<const RegionRecord> regions,
                                    const AggregationQuery& q, unsigned threads) {
  std::optional<std::size_t> column;
  if (q.agg.needs_attr()) column = points.attr_index(q.agg.attr);
  const BoundFilter keep(q.filter, points);
  std::vector<Partial> out(regions.size());
  auto work = [&](std::size_t r) {
    if (regions[r].parts.empty()) return;
    const MBR box = mbr_of(regions[r]);
    Partial acc;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Point2D p = points.locs[i];
      if (!box.contains(p) || !keep(points, i) || !point_in_region(p, regions[r])) continue;
      acc.count += 1;
      if (column) acc.sum += points.attr(i, *column);
    }
    out[r] = acc;
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t r = 0; r < regions.size(); ++r) work(r);
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t r = t; r < regions.size(); r += threads) work(r);
    });
  for (auto& th : pool) th.join();
  return out;
}

ErrorStats error_stats(std::span<const RegionResult> results, std::span<const Partial> exact,
                       const AggregationQuery& q) {
  if (results.size() != exact.size()) fail(ErrorCode::InvalidArgument, "result and oracle sizes differ");
  ErrorStats s;
  s.regions = results.size();
  std::vector<double> rel;
  double abs_total = 0.0;
  std::size_t compared = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& rr = results[i];
    const auto truth = finish(exact[i], q.agg.kind);
    if (!rr.alpha || !truth) {
      if (!rr.alpha && !truth) ++s.exact_regions;
      continue;
    }
    const double err = std::abs(*rr.alpha - *truth);
    if (err == 0.0) ++s.exact_regions;
    rel.push_back(err / std::max(std::abs(*truth), 1.0));
    abs_total += err;
    s.max_abs = std::max(s.max_abs, err);
    ++compared;
    if (rr.range) {
      ++s.range_checked;
      // Real sums are compared with a rounding allowance; counts exactly.
      const double slack = q.agg.kind == AggKind::Count ? 0.0 : 1e-9 * std::max(1.0, std::abs(rr.range->hi));
      if (*truth < rr.range->lo - slack || *truth > rr.range->hi + slack) ++s.range_violations;
    }
  }
  if (compared) {
    s.mean_abs = abs_total / static_cast<double>(compared);
    std::sort(rel.begin(), rel.end());
    const std::size_t m = rel.size() / 2;
    s.median_rel = rel.size() % 2 ? rel[m] : 0.5 * (rel[m - 1] + rel[m]);
  }
  return s;
}

namespace {

void put_stats(json& j, const ErrorStats& s) {
  j["regions"] = s.regions;
  j["exact_regions"] = s.exact_regions;
  j["median_rel_error"] = s.median_rel;
  j["mean_abs_error"] = s.mean_abs;
  j["max_abs_error"] = s.max_abs;
  j["range_checked"] = s.range_checked;
  j["range_violations"] = s.range_violations;
}

json value_json(const std::optional<double>& v, const AggregationQuery& q) {
  if (!v) return nullptr;
  if (q.agg.kind == AggKind::Count) return static_cast<std::uint64_t>(*v);
  return *v;
}

}  // namespace

std::string AuditReport::to_json(const AggregationQuery& q, Engine engine) const {
  json j;
  j["engine"] = std::string(dbsa::to_string(engine));
  j["agg"] = q.agg.to_string();
  j["epsilon"] = q.epsilon;
  j["mode"] = std::string(dbsa::to_string(q.mode));
  put_stats(j, stats);
  j["pairs_checked"] = pairs_checked;
  j["misclassified"] = misclassified;
  j["bound_violations"] = bound_violations;
  j["false_negatives"] = false_negatives;
  j["max_miss_distance"] = max_miss_distance;
  return j.dump();
}

AuditReport audit(const Workload& w, Engine engine, const AggregationQuery& q, const JoinOptions& opts) {
  AuditReport rep;
  const auto results = run_join(engine, w.points, w.regions, w.domain, q, opts);
  const auto exact = exact_partials(w.points, w.regions, q, opts.threads);
  rep.stats = error_stats(results, exact, q);

  const auto coverings = rasterize_regions(w.regions, w.domain, q.epsilon, q.mode, opts.threads);
  for (std::size_t r = 0; r < w.regions.size(); ++r) {
    if (w.regions[r].parts.empty()) continue;
    MBR box = mbr_of(w.regions[r]);
    box.min = {box.min.x - q.epsilon, box.min.y - q.epsilon};
    box.max = {box.max.x + q.epsilon, box.max.y + q.epsilon};
    for (const auto& p : w.points.locs) {
      if (!box.contains(p)) continue;
      ++rep.pairs_checked;
      const bool approx = approx_contains(coverings[r], p);
      const bool truth = point_in_region(p, w.regions[r]);
      if (approx == truth) continue;
      ++rep.misclassified;
      if (truth) ++rep.false_negatives;
      const double d = distance_to_boundary(p, w.regions[r]);
      rep.max_miss_distance = std::max(rep.max_miss_distance, d);
      if (d > q.epsilon) ++rep.bound_violations;
    }
  }
  return rep;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

struct RunOutput {
  std::vector<RegionResult> results;
  double build_ms = 0.0;
  double query_ms = 0.0;
  std::size_t index_bytes = 0;
};

RunOutput run_engine(const Workload& w, Engine engine, const AggregationQuery& q, const JoinOptions& opts) {
  RunOutput out;
  const GridConfig grid = w.domain.with_level(level_for_bound(w.domain, q.epsilon));
  const auto start = Clock::now();
  switch (engine) {
    case Engine::Act: {
      const auto coverings = rasterize_regions(w.regions, w.domain, q.epsilon, q.mode, opts.threads);
      const auto trie = AdaptiveCellTrie::build(grid, coverings, opts.radix_width);
      out.build_ms = ms_since(start);
      out.index_bytes = trie.memory_bytes();
      std::vector<std::int64_t> ids;
      for (const auto& r : w.regions) ids.push_back(r.id);
      const auto t = Clock::now();
      out.results = join_act(w.points, trie, ids, q, opts);
      out.query_ms = ms_since(t);
      break;
    }
    case Engine::PointIndex: {
      std::vector<std::string> attrs;
      if (q.agg.needs_attr()) attrs.push_back(q.agg.attr);
      const auto lps = lps_build(w.points, grid, attrs, q.filter);
      std::optional<RadixSpline> rs;
      if (opts.use_spline) rs = rs_build(lps, opts.radix_bits, opts.spline_error);
      out.build_ms = ms_since(start);
      out.index_bytes = lps.memory_bytes() + (rs ? rs->memory_bytes() : 0);
      const auto t = Clock::now();
      out.results = join_pointindex(lps, rs ? &*rs : nullptr, w.regions, q, opts);
      out.query_ms = ms_since(t);
      break;
    }
    case Engine::Canvas: {
      const int tile = std::min(grid.max_level, opts.canvas_tile_level);
      const std::size_t side = std::size_t{1} << tile;
      // Point, region and blended canvases of one tile are live at once.
      out.index_bytes = 3 * side * side * sizeof(Pixel);
      const auto t = Clock::now();
      out.results = join_canvas(w.points, w.regions, w.domain, q, opts);
      out.query_ms = ms_since(t);
      break;
    }
  }
  return out;
}

}  // namespace

void run_bench(const Workload& w, const BenchConfig& cfg, const JoinOptions& opts, std::ostream& out) {
  if (cfg.epsilons.empty()) fail(ErrorCode::InvalidArgument, "bench needs at least one epsilon");
  if (cfg.engines.empty()) fail(ErrorCode::InvalidArgument, "bench needs at least one engine");
  AggregationQuery base{cfg.agg, cfg.epsilons.front(), cfg.mode, cfg.filter};
  const auto exact = exact_partials(w.points, w.regions, base, opts.threads);

  for (double eps : cfg.epsilons) {
    AggregationQuery q = base;
    q.epsilon = eps;
    for (Engine engine : cfg.engines) {
      json head;
      head["engine"] = std::string(to_string(engine));
      head["epsilon"] = eps;
      head["epsilon_data"] = w.norm.to_data(eps);
      try {
        q.validate();
        const int level = level_for_bound(w.domain, eps);
        const auto run = run_engine(w, engine, q, opts);
        const auto stats = error_stats(run.results, exact, q);
        json rec;
        rec["record"] = "run";
        rec.update(head);
        rec["level"] = level;
        rec["agg"] = q.agg.to_string();
        rec["mode"] = std::string(to_string(q.mode));
        rec["points"] = w.points.size();
        if (cfg.timings) {
          rec["build_ms"] = run.build_ms;
          rec["query_ms"] = run.query_ms;
        }
        rec["index_bytes"] = run.index_bytes;
        put_stats(rec, stats);
        out << rec.dump() << '\n';
        if (cfg.per_region) {
          for (std::size_t r = 0; r < run.results.size(); ++r) {
            const auto& rr = run.results[r];
            json reg;
            reg["record"] = "region";
            reg.update(head);
            reg["region_id"] = rr.region_id;
            reg["alpha"] = value_json(rr.alpha, q);
            reg["beta"] = value_json(rr.beta, q);
            reg["lo"] = rr.range ? value_json(rr.range->lo, q) : json(nullptr);
            reg["hi"] = rr.range ? value_json(rr.range->hi, q) : json(nullptr);
            reg["exact"] = value_json(finish(exact[r], q.agg.kind), q);
            out << reg.dump() << '\n';
          }
        }
      } catch (const Error& e) {
        json rec;
        rec["record"] = "error";
        rec.update(head);
        rec["code"] = static_cast<int>(e.code());
        rec["message"] = e.what();
        out << rec.dump() << '\n';
      }
    }
  }
  if (!out) fail(ErrorCode::Io, "failed writing bench output");
}

void bench_to_csv(std::istream& in, std::ostream& out) {
  static const char* const kColumns[] = {"engine",         "epsilon",          "epsilon_data",  "level",
                                         "build_ms",       "query_ms",         "index_bytes",   "regions",
                                         "exact_regions",  "median_rel_error", "mean_abs_error", "max_abs_error",
                                         "range_violations"};
  for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::Parse, "bench line " + std::to_string(line_no) + ": " + e.what());
    }
    if (j.value("record", std::string()) != "run") continue;
    for (std::size_t i = 0; i < std::size(kColumns); ++i) {
      if (i) out << ',';
      const auto it = j.find(kColumns[i]);
      if (it == j.end() || it->is_null()) continue;
      out << (it->is_string() ? it->get<std::string>() : it->dump());
    }
    out << '\n';
  }
}

}  // namespace dbsa
