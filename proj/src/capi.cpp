#include "dbsa/dbsa.h"

#include <cstring>
#include <fstream>
#include <iostream>
#include <new>
#include <sstream>
#include <string>

#include "dbsa/bench.hpp"
#include "dbsa/canvas.hpp"
#include "dbsa/error.hpp"
#include "dbsa/query.hpp"
#include "dbsa/workload.hpp"
#include "json.hpp"

using namespace dbsa;
using json = nlohmann::ordered_json;

struct dbsa_workload {
  Workload w;
};

struct dbsa_act {
  AdaptiveCellTrie trie;
  Normalization norm;
  std::string metadata;
};

struct dbsa_pointindex {
  LinearizedPointSet lps;
  std::optional<RadixSpline> rs;
  Normalization norm;
  std::string metadata;
};

struct dbsa_results {
  std::vector<RegionResult> results;
  AggregationQuery q;
  Engine engine = Engine::Act;
  double epsilon_data = 0.0;
};

namespace {

thread_local std::string last_error;

template <typename Fn>
dbsa_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return DBSA_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<dbsa_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DBSA_ERR_CAPACITY;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DBSA_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return DBSA_ERR_INTERNAL;
  }
}

template <typename T>
void require(const T* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

std::string str(const char* s) { return s ? std::string(s) : std::string(); }

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
void with_output(const char* path, Fn&& fn, bool append = false) {
  require(path, "output path");
  if (std::strcmp(path, "-") == 0) {
    fn(std::cout);
    std::cout.flush();
    if (!std::cout) fail(ErrorCode::Io, "failed writing to stdout");
    return;
  }
  std::ofstream os(path, append ? std::ios::binary | std::ios::app : std::ios::binary);
  if (!os) fail(ErrorCode::Io, std::string("cannot open '") + path + "' for writing");
  fn(os);
  os.flush();
  if (!os) fail(ErrorCode::Io, std::string("failed writing '") + path + "'");
}

RasterMode to_mode(dbsa_mode m) {
  if (m == DBSA_MODE_CONSERVATIVE) return RasterMode::Conservative;
  if (m == DBSA_MODE_CENTER) return RasterMode::CenterSampled;
  fail(ErrorCode::InvalidArgument, "unknown raster mode");
}

double unit_epsilon(const Workload& w, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  return w.norm.to_unit(epsilon);
}

AggregationQuery to_query(const Workload& w, const dbsa_query* q) {
  require(q, "query");
  AggregationQuery out;
  out.agg = Aggregate::parse(q->agg ? q->agg : "count");
  out.epsilon = unit_epsilon(w, q->epsilon);
  out.mode = to_mode(q->mode);
  if (q->filter && *q->filter) out.filter = AttributeFilter::parse(q->filter);
  out.validate();
  return out;
}

JoinOptions to_options(const dbsa_options* o) {
  JoinOptions j;
  if (!o) return j;
  j.threads = o->threads;
  j.radix_width = o->radix_width;
  j.use_spline = o->use_spline != 0;
  j.radix_bits = o->radix_bits;
  j.spline_error = o->spline_error;
  j.canvas_tile_level = o->canvas_tile_level;
  return j;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Normalization norm_from_metadata(const std::string& metadata) {
  try {
    const auto j = json::parse(metadata);
    return Normalization::from_json(j.at("normalization").dump());
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("index metadata is unreadable: ") + e.what());
  }
}

}  // namespace

extern "C" {

const char* dbsa_version(void) { return "0.1.0"; }

const char* dbsa_last_error(void) { return last_error.c_str(); }

const char* dbsa_status_string(dbsa_status status) {
  if (status == DBSA_OK) return "ok";
  return to_string(static_cast<ErrorCode>(status));
}

void dbsa_string_free(char* s) { std::free(s); }

dbsa_status dbsa_level_for_bound(double extent, double epsilon, int* level) {
  return guarded([&] {
    require(level, "level");
    *level = level_for_bound(extent, epsilon);
  });
}

dbsa_status dbsa_z_encode(uint32_t ix, uint32_t iy, int level, uint64_t* code) {
  return guarded([&] {
    require(code, "code");
    *code = z_encode(ix, iy, level).code;
  });
}

dbsa_status dbsa_z_decode(uint64_t code, uint32_t* ix, uint32_t* iy) {
  return guarded([&] {
    require(ix, "ix");
    require(iy, "iy");
    const auto c = z_decode({kMaxLevel, code});
    *ix = c.ix;
    *iy = c.iy;
  });
}

dbsa_status dbsa_cell_interval(int level, uint64_t code, int max_level, uint64_t* lo, uint64_t* hi) {
  return guarded([&] {
    require(lo, "lo");
    require(hi, "hi");
    if (level < 0 || level > kMaxLevel) fail(ErrorCode::Domain, "cell level outside [0, 31]");
    if (level < 32 && (code >> (2 * level)) != 0) fail(ErrorCode::Domain, "code has bits beyond its level");
    const auto iv = cell_interval({level, code}, max_level);
    *lo = iv.lo;
    *hi = iv.hi;
  });
}

dbsa_status dbsa_workload_load(const dbsa_ingest_options* opts, dbsa_workload** out) {
  return guarded([&] {
    require(opts, "options");
    require(out, "out");
    IngestOptions io;
    io.points_path = str(opts->points_path);
    io.regions_path = str(opts->regions_path);
    io.x_column = str(opts->x_column);
    io.y_column = str(opts->y_column);
    if (opts->normalization) io.normalization = Normalization::from_json(opts->normalization);
    *out = new dbsa_workload{ingest(io)};
  });
}

dbsa_status dbsa_workload_synthetic(uint64_t seed, size_t points, size_t regions, dbsa_workload** out) {
  return guarded([&] {
    require(out, "out");
    SyntheticConfig cfg;
    cfg.seed = seed;
    cfg.points = points;
    cfg.regions = regions;
    *out = new dbsa_workload{synthetic_workload(cfg)};
  });
}

void dbsa_workload_free(dbsa_workload* w) { delete w; }

dbsa_status dbsa_workload_counts(const dbsa_workload* w, size_t* points, size_t* regions, size_t* rejects) {
  return guarded([&] {
    require(w, "workload");
    if (points) *points = w->w.points.size();
    if (regions) *regions = w->w.regions.size();
    if (rejects) *rejects = w->w.rejects.size();
  });
}

dbsa_status dbsa_workload_summary(const dbsa_workload* w, char** out) {
  return guarded([&] {
    require(w, "workload");
    require(out, "out");
    *out = dup(summary_json(w->w));
  });
}

dbsa_status dbsa_workload_normalization(const dbsa_workload* w, char** out) {
  return guarded([&] {
    require(w, "workload");
    require(out, "out");
    *out = dup(w->w.norm.to_json());
  });
}

dbsa_status dbsa_workload_to_unit(const dbsa_workload* w, double data_distance, double* unit_distance) {
  return guarded([&] {
    require(w, "workload");
    require(unit_distance, "unit_distance");
    *unit_distance = w->w.norm.to_unit(data_distance);
  });
}

void dbsa_options_default(dbsa_options* opts) {
  if (!opts) return;
  const JoinOptions d;
  opts->threads = d.threads;
  opts->radix_width = d.radix_width;
  opts->use_spline = d.use_spline ? 1 : 0;
  opts->radix_bits = d.radix_bits;
  opts->spline_error = d.spline_error;
  opts->canvas_tile_level = d.canvas_tile_level;
}

dbsa_status dbsa_rasterize_dump(const dbsa_workload* w, double epsilon, dbsa_mode mode, int uniform,
                                const char* out_path) {
  return guarded([&] {
    require(w, "workload");
    const double eps = unit_epsilon(w->w, epsilon);
    const RasterMode m = to_mode(mode);
    with_output(out_path, [&](std::ostream& os) {
      for (const auto& region : w->w.regions) {
        auto cover = rasterize_hierarchical(region, w->w.domain, eps, m);
        if (uniform) cover = expand_to_leaves(cover);
        for (const auto& c : cover.cells())
          os << region.id << ' ' << c.cell.level << ' ' << c.cell.code << ' ' << kind_letter(c.kind) << '\n';
      }
    });
  });
}

dbsa_status dbsa_render(const dbsa_workload* w, double epsilon, dbsa_mode mode, const char* channel,
                        const char* format, const char* sum_attr, const char* out_path) {
  return guarded([&] {
    require(w, "workload");
    const double eps = unit_epsilon(w->w, epsilon);
    const int level = level_for_bound(w->w.domain, eps);
    const CanvasChannel ch = parse_canvas_channel(channel ? channel : "region");
    const std::string fmt = format ? format : "pgm";
    if (fmt != "pgm" && fmt != "csv") fail(ErrorCode::InvalidArgument, "format must be pgm or csv");
    Canvas canvas(w->w.domain, level);
    for (const auto& region : w->w.regions)
      canvas = blend(canvas, render_polygon(region, w->w.domain, level, to_mode(mode)), BlendFn::Sum);
    if (ch == CanvasChannel::Count || ch == CanvasChannel::Sum) {
      PointChannels pc;
      if (sum_attr && *sum_attr) pc.sum_attr = sum_attr;
      canvas = blend(canvas, render_points(w->w.points, w->w.domain, level, pc), BlendFn::Sum);
    }
    with_output(out_path, [&](std::ostream& os) {
      if (fmt == "pgm") write_pgm(os, canvas, ch);
      else write_csv(os, canvas, ch);
    });
  });
}

dbsa_status dbsa_act_build(const dbsa_workload* w, double epsilon, dbsa_mode mode, const dbsa_options* opts,
                           dbsa_act** out) {
  return guarded([&] {
    require(w, "workload");
    require(out, "out");
    const JoinOptions o = to_options(opts);
    const double eps = unit_epsilon(w->w, epsilon);
    const RasterMode m = to_mode(mode);
    const auto coverings = rasterize_regions(w->w.regions, w->w.domain, eps, m, o.threads);
    const GridConfig grid = w->w.domain.with_level(level_for_bound(w->w.domain, eps));
    json meta;
    meta["kind"] = "act";
    meta["normalization"] = json::parse(w->w.norm.to_json());
    meta["epsilon"] = eps;
    meta["epsilon_data"] = epsilon;
    meta["mode"] = std::string(to_string(m));
    json ids = json::array();
    for (const auto& r : w->w.regions) ids.push_back(r.id);
    meta["region_ids"] = ids;
    *out = new dbsa_act{AdaptiveCellTrie::build(grid, coverings, o.radix_width), w->w.norm, meta.dump()};
  });
}

dbsa_status dbsa_act_save(const dbsa_act* act, const char* path) {
  return guarded([&] {
    require(act, "act");
    require(path, "path");
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::Io, std::string("cannot open '") + path + "' for writing");
    act->trie.save(os, act->metadata);
    os.flush();
    if (!os) fail(ErrorCode::Io, std::string("failed writing '") + path + "'");
  });
}

dbsa_status dbsa_act_load(const char* path, dbsa_act** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::Io, std::string("cannot open '") + path + "'");
    std::string meta;
    auto trie = AdaptiveCellTrie::load(is, &meta);
    *out = new dbsa_act{std::move(trie), norm_from_metadata(meta), meta};
  });
}

void dbsa_act_free(dbsa_act* act) { delete act; }

dbsa_status dbsa_act_lookup(const dbsa_act* act, double x, double y, int64_t* ids, char* kinds, size_t capacity,
                            size_t* count) {
  return guarded([&] {
    require(act, "act");
    require(count, "count");
    const Point2D p = act->norm.apply({x, y});
    if (!act->trie.grid().in_domain(p)) fail(ErrorCode::Domain, "query point lies outside the index domain");
    const auto hits = act->trie.lookup(p);
    *count = hits.size();
    for (std::size_t i = 0; i < hits.size() && i < capacity; ++i) {
      if (ids) ids[i] = hits[i].region_id;
      if (kinds) kinds[i] = kind_letter(hits[i].kind);
    }
  });
}

dbsa_status dbsa_act_info(const dbsa_act* act, char** out) {
  return guarded([&] {
    require(act, "act");
    require(out, "out");
    json j;
    j["level"] = act->trie.grid().max_level;
    j["radix_width"] = act->trie.radix_width();
    j["depth"] = act->trie.max_depth();
    j["nodes"] = act->trie.node_count();
    j["entries"] = act->trie.entry_count();
    j["memory_bytes"] = act->trie.memory_bytes();
    j["metadata"] = json::parse(act->metadata);
    *out = dup(j.dump());
  });
}

dbsa_status dbsa_pointindex_build(const dbsa_workload* w, double epsilon, const char* sum_attrs, const char* filter,
                                  const dbsa_options* opts, dbsa_pointindex** out) {
  return guarded([&] {
    require(w, "workload");
    require(out, "out");
    const JoinOptions o = to_options(opts);
    const double eps = unit_epsilon(w->w, epsilon);
    const GridConfig grid = w->w.domain.with_level(level_for_bound(w->w.domain, eps));
    std::optional<AttributeFilter> f;
    if (filter && *filter) f = AttributeFilter::parse(filter);
    const auto attrs = split_list(str(sum_attrs));
    auto pi = std::make_unique<dbsa_pointindex>();
    pi->lps = lps_build(w->w.points, grid, attrs, f);
    if (o.use_spline) pi->rs = rs_build(pi->lps, o.radix_bits, o.spline_error);
    pi->norm = w->w.norm;
    json meta;
    meta["kind"] = "pointindex";
    meta["normalization"] = json::parse(w->w.norm.to_json());
    meta["epsilon"] = eps;
    meta["epsilon_data"] = epsilon;
    pi->metadata = meta.dump();
    *out = pi.release();
  });
}

dbsa_status dbsa_pointindex_save(const dbsa_pointindex* pi, const char* path) {
  return guarded([&] {
    require(pi, "point index");
    require(path, "path");
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::Io, std::string("cannot open '") + path + "' for writing");
    save_point_index(os, pi->lps, pi->rs ? &*pi->rs : nullptr, pi->metadata);
    os.flush();
    if (!os) fail(ErrorCode::Io, std::string("failed writing '") + path + "'");
  });
}

dbsa_status dbsa_pointindex_load(const char* path, dbsa_pointindex** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::Io, std::string("cannot open '") + path + "'");
    auto loaded = load_point_index(is);
    auto pi = std::make_unique<dbsa_pointindex>();
    pi->norm = norm_from_metadata(loaded.metadata);
    pi->lps = std::move(loaded.lps);
    pi->rs = std::move(loaded.rs);
    pi->metadata = std::move(loaded.metadata);
    *out = pi.release();
  });
}

void dbsa_pointindex_free(dbsa_pointindex* pi) { delete pi; }

dbsa_status dbsa_pointindex_info(const dbsa_pointindex* pi, char** out) {
  return guarded([&] {
    require(pi, "point index");
    require(out, "out");
    json j;
    j["level"] = pi->lps.grid.max_level;
    j["points"] = pi->lps.size();
    j["sum_attrs"] = pi->lps.sum_attrs;
    j["filter"] = pi->lps.filter ? json(pi->lps.filter->to_string()) : json(nullptr);
    j["spline"] = pi->rs.has_value();
    if (pi->rs) {
      j["knots"] = pi->rs->knots().size();
      j["radix_bits"] = pi->rs->radix_bits();
      j["spline_error"] = pi->rs->max_error();
    }
    j["memory_bytes"] = pi->lps.memory_bytes() + (pi->rs ? pi->rs->memory_bytes() : 0);
    j["metadata"] = json::parse(pi->metadata);
    *out = dup(j.dump());
  });
}

dbsa_status dbsa_pointindex_normalization(const dbsa_pointindex* pi, char** out) {
  return guarded([&] {
    require(pi, "point index");
    require(out, "out");
    *out = dup(pi->norm.to_json());
  });
}

dbsa_status dbsa_pointindex_join(const dbsa_pointindex* pi, const dbsa_workload* regions, const dbsa_query* q,
                                 const dbsa_options* opts, dbsa_results** out) {
  return guarded([&] {
    require(pi, "point index");
    require(regions, "regions");
    require(out, "out");
    if (!(regions->w.norm == pi->norm))
      fail(ErrorCode::Configuration, "regions were not normalized with the point index's normalization");
    const AggregationQuery query = to_query(regions->w, q);
    auto res = join_pointindex(pi->lps, pi->rs ? &*pi->rs : nullptr, regions->w.regions, query, to_options(opts));
    *out = new dbsa_results{std::move(res), query, Engine::PointIndex, q->epsilon};
  });
}

dbsa_status dbsa_join(const dbsa_workload* w, const char* engine, const dbsa_query* q, const dbsa_options* opts,
                      dbsa_results** out) {
  return guarded([&] {
    require(w, "workload");
    require(engine, "engine");
    require(out, "out");
    const Engine e = parse_engine(engine);
    const AggregationQuery query = to_query(w->w, q);
    auto res = run_join(e, w->w.points, w->w.regions, w->w.domain, query, to_options(opts));
    *out = new dbsa_results{std::move(res), query, e, q->epsilon};
  });
}

size_t dbsa_results_count(const dbsa_results* r) { return r ? r->results.size() : 0; }

dbsa_status dbsa_results_get(const dbsa_results* r, size_t i, dbsa_region_result* out) {
  return guarded([&] {
    require(r, "results");
    require(out, "out");
    if (i >= r->results.size()) fail(ErrorCode::InvalidArgument, "result index out of range");
    const auto& rr = r->results[i];
    out->region_id = rr.region_id;
    out->has_alpha = rr.alpha.has_value();
    out->alpha = rr.alpha.value_or(0.0);
    out->beta = rr.beta.value_or(0.0);
    out->has_range = rr.range.has_value();
    out->lo = rr.range ? rr.range->lo : 0.0;
    out->hi = rr.range ? rr.range->hi : 0.0;
  });
}

dbsa_status dbsa_results_write_jsonl(const dbsa_results* r, const char* path, int append) {
  return guarded([&] {
    require(r, "results");
    with_output(
        path,
        [&](std::ostream& os) {
          for (const auto& rr : r->results) os << to_json_line(rr, r->q, r->engine, r->epsilon_data) << '\n';
        },
        append != 0);
  });
}

void dbsa_results_free(dbsa_results* r) { delete r; }

dbsa_status dbsa_audit(const dbsa_workload* w, const char* engine, const dbsa_query* q, const dbsa_options* opts,
                       char** report_json) {
  return guarded([&] {
    require(w, "workload");
    require(engine, "engine");
    require(report_json, "report_json");
    const Engine e = parse_engine(engine);
    const AggregationQuery query = to_query(w->w, q);
    const auto rep = audit(w->w, e, query, to_options(opts));
    *report_json = dup(rep.to_json(query, e));
  });
}

dbsa_status dbsa_bench(const dbsa_workload* w, const dbsa_bench_config* cfg, const dbsa_options* opts,
                       const char* out_path) {
  return guarded([&] {
    require(w, "workload");
    require(cfg, "bench config");
    BenchConfig bc;
    for (std::size_t i = 0; i < cfg->epsilon_count; ++i) {
      require(cfg->epsilons, "epsilons");
      bc.epsilons.push_back(unit_epsilon(w->w, cfg->epsilons[i]));
    }
    const std::string engines = cfg->engines ? cfg->engines : "all";
    if (engines == "all") {
      bc.engines = {Engine::Act, Engine::PointIndex, Engine::Canvas};
    } else {
      for (const auto& e : split_list(engines)) bc.engines.push_back(parse_engine(e));
    }
    bc.mode = to_mode(cfg->mode);
    bc.agg = Aggregate::parse(cfg->agg ? cfg->agg : "count");
    if (cfg->filter && *cfg->filter) bc.filter = AttributeFilter::parse(cfg->filter);
    bc.timings = cfg->timings != 0;
    bc.per_region = cfg->per_region != 0;
    with_output(out_path, [&](std::ostream& os) { run_bench(w->w, bc, to_options(opts), os); });
  });
}

dbsa_status dbsa_bench_csv(const char* in_path, const char* out_path) {
  return guarded([&] {
    require(in_path, "input path");
    if (std::strcmp(in_path, "-") == 0) {
      with_output(out_path, [&](std::ostream& os) { bench_to_csv(std::cin, os); });
      return;
    }
    std::ifstream in(in_path);
    if (!in) fail(ErrorCode::Io, std::string("cannot open '") + in_path + "'");
    with_output(out_path, [&](std::ostream& os) { bench_to_csv(in, os); });
  });
}

}  // extern "C"
