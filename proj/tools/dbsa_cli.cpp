// Command-line front end. Talks to the library only through dbsa.h.
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "dbsa/dbsa.h"

namespace {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
  const char* env = std::getenv("DBSA_LOG_LEVEL");
  if (!env) return LogLevel::Warn;
  const std::string v = env;
  if (v == "error") return LogLevel::Error;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(LogLevel level, const std::string& msg) {
  static const LogLevel current = log_level();
  static const char* const names[] = {"error", "warn", "info", "debug"};
  if (level <= current) std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

// Thrown after a library call fails; carries the status as exit code.
struct Failure {
  int status;
};

void check(dbsa_status s, const char* what) {
  if (s == DBSA_OK) return;
  log(LogLevel::Error, std::string(what) + ": " + dbsa_status_string(s) + ": " + dbsa_last_error());
  throw Failure{static_cast<int>(s)};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Workload = Handle<dbsa_workload, dbsa_workload_free>;
using Results = Handle<dbsa_results, dbsa_results_free>;
using Act = Handle<dbsa_act, dbsa_act_free>;
using PointIndex = Handle<dbsa_pointindex, dbsa_pointindex_free>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { dbsa_string_free(s); }
};

struct Inputs {
  std::string points;
  std::string regions;
  std::string x_column;
  std::string y_column;
  std::uint64_t seed = 42;
  std::size_t synthetic_points = 100000;
  std::size_t synthetic_regions = 20;
};

void add_inputs(CLI::App* cmd, Inputs& in, bool synthetic) {
  cmd->add_option("--points", in.points, "Points CSV (header names x/y or lon/lat)");
  cmd->add_option("--regions", in.regions, "Regions as GeoJSON or WKT lines");
  cmd->add_option("--x-column", in.x_column, "Name of the x column");
  cmd->add_option("--y-column", in.y_column, "Name of the y column");
  if (synthetic) {
    cmd->add_option("--seed", in.seed, "Seed of the synthetic workload used when no files are given")
        ->capture_default_str();
    cmd->add_option("--synthetic-points", in.synthetic_points)->capture_default_str();
    cmd->add_option("--synthetic-regions", in.synthetic_regions)->capture_default_str();
  }
}

void load(const Inputs& in, Workload& w, bool allow_synthetic, const char* normalization = nullptr) {
  if (in.points.empty() && in.regions.empty()) {
    if (!allow_synthetic) {
      log(LogLevel::Error, "give --points and/or --regions");
      throw Failure{static_cast<int>(DBSA_ERR_INVALID_ARGUMENT)};
    }
    log(LogLevel::Info, "no input files; generating synthetic workload with seed " + std::to_string(in.seed));
    check(dbsa_workload_synthetic(in.seed, in.synthetic_points, in.synthetic_regions, &w.p), "synthetic workload");
    return;
  }
  dbsa_ingest_options opts{};
  opts.points_path = in.points.empty() ? nullptr : in.points.c_str();
  opts.regions_path = in.regions.empty() ? nullptr : in.regions.c_str();
  opts.x_column = in.x_column.empty() ? nullptr : in.x_column.c_str();
  opts.y_column = in.y_column.empty() ? nullptr : in.y_column.c_str();
  opts.normalization = normalization;
  check(dbsa_workload_load(&opts, &w.p), "ingest");
  std::size_t points = 0, regions = 0, rejects = 0;
  check(dbsa_workload_counts(w.p, &points, &regions, &rejects), "ingest");
  log(LogLevel::Info, "loaded " + std::to_string(points) + " points, " + std::to_string(regions) + " regions");
  if (rejects) log(LogLevel::Warn, std::to_string(rejects) + " input rows rejected (see `dbsa ingest`)");
}

struct QueryArgs {
  double epsilon = 0.0;
  std::string mode = "conservative";
  std::string agg = "count";
  std::string filter;
};

void add_query(CLI::App* cmd, QueryArgs& q, bool epsilon_required = true) {
  auto* e = cmd->add_option("--epsilon", q.epsilon, "Distance bound in data units");
  if (epsilon_required) e->required();
  cmd->add_option("--mode", q.mode, "conservative | center")
      ->check(CLI::IsMember({"conservative", "center"}))
      ->capture_default_str();
  cmd->add_option("--agg", q.agg, "count | sum:attr | avg:attr")->capture_default_str();
  cmd->add_option("--filter", q.filter, "Point filter such as 'value>=10'");
}

dbsa_mode to_mode(const std::string& m) { return m == "center" ? DBSA_MODE_CENTER : DBSA_MODE_CONSERVATIVE; }

dbsa_query to_query(const QueryArgs& q) {
  return {q.epsilon, to_mode(q.mode), q.agg.c_str(), q.filter.empty() ? nullptr : q.filter.c_str()};
}

struct Tuning {
  bool parallel = false;
  unsigned threads = 0;
  int radix_width = 0;
  int radix_bits = -1;
  int spline_error = -1;
  bool no_spline = false;
  int tile_level = -1;
};

void add_tuning(CLI::App* cmd, Tuning& t) {
  cmd->add_flag("--parallel", t.parallel, "Parallelize the point scan over all hardware threads");
  cmd->add_option("--threads", t.threads, "Worker threads (implies --parallel)");
  cmd->add_option("--radix-width", t.radix_width, "ACT bits per node: 2, 4 or 8");
  cmd->add_option("--radix-bits", t.radix_bits, "Spline radix table bits");
  cmd->add_option("--spline-error", t.spline_error, "Spline error bound");
  cmd->add_flag("--no-spline", t.no_spline, "Binary search instead of the learned index");
  cmd->add_option("--tile-level", t.tile_level, "Canvas tile side 2^k, k <= 13");
}

dbsa_options to_options(const Tuning& t) {
  dbsa_options o;
  dbsa_options_default(&o);
  if (t.threads) o.threads = t.threads;
  else if (t.parallel) o.threads = std::max(1u, std::thread::hardware_concurrency());
  if (t.radix_width) o.radix_width = t.radix_width;
  if (t.radix_bits >= 0) o.radix_bits = t.radix_bits;
  if (t.spline_error >= 0) o.spline_error = t.spline_error;
  if (t.no_spline) o.use_spline = 0;
  if (t.tile_level >= 0) o.canvas_tile_level = t.tile_level;
  return o;
}

std::vector<std::string> engines_of(const std::string& e) {
  if (e == "all") return {"act", "pointindex", "canvas"};
  return {e};
}

void print_text(const std::string& text, const std::string& out) {
  if (out == "-") {
    std::cout << text << '\n';
    return;
  }
  FILE* f = std::fopen(out.c_str(), "wb");
  if (!f) {
    log(LogLevel::Error, "cannot open '" + out + "' for writing");
    throw Failure{static_cast<int>(DBSA_ERR_IO)};
  }
  std::fprintf(f, "%s\n", text.c_str());
  std::fclose(f);
}

void print_string(char* s, const std::string& out) {
  OwnedString owned{s};
  print_text(owned.s, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distance-bounded spatial aggregation"};
  app.set_version_flag("--version", std::string(dbsa_version()));
  app.require_subcommand(1);

  // ingest
  Inputs ingest_in;
  std::string ingest_out = "-";
  auto* ingest = app.add_subcommand("ingest", "Parse inputs and print a summary with rejected rows");
  add_inputs(ingest, ingest_in, false);
  ingest->add_option("--out", ingest_out)->capture_default_str();

  // rasterize
  Inputs rast_in;
  QueryArgs rast_q;
  bool rast_uniform = false;
  std::string rast_out = "-";
  auto* rasterize = app.add_subcommand("rasterize", "Dump region coverings as 'region_id level code kind' lines");
  add_inputs(rasterize, rast_in, false);
  add_query(rasterize, rast_q);
  rasterize->add_flag("--uniform", rast_uniform, "Expand interior cells to leaf level");
  rasterize->add_option("--out", rast_out)->capture_default_str();

  // render
  Inputs render_in;
  QueryArgs render_q;
  std::string render_channel = "region", render_format = "pgm", render_sum, render_out = "-";
  auto* render = app.add_subcommand("render", "Export a canvas channel as PGM or CSV");
  add_inputs(render, render_in, false);
  add_query(render, render_q);
  render->add_option("--channel", render_channel, "count | sum | region | boundary")->capture_default_str();
  render->add_option("--format", render_format, "pgm | csv")->capture_default_str();
  render->add_option("--sum", render_sum, "Attribute drawn into the sum channel");
  render->add_option("--out", render_out)->capture_default_str();

  // index build / info
  auto* index = app.add_subcommand("index", "Build or inspect indexes");
  index->require_subcommand(1);
  Inputs build_in;
  QueryArgs build_q;
  Tuning build_t;
  std::string build_kind = "act", build_sum, build_out;
  auto* build = index->add_subcommand("build", "Build an ACT over regions or a point index over points");
  add_inputs(build, build_in, false);
  add_query(build, build_q);
  add_tuning(build, build_t);
  build->add_option("--kind", build_kind, "act | points")->check(CLI::IsMember({"act", "points"}))->capture_default_str();
  build->add_option("--sum", build_sum, "Comma list of attributes with prefix sums (points)");
  build->add_option("--out", build_out, "Index file")->required();
  std::string info_path;
  auto* info = index->add_subcommand("info", "Describe an index file");
  info->add_option("--index", info_path)->required();

  // query
  std::string query_index, query_point, query_regions, query_out = "-";
  QueryArgs query_q;
  Tuning query_t;
  auto* query = app.add_subcommand("query", "Point lookup in an ACT, or region aggregation over a point index");
  query->add_option("--index", query_index)->required();
  query->add_option("--point", query_point, "x,y in data units (ACT)");
  query->add_option("--regions", query_regions, "Regions to aggregate (point index)");
  add_query(query, query_q, false);
  add_tuning(query, query_t);
  query->add_option("--out", query_out)->capture_default_str();

  // join
  Inputs join_in;
  QueryArgs join_q;
  Tuning join_t;
  std::string join_engine = "act", join_out = "-";
  auto* join = app.add_subcommand("join", "Approximate aggregation per region as JSON lines");
  add_inputs(join, join_in, true);
  add_query(join, join_q);
  add_tuning(join, join_t);
  join->add_option("--engine", join_engine, "act | pointindex | canvas | all")
      ->check(CLI::IsMember({"act", "pointindex", "canvas", "all"}))
      ->capture_default_str();
  join->add_option("--out", join_out)->capture_default_str();

  // bench
  Inputs bench_in;
  QueryArgs bench_q;
  Tuning bench_t;
  std::vector<double> bench_eps;
  std::string bench_engine = "all", bench_out = "-";
  bool bench_no_timing = false, bench_no_regions = false;
  auto* bench = app.add_subcommand("bench", "Build, run and audit engines over several distance bounds");
  add_inputs(bench, bench_in, true);
  bench->add_option("--epsilon", bench_eps, "Distance bounds in data units (repeat or comma list)")
      ->required()
      ->delimiter(',');
  bench->add_option("--mode", bench_q.mode)->check(CLI::IsMember({"conservative", "center"}))->capture_default_str();
  bench->add_option("--agg", bench_q.agg)->capture_default_str();
  bench->add_option("--filter", bench_q.filter);
  add_tuning(bench, bench_t);
  bench->add_option("--engine", bench_engine, "act | pointindex | canvas | all or a comma list")->capture_default_str();
  bench->add_flag("--no-timing", bench_no_timing, "Omit wall-clock fields (byte-stable output)");
  bench->add_flag("--no-regions", bench_no_regions, "Omit per-region records");
  bench->add_option("--out", bench_out)->capture_default_str();

  // audit
  Inputs audit_in;
  QueryArgs audit_q;
  Tuning audit_t;
  std::string audit_engine = "act", audit_out = "-";
  auto* audit = app.add_subcommand("audit", "Compare an engine with the exact point-in-polygon oracle");
  add_inputs(audit, audit_in, true);
  add_query(audit, audit_q);
  add_tuning(audit, audit_t);
  audit->add_option("--engine", audit_engine)
      ->check(CLI::IsMember({"act", "pointindex", "canvas", "all"}))
      ->capture_default_str();
  audit->add_option("--out", audit_out)->capture_default_str();

  // plot-csv
  std::string csv_in = "-", csv_out = "-";
  auto* plot = app.add_subcommand("plot-csv", "Turn bench JSON lines into CSV for plotting");
  plot->add_option("--in", csv_in)->capture_default_str();
  plot->add_option("--out", csv_out)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      Workload w;
      load(ingest_in, w, false);
      char* s = nullptr;
      check(dbsa_workload_summary(w.p, &s), "summary");
      print_string(s, ingest_out);
    } else if (*rasterize) {
      Workload w;
      load(rast_in, w, false);
      check(dbsa_rasterize_dump(w.p, rast_q.epsilon, to_mode(rast_q.mode), rast_uniform ? 1 : 0, rast_out.c_str()),
            "rasterize");
    } else if (*render) {
      Workload w;
      load(render_in, w, false);
      check(dbsa_render(w.p, render_q.epsilon, to_mode(render_q.mode), render_channel.c_str(), render_format.c_str(),
                        render_sum.empty() ? nullptr : render_sum.c_str(), render_out.c_str()),
            "render");
    } else if (*build) {
      Workload w;
      load(build_in, w, false);
      const dbsa_options o = to_options(build_t);
      if (build_kind == "act") {
        Act act;
        check(dbsa_act_build(w.p, build_q.epsilon, to_mode(build_q.mode), &o, &act.p), "index build");
        check(dbsa_act_save(act.p, build_out.c_str()), "index save");
      } else {
        PointIndex pi;
        check(dbsa_pointindex_build(w.p, build_q.epsilon, build_sum.c_str(),
                                    build_q.filter.empty() ? nullptr : build_q.filter.c_str(), &o, &pi.p),
              "index build");
        check(dbsa_pointindex_save(pi.p, build_out.c_str()), "index save");
      }
      log(LogLevel::Info, "wrote " + build_out);
    } else if (*info) {
      char* s = nullptr;
      Act act;
      if (dbsa_act_load(info_path.c_str(), &act.p) == DBSA_OK) {
        check(dbsa_act_info(act.p, &s), "index info");
      } else {
        PointIndex pi;
        check(dbsa_pointindex_load(info_path.c_str(), &pi.p), "index load");
        check(dbsa_pointindex_info(pi.p, &s), "index info");
      }
      print_string(s, "-");
    } else if (*query) {
      Act act;
      if (dbsa_act_load(query_index.c_str(), &act.p) == DBSA_OK) {
        double x = 0.0, y = 0.0;
        if (query_point.empty() || std::sscanf(query_point.c_str(), "%lf,%lf", &x, &y) != 2) {
          log(LogLevel::Error, "ACT queries need --point x,y");
          return DBSA_ERR_INVALID_ARGUMENT;
        }
        std::size_t n = 0;
        check(dbsa_act_lookup(act.p, x, y, nullptr, nullptr, 0, &n), "lookup");
        std::vector<int64_t> ids(n);
        std::vector<char> kinds(n);
        check(dbsa_act_lookup(act.p, x, y, ids.data(), kinds.data(), n, &n), "lookup");
        std::string line = "{\"x\":" + std::to_string(x) + ",\"y\":" + std::to_string(y) + ",\"regions\":[";
        for (std::size_t i = 0; i < n; ++i)
          line += (i ? "," : "") + std::string("{\"region_id\":") + std::to_string(ids[i]) + ",\"kind\":\"" + kinds[i] +
                  "\"}";
        line += "]}";
        print_text(line, query_out);
      } else {
        PointIndex pi;
        check(dbsa_pointindex_load(query_index.c_str(), &pi.p), "index load");
        if (query_regions.empty() || !(query_q.epsilon > 0.0)) {
          log(LogLevel::Error, "point index queries need --regions and --epsilon");
          return DBSA_ERR_INVALID_ARGUMENT;
        }
        char* norm = nullptr;
        check(dbsa_pointindex_normalization(pi.p, &norm), "index normalization");
        OwnedString norm_owned{norm};
        Inputs in;
        in.regions = query_regions;
        Workload w;
        load(in, w, false, norm_owned.s);
        const dbsa_query q = to_query(query_q);
        const dbsa_options o = to_options(query_t);
        Results r;
        check(dbsa_pointindex_join(pi.p, w.p, &q, &o, &r.p), "query");
        check(dbsa_results_write_jsonl(r.p, query_out.c_str(), 0), "write results");
      }
    } else if (*join) {
      Workload w;
      load(join_in, w, true);
      const dbsa_query q = to_query(join_q);
      const dbsa_options o = to_options(join_t);
      bool append = false;
      for (const auto& e : engines_of(join_engine)) {
        Results r;
        check(dbsa_join(w.p, e.c_str(), &q, &o, &r.p), "join");
        check(dbsa_results_write_jsonl(r.p, join_out.c_str(), append ? 1 : 0), "write results");
        append = true;
      }
    } else if (*bench) {
      Workload w;
      load(bench_in, w, true);
      const dbsa_options o = to_options(bench_t);
      dbsa_bench_config cfg{};
      cfg.epsilons = bench_eps.data();
      cfg.epsilon_count = bench_eps.size();
      cfg.engines = bench_engine.c_str();
      cfg.mode = to_mode(bench_q.mode);
      cfg.agg = bench_q.agg.c_str();
      cfg.filter = bench_q.filter.empty() ? nullptr : bench_q.filter.c_str();
      cfg.timings = bench_no_timing ? 0 : 1;
      cfg.per_region = bench_no_regions ? 0 : 1;
      check(dbsa_bench(w.p, &cfg, &o, bench_out.c_str()), "bench");
    } else if (*audit) {
      Workload w;
      load(audit_in, w, true);
      const dbsa_query q = to_query(audit_q);
      const dbsa_options o = to_options(audit_t);
      for (const auto& e : engines_of(audit_engine)) {
        char* s = nullptr;
        check(dbsa_audit(w.p, e.c_str(), &q, &o, &s), "audit");
        print_string(s, audit_out);
      }
    } else if (*plot) {
      check(dbsa_bench_csv(csv_in.c_str(), csv_out.c_str()), "plot-csv");
    }
  } catch (const Failure& f) {
    return f.status;
  }
  return 0;
}
