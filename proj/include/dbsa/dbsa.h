/* C interface to the distance-bounded spatial aggregation library.
 *
 * All handles are opaque. Every fallible call returns a dbsa_status; on
 * failure dbsa_last_error() describes the problem (per thread). Distances
 * passed to workload-level calls are in data units and are converted with
 * the workload's normalization. Output paths of "-" mean stdout. */
#ifndef DBSA_DBSA_H
#define DBSA_DBSA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DBSA_API __declspec(dllexport)
#else
#define DBSA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dbsa_status {
  DBSA_OK = 0,
  DBSA_ERR_INVALID_ARGUMENT = 1,
  DBSA_ERR_DOMAIN = 2,
  DBSA_ERR_CAPACITY = 3,
  DBSA_ERR_CONFIGURATION = 4,
  DBSA_ERR_SCHEMA = 5,
  DBSA_ERR_PARSE = 6,
  DBSA_ERR_IO = 7,
  DBSA_ERR_SHAPE = 8,
  DBSA_ERR_STRUCTURE = 9,
  DBSA_ERR_UNSUPPORTED = 10,
  DBSA_ERR_FORMAT = 11,
  DBSA_ERR_INTERNAL = 99
} dbsa_status;

typedef enum dbsa_mode { DBSA_MODE_CONSERVATIVE = 0, DBSA_MODE_CENTER = 1 } dbsa_mode;

typedef struct dbsa_workload dbsa_workload;
typedef struct dbsa_act dbsa_act;
typedef struct dbsa_pointindex dbsa_pointindex;
typedef struct dbsa_results dbsa_results;

DBSA_API const char* dbsa_version(void);
DBSA_API const char* dbsa_last_error(void);
DBSA_API const char* dbsa_status_string(dbsa_status status);
/* Frees strings returned through char** out-parameters. */
DBSA_API void dbsa_string_free(char* s);

/* Grid arithmetic. */
DBSA_API dbsa_status dbsa_level_for_bound(double extent, double epsilon, int* level);
DBSA_API dbsa_status dbsa_z_encode(uint32_t ix, uint32_t iy, int level, uint64_t* code);
DBSA_API dbsa_status dbsa_z_decode(uint64_t code, uint32_t* ix, uint32_t* iy);
DBSA_API dbsa_status dbsa_cell_interval(int level, uint64_t code, int max_level, uint64_t* lo, uint64_t* hi);

/* Workloads: points and regions normalized into the unit square. */
typedef struct dbsa_ingest_options {
  const char* points_path;   /* CSV, may be NULL */
  const char* regions_path;  /* GeoJSON or WKT lines, may be NULL */
  const char* x_column;      /* NULL: x, lon, lng, longitude */
  const char* y_column;      /* NULL: y, lat, latitude */
  const char* normalization; /* JSON from an index, NULL to fit the data */
} dbsa_ingest_options;

DBSA_API dbsa_status dbsa_workload_load(const dbsa_ingest_options* opts, dbsa_workload** out);
DBSA_API dbsa_status dbsa_workload_synthetic(uint64_t seed, size_t points, size_t regions, dbsa_workload** out);
DBSA_API void dbsa_workload_free(dbsa_workload* w);
DBSA_API dbsa_status dbsa_workload_counts(const dbsa_workload* w, size_t* points, size_t* regions, size_t* rejects);
DBSA_API dbsa_status dbsa_workload_summary(const dbsa_workload* w, char** json);
DBSA_API dbsa_status dbsa_workload_normalization(const dbsa_workload* w, char** json);
DBSA_API dbsa_status dbsa_workload_to_unit(const dbsa_workload* w, double data_distance, double* unit_distance);

/* Query description shared by joins, audits and benches. */
typedef struct dbsa_query {
  double epsilon;      /* data units */
  dbsa_mode mode;
  const char* agg;     /* "count", "sum:attr", "avg:attr"; NULL = count */
  const char* filter;  /* "attr<op>value", NULL = none */
} dbsa_query;

typedef struct dbsa_options {
  unsigned threads;
  int radix_width;       /* ACT fanout bits: 2, 4 or 8 */
  int use_spline;        /* point index lookups through the spline */
  int radix_bits;
  int spline_error;
  int canvas_tile_level; /* canvas tile side 2^k, k <= 13 */
} dbsa_options;

DBSA_API void dbsa_options_default(dbsa_options* opts);

/* Coverings as text lines "region_id level code kind", kind I or B. */
DBSA_API dbsa_status dbsa_rasterize_dump(const dbsa_workload* w, double epsilon, dbsa_mode mode, int uniform,
                                         const char* out_path);

/* Canvas debug view of all regions (channel: count, sum, region, boundary;
 * format: pgm or csv). Points are drawn too when the channel is count or sum. */
DBSA_API dbsa_status dbsa_render(const dbsa_workload* w, double epsilon, dbsa_mode mode, const char* channel,
                                 const char* format, const char* sum_attr, const char* out_path);

/* Adaptive cell trie over the workload's regions. */
DBSA_API dbsa_status dbsa_act_build(const dbsa_workload* w, double epsilon, dbsa_mode mode,
                                    const dbsa_options* opts, dbsa_act** out);
DBSA_API dbsa_status dbsa_act_save(const dbsa_act* act, const char* path);
DBSA_API dbsa_status dbsa_act_load(const char* path, dbsa_act** out);
DBSA_API void dbsa_act_free(dbsa_act* act);
/* Regions containing the data-space point (x, y). kinds[i] is 'I' or 'B'.
 * *count receives the total; at most `capacity` entries are written. */
DBSA_API dbsa_status dbsa_act_lookup(const dbsa_act* act, double x, double y, int64_t* ids, char* kinds,
                                     size_t capacity, size_t* count);
DBSA_API dbsa_status dbsa_act_info(const dbsa_act* act, char** json);

/* Point index: sorted cell codes, prefix aggregates, optional spline. */
DBSA_API dbsa_status dbsa_pointindex_build(const dbsa_workload* w, double epsilon, const char* sum_attrs,
                                           const char* filter, const dbsa_options* opts, dbsa_pointindex** out);
DBSA_API dbsa_status dbsa_pointindex_save(const dbsa_pointindex* pi, const char* path);
DBSA_API dbsa_status dbsa_pointindex_load(const char* path, dbsa_pointindex** out);
DBSA_API void dbsa_pointindex_free(dbsa_pointindex* pi);
DBSA_API dbsa_status dbsa_pointindex_info(const dbsa_pointindex* pi, char** json);
/* Normalization JSON to pass as dbsa_ingest_options.normalization. */
DBSA_API dbsa_status dbsa_pointindex_normalization(const dbsa_pointindex* pi, char** json);
/* Aggregates the regions of `regions` (loaded with this index's
 * normalization) against the stored points. */
DBSA_API dbsa_status dbsa_pointindex_join(const dbsa_pointindex* pi, const dbsa_workload* regions,
                                          const dbsa_query* q, const dbsa_options* opts, dbsa_results** out);

/* Joins. engine: "act", "pointindex" or "canvas". */
DBSA_API dbsa_status dbsa_join(const dbsa_workload* w, const char* engine, const dbsa_query* q,
                               const dbsa_options* opts, dbsa_results** out);

typedef struct dbsa_region_result {
  int64_t region_id;
  int has_alpha;
  double alpha;
  double beta;
  int has_range;
  double lo;
  double hi;
} dbsa_region_result;

DBSA_API size_t dbsa_results_count(const dbsa_results* r);
DBSA_API dbsa_status dbsa_results_get(const dbsa_results* r, size_t i, dbsa_region_result* out);
/* One JSON object per region. append != 0 appends to an existing file. */
DBSA_API dbsa_status dbsa_results_write_jsonl(const dbsa_results* r, const char* path, int append);
DBSA_API void dbsa_results_free(dbsa_results* r);

/* Checks an engine against the exact point-in-polygon oracle. */
DBSA_API dbsa_status dbsa_audit(const dbsa_workload* w, const char* engine, const dbsa_query* q,
                                const dbsa_options* opts, char** report_json);

typedef struct dbsa_bench_config {
  const double* epsilons; /* data units */
  size_t epsilon_count;
  const char* engines;    /* comma list or "all" */
  dbsa_mode mode;
  const char* agg;
  const char* filter;
  int timings;            /* 0 drops wall-clock fields */
  int per_region;
} dbsa_bench_config;

DBSA_API dbsa_status dbsa_bench(const dbsa_workload* w, const dbsa_bench_config* cfg, const dbsa_options* opts,
                                const char* out_path);
DBSA_API dbsa_status dbsa_bench_csv(const char* in_path, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* DBSA_DBSA_H */
