#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbsa/query.hpp"
#include "dbsa/workload.hpp"

namespace dbsa {

// Exact per-region COUNT/SUM by point-in-polygon tests with an MBR prefilter.
// Auditing only; the engines never call it.
std::vector<Partial> exact_partials(const PointSet& points, std::span<const RegionRecord> regions,
                                    const AggregationQuery& q, unsigned threads = 1);

struct ErrorStats {
  std::size_t regions = 0;
  std::size_t exact_regions = 0;  // alpha equal to the exact value
  double median_rel = 0.0;        // |alpha - exact| / max(|exact|, 1)
  double mean_abs = 0.0;
  double max_abs = 0.0;
  std::size_t range_checked = 0;
  std::size_t range_violations = 0;  // exact outside [lo, hi]
};

// Compares results with exact partials (same region order).
ErrorStats error_stats(std::span<const RegionResult> results, std::span<const Partial> exact,
                       const AggregationQuery& q);

struct AuditReport {
  ErrorStats stats;
  std::size_t pairs_checked = 0;         // (point, region) pairs near a region
  std::size_t misclassified = 0;         // covering disagrees with the exact test
  std::size_t bound_violations = 0;      // ... at distance > epsilon from the boundary
  std::size_t false_negatives = 0;       // inside exactly, outside the covering
  double max_miss_distance = 0.0;

  std::string to_json(const AggregationQuery& q, Engine engine) const;
};

// Runs an engine and checks its output against the exact oracle, plus a
// per-point distance-bound check of the coverings behind it.
AuditReport audit(const Workload& w, Engine engine, const AggregationQuery& q, const JoinOptions& opts = {});

struct BenchConfig {
  std::vector<double> epsilons;  // unit-domain distances
  std::vector<Engine> engines;
  RasterMode mode = RasterMode::Conservative;
  Aggregate agg;
  std::optional<AttributeFilter> filter;
  bool timings = true;    // false omits wall-clock fields for byte-stable output
  bool per_region = true; // also emit one record per region
};

// Emits JSON lines: a "run" record per (engine, epsilon), optional "region"
// records, and "error" records for runs that fail; failures do not stop the bench.
void run_bench(const Workload& w, const BenchConfig& cfg, const JoinOptions& opts, std::ostream& out);

// Flattens "run" records of a bench stream into CSV for plotting.
void bench_to_csv(std::istream& in, std::ostream& out);

}  // namespace dbsa
