#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dbsa/aggregate.hpp"
#include "dbsa/geometry.hpp"
#include "dbsa/grid.hpp"
#include "dbsa/radix_spline.hpp"

namespace dbsa {

// Points linearized to sorted leaf codes, with prefix aggregates so that any
// code interval aggregates in O(1) after two lower-bound lookups.
struct LinearizedPointSet {
  GridConfig grid;
  std::vector<std::uint64_t> codes;          // non-decreasing
  std::vector<std::uint32_t> perm;           // sorted position -> input row
  std::vector<std::uint64_t> count_prefix;   // size n + 1
  std::vector<std::string> sum_attrs;
  std::vector<std::vector<long double>> sum_prefix;  // one array of n + 1 per sum_attrs entry
  std::optional<AttributeFilter> filter;     // points failing it carry zero weight

  std::size_t size() const { return codes.size(); }
  // Index into sum_prefix, or throws a schema error.
  std::size_t sum_slot(const std::string& attr) const;
  std::size_t memory_bytes() const;
};

// Codes are taken at grid.max_level. Points outside the domain are rejected
// with the offending row in the error message.
LinearizedPointSet lps_build(const PointSet& points, const GridConfig& grid,
                             std::span<const std::string> sum_attrs = {},
                             const std::optional<AttributeFilter>& filter = std::nullopt);

RadixSpline rs_build(const LinearizedPointSet& lps, int radix_bits = RadixSpline::kDefaultRadixBits,
                     int max_error = RadixSpline::kDefaultMaxError);

// (first position with code >= iv.lo, first position with code >= iv.hi).
// With a spline the positions come from interpolation plus a bounded local
// search; without one, from binary search. Both agree exactly.
std::pair<std::size_t, std::size_t> bounds_lookup(const LinearizedPointSet& lps, const RadixSpline* rs,
                                                  const CellInterval& iv);

// COUNT and SUM over a set of disjoint intervals. sum_slot < 0 skips SUM.
Partial range_partial(const LinearizedPointSet& lps, const RadixSpline* rs, std::span<const CellInterval> cells,
                      int sum_slot = -1);

// COUNT / SUM / AVG over disjoint intervals; AVG of nothing has no value.
std::optional<double> range_aggregate(const LinearizedPointSet& lps, const RadixSpline* rs,
                                      std::span<const CellInterval> cells, const Aggregate& agg);

// Index file: codes, permutation, prefix arrays and (optionally) spline knots.
void save_point_index(std::ostream& os, const LinearizedPointSet& lps, const RadixSpline* rs,
                      const std::string& metadata = {});
struct LoadedPointIndex {
  LinearizedPointSet lps;
  std::optional<RadixSpline> rs;
  std::string metadata;
};
LoadedPointIndex load_point_index(std::istream& is);

}  // namespace dbsa
