#include "dbsa/pointindex.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

#include "binary_io.hpp"
#include "dbsa/error.hpp"

namespace dbsa {

namespace {

constexpr char kPointIndexMagic[9] = "DBSAPIX1";
constexpr std::uint32_t kPointIndexVersion = 1;

}  // namespace

std::size_t LinearizedPointSet::sum_slot(const std::string& attr) const {
  for (std::size_t i = 0; i < sum_attrs.size(); ++i)
    if (sum_attrs[i] == attr) return i;
  fail(ErrorCode::Schema, "attribute '" + attr + "' has no prefix array in this point index");
}

std::size_t LinearizedPointSet::memory_bytes() const {
  std::size_t bytes = codes.capacity() * sizeof(std::uint64_t) + perm.capacity() * sizeof(std::uint32_t) +
                      count_prefix.capacity() * sizeof(std::uint64_t);
  for (const auto& p : sum_prefix) bytes += p.capacity() * sizeof(long double);
  return bytes;
}

LinearizedPointSet lps_build(const PointSet& points, const GridConfig& grid, std::span<const std::string> sum_attrs,
                             const std::optional<AttributeFilter>& filter) {
  grid.validate();
  const std::size_t n = points.size();
  if (n > 0xFFFFFFFFu) fail(ErrorCode::Capacity, "point index holds at most 2^32 - 1 points");
  LinearizedPointSet lps;
  lps.grid = grid;
  lps.filter = filter;
  std::vector<std::size_t> columns;
  for (const auto& a : sum_attrs) {
    columns.push_back(points.attr_index(a));
    lps.sum_attrs.push_back(a);
  }
  const BoundFilter keep(filter, points);

  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!grid.in_domain(points.locs[i]))
      fail(ErrorCode::Domain, "point " + std::to_string(i) + " lies outside the grid domain");
    keyed[i] = {leaf_code(grid, points.locs[i]), static_cast<std::uint32_t>(i)};
  }
  std::sort(keyed.begin(), keyed.end());

  lps.codes.resize(n);
  lps.perm.resize(n);
  lps.count_prefix.assign(n + 1, 0);
  lps.sum_prefix.assign(columns.size(), std::vector<long double>(n + 1, 0.0L));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = keyed[i].second;
    lps.codes[i] = keyed[i].first;
    lps.perm[i] = row;
    const bool w = keep(points, row);
    lps.count_prefix[i + 1] = lps.count_prefix[i] + (w ? 1 : 0);
    for (std::size_t s = 0; s < columns.size(); ++s)
      lps.sum_prefix[s][i + 1] = lps.sum_prefix[s][i] + (w ? static_cast<long double>(points.attr(row, columns[s])) : 0.0L);
  }
  return lps;
}

RadixSpline rs_build(const LinearizedPointSet& lps, int radix_bits, int max_error) {
  return RadixSpline::build(lps.codes, radix_bits, max_error);
}

std::pair<std::size_t, std::size_t> bounds_lookup(const LinearizedPointSet& lps, const RadixSpline* rs,
                                                  const CellInterval& iv) {
  const std::span<const std::uint64_t> codes = lps.codes;
  if (rs) return {rs->lower_bound(codes, iv.lo), rs->lower_bound(codes, iv.hi)};
  const auto lo = std::lower_bound(codes.begin(), codes.end(), iv.lo);
  const auto hi = std::lower_bound(lo, codes.end(), iv.hi);
  return {static_cast<std::size_t>(lo - codes.begin()), static_cast<std::size_t>(hi - codes.begin())};
}

Partial range_partial(const LinearizedPointSet& lps, const RadixSpline* rs, std::span<const CellInterval> cells,
                      int sum_slot) {
  Partial total;
  for (const auto& iv : cells) {
    if (iv.empty()) continue;
    const auto [lo, hi] = bounds_lookup(lps, rs, iv);
    total.count += lps.count_prefix[hi] - lps.count_prefix[lo];
    if (sum_slot >= 0) {
      const auto& p = lps.sum_prefix[static_cast<std::size_t>(sum_slot)];
      total.sum += p[hi] - p[lo];
    }
  }
  return total;
}

std::optional<double> range_aggregate(const LinearizedPointSet& lps, const RadixSpline* rs,
                                      std::span<const CellInterval> cells, const Aggregate& agg) {
  const int slot = agg.needs_attr() ? static_cast<int>(lps.sum_slot(agg.attr)) : -1;
  return finish(range_partial(lps, rs, cells, slot), agg.kind);
}

void save_point_index(std::ostream& os, const LinearizedPointSet& lps, const RadixSpline* rs,
                      const std::string& metadata) {
  io::put_magic(os, kPointIndexMagic, kPointIndexVersion);
  io::put_grid(os, lps.grid);
  io::put_string(os, metadata);
  io::put_string(os, lps.filter ? lps.filter->to_string() : std::string());
  const std::uint64_t n = lps.size();
  io::put<std::uint64_t>(os, n);
  for (auto c : lps.codes) io::put<std::uint64_t>(os, c);
  for (auto p : lps.perm) io::put<std::uint32_t>(os, p);
  for (auto c : lps.count_prefix) io::put<std::uint64_t>(os, c);
  io::put<std::uint32_t>(os, static_cast<std::uint32_t>(lps.sum_attrs.size()));
  for (std::size_t s = 0; s < lps.sum_attrs.size(); ++s) {
    io::put_string(os, lps.sum_attrs[s]);
    // Wide prefix values are stored as an unevaluated double-double sum.
    for (long double v : lps.sum_prefix[s]) {
      const double hi = static_cast<double>(v);
      io::put<double>(os, hi);
      io::put<double>(os, static_cast<double>(v - hi));
    }
  }
  io::put<std::uint8_t>(os, rs ? 1 : 0);
  if (rs) {
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(rs->requested_radix_bits()));
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(rs->max_error()));
    io::put<std::uint64_t>(os, rs->knots().size());
    for (const auto& k : rs->knots()) {
      io::put<std::uint64_t>(os, k.key);
      io::put<std::uint64_t>(os, k.pos);
    }
  }
  if (!os) fail(ErrorCode::Io, "failed writing point index");
}

LoadedPointIndex load_point_index(std::istream& is) {
  io::expect_magic(is, kPointIndexMagic, kPointIndexVersion);
  LoadedPointIndex out;
  auto& lps = out.lps;
  lps.grid = io::get_grid(is);
  out.metadata = io::get_string(is);
  const auto filter = io::get_string(is);
  if (!filter.empty()) lps.filter = AttributeFilter::parse(filter);
  const auto n = io::get<std::uint64_t>(is);
  if (n > 0xFFFFFFFFu) fail(ErrorCode::Format, "implausible point count in index file");
  lps.codes.resize(n);
  for (auto& c : lps.codes) c = io::get<std::uint64_t>(is);
  if (!std::is_sorted(lps.codes.begin(), lps.codes.end())) fail(ErrorCode::Format, "point codes are not sorted");
  lps.perm.resize(n);
  for (auto& p : lps.perm) p = io::get<std::uint32_t>(is);
  lps.count_prefix.resize(n + 1);
  for (auto& c : lps.count_prefix) c = io::get<std::uint64_t>(is);
  const auto attrs = io::get<std::uint32_t>(is);
  if (attrs > 4096) fail(ErrorCode::Format, "implausible attribute count in index file");
  for (std::uint32_t s = 0; s < attrs; ++s) {
    lps.sum_attrs.push_back(io::get_string(is));
    std::vector<long double> prefix(n + 1);
    for (auto& v : prefix) {
      const double hi = io::get<double>(is);
      const double lo = io::get<double>(is);
      v = static_cast<long double>(hi) + static_cast<long double>(lo);
    }
    lps.sum_prefix.push_back(std::move(prefix));
  }
  if (io::get<std::uint8_t>(is)) {
    const auto bits = static_cast<int>(io::get<std::uint32_t>(is));
    const auto err = static_cast<int>(io::get<std::uint32_t>(is));
    const auto count = io::get<std::uint64_t>(is);
    if (count > 2 * n + 2) fail(ErrorCode::Format, "implausible knot count in index file");
    std::vector<RadixSpline::Knot> knots(count);
    for (auto& k : knots) {
      k.key = io::get<std::uint64_t>(is);
      k.pos = io::get<std::uint64_t>(is);
    }
    out.rs = RadixSpline::from_knots(std::move(knots), n, bits, err);
  }
  return out;
}

}  // namespace dbsa
