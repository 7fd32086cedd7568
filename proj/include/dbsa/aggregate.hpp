#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "dbsa/geometry.hpp"

namespace dbsa {

enum class AggKind : std::uint8_t { Count, Sum, Avg };

// COUNT, SUM(attr) or AVG(attr). Text form: "count", "sum:attr", "avg:attr".
struct Aggregate {
  AggKind kind = AggKind::Count;
  std::string attr;

  static Aggregate parse(std::string_view text);
  std::string to_string() const;
  bool needs_attr() const { return kind != AggKind::Count; }

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

// Running COUNT and SUM over a set of points.
struct Partial {
  std::uint64_t count = 0;
  long double sum = 0.0L;

  Partial& operator+=(const Partial& o) {
    count += o.count;
    sum += o.sum;
    return *this;
  }
  friend bool operator==(const Partial&, const Partial&) = default;
};

// Final aggregate value; AVG of an empty selection has no value.
std::optional<double> finish(const Partial& p, AggKind kind);

// Point predicate "attr <op> value" with op one of < <= > >= == !=.
struct AttributeFilter {
  enum class Op : std::uint8_t { Lt, Le, Gt, Ge, Eq, Ne };

  std::string attr;
  Op op = Op::Eq;
  double value = 0.0;

  static AttributeFilter parse(std::string_view text);
  std::string to_string() const;
  bool test(double v) const;

  friend bool operator==(const AttributeFilter&, const AttributeFilter&) = default;
};

// Resolved against a PointSet schema for fast per-row evaluation.
class BoundFilter {
 public:
  BoundFilter() = default;
  BoundFilter(const std::optional<AttributeFilter>& filter, const PointSet& points);

  bool operator()(const PointSet& points, std::size_t row) const {
    return !filter_ || filter_->test(points.attr(row, column_));
  }

 private:
  std::optional<AttributeFilter> filter_;
  std::size_t column_ = 0;
};

}  // namespace dbsa
