#include "dbsa/aggregate.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <utility>

#include "dbsa/error.hpp"

namespace dbsa {

Aggregate Aggregate::parse(std::string_view text) {
  if (text == "count") return {AggKind::Count, {}};
  const auto colon = text.find(':');
  if (colon != std::string_view::npos && colon + 1 < text.size()) {
    const auto head = text.substr(0, colon);
    std::string attr(text.substr(colon + 1));
    if (head == "sum") return {AggKind::Sum, attr};
    if (head == "avg") return {AggKind::Avg, attr};
  }
  fail(ErrorCode::InvalidArgument, "bad aggregate '" + std::string(text) + "' (count | sum:attr | avg:attr)");
}

std::string Aggregate::to_string() const {
  switch (kind) {
    case AggKind::Count: return "count";
    case AggKind::Sum: return "sum:" + attr;
    case AggKind::Avg: return "avg:" + attr;
  }
  return "count";
}

std::optional<double> finish(const Partial& p, AggKind kind) {
  switch (kind) {
    case AggKind::Count: return static_cast<double>(p.count);
    case AggKind::Sum: return static_cast<double>(p.sum);
    case AggKind::Avg:
      if (p.count == 0) return std::nullopt;
      return static_cast<double>(p.sum / static_cast<long double>(p.count));
  }
  return std::nullopt;
}

namespace {

constexpr std::array<std::pair<std::string_view, AttributeFilter::Op>, 6> kOps{{
    {"<=", AttributeFilter::Op::Le},
    {">=", AttributeFilter::Op::Ge},
    {"==", AttributeFilter::Op::Eq},
    {"!=", AttributeFilter::Op::Ne},
    {"<", AttributeFilter::Op::Lt},
    {">", AttributeFilter::Op::Gt},
}};

}  // namespace

AttributeFilter AttributeFilter::parse(std::string_view text) {
  for (const auto& [sym, op] : kOps) {
    const auto at = text.find(sym);
    if (at == std::string_view::npos || at == 0) continue;
    const auto rhs = text.substr(at + sym.size());
    double v = 0.0;
    auto [end, ec] = std::from_chars(rhs.data(), rhs.data() + rhs.size(), v);
    if (ec != std::errc() || end != rhs.data() + rhs.size() || !std::isfinite(v)) break;
    return {std::string(text.substr(0, at)), op, v};
  }
  fail(ErrorCode::InvalidArgument, "bad filter '" + std::string(text) + "' (expected attr<op>number)");
}

std::string AttributeFilter::to_string() const {
  for (const auto& [sym, o] : kOps)
    if (o == op) {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
      return attr + std::string(sym) + std::string(buf, end);
    }
  return attr;
}

bool AttributeFilter::test(double v) const {
  switch (op) {
    case Op::Lt: return v < value;
    case Op::Le: return v <= value;
    case Op::Gt: return v > value;
    case Op::Ge: return v >= value;
    case Op::Eq: return v == value;
    case Op::Ne: return v != value;
  }
  return false;
}

BoundFilter::BoundFilter(const std::optional<AttributeFilter>& filter, const PointSet& points) : filter_(filter) {
  if (filter_) column_ = points.attr_index(filter_->attr);
}

}  // namespace dbsa
