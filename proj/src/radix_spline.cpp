#include "dbsa/radix_spline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "dbsa/error.hpp"

namespace dbsa {

namespace {

using i128 = __int128;

struct FitPoint {
  std::uint64_t x;
  std::int64_t y;
};

// Compares the slopes of origin->a and origin->b; both lie right of origin.
int compare_slopes(const FitPoint& origin, const FitPoint& a, const FitPoint& b) {
  const i128 lhs = static_cast<i128>(a.y - origin.y) * static_cast<i128>(b.x - origin.x);
  const i128 rhs = static_cast<i128>(b.y - origin.y) * static_cast<i128>(a.x - origin.x);
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

// Greedy spline corridor: emits a knot whenever the next point leaves the
// cone of lines through the last knot that stay within `err` of every point
// seen since.
class SplineFitter {
 public:
  explicit SplineFitter(std::int64_t err) : err_(err) {}

  void add(FitPoint p) {
    if (count_++ == 0) {
      knots_.push_back({p.x, static_cast<std::uint64_t>(p.y)});
      anchor_ = p;
      prev_ = p;
      return;
    }
    if (count_ == 2) {
      upper_ = {p.x, p.y + err_};
      lower_ = {p.x, p.y - err_};
      prev_ = p;
      return;
    }
    if (compare_slopes(anchor_, p, upper_) > 0 || compare_slopes(anchor_, p, lower_) < 0) {
      knots_.push_back({prev_.x, static_cast<std::uint64_t>(prev_.y)});
      anchor_ = prev_;
      upper_ = {p.x, p.y + err_};
      lower_ = {p.x, p.y - err_};
    } else {
      const FitPoint up{p.x, p.y + err_};
      const FitPoint lo{p.x, p.y - err_};
      if (compare_slopes(anchor_, up, upper_) < 0) upper_ = up;
      if (compare_slopes(anchor_, lo, lower_) > 0) lower_ = lo;
    }
    prev_ = p;
  }

  std::vector<RadixSpline::Knot> finish() {
    if (count_ > 1 && knots_.back().key != prev_.x) knots_.push_back({prev_.x, static_cast<std::uint64_t>(prev_.y)});
    return std::move(knots_);
  }

 private:
  std::int64_t err_;
  std::size_t count_ = 0;
  FitPoint anchor_{};
  FitPoint prev_{};
  FitPoint upper_{};
  FitPoint lower_{};
  std::vector<RadixSpline::Knot> knots_;
};

int bit_width64(std::uint64_t v) { return static_cast<int>(std::bit_width(v)); }

}  // namespace

RadixSpline RadixSpline::build(std::span<const std::uint64_t> keys, int radix_bits, int max_error) {
  if (radix_bits < 0 || radix_bits > 62)
    fail(ErrorCode::Configuration, "radix bits " + std::to_string(radix_bits) + " exceed the 62-bit code width");
  if (max_error < 0) fail(ErrorCode::Configuration, "spline error must be non-negative");
  SplineFitter fitter(max_error);
  const std::size_t n = keys.size();
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && keys[j] == keys[i]) ++j;
    if (j < n && keys[j] < keys[i]) fail(ErrorCode::InvalidArgument, "radix spline keys must be sorted");
    fitter.add({keys[i], static_cast<std::int64_t>(i)});
    // Lower bound just past this key run.
    if (j == n || keys[j] > keys[i] + 1) fitter.add({keys[i] + 1, static_cast<std::int64_t>(j)});
    i = j;
  }
  return from_knots(fitter.finish(), n, radix_bits, max_error);
}

RadixSpline RadixSpline::from_knots(std::vector<Knot> knots, std::size_t n, int radix_bits, int max_error) {
  RadixSpline rs;
  rs.knots_ = std::move(knots);
  rs.n_ = n;
  rs.max_error_ = max_error;
  rs.requested_radix_bits_ = radix_bits;
  for (std::size_t i = 1; i < rs.knots_.size(); ++i)
    if (rs.knots_[i].key <= rs.knots_[i - 1].key || rs.knots_[i].pos < rs.knots_[i - 1].pos)
      fail(ErrorCode::Format, "spline knots must be strictly increasing");
  if (!rs.knots_.empty() && rs.knots_.back().pos > n) fail(ErrorCode::Format, "spline knot beyond the key array");
  rs.build_radix_table();
  return rs;
}

void RadixSpline::build_radix_table() {
  radix_table_.clear();
  if (knots_.empty()) {
    radix_bits_ = 0;
    shift_bits_ = 0;
    return;
  }
  const std::uint64_t range = knots_.back().key - knots_.front().key;
  const int range_bits = bit_width64(range);
  const int size_bits = n_ <= 1 ? 1 : bit_width64(static_cast<std::uint64_t>(n_ - 1)) + 1;  // ceil(log2 n) + 1
  radix_bits_ = std::min({requested_radix_bits_, size_bits, range_bits});
  shift_bits_ = range_bits - radix_bits_;
  const std::size_t buckets = (range >> shift_bits_) + 1;
  radix_table_.assign(buckets + 1, static_cast<std::uint32_t>(knots_.size()));
  // radix_table_[p] = first knot whose prefix is >= p.
  std::size_t next = 0;
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const std::size_t prefix = (knots_[i].key - knots_.front().key) >> shift_bits_;
    while (next <= prefix) radix_table_[next++] = static_cast<std::uint32_t>(i);
  }
}

// Index of the first knot whose key is >= key; key lies strictly inside the knot range.
std::size_t RadixSpline::segment_end(std::uint64_t key) const {
  const std::size_t prefix = (key - knots_.front().key) >> shift_bits_;
  const std::size_t begin = radix_table_[prefix];
  const std::size_t end = std::min<std::size_t>(radix_table_[prefix + 1], knots_.size() - 1);
  auto it = std::lower_bound(knots_.begin() + static_cast<std::ptrdiff_t>(begin),
                             knots_.begin() + static_cast<std::ptrdiff_t>(end) + 1, key,
                             [](const Knot& k, std::uint64_t v) { return k.key < v; });
  return static_cast<std::size_t>(it - knots_.begin());
}

double RadixSpline::predict(std::uint64_t key) const {
  if (knots_.empty()) return 0.0;
  if (key <= knots_.front().key) return static_cast<double>(knots_.front().pos);
  if (key >= knots_.back().key) return static_cast<double>(knots_.back().pos);
  const std::size_t hi = segment_end(key);
  const Knot& a = knots_[hi - 1];
  const Knot& b = knots_[hi];
  const double dx = static_cast<double>(b.key - a.key);
  const double dy = static_cast<double>(b.pos - a.pos);
  return static_cast<double>(a.pos) + static_cast<double>(key - a.key) * (dy / dx);
}

RadixSpline::SearchBound RadixSpline::search_bound(std::uint64_t key) const {
  const double p = predict(key);
  const double err = static_cast<double>(max_error_);
  const double lo = std::floor(p - err);
  const double hi = std::ceil(p + err) + 1.0;
  SearchBound b;
  b.begin = lo <= 0.0 ? 0 : std::min(n_, static_cast<std::size_t>(lo));
  b.end = hi <= 0.0 ? 0 : std::min(n_, static_cast<std::size_t>(hi));
  return b;
}

std::size_t RadixSpline::lower_bound(std::span<const std::uint64_t> keys, std::uint64_t key) const {
  const auto b = search_bound(key);
  auto it = std::lower_bound(keys.begin() + static_cast<std::ptrdiff_t>(b.begin),
                             keys.begin() + static_cast<std::ptrdiff_t>(b.end), key);
  return static_cast<std::size_t>(it - keys.begin());
}

std::size_t RadixSpline::memory_bytes() const {
  return sizeof(*this) + knots_.capacity() * sizeof(Knot) + radix_table_.capacity() * sizeof(std::uint32_t);
}

}  // namespace dbsa
