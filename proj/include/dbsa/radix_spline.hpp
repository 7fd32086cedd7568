#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dbsa {

// Learned index over a sorted key array: a greedy error-bounded linear
// spline plus a radix table over the key prefixes of the spline knots.
//
// The spline is fitted to the lower-bound function of the data, not only to
// the stored keys: for every distinct key k it passes within max_error of
// (k, first position of k) and of (k + 1, first position after k). Keys are
// integers, so every integer query then predicts its lower bound to within
// max_error, including absent keys and runs of duplicates.
class RadixSpline {
 public:
  static constexpr int kDefaultRadixBits = 25;
  static constexpr int kDefaultMaxError = 32;

  struct Knot {
    std::uint64_t key = 0;
    std::uint64_t pos = 0;
    friend bool operator==(const Knot&, const Knot&) = default;
  };

  // Half-open window of positions that holds the lower bound of a key.
  struct SearchBound {
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  RadixSpline() = default;

  // One pass over `keys` (sorted ascending). radix_bits is clamped to
  // ceil(log2(n)) + 1 and to the width of the key range.
  static RadixSpline build(std::span<const std::uint64_t> keys, int radix_bits = kDefaultRadixBits,
                           int max_error = kDefaultMaxError);
  // Rebuilds the radix table for knots loaded from storage.
  static RadixSpline from_knots(std::vector<Knot> knots, std::size_t n, int radix_bits, int max_error);

  double predict(std::uint64_t key) const;
  SearchBound search_bound(std::uint64_t key) const;
  // First position whose key is >= `key`; `keys` must be the build input.
  std::size_t lower_bound(std::span<const std::uint64_t> keys, std::uint64_t key) const;

  std::span<const Knot> knots() const { return knots_; }
  int radix_bits() const { return radix_bits_; }
  int requested_radix_bits() const { return requested_radix_bits_; }
  int max_error() const { return max_error_; }
  std::size_t size() const { return n_; }
  std::size_t memory_bytes() const;

 private:
  void build_radix_table();
  std::size_t segment_end(std::uint64_t key) const;

  std::vector<Knot> knots_;
  std::vector<std::uint32_t> radix_table_;
  std::size_t n_ = 0;
  int requested_radix_bits_ = kDefaultRadixBits;
  int radix_bits_ = 0;
  int shift_bits_ = 0;
  int max_error_ = kDefaultMaxError;
};

}  // namespace dbsa
