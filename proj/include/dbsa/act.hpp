#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dbsa/raster.hpp"

namespace dbsa {

struct ActEntry {
  std::int64_t region_id = 0;
  CellKind kind = CellKind::Interior;

  friend auto operator<=>(const ActEntry&, const ActEntry&) = default;
};

// Adaptive Cell Trie: a radix tree keyed by linearized cell codes, consuming
// `radix_width` key bits per node from the most significant end. A cell at
// level l terminates at depth ceil(2l / radix_width), so coarse cells sit near
// the root. Where 2l is not a multiple of the width, the cell is stored in
// every node its prefix spans.
class AdaptiveCellTrie {
 public:
  static constexpr int kDefaultRadixWidth = 8;

  AdaptiveCellTrie(const GridConfig& grid, int radix_width = kDefaultRadixWidth);

  // Builds from coverings that must share one grid.
  static AdaptiveCellTrie build(std::span<const RasterApprox> coverings, int radix_width = kDefaultRadixWidth);
  static AdaptiveCellTrie build(const GridConfig& grid, std::span<const RasterApprox> coverings,
                                int radix_width = kDefaultRadixWidth);

  // Regions whose covering contains the leaf cell of p, sorted by region id.
  std::vector<ActEntry> lookup(Point2D p) const;
  std::vector<ActEntry> lookup_leaf(std::uint64_t leaf) const;

  // Calls fn(entry, depth) for every terminal entry on the path of `leaf`.
  template <typename Fn>
  void visit_leaf(std::uint64_t leaf, Fn&& fn) const {
    const std::uint64_t key = leaf << pad_bits_;
    std::uint32_t node = 0;
    for (int depth = 0;; ++depth) {
      for (auto i = entry_offsets_[node]; i < entry_offsets_[node + 1]; ++i) fn(entries_[i], depth);
      if (depth == depth_) break;
      const auto slot = chunk(key, depth);
      node = children_[static_cast<std::size_t>(node) * fanout_ + slot];
      if (node == kNone) break;
    }
  }

  int terminal_depth(int level) const;
  int radix_width() const { return radix_width_; }
  int max_depth() const { return depth_; }
  const GridConfig& grid() const { return grid_; }
  std::size_t node_count() const { return entry_offsets_.size() - 1; }
  std::size_t entry_count() const { return entries_.size(); }
  std::size_t memory_bytes() const;

  // Versioned little-endian format; `metadata` is an opaque caller blob.
  void save(std::ostream& os, const std::string& metadata = {}) const;
  static AdaptiveCellTrie load(std::istream& is, std::string* metadata = nullptr);

 private:
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  std::uint32_t chunk(std::uint64_t padded_key, int depth) const {
    return static_cast<std::uint32_t>((padded_key >> (key_bits_ - (depth + 1) * radix_width_)) & (fanout_ - 1));
  }
  void insert(const CellId& cell, ActEntry entry, std::vector<std::vector<ActEntry>>& staging);
  std::uint32_t add_node(std::vector<std::vector<ActEntry>>& staging);
  void finalize(std::vector<std::vector<ActEntry>>& staging);

  GridConfig grid_;
  int radix_width_;
  std::uint32_t fanout_;
  int depth_;     // ceil(2L / radix_width)
  int key_bits_;  // depth_ * radix_width_
  int pad_bits_;  // key_bits_ - 2L
  std::vector<std::uint32_t> children_;        // node * fanout + slot
  std::vector<std::uint32_t> entry_offsets_;   // CSR over entries_
  std::vector<ActEntry> entries_;
};

}  // namespace dbsa
