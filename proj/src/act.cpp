#include "dbsa/act.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "binary_io.hpp"
#include "dbsa/error.hpp"

namespace dbsa {

namespace {

constexpr char kActMagic[9] = "DBSAACT1";
constexpr std::uint32_t kActVersion = 1;

}  // namespace

AdaptiveCellTrie::AdaptiveCellTrie(const GridConfig& grid, int radix_width)
    : grid_(grid), radix_width_(radix_width) {
  grid_.validate();
  if (radix_width != 2 && radix_width != 4 && radix_width != 8)
    fail(ErrorCode::Configuration, "radix width must be 2, 4 or 8 bits");
  fanout_ = 1u << radix_width_;
  const int bits = 2 * grid_.max_level;
  depth_ = (bits + radix_width_ - 1) / radix_width_;
  key_bits_ = depth_ * radix_width_;
  pad_bits_ = key_bits_ - bits;
  children_.assign(fanout_, kNone);
  entry_offsets_ = {0, 0};
}

int AdaptiveCellTrie::terminal_depth(int level) const { return (2 * level + radix_width_ - 1) / radix_width_; }

std::uint32_t AdaptiveCellTrie::add_node(std::vector<std::vector<ActEntry>>& staging) {
  const auto id = static_cast<std::uint32_t>(staging.size());
  if (id == kNone) fail(ErrorCode::Capacity, "adaptive cell trie node limit reached");
  staging.emplace_back();
  children_.resize(children_.size() + fanout_, kNone);
  return id;
}

void AdaptiveCellTrie::insert(const CellId& cell, ActEntry entry, std::vector<std::vector<ActEntry>>& staging) {
  const int L = grid_.max_level;
  if (cell.level > L) fail(ErrorCode::Configuration, "cell finer than the trie grid");
  const int depth = terminal_depth(cell.level);
  const int known = 2 * cell.level;
  const int real_bits = std::min(depth * radix_width_, 2 * L);
  const int free_bits = real_bits - known;
  const std::uint64_t base = cell.code << (2 * L - known);
  for (std::uint64_t j = 0; j < (std::uint64_t{1} << free_bits); ++j) {
    const std::uint64_t key = (base | (j << (2 * L - real_bits))) << pad_bits_;
    std::uint32_t node = 0;
    for (int d = 0; d < depth; ++d) {
      const std::size_t slot = static_cast<std::size_t>(node) * fanout_ + chunk(key, d);
      if (children_[slot] == kNone) {
        const auto child = add_node(staging);
        children_[slot] = child;
      }
      node = children_[slot];
    }
    staging[node].push_back(entry);
  }
}

void AdaptiveCellTrie::finalize(std::vector<std::vector<ActEntry>>& staging) {
  entry_offsets_.assign(staging.size() + 1, 0);
  entries_.clear();
  for (std::size_t n = 0; n < staging.size(); ++n) {
    auto& list = staging[n];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    entries_.insert(entries_.end(), list.begin(), list.end());
    entry_offsets_[n + 1] = static_cast<std::uint32_t>(entries_.size());
  }
}

AdaptiveCellTrie AdaptiveCellTrie::build(std::span<const RasterApprox> coverings, int radix_width) {
  if (coverings.empty()) fail(ErrorCode::Configuration, "cannot infer a grid from zero coverings");
  return build(coverings.front().grid(), coverings, radix_width);
}

AdaptiveCellTrie AdaptiveCellTrie::build(const GridConfig& grid, std::span<const RasterApprox> coverings,
                                         int radix_width) {
  AdaptiveCellTrie trie(grid, radix_width);
  std::vector<std::vector<ActEntry>> staging(1);
  for (const auto& cov : coverings) {
    if (!(cov.grid() == grid)) fail(ErrorCode::Configuration, "coverings were built on different grids");
    for (const auto& c : cov.cells()) trie.insert(c.cell, {cov.region_id(), c.kind}, staging);
  }
  trie.finalize(staging);
  return trie;
}

std::vector<ActEntry> AdaptiveCellTrie::lookup_leaf(std::uint64_t leaf) const {
  std::vector<ActEntry> out;
  visit_leaf(leaf, [&](const ActEntry& e, int) { out.push_back(e); });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ActEntry> AdaptiveCellTrie::lookup(Point2D p) const { return lookup_leaf(leaf_code(grid_, p)); }

std::size_t AdaptiveCellTrie::memory_bytes() const {
  return sizeof(*this) + children_.capacity() * sizeof(std::uint32_t) +
         entry_offsets_.capacity() * sizeof(std::uint32_t) + entries_.capacity() * sizeof(ActEntry);
}

void AdaptiveCellTrie::save(std::ostream& os, const std::string& metadata) const {
  io::put_magic(os, kActMagic, kActVersion);
  io::put<std::uint8_t>(os, static_cast<std::uint8_t>(radix_width_));
  io::put_grid(os, grid_);
  io::put_string(os, metadata);
  io::put<std::uint64_t>(os, node_count());
  // Preorder: entries, child bitmap, then children in slot order.
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const auto node = stack.back();
    stack.pop_back();
    io::put<std::uint32_t>(os, entry_offsets_[node + 1] - entry_offsets_[node]);
    for (auto i = entry_offsets_[node]; i < entry_offsets_[node + 1]; ++i) {
      io::put<std::int64_t>(os, entries_[i].region_id);
      io::put<std::uint8_t>(os, static_cast<std::uint8_t>(entries_[i].kind));
    }
    const std::size_t base = static_cast<std::size_t>(node) * fanout_;
    for (std::uint32_t byte = 0; byte < (fanout_ + 7) / 8; ++byte) {
      std::uint8_t mask = 0;
      for (std::uint32_t bit = 0; bit < 8 && byte * 8 + bit < fanout_; ++bit)
        if (children_[base + byte * 8 + bit] != kNone) mask |= static_cast<std::uint8_t>(1u << bit);
      io::put<std::uint8_t>(os, mask);
    }
    for (std::uint32_t slot = fanout_; slot-- > 0;)
      if (children_[base + slot] != kNone) stack.push_back(children_[base + slot]);
  }
  if (!os) fail(ErrorCode::Io, "failed writing adaptive cell trie");
}

AdaptiveCellTrie AdaptiveCellTrie::load(std::istream& is, std::string* metadata) {
  io::expect_magic(is, kActMagic, kActVersion);
  const int width = io::get<std::uint8_t>(is);
  const GridConfig grid = io::get_grid(is);
  std::string meta = io::get_string(is);
  if (metadata) *metadata = std::move(meta);
  AdaptiveCellTrie trie(grid, width);
  const auto count = io::get<std::uint64_t>(is);
  if (count == 0 || count >= kNone) fail(ErrorCode::Format, "bad node count in adaptive cell trie");
  std::vector<std::vector<ActEntry>> staging(1);
  // Each stack item is (node id, depth); children are attached as they are read.
  struct Pending {
    std::uint32_t node;
    int depth;
  };
  std::vector<Pending> stack{{0, 0}};
  std::uint64_t read = 0;
  while (!stack.empty()) {
    const auto [node, depth] = stack.back();
    stack.pop_back();
    if (++read > count) fail(ErrorCode::Format, "adaptive cell trie has more nodes than declared");
    const auto n = io::get<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n; ++i) {
      ActEntry e;
      e.region_id = io::get<std::int64_t>(is);
      const auto k = io::get<std::uint8_t>(is);
      if (k > 1) fail(ErrorCode::Format, "bad cell kind in adaptive cell trie");
      e.kind = static_cast<CellKind>(k);
      staging[node].push_back(e);
    }
    std::vector<std::uint32_t> slots;
    for (std::uint32_t byte = 0; byte < (trie.fanout_ + 7) / 8; ++byte) {
      const auto mask = io::get<std::uint8_t>(is);
      for (std::uint32_t bit = 0; bit < 8; ++bit)
        if (mask & (1u << bit)) slots.push_back(byte * 8 + bit);
    }
    if (!slots.empty() && depth >= trie.depth_) fail(ErrorCode::Format, "adaptive cell trie is too deep");
    std::vector<Pending> kids;
    for (auto slot : slots) {
      if (slot >= trie.fanout_) fail(ErrorCode::Format, "bad child slot in adaptive cell trie");
      const auto child = trie.add_node(staging);
      trie.children_[static_cast<std::size_t>(node) * trie.fanout_ + slot] = child;
      kids.push_back({child, depth + 1});
    }
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  if (read != count) fail(ErrorCode::Format, "adaptive cell trie node count mismatch");
  trie.finalize(staging);
  return trie;
}

}  // namespace dbsa
