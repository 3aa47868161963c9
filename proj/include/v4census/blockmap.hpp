#ifndef V4CENSUS_BLOCKMAP_HPP
#define V4CENSUS_BLOCKMAP_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "v4census/common.hpp"

namespace v4census {

/// Index of a /24 block: the top 24 bits of any address inside it.
using Block24Id = std::uint32_t;

inline constexpr std::uint32_t kUniverseSize = 1u << 24;

constexpr Block24Id block_of(Ipv4Address a) noexcept { return a.value >> 8; }

constexpr Ipv4Address block_base(Block24Id b) noexcept { return Ipv4Address{b << 8}; }

inline std::string block_to_string(Block24Id b) { return to_string(block_base(b)) + "/24"; }

/// Half-open iteration window [lo, hi) over the block universe.
struct Window {
  Block24Id lo = 0;
  std::uint32_t hi = kUniverseSize;

  static constexpr Window full() noexcept { return {}; }
  static Window of(const Prefix& p) {
    if (p.length > 24) throw ConfigError("window prefix must be /24 or shorter: " + to_string(p));
    return {p.first() >> 8, static_cast<std::uint32_t>((std::uint64_t{p.last()} + 1) >> 8)};
  }

  constexpr std::uint32_t size() const noexcept { return hi - lo; }
  constexpr bool contains(Block24Id b) const noexcept { return b >= lo && b < hi; }

  friend constexpr bool operator==(const Window&, const Window&) = default;
};

/// Fixed-size bitset over all 2^24 blocks.
class BlockSet {
public:
  static constexpr std::size_t kWords = kUniverseSize / 64;

  BlockSet() : words_(kWords, 0) {}

  void insert(Block24Id b) noexcept { words_[b >> 6] |= std::uint64_t{1} << (b & 63); }
  void erase(Block24Id b) noexcept { words_[b >> 6] &= ~(std::uint64_t{1} << (b & 63)); }
  bool contains(Block24Id b) const noexcept { return (words_[b >> 6] >> (b & 63)) & 1; }

  /// Inserts every /24 that overlaps the prefix.
  void insert(const Prefix& p) {
    const Block24Id first = p.first() >> 8, last = p.last() >> 8;
    for (std::uint64_t b = first; b <= last; ++b) insert(static_cast<Block24Id>(b));
  }

  std::uint64_t count() const noexcept {
    std::uint64_t n = 0;
    for (auto w : words_) n += static_cast<std::uint64_t>(std::popcount(w));
    return n;
  }

  std::uint64_t count(Window w) const noexcept {
    std::uint64_t n = 0;
    for_each([&](Block24Id b) { n += w.contains(b); }, w);
    return n;
  }

  bool empty() const noexcept {
    for (auto w : words_)
      if (w) return false;
    return true;
  }

  /// Calls fn(b) for every member in ascending order, optionally limited to a window.
  template <class Fn>
  void for_each(Fn&& fn, Window win = Window::full()) const {
    if (win.hi <= win.lo) return;
    const std::size_t first_word = win.lo >> 6, last_word = (win.hi - 1) >> 6;
    for (std::size_t i = first_word; i <= last_word; ++i) {
      std::uint64_t w = words_[i];
      while (w) {
        const auto bit = static_cast<unsigned>(std::countr_zero(w));
        const auto b = static_cast<Block24Id>(i * 64 + bit);
        if (win.contains(b)) fn(b);
        w &= w - 1;
      }
    }
  }

  std::vector<Block24Id> to_vector(Window win = Window::full()) const {
    std::vector<Block24Id> out;
    for_each([&](Block24Id b) { out.push_back(b); }, win);
    return out;
  }

  /// Keeps only members inside the window.
  void restrict_to(Window win) {
    for (std::size_t i = 0; i < kWords; ++i) {
      std::uint64_t& w = words_[i];
      if (!w) continue;
      const std::uint64_t base = i * 64;
      if (base >= win.lo && base + 64 <= win.hi) continue;
      for (unsigned bit = 0; bit < 64; ++bit)
        if (!win.contains(static_cast<Block24Id>(base + bit))) w &= ~(std::uint64_t{1} << bit);
    }
  }

  BlockSet& operator|=(const BlockSet& o) noexcept {
    for (std::size_t i = 0; i < kWords; ++i) words_[i] |= o.words_[i];
    return *this;
  }
  BlockSet& operator&=(const BlockSet& o) noexcept {
    for (std::size_t i = 0; i < kWords; ++i) words_[i] &= o.words_[i];
    return *this;
  }
  BlockSet& operator-=(const BlockSet& o) noexcept {
    for (std::size_t i = 0; i < kWords; ++i) words_[i] &= ~o.words_[i];
    return *this;
  }

  friend BlockSet operator|(BlockSet a, const BlockSet& b) { return a |= b; }
  friend BlockSet operator&(BlockSet a, const BlockSet& b) { return a &= b; }
  friend BlockSet operator-(BlockSet a, const BlockSet& b) { return a -= b; }

  /// |a ∩ b| without materializing the intersection.
  friend std::uint64_t intersection_count(const BlockSet& a, const BlockSet& b) noexcept {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < kWords; ++i) n += static_cast<std::uint64_t>(std::popcount(a.words_[i] & b.words_[i]));
    return n;
  }
  /// |a \ b| without materializing the difference.
  friend std::uint64_t difference_count(const BlockSet& a, const BlockSet& b) noexcept {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < kWords; ++i) n += static_cast<std::uint64_t>(std::popcount(a.words_[i] & ~b.words_[i]));
    return n;
  }

  bool is_subset_of(const BlockSet& o) const noexcept {
    for (std::size_t i = 0; i < kWords; ++i)
      if (words_[i] & ~o.words_[i]) return false;
    return true;
  }

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> words() noexcept { return words_; }

  friend bool operator==(const BlockSet&, const BlockSet&) = default;

private:
  std::vector<std::uint64_t> words_;
};

/// One `a.b.c.0/24` line per member, ascending.
inline void write_block_list(std::ostream& os, const BlockSet& s) {
  s.for_each([&](Block24Id b) { os << block_to_string(b) << '\n'; });
}

enum class SetOp { union_, intersect, diff };

inline BlockSet set_algebra(const BlockSet& a, const BlockSet& b, SetOp op) {
  switch (op) {
    case SetOp::union_: return a | b;
    case SetOp::intersect: return a & b;
    case SetOp::diff: return a - b;
  }
  return a;
}

/// Leaf of the utilization taxonomy. Values are the on-disk encoding.
enum class TaxonomyLabel : std::uint8_t {
  Reserved = 0,
  Available = 1,
  UnroutedAssigned = 2,
  RoutedUnused = 3,
  Used = 4,
};

inline constexpr std::array<TaxonomyLabel, 5> kAllLabels{TaxonomyLabel::Reserved, TaxonomyLabel::Available,
                                                         TaxonomyLabel::UnroutedAssigned,
                                                         TaxonomyLabel::RoutedUnused, TaxonomyLabel::Used};

constexpr std::string_view label_name(TaxonomyLabel l) noexcept {
  switch (l) {
    case TaxonomyLabel::Reserved: return "reserved";
    case TaxonomyLabel::Available: return "available";
    case TaxonomyLabel::UnroutedAssigned: return "unrouted_assigned";
    case TaxonomyLabel::RoutedUnused: return "routed_unused";
    case TaxonomyLabel::Used: return "used";
  }
  return "?";
}

/// Registry-level state of a block, fed into taxonomy finalization.
enum class RegistryStatus : std::uint8_t { Reserved = 0, Available = 1, Assigned = 2 };

using LeafCounts = std::array<std::uint64_t, 5>;

class PartitionViolation : public Error {
public:
  PartitionViolation(Block24Id b, const std::string& why)
      : Error("partition violation at " + block_to_string(b) + ": " + why), block_(b) {}
  Block24Id block() const noexcept { return block_; }

private:
  Block24Id block_;
};

inline constexpr std::size_t kMaxSources = 16;

/// Dense per-/24 label and source-observation storage.
class BlockLabelMap {
public:
  BlockLabelMap() : labels_(kUniverseSize, static_cast<std::uint8_t>(TaxonomyLabel::Available)), source_bits_(kUniverseSize, 0) {}

  TaxonomyLabel label(Block24Id b) const noexcept { return static_cast<TaxonomyLabel>(labels_[b] & 7); }
  void set_label(Block24Id b, TaxonomyLabel l) noexcept { labels_[b] = static_cast<std::uint8_t>(l); }

  std::uint16_t source_bits(Block24Id b) const noexcept { return source_bits_[b]; }
  void add_source_bit(Block24Id b, std::size_t bit) {
    if (bit >= kMaxSources) throw ConfigError("source bit out of range: " + std::to_string(bit));
    source_bits_[b] = static_cast<std::uint16_t>(source_bits_[b] | (1u << bit));
  }
  void mark_source(const BlockSet& s, std::size_t bit) {
    s.for_each([&](Block24Id b) { add_source_bit(b, bit); });
  }

  LeafCounts leaf_counts(Window w = Window::full()) const noexcept {
    LeafCounts c{};
    for (std::uint32_t b = w.lo; b < w.hi; ++b) ++c[labels_[b] & 7];
    return c;
  }

  BlockSet blocks_with(TaxonomyLabel l, Window w = Window::full()) const {
    BlockSet s;
    for (std::uint32_t b = w.lo; b < w.hi; ++b)
      if (label(b) == l) s.insert(b);
    return s;
  }

  /// Binary snapshot: "CENSUS01", u32 LE universe size, one label byte per block,
  /// then two LE bytes of source bits per block.
  void write_snapshot(std::ostream& os) const {
    os.write("CENSUS01", 8);
    const std::uint32_t n = kUniverseSize;
    const unsigned char sz[4] = {static_cast<unsigned char>(n), static_cast<unsigned char>(n >> 8),
                                 static_cast<unsigned char>(n >> 16), static_cast<unsigned char>(n >> 24)};
    os.write(reinterpret_cast<const char*>(sz), 4);
    os.write(reinterpret_cast<const char*>(labels_.data()), static_cast<std::streamsize>(labels_.size()));
    std::vector<unsigned char> bits(2 * std::size_t{kUniverseSize});
    for (std::size_t i = 0; i < kUniverseSize; ++i) {
      bits[2 * i] = static_cast<unsigned char>(source_bits_[i]);
      bits[2 * i + 1] = static_cast<unsigned char>(source_bits_[i] >> 8);
    }
    os.write(reinterpret_cast<const char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
  }

  static BlockLabelMap read_snapshot(std::istream& is) {
    char magic[8];
    unsigned char sz[4];
    if (!is.read(magic, 8) || std::string_view(magic, 8) != "CENSUS01") throw ParseError("bad label-map magic");
    if (!is.read(reinterpret_cast<char*>(sz), 4)) throw ParseError("truncated label-map header");
    const std::uint32_t n = sz[0] | (sz[1] << 8) | (sz[2] << 16) | (std::uint32_t{sz[3]} << 24);
    if (n != kUniverseSize) throw ParseError("unsupported label-map universe size " + std::to_string(n));
    BlockLabelMap m;
    if (!is.read(reinterpret_cast<char*>(m.labels_.data()), n)) throw ParseError("truncated label-map labels");
    for (auto l : m.labels_)
      if ((l & 7) > 4) throw ParseError("invalid label value " + std::to_string(l));
    std::vector<unsigned char> bits(2 * std::size_t{n});
    if (!is.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bits.size())))
      throw ParseError("truncated label-map source bits");
    for (std::size_t i = 0; i < n; ++i)
      m.source_bits_[i] = static_cast<std::uint16_t>(bits[2 * i] | (bits[2 * i + 1] << 8));
    return m;
  }

  friend bool operator==(const BlockLabelMap&, const BlockLabelMap&) = default;

private:
  std::vector<std::uint8_t> labels_;
  std::vector<std::uint16_t> source_bits_;
};

/// Assigns exactly one leaf to every block in the window.
///
/// Registry Reserved/Available states are final. Remaining (assigned) blocks become
/// Used, RoutedUnused or UnroutedAssigned from the routed and used sets. A block that
/// would land in two leaves (routed but registry-unassigned, used but unrouted) raises
/// PartitionViolation; upstream stages are responsible for never producing one.
inline void finalize_taxonomy(BlockLabelMap& map, const BlockSet& routed, const BlockSet& used,
                              std::span<const RegistryStatus> registry, Window win = Window::full(),
                              unsigned threads = 1) {
  if (registry.size() != kUniverseSize) throw ConfigError("registry state must cover the full universe");
  parallel_for(threads, win.lo, win.hi, [&](std::uint64_t lo, std::uint64_t hi) {
    for (auto b = static_cast<Block24Id>(lo); b < hi; ++b) {
      const bool is_routed = routed.contains(b), is_used = used.contains(b);
      switch (registry[b]) {
        case RegistryStatus::Reserved:
        case RegistryStatus::Available:
          if (is_routed || is_used)
            throw PartitionViolation(b, "registry-unassigned block is marked routed or used");
          map.set_label(b, registry[b] == RegistryStatus::Reserved ? TaxonomyLabel::Reserved
                                                                     : TaxonomyLabel::Available);
          break;
        case RegistryStatus::Assigned:
          if (is_used && !is_routed) throw PartitionViolation(b, "used block is not routed");
          map.set_label(b, is_used     ? TaxonomyLabel::Used
                           : is_routed ? TaxonomyLabel::RoutedUnused
                                       : TaxonomyLabel::UnroutedAssigned);
          break;
      }
    }
  });
}

} // namespace v4census

#endif
