#ifndef V4CENSUS_PREFIX_TRIE_HPP
#define V4CENSUS_PREFIX_TRIE_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "v4census/common.hpp"

namespace v4census {

/// Binary trie over IPv4 prefix bits with one payload per stored prefix.
///
/// Nodes live in a flat vector; each node records the deepest payload depth in its
/// subtree so overlap queries can skip empty branches.
template <class Payload>
class PrefixTrie {
public:
  PrefixTrie() { nodes_.emplace_back(); }

  /// Stores `value` at `p`. If `p` already has a payload, `merge(existing, value)`
  /// decides the stored result.
  template <class Merge>
  void insert(const Prefix& p, Payload value, Merge merge) {
    std::uint32_t n = 0;
    for (unsigned d = 0; d < p.length; ++d) {
      const unsigned bit = (p.network.value >> (31 - d)) & 1;
      if (!nodes_[n].child[bit]) {
        nodes_[n].child[bit] = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
      }
      n = nodes_[n].child[bit];
    }
    auto& slot = nodes_[n].payload;
    if (slot) {
      *slot = merge(*slot, std::move(value));
    } else {
      slot = std::move(value);
      ++size_;
    }
    // refresh subtree depth along the path
    std::uint32_t m = 0;
    for (unsigned d = 0;; ++d) {
      nodes_[m].max_depth = std::max<int>(nodes_[m].max_depth, p.length);
      if (d == p.length) break;
      m = nodes_[m].child[(p.network.value >> (31 - d)) & 1];
    }
  }

  void insert(const Prefix& p, Payload value) {
    insert(p, std::move(value), [](const Payload&, Payload v) { return v; });
  }

  /// Payload of the longest stored prefix containing `a`.
  const Payload* longest_match(Ipv4Address a) const { return longest_match(Prefix{a, 32}); }

  /// Payload of the longest stored prefix covering all of `p`.
  const Payload* longest_match(const Prefix& p) const {
    const Payload* best = nullptr;
    std::uint32_t n = 0;
    for (unsigned d = 0;; ++d) {
      if (nodes_[n].payload) best = &*nodes_[n].payload;
      if (d == p.length) break;
      n = nodes_[n].child[(p.network.value >> (31 - d)) & 1];
      if (!n) break;
    }
    return best;
  }

  /// Payloads of the most specific stored prefixes overlapping `p`: either the longest
  /// covering prefix, or, when more-specific prefixes exist inside `p`, all of those at
  /// the deepest such length (in address order).
  std::vector<const Payload*> most_specific_overlapping(const Prefix& p) const {
    std::vector<const Payload*> out;
    const Payload* cover = nullptr;
    std::uint32_t n = 0;
    bool reached = true;
    for (unsigned d = 0;; ++d) {
      if (nodes_[n].payload) cover = &*nodes_[n].payload;
      if (d == p.length) break;
      const std::uint32_t next = nodes_[n].child[(p.network.value >> (31 - d)) & 1];
      if (!next) {
        reached = false;
        break;
      }
      n = next;
    }
    if (reached && nodes_[n].max_depth > static_cast<int>(p.length)) {
      collect_at_depth(n, static_cast<int>(p.length), nodes_[n].max_depth, out);
      return out;
    }
    if (cover) out.push_back(cover);
    return out;
  }

  std::size_t size() const noexcept { return size_; }

private:
  struct Node {
    std::uint32_t child[2] = {0, 0};
    int max_depth = -1;
    std::optional<Payload> payload;
  };

  void collect_at_depth(std::uint32_t n, int depth, int target, std::vector<const Payload*>& out) const {
    if (nodes_[n].max_depth < target) return;
    if (depth == target) {
      if (nodes_[n].payload) out.push_back(&*nodes_[n].payload);
      return;
    }
    for (auto c : nodes_[n].child)
      if (c) collect_at_depth(c, depth + 1, target, out);
  }

  std::vector<Node> nodes_;
  std::size_t size_ = 0;
};

} // namespace v4census

#endif
