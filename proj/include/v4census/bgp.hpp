#ifndef V4CENSUS_BGP_HPP
#define V4CENSUS_BGP_HPP

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "v4census/blockmap.hpp"
#include "v4census/registry.hpp"

namespace v4census {

struct PeerVisibilityRecord {
  std::string day;
  std::string peer;
  Prefix prefix;
};

/// `day|peer_id|prefix` per line.
inline std::vector<PeerVisibilityRecord> parse_visibility(std::istream& in) {
  std::vector<PeerVisibilityRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto f = split(s, '|');
    if (f.size() != 3) throw ParseError("expected day|peer|prefix", lineno);
    auto p = parse_prefix(f[2]);
    if (!p || trim(f[2]).find('/') == std::string_view::npos)
      throw ParseError("malformed prefix '" + std::string(f[2]) + "'", lineno);
    if (trim(f[0]).empty() || trim(f[1]).empty()) throw ParseError("empty day or peer", lineno);
    out.push_back({std::string(trim(f[0])), std::string(trim(f[1])), *p});
  }
  return out;
}

/// Per-block maximum, over days, of the number of distinct peers that saw a covering
/// prefix of length /24 or shorter on that day.
class PeerVisibilityIndex {
public:
  PeerVisibilityIndex() : counts_(kUniverseSize, 0) {}

  std::uint32_t count(Block24Id b) const noexcept { return counts_[b]; }
  std::uint64_t ignored_long_prefixes() const noexcept { return ignored_; }
  std::uint64_t days() const noexcept { return days_; }
  std::uint64_t records() const noexcept { return records_; }

  friend PeerVisibilityIndex accumulate_visibility(std::span<const PeerVisibilityRecord> records);

  /// Per-block max merge, used to combine shards accumulated over disjoint day sets.
  void merge(const PeerVisibilityIndex& o) {
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] = std::max(counts_[i], o.counts_[i]);
    ignored_ += o.ignored_;
    days_ += o.days_;
    records_ += o.records_;
  }

private:
  std::vector<std::uint16_t> counts_;
  std::uint64_t ignored_ = 0;
  std::uint64_t days_ = 0;
  std::uint64_t records_ = 0;
};

inline PeerVisibilityIndex accumulate_visibility(std::span<const PeerVisibilityRecord> records) {
  PeerVisibilityIndex idx;
  idx.records_ = records.size();

  // Sort (day, peer, prefix) tuples so duplicates collapse and each day is contiguous.
  std::vector<std::tuple<std::string_view, std::string_view, Prefix>> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    if (r.prefix.length > 24) {
      ++idx.ignored_;
      continue;
    }
    rows.emplace_back(r.day, r.peer, r.prefix);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

  std::vector<std::uint16_t> day_count(kUniverseSize, 0);
  // Stamp of the last (day, peer) pair that touched each block; pairs are numbered from 1.
  std::vector<std::uint32_t> last_pair(kUniverseSize, 0);
  std::uint32_t pair_id = 0;

  std::size_t i = 0;
  while (i < rows.size()) {
    const auto day = std::get<0>(rows[i]);
    std::size_t j = i;
    std::string_view peer;
    for (; j < rows.size() && std::get<0>(rows[j]) == day; ++j) {
      if (j == i || std::get<1>(rows[j]) != peer) {
        peer = std::get<1>(rows[j]);
        ++pair_id;
      }
      const auto& p = std::get<2>(rows[j]);
      for (std::uint64_t b = p.first() >> 8; b <= p.last() >> 8; ++b) {
        if (last_pair[b] != pair_id) {
          last_pair[b] = pair_id;
          if (day_count[b] != UINT16_MAX) ++day_count[b];
        }
      }
    }
    for (std::size_t k = i; k < j; ++k) {
      const auto& p = std::get<2>(rows[k]);
      for (std::uint64_t b = p.first() >> 8; b <= p.last() >> 8; ++b) {
        idx.counts_[b] = std::max(idx.counts_[b], day_count[b]);
        day_count[b] = 0;
      }
    }
    ++idx.days_;
    i = j;
  }
  return idx;
}

/// Routed = visible to at least `threshold` peers on some day and registry-Assigned.
inline BlockSet classify_routed(const PeerVisibilityIndex& index, const RegistryState& registry,
                                std::uint32_t threshold = 10, Window win = Window::full()) {
  if (threshold < 1) throw std::invalid_argument("peer threshold must be >= 1");
  BlockSet routed;
  for (std::uint32_t b = win.lo; b < win.hi; ++b)
    if (index.count(b) >= threshold && registry[b] == RegistryStatus::Assigned) routed.insert(b);
  return routed;
}

} // namespace v4census

#endif
