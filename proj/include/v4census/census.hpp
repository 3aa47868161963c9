#ifndef V4CENSUS_CENSUS_HPP
#define V4CENSUS_CENSUS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "v4census/active.hpp"
#include "v4census/blockmap.hpp"

namespace v4census {

enum class SourceFamily : std::uint8_t { active, passive };

constexpr std::string_view family_name(SourceFamily f) noexcept {
  return f == SourceFamily::active ? "active" : "passive";
}

struct SourceSet {
  std::string name;
  SourceFamily family = SourceFamily::passive;
  BlockSet blocks;
};

struct ContributionRow {
  std::string name;
  SourceFamily family = SourceFamily::passive;
  std::uint64_t total = 0;
  std::uint64_t unique_within_family = 0;
  std::uint64_t unique_overall = 0;

  friend bool operator==(const ContributionRow&, const ContributionRow&) = default;
};

/// Per-source contribution accounting. Rows follow source registration order.
struct ContributionTable {
  std::vector<ContributionRow> rows;
  std::uint64_t active_subtotal = 0;
  std::uint64_t passive_subtotal = 0;
  std::uint64_t grand_total = 0;

  friend bool operator==(const ContributionTable&, const ContributionTable&) = default;
};

struct MergeResult {
  BlockSet used;
  std::uint64_t routed_unused = 0;
  ContributionTable table;
};

/// used = routed ∩ (∪ sources). Every count in the table is taken after restricting
/// each source to the routed universe, so unrouted observations never contribute.
inline MergeResult merge_used(std::span<const SourceSet> sources, const BlockSet& routed) {
  if (sources.empty()) throw ConfigError("merge_used needs at least one source");
  if (sources.size() > kMaxSources) throw ConfigError("at most 16 sources can be registered");
  std::vector<BlockSet> restricted;
  restricted.reserve(sources.size());
  for (const auto& s : sources) restricted.push_back(s.blocks & routed);

  // Blocks seen by exactly one source (overall and per family), via a
  // "seen once" / "seen twice or more" bit-pair accumulation.
  auto once_and_more = [&](auto include) {
    BlockSet once, more;
    for (std::size_t i = 0; i < restricted.size(); ++i) {
      if (!include(i)) continue;
      more |= once & restricted[i];
      once |= restricted[i];
    }
    return std::pair{once - more, once};
  };

  MergeResult res;
  auto [unique_all, any_all] = once_and_more([](std::size_t) { return true; });
  auto [unique_act, any_act] = once_and_more([&](std::size_t i) { return sources[i].family == SourceFamily::active; });
  auto [unique_pas, any_pas] = once_and_more([&](std::size_t i) { return sources[i].family == SourceFamily::passive; });

  res.used = any_all;
  res.routed_unused = routed.count() - res.used.count();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    ContributionRow row;
    row.name = sources[i].name;
    row.family = sources[i].family;
    row.total = restricted[i].count();
    row.unique_within_family =
        intersection_count(restricted[i], sources[i].family == SourceFamily::active ? unique_act : unique_pas);
    row.unique_overall = intersection_count(restricted[i], unique_all);
    res.table.rows.push_back(std::move(row));
  }
  res.table.active_subtotal = any_act.count();
  res.table.passive_subtotal = any_pas.count();
  res.table.grand_total = res.used.count();
  return res;
}

/// One row per number of passive vantage points (0..N) that observed the block.
struct SpecialOctetRow {
  std::size_t vps = 0;
  std::uint64_t special = 0;    ///< sole ICMP responder ends in .0, .1 or .255
  std::uint64_t nonspecial = 0; ///< sole ICMP responder ends in any other octet

  friend bool operator==(const SpecialOctetRow&, const SpecialOctetRow&) = default;
};

inline bool is_special_octet(unsigned o) noexcept { return o == 0 || o == 1 || o == 255; }

/// Buckets /24s with exactly one responding ICMP address by whether its last octet is
/// special and by how many passive sources saw the block.
inline std::vector<SpecialOctetRow> special_octet_analysis(const std::map<Block24Id, OctetMask>& icmp_octets,
                                                           std::span<const SourceSet> passive_sources) {
  std::vector<SpecialOctetRow> rows(passive_sources.size() + 1);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].vps = i;
  for (const auto& [b, mask] : icmp_octets) {
    if (mask.count() != 1) continue;
    unsigned octet = 0;
    while (!mask[octet]) ++octet;
    std::size_t seen = 0;
    for (const auto& s : passive_sources) seen += s.blocks.contains(b);
    (is_special_octet(octet) ? rows[seen].special : rows[seen].nonspecial) += 1;
  }
  return rows;
}

} // namespace v4census

#endif
