#ifndef V4CENSUS_ACTIVE_HPP
#define V4CENSUS_ACTIVE_HPP

#include <array>
#include <bitset>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "v4census/blockmap.hpp"

namespace v4census {

enum class ProbeKind : std::uint8_t { icmp_echo, http_get, ttl_exceeded };

inline constexpr std::array<std::string_view, 3> kProbeKindNames{"icmp_echo", "http_get", "ttl_exceeded"};

struct ProbeRecord {
  ProbeKind kind = ProbeKind::icmp_echo;
  Ipv4Address target;
  Ipv4Address responder;
  std::uint64_t count = 1;
};

/// `kind|target|responder|count` per line.
inline std::vector<ProbeRecord> parse_probes(std::istream& in) {
  std::vector<ProbeRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto f = split(s, '|');
    if (f.size() != 4) throw ParseError("expected kind|target|responder|count", lineno);
    ProbeRecord r;
    auto k = trim(f[0]);
    std::size_t i = 0;
    while (i < kProbeKindNames.size() && kProbeKindNames[i] != k) ++i;
    if (i == kProbeKindNames.size()) throw ParseError("unknown probe kind '" + std::string(k) + "'", lineno);
    r.kind = static_cast<ProbeKind>(i);
    auto t = parse_ipv4(f[1]), resp = parse_ipv4(f[2]);
    if (!t || !resp) throw ParseError("bad address", lineno);
    r.target = *t;
    r.responder = *resp;
    auto c = parse_uint<std::uint64_t>(f[3]);
    if (!c || *c == 0) throw ParseError("count must be a positive integer", lineno);
    r.count = *c;
    out.push_back(r);
  }
  return out;
}

using OctetMask = std::bitset<256>;

struct ActiveSets {
  std::array<BlockSet, 3> by_kind; ///< indexed by ProbeKind
  /// Responding addresses per /24 in the HTTP scan (sum of counts).
  std::map<Block24Id, std::uint64_t> http_responders;
  /// Last octets of matched ICMP echo responders per /24.
  std::map<Block24Id, OctetMask> icmp_octets;
  std::uint64_t mismatched_icmp = 0;

  const BlockSet& operator[](ProbeKind k) const { return by_kind[static_cast<std::size_t>(k)]; }
};

/// Converts probe logs to per-kind used-block sets. ICMP echo replies count only when
/// the responder is the probed address; mismatches are tallied and dropped.
inline ActiveSets ingest_probes(std::span<const ProbeRecord> records) {
  ActiveSets out;
  for (const auto& r : records) {
    const Block24Id b = block_of(r.responder);
    switch (r.kind) {
      case ProbeKind::icmp_echo:
        if (r.responder != r.target) {
          ++out.mismatched_icmp;
          continue;
        }
        out.icmp_octets[b].set(r.responder.last_octet());
        break;
      case ProbeKind::http_get:
        out.http_responders[b] += r.count;
        break;
      case ProbeKind::ttl_exceeded:
        break;
    }
    out.by_kind[static_cast<std::size_t>(r.kind)].insert(b);
  }
  return out;
}

/// Text form `a.b.c.0/24|<64 hex digits>` (bit i = last octet i, most significant first).
inline void write_octet_masks(std::ostream& os, const std::map<Block24Id, OctetMask>& masks) {
  static constexpr char hex[] = "0123456789abcdef";
  for (const auto& [b, m] : masks) {
    os << block_to_string(b) << '|';
    for (int nib = 63; nib >= 0; --nib) {
      unsigned v = 0;
      for (int k = 3; k >= 0; --k) v = (v << 1) | (m[static_cast<std::size_t>(nib * 4 + k)] ? 1u : 0u);
      os << hex[v];
    }
    os << '\n';
  }
}

inline std::map<Block24Id, OctetMask> read_octet_masks(std::istream& in) {
  std::map<Block24Id, OctetMask> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty()) continue;
    auto f = split(s, '|');
    auto p = f.size() == 2 ? parse_prefix(f[0]) : std::nullopt;
    if (!p || p->length != 24 || f[1].size() != 64) throw ParseError("bad octet-mask line", lineno);
    OctetMask m;
    for (int nib = 0; nib < 64; ++nib) {
      auto v = parse_uint<unsigned>(f[1].substr(static_cast<std::size_t>(63 - nib), 1), 16);
      if (!v) throw ParseError("bad hex digit", lineno);
      for (int k = 0; k < 4; ++k) m[static_cast<std::size_t>(nib * 4 + k)] = (*v >> k) & 1;
    }
    out[block_of(p->network)] = m;
  }
  return out;
}

} // namespace v4census

#endif
