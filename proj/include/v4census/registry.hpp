#ifndef V4CENSUS_REGISTRY_HPP
#define V4CENSUS_REGISTRY_HPP

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "v4census/blockmap.hpp"
#include "v4census/common.hpp"

namespace v4census {

enum class Rir : std::uint8_t { iana, afrinic, apnic, arin, lacnic, ripencc };

inline constexpr std::array<std::string_view, 6> kRirNames{"iana", "afrinic", "apnic", "arin", "lacnic", "ripencc"};

enum class DelegationStatus : std::uint8_t { available, ianapool, reserved_ietf, assigned, allocated };

struct DelegationRecord {
  Rir registry = Rir::iana;
  std::string cc;
  Ipv4Address start;
  std::uint64_t count = 0;
  std::string date;
  DelegationStatus status = DelegationStatus::available;

  /// Inclusive block range touched by the record (partial /24s included).
  Block24Id first_block() const noexcept { return block_of(start); }
  Block24Id last_block() const noexcept {
    const std::uint64_t end = std::min<std::uint64_t>(std::uint64_t{start.value} + count, std::uint64_t{1} << 32);
    return static_cast<Block24Id>((end - 1) >> 8);
  }
  bool whole_blocks() const noexcept { return start.value % 256 == 0 && count % 256 == 0; }
};

namespace detail {

inline std::optional<Rir> parse_rir(std::string_view s) {
  if (s == "ripe") return Rir::ripencc;
  for (std::size_t i = 0; i < kRirNames.size(); ++i)
    if (s == kRirNames[i]) return static_cast<Rir>(i);
  return std::nullopt;
}

inline std::optional<DelegationStatus> parse_status(std::string_view s) {
  if (s == "available") return DelegationStatus::available;
  if (s == "ianapool") return DelegationStatus::ianapool;
  if (s == "reserved" || s == "reserved_ietf" || s == "ietf") return DelegationStatus::reserved_ietf;
  if (s == "assigned") return DelegationStatus::assigned;
  if (s == "allocated") return DelegationStatus::allocated;
  return std::nullopt;
}

inline bool valid_date(std::string_view d) {
  if (d.empty()) return true;
  auto digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (d.size() == 8) return digits(d);
  return d.size() == 10 && d[4] == '-' && d[7] == '-' && digits(d.substr(0, 4)) && digits(d.substr(5, 2)) &&
         digits(d.substr(8, 2));
}

} // namespace detail

/// Parses delegation lines `registry|cc|ipv4|start|count|date|status[|...]`.
///
/// Version headers, summary lines, comments and non-IPv4 rows are skipped. Any other
/// malformed row raises ParseError carrying its line number.
inline std::vector<DelegationRecord> parse_delegations(std::istream& in) {
  std::vector<DelegationRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto f = split(s, '|');
    if (f.size() >= 1 && !f[0].empty() && f[0].front() >= '0' && f[0].front() <= '9') continue; // version line
    if (f.size() >= 6 && trim(f[5]) == "summary") continue;
    if (f.size() < 7) throw ParseError("expected 7 pipe-separated fields", lineno);
    if (trim(f[2]) != "ipv4") continue;
    DelegationRecord r;
    auto rir = detail::parse_rir(trim(f[0]));
    if (!rir) throw ParseError("unknown registry '" + std::string(f[0]) + "'", lineno);
    r.registry = *rir;
    r.cc = std::string(trim(f[1]));
    if (r.cc.empty() || r.cc == "*") r.cc = "ZZ";
    auto start = parse_ipv4(f[3]);
    if (!start) throw ParseError("bad IPv4 start '" + std::string(f[3]) + "'", lineno);
    r.start = *start;
    auto count = parse_uint<std::uint64_t>(f[4]);
    if (!count || *count == 0) throw ParseError("non-positive address count '" + std::string(f[4]) + "'", lineno);
    r.count = *count;
    r.date = std::string(trim(f[5]));
    if (!detail::valid_date(r.date)) throw ParseError("bad date '" + r.date + "'", lineno);
    auto status = detail::parse_status(trim(f[6]));
    if (!status) throw ParseError("unknown status '" + std::string(f[6]) + "'", lineno);
    r.status = *status;
    out.push_back(std::move(r));
  }
  return out;
}

/// One CIDR prefix per line; `#` starts a comment.
inline std::vector<Prefix> parse_prefix_list(std::istream& in) {
  std::vector<Prefix> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(std::string_view(line).substr(0, line.find('#')));
    if (s.empty()) continue;
    auto p = parse_prefix(s);
    if (!p) throw ParseError("bad prefix '" + std::string(s) + "'", lineno);
    out.push_back(*p);
  }
  return out;
}

/// Union of the /24s covered by a prefix list.
inline BlockSet read_block_list(std::istream& in) {
  BlockSet s;
  for (const auto& p : parse_prefix_list(in)) s.insert(p);
  return s;
}

/// One integer in [0, 255] per line naming a legacy /8.
inline std::vector<std::uint8_t> parse_legacy_list(std::istream& in) {
  std::vector<std::uint8_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(std::string_view(line).substr(0, line.find('#')));
    if (s.empty()) continue;
    auto v = parse_uint<unsigned>(s);
    if (!v || *v > 255) throw ParseError("bad /8 number '" + std::string(s) + "'", lineno);
    out.push_back(static_cast<std::uint8_t>(*v));
  }
  return out;
}

/// Administrative owner of a /8 for per-registry breakdowns.
enum class AdminTag : std::uint8_t { unallocated, afrinic, apnic, arin, lacnic, ripencc, legacy };

constexpr std::string_view admin_tag_name(AdminTag t) noexcept {
  switch (t) {
    case AdminTag::unallocated: return "unallocated";
    case AdminTag::afrinic: return "afrinic";
    case AdminTag::apnic: return "apnic";
    case AdminTag::arin: return "arin";
    case AdminTag::lacnic: return "lacnic";
    case AdminTag::ripencc: return "ripencc";
    case AdminTag::legacy: return "legacy";
  }
  return "?";
}

struct RegistryState {
  std::vector<RegistryStatus> status = std::vector<RegistryStatus>(kUniverseSize, RegistryStatus::Available);
  std::array<AdminTag, 256> slash8{};

  RegistryStatus operator[](Block24Id b) const noexcept { return status[b]; }
  AdminTag tag_of(Block24Id b) const noexcept { return slash8[b >> 16]; }

  std::array<std::uint64_t, 3> counts(Window w = Window::full()) const noexcept {
    std::array<std::uint64_t, 3> c{};
    for (std::uint32_t b = w.lo; b < w.hi; ++b) ++c[static_cast<std::size_t>(status[b])];
    return c;
  }

  BlockSet assigned() const {
    BlockSet s;
    for (std::uint32_t b = 0; b < kUniverseSize; ++b)
      if (status[b] == RegistryStatus::Assigned) s.insert(b);
    return s;
  }

  /// "REGIST01", one status byte per block, then 256 /8 tag bytes.
  void write(std::ostream& os) const {
    os.write("REGIST01", 8);
    os.write(reinterpret_cast<const char*>(status.data()), static_cast<std::streamsize>(status.size()));
    os.write(reinterpret_cast<const char*>(slash8.data()), 256);
  }

  static RegistryState read(std::istream& is) {
    char magic[8];
    if (!is.read(magic, 8) || std::string_view(magic, 8) != "REGIST01") throw ParseError("bad registry-state magic");
    RegistryState r;
    if (!is.read(reinterpret_cast<char*>(r.status.data()), kUniverseSize) ||
        !is.read(reinterpret_cast<char*>(r.slash8.data()), 256))
      throw ParseError("truncated registry state");
    for (auto s : r.status)
      if (static_cast<unsigned>(s) > 2) throw ParseError("invalid registry status byte");
    for (auto t : r.slash8)
      if (static_cast<unsigned>(t) > 6) throw ParseError("invalid /8 tag byte");
    return r;
  }

  friend bool operator==(const RegistryState&, const RegistryState&) = default;
};

/// Builds per-block registry state.
///
/// Within one /24 the strongest covering delegation wins (assigned/allocated, then
/// available/ianapool, then delegation-reserved). RFC-reserved prefixes override any
/// delegation. Blocks covered by nothing stay Available. Each /8 is tagged legacy when
/// listed, otherwise by the registry holding the most delegated addresses in it.
inline RegistryState build_registry_state(std::span<const DelegationRecord> records,
                                          std::span<const Prefix> rfc_reserved,
                                          std::span<const std::uint8_t> legacy_slash8 = {}) {
  // rank: 0 none, 1 delegation-reserved, 2 available, 3 assigned
  std::vector<std::uint8_t> rank(kUniverseSize, 0);
  std::array<std::array<std::uint64_t, 6>, 256> per_rir{};
  for (const auto& r : records) {
    std::uint8_t k = 0;
    switch (r.status) {
      case DelegationStatus::reserved_ietf: k = 1; break;
      case DelegationStatus::available:
      case DelegationStatus::ianapool: k = 2; break;
      case DelegationStatus::assigned:
      case DelegationStatus::allocated: k = 3; break;
    }
    for (std::uint64_t b = r.first_block(); b <= r.last_block(); ++b) rank[b] = std::max(rank[b], k);
    if (k >= 2) {
      const std::uint64_t lo = r.start.value;
      const std::uint64_t hi = std::min<std::uint64_t>(lo + r.count, std::uint64_t{1} << 32);
      for (std::uint64_t s8 = lo >> 24; s8 <= (hi - 1) >> 24; ++s8) {
        const std::uint64_t a = std::max(lo, s8 << 24), z = std::min(hi, (s8 + 1) << 24);
        per_rir[s8][static_cast<std::size_t>(r.registry)] += z - a;
      }
    }
  }
  RegistryState st;
  for (std::uint32_t b = 0; b < kUniverseSize; ++b) {
    switch (rank[b]) {
      case 1: st.status[b] = RegistryStatus::Reserved; break;
      case 3: st.status[b] = RegistryStatus::Assigned; break;
      default: st.status[b] = RegistryStatus::Available; break;
    }
  }
  for (const auto& p : rfc_reserved)
    for (std::uint64_t b = p.first() >> 8; b <= p.last() >> 8; ++b) st.status[b] = RegistryStatus::Reserved;

  for (std::size_t s8 = 0; s8 < 256; ++s8) {
    std::size_t best = 0;
    std::uint64_t best_n = 0;
    for (std::size_t r = 1; r < 6; ++r)
      if (per_rir[s8][r] > best_n) best = r, best_n = per_rir[s8][r];
    st.slash8[s8] = static_cast<AdminTag>(best); // Rir::afrinic..ripencc line up with AdminTag
  }
  for (auto s8 : legacy_slash8) st.slash8[s8] = AdminTag::legacy;
  return st;
}

} // namespace v4census

#endif
