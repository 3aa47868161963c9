#ifndef V4CENSUS_MAPPING_HPP
#define V4CENSUS_MAPPING_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "v4census/blockmap.hpp"
#include "v4census/prefix_trie.hpp"

namespace v4census {

enum class MapStatus : std::uint8_t { resolved, multi_origin, as_set, multi_country, unmapped };

constexpr std::string_view map_status_name(MapStatus s) noexcept {
  switch (s) {
    case MapStatus::resolved: return "resolved";
    case MapStatus::multi_origin: return "multi_origin";
    case MapStatus::as_set: return "as_set";
    case MapStatus::multi_country: return "multi_country";
    case MapStatus::unmapped: return "unmapped";
  }
  return "?";
}

/// Origin field of a prefix-to-AS entry.
struct Origin {
  enum class Kind : std::uint8_t { single, multi, set };
  Kind kind = Kind::single;
  std::vector<std::uint32_t> asns; ///< sorted, unique

  friend bool operator==(const Origin&, const Origin&) = default;
};

/// `AS123` or `123` (single), `AS1_AS2` (AS set), `AS1,AS2` (multi-origin).
inline std::optional<Origin> parse_origin(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  Origin o;
  const bool has_set = s.find('_') != std::string_view::npos;
  const bool has_multi = s.find(',') != std::string_view::npos;
  o.kind = has_set ? Origin::Kind::set : has_multi ? Origin::Kind::multi : Origin::Kind::single;
  std::string norm(s);
  std::replace(norm.begin(), norm.end(), '_', ',');
  for (auto part : split(norm, ',')) {
    part = trim(part);
    if (part.size() > 2 && (part[0] == 'A' || part[0] == 'a') && (part[1] == 'S' || part[1] == 's')) part.remove_prefix(2);
    auto v = parse_uint<std::uint32_t>(part);
    if (!v) return std::nullopt;
    o.asns.push_back(*v);
  }
  std::sort(o.asns.begin(), o.asns.end());
  o.asns.erase(std::unique(o.asns.begin(), o.asns.end()), o.asns.end());
  if (o.kind == Origin::Kind::multi && o.asns.size() == 1) o.kind = Origin::Kind::single;
  return o;
}

struct PrefixOrigin {
  Prefix prefix;
  Origin origin;
};

/// `prefix|origin` lines; CAIDA's tab-separated `network<TAB>length<TAB>origin` also works.
inline std::vector<PrefixOrigin> parse_prefix2as(std::istream& in) {
  std::vector<PrefixOrigin> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    std::optional<Prefix> p;
    std::optional<Origin> o;
    if (auto f = split(s, '|'); f.size() == 2) {
      p = parse_prefix(f[0]);
      if (trim(f[0]).find('/') == std::string_view::npos) p.reset();
      o = parse_origin(f[1]);
    } else if (auto t = split(s, '\t'); t.size() == 3) {
      p = parse_prefix(std::string(trim(t[0])) + "/" + std::string(trim(t[1])));
      o = parse_origin(t[2]);
    } else {
      throw ParseError("expected prefix|origin", lineno);
    }
    if (!p) throw ParseError("malformed prefix", lineno);
    if (!o) throw ParseError("malformed origin", lineno);
    out.push_back({*p, std::move(*o)});
  }
  return out;
}

/// Same prefix seen with different origins (across files) becomes multi-origin.
inline Origin merge_origins(const Origin& a, Origin b) {
  if (a == b) return b;
  Origin m;
  m.kind = Origin::Kind::multi;
  m.asns = a.asns;
  m.asns.insert(m.asns.end(), b.asns.begin(), b.asns.end());
  std::sort(m.asns.begin(), m.asns.end());
  m.asns.erase(std::unique(m.asns.begin(), m.asns.end()), m.asns.end());
  if (m.asns.size() == 1 && a.kind == Origin::Kind::single && b.kind == Origin::Kind::single) m.kind = Origin::Kind::single;
  return m;
}

/// Window-local per-block mapping. Index by Block24Id; blocks outside the window read as unmapped.
template <class Value>
class BlockMapping {
public:
  explicit BlockMapping(Window w = Window::full())
      : window_(w), values_(w.size(), Value{}), status_(w.size(), MapStatus::unmapped) {}

  Window window() const noexcept { return window_; }
  MapStatus status(Block24Id b) const noexcept {
    return window_.contains(b) ? status_[b - window_.lo] : MapStatus::unmapped;
  }
  bool resolved(Block24Id b) const noexcept { return status(b) == MapStatus::resolved; }
  Value value(Block24Id b) const noexcept { return window_.contains(b) ? values_[b - window_.lo] : Value{}; }

  void set(Block24Id b, MapStatus s, Value v = Value{}) {
    status_[b - window_.lo] = s;
    values_[b - window_.lo] = v;
  }

  /// Blocks per status, indexed by MapStatus.
  std::array<std::uint64_t, 5> totals() const noexcept {
    std::array<std::uint64_t, 5> t{};
    for (auto s : status_) ++t[static_cast<std::size_t>(s)];
    return t;
  }

  friend bool operator==(const BlockMapping&, const BlockMapping&) = default;

  /// "BLKMAP01", u32 LE window lo and hi, one status byte per block, then one u32 LE
  /// value per block.
  void write(std::ostream& os) const {
    os.write("BLKMAP01", 8);
    put_u32(os, window_.lo);
    put_u32(os, window_.hi - 1);
    os.write(reinterpret_cast<const char*>(status_.data()), static_cast<std::streamsize>(status_.size()));
    for (auto v : values_) put_u32(os, static_cast<std::uint32_t>(v));
  }

  static BlockMapping read(std::istream& is) {
    char magic[8];
    if (!is.read(magic, 8) || std::string_view(magic, 8) != "BLKMAP01") throw ParseError("bad mapping magic");
    std::uint32_t lo = 0, last = 0;
    if (!get_u32(is, lo) || !get_u32(is, last) || last < lo || last >= kUniverseSize)
      throw ParseError("bad mapping window");
    BlockMapping m(Window{lo, last + 1});
    if (!is.read(reinterpret_cast<char*>(m.status_.data()), static_cast<std::streamsize>(m.status_.size())))
      throw ParseError("truncated mapping status");
    for (auto s : m.status_)
      if (static_cast<unsigned>(s) > static_cast<unsigned>(MapStatus::unmapped)) throw ParseError("invalid mapping status");
    for (auto& v : m.values_) {
      std::uint32_t x = 0;
      if (!get_u32(is, x)) throw ParseError("truncated mapping values");
      v = static_cast<Value>(x);
    }
    return m;
  }

private:
  static void put_u32(std::ostream& os, std::uint32_t x) {
    const unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                                static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
  }
  static bool get_u32(std::istream& is, std::uint32_t& x) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    x = b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t{b[3]} << 24);
    return true;
  }

  Window window_;
  std::vector<Value> values_;
  std::vector<MapStatus> status_;
};

using AsMapping = BlockMapping<std::uint32_t>;

/// Country code packed as two ASCII bytes (first letter in the high byte).
using CountryCode = std::uint16_t;

inline std::optional<CountryCode> parse_cc(std::string_view s) {
  s = trim(s);
  if (s.size() != 2) return std::nullopt;
  for (char c : s)
    if (!((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'))) return std::nullopt;
  return static_cast<CountryCode>((static_cast<unsigned char>(s[0]) << 8) | static_cast<unsigned char>(s[1]));
}

inline std::string cc_to_string(CountryCode c) {
  return {static_cast<char>(c >> 8), static_cast<char>(c & 0xff)};
}

using GeoMapping = BlockMapping<CountryCode>;

/// Resolves a block from the payloads of its most specific overlapping prefixes.
inline std::pair<MapStatus, std::uint32_t> resolve_origin(const std::vector<const Origin*>& best) {
  if (best.empty()) return {MapStatus::unmapped, 0};
  if (best.size() == 1) {
    const Origin& o = *best.front();
    if (o.kind == Origin::Kind::set) return {MapStatus::as_set, 0};
    if (o.kind == Origin::Kind::multi) return {MapStatus::multi_origin, 0};
    return {MapStatus::resolved, o.asns.front()};
  }
  for (const Origin* o : best)
    if (o->kind != Origin::Kind::single || o->asns != best.front()->asns) return {MapStatus::multi_origin, 0};
  return {MapStatus::resolved, best.front()->asns.front()};
}

/// Longest-prefix AS mapping over the window. Entries may come from several files;
/// identical (prefix, origin) pairs dedupe and conflicting origins become multi-origin.
inline AsMapping build_as_mapping(std::span<const PrefixOrigin> entries, Window window = Window::full(),
                                  unsigned threads = 1) {
  PrefixTrie<Origin> trie;
  for (const auto& e : entries) trie.insert(e.prefix, e.origin, merge_origins);
  AsMapping m(window);
  parallel_for(threads, window.lo, window.hi, [&](std::uint64_t lo, std::uint64_t hi) {
    for (auto b = static_cast<Block24Id>(lo); b < hi; ++b) {
      auto [status, asn] = resolve_origin(trie.most_specific_overlapping(Prefix{block_base(b), 24}));
      m.set(b, status, asn);
    }
  }, 1);
  return m;
}

struct GeoRange {
  Ipv4Address first, last; ///< inclusive
  CountryCode cc = 0;
};

/// `start_ip|end_ip|cc` lines, end inclusive.
inline std::vector<GeoRange> parse_geo_ranges(std::istream& in) {
  std::vector<GeoRange> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto f = split(s, '|');
    if (f.size() != 3) throw ParseError("expected start|end|cc", lineno);
    auto a = parse_ipv4(f[0]), z = parse_ipv4(f[1]);
    auto cc = parse_cc(f[2]);
    if (!a || !z || z->value < a->value) throw ParseError("bad range", lineno);
    if (!cc) throw ParseError("bad country code '" + std::string(f[2]) + "'", lineno);
    out.push_back({*a, *z, *cc});
  }
  return out;
}

/// A block maps to a country iff every range overlapping it agrees on the code.
inline GeoMapping build_geo_mapping(std::span<const GeoRange> ranges, Window window = Window::full()) {
  GeoMapping g(window);
  for (const auto& r : ranges) {
    const std::uint32_t lo = std::max<std::uint32_t>(block_of(r.first), window.lo);
    const std::uint64_t hi = std::min<std::uint64_t>(std::uint64_t{block_of(r.last)} + 1, window.hi);
    for (std::uint64_t b = lo; b < hi; ++b) {
      const auto id = static_cast<Block24Id>(b);
      switch (g.status(id)) {
        case MapStatus::unmapped: g.set(id, MapStatus::resolved, r.cc); break;
        case MapStatus::resolved:
          if (g.value(id) != r.cc) g.set(id, MapStatus::multi_country);
          break;
        default: break;
      }
    }
  }
  return g;
}

} // namespace v4census

#endif
