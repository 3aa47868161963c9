#ifndef V4CENSUS_TRAFFIC_HPP
#define V4CENSUS_TRAFFIC_HPP

#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "v4census/common.hpp"

namespace v4census {

inline constexpr std::uint8_t kProtoIcmp = 1;
inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;

inline constexpr std::uint8_t kTcpFin = 0x01;
inline constexpr std::uint8_t kTcpSyn = 0x02;
inline constexpr std::uint8_t kTcpRst = 0x04;
inline constexpr std::uint8_t kTcpPsh = 0x08;
inline constexpr std::uint8_t kTcpAck = 0x10;

enum class RecordKind : std::uint8_t { packet, flow };

/// One normalized packet or flow observation. Fields that do not apply are empty.
struct TrafficRecord {
  RecordKind kind = RecordKind::packet;
  std::int64_t ts = 0;
  Ipv4Address src, dst;
  std::uint8_t proto = 0;
  std::optional<std::uint16_t> src_port, dst_port;
  std::optional<std::uint8_t> ttl;
  std::optional<std::uint8_t> tcp_flags;
  std::optional<std::uint32_t> payload_len;
  std::optional<std::uint64_t> packets, bytes;
  std::optional<bool> bidirectional, initiated_locally, payload_fwd, payload_rev;
  std::string cls;

  friend bool operator==(const TrafficRecord&, const TrafficRecord&) = default;
};

namespace detail {

template <class T>
std::optional<T> opt_field(std::string_view f, std::size_t lineno, const char* name, int base = 10) {
  f = trim(f);
  if (f == "-" || f.empty()) return std::nullopt;
  auto v = parse_uint<std::uint64_t>(f, base);
  if (!v || *v > std::numeric_limits<T>::max()) throw ParseError(std::string("bad ") + name + " '" + std::string(f) + "'", lineno);
  return static_cast<T>(*v);
}

inline std::optional<bool> opt_bool(std::string_view f, std::size_t lineno, const char* name) {
  f = trim(f);
  if (f == "-" || f.empty()) return std::nullopt;
  if (f == "1") return true;
  if (f == "0") return false;
  throw ParseError(std::string("bad ") + name + " '" + std::string(f) + "'", lineno);
}

template <class T>
std::string fmt_opt(const std::optional<T>& v) {
  return v ? std::to_string(static_cast<std::uint64_t>(*v)) : std::string("-");
}

inline std::string fmt_opt(const std::optional<bool>& v) { return v ? (*v ? "1" : "0") : "-"; }

} // namespace detail

/// Parses one line of
/// `kind|ts|src|dst|proto|sport|dport|ttl|flags|payload_len|pkts|bytes|bidir|local_init|pl_fwd|pl_rev|class`.
/// Flags accept decimal or 0x-prefixed hex.
inline TrafficRecord parse_traffic_line(std::string_view line, std::size_t lineno = 0) {
  auto f = split(trim(line), '|');
  if (f.size() != 17) throw ParseError("expected 17 fields, got " + std::to_string(f.size()), lineno);
  TrafficRecord r;
  auto kind = trim(f[0]);
  if (kind == "packet" || kind == "p") r.kind = RecordKind::packet;
  else if (kind == "flow" || kind == "f") r.kind = RecordKind::flow;
  else throw ParseError("bad kind '" + std::string(kind) + "'", lineno);
  auto ts = parse_int(f[1]);
  if (!ts) throw ParseError("bad timestamp", lineno);
  r.ts = *ts;
  auto src = parse_ipv4(f[2]), dst = parse_ipv4(f[3]);
  if (!src || !dst) throw ParseError("bad address", lineno);
  r.src = *src;
  r.dst = *dst;
  auto proto = parse_uint<unsigned>(f[4]);
  if (!proto || *proto > 255) throw ParseError("bad protocol", lineno);
  r.proto = static_cast<std::uint8_t>(*proto);
  r.src_port = detail::opt_field<std::uint16_t>(f[5], lineno, "sport");
  r.dst_port = detail::opt_field<std::uint16_t>(f[6], lineno, "dport");
  r.ttl = detail::opt_field<std::uint8_t>(f[7], lineno, "ttl");
  r.tcp_flags = detail::opt_field<std::uint8_t>(f[8], lineno, "flags", 0);
  r.payload_len = detail::opt_field<std::uint32_t>(f[9], lineno, "payload_len");
  r.packets = detail::opt_field<std::uint64_t>(f[10], lineno, "pkts");
  r.bytes = detail::opt_field<std::uint64_t>(f[11], lineno, "bytes");
  r.bidirectional = detail::opt_bool(f[12], lineno, "bidir");
  r.initiated_locally = detail::opt_bool(f[13], lineno, "local_init");
  r.payload_fwd = detail::opt_bool(f[14], lineno, "pl_fwd");
  r.payload_rev = detail::opt_bool(f[15], lineno, "pl_rev");
  auto cls = trim(f[16]);
  if (cls != "-") r.cls = std::string(cls);
  if (r.kind == RecordKind::flow && ((r.packets && *r.packets == 0) || (r.bytes && *r.bytes == 0)))
    throw ParseError("flow counters must be positive", lineno);
  return r;
}

inline std::string format_traffic_line(const TrafficRecord& r) {
  std::string s;
  s.reserve(96);
  s += r.kind == RecordKind::packet ? "packet" : "flow";
  s += '|' + std::to_string(r.ts) + '|' + to_string(r.src) + '|' + to_string(r.dst) + '|' + std::to_string(r.proto);
  s += '|' + detail::fmt_opt(r.src_port) + '|' + detail::fmt_opt(r.dst_port) + '|' + detail::fmt_opt(r.ttl);
  s += '|' + detail::fmt_opt(r.tcp_flags) + '|' + detail::fmt_opt(r.payload_len);
  s += '|' + detail::fmt_opt(r.packets) + '|' + detail::fmt_opt(r.bytes);
  s += '|' + detail::fmt_opt(r.bidirectional) + '|' + detail::fmt_opt(r.initiated_locally);
  s += '|' + detail::fmt_opt(r.payload_fwd) + '|' + detail::fmt_opt(r.payload_rev);
  s += '|' + (r.cls.empty() ? std::string("-") : r.cls);
  return s;
}

struct TrafficReadStats {
  std::uint64_t records = 0;
  std::uint64_t malformed = 0;
  std::vector<std::size_t> bad_lines; // first few offending line numbers
};

/// Reads a traffic file, skipping (and counting) malformed lines.
inline std::vector<TrafficRecord> read_traffic(std::istream& in, TrafficReadStats* stats = nullptr) {
  std::vector<TrafficRecord> out;
  TrafficReadStats local;
  auto& st = stats ? *stats : local;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    try {
      out.push_back(parse_traffic_line(s, lineno));
      ++st.records;
    } catch (const ParseError&) {
      ++st.malformed;
      if (st.bad_lines.size() < 16) st.bad_lines.push_back(lineno);
    }
  }
  return out;
}

inline void write_traffic(std::ostream& os, const std::vector<TrafficRecord>& records) {
  for (const auto& r : records) os << format_traffic_line(r) << '\n';
}

} // namespace v4census

#endif
