#ifndef V4CENSUS_COMMON_HPP
#define V4CENSUS_COMMON_HPP

#include <algorithm>
#include <charconv>
#include <exception>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

namespace v4census {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// An IPv4 address in host byte order.
struct Ipv4Address {
  std::uint32_t value = 0;

  constexpr std::uint8_t octet(int i) const noexcept {
    return static_cast<std::uint8_t>(value >> (24 - 8 * i));
  }
  constexpr std::uint8_t last_octet() const noexcept { return static_cast<std::uint8_t>(value); }

  friend constexpr bool operator==(Ipv4Address, Ipv4Address) = default;
  friend constexpr auto operator<=>(Ipv4Address, Ipv4Address) = default;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Whole-string unsigned integer parse; accepts a 0x prefix when base is 0.
template <class T>
std::optional<T> parse_uint(std::string_view s, int base = 10) {
  s = trim(s);
  if (base == 0) {
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
      s.remove_prefix(2);
      base = 16;
    } else {
      base = 10;
    }
  }
  if (s.empty() || s.front() == '-' || s.front() == '+') return std::nullopt;
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::int64_t v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Strict dotted-quad parse (no leading '+', no empty octets, no values > 255).
inline std::optional<Ipv4Address> parse_ipv4(std::string_view s) {
  s = trim(s);
  auto parts = split(s, '.');
  if (parts.size() != 4) return std::nullopt;
  std::uint32_t v = 0;
  for (auto p : parts) {
    if (p.empty() || p.size() > 3) return std::nullopt;
    auto o = parse_uint<unsigned>(p);
    if (!o || *o > 255) return std::nullopt;
    v = (v << 8) | *o;
  }
  return Ipv4Address{v};
}

inline std::string to_string(Ipv4Address a) {
  return std::to_string(a.octet(0)) + '.' + std::to_string(a.octet(1)) + '.' + std::to_string(a.octet(2)) +
         '.' + std::to_string(a.octet(3));
}

/// CIDR prefix. The network address is always masked to the prefix length.
struct Prefix {
  Ipv4Address network;
  std::uint8_t length = 0;

  static constexpr std::uint32_t mask_for(std::uint8_t len) noexcept {
    return len == 0 ? 0u : ~std::uint32_t{0} << (32 - len);
  }
  constexpr std::uint32_t mask() const noexcept { return mask_for(length); }
  constexpr std::uint32_t first() const noexcept { return network.value; }
  constexpr std::uint32_t last() const noexcept { return network.value | ~mask(); }
  constexpr bool contains(Ipv4Address a) const noexcept { return (a.value & mask()) == network.value; }
  constexpr bool contains(const Prefix& p) const noexcept {
    return p.length >= length && contains(p.network);
  }

  friend constexpr bool operator==(const Prefix&, const Prefix&) = default;
  friend constexpr auto operator<=>(const Prefix&, const Prefix&) = default;
};

/// Parses `a.b.c.d/len`; a bare address is a /32. Host bits are cleared.
inline std::optional<Prefix> parse_prefix(std::string_view s) {
  s = trim(s);
  auto slash = s.find('/');
  auto addr = parse_ipv4(s.substr(0, slash));
  if (!addr) return std::nullopt;
  std::uint8_t len = 32;
  if (slash != std::string_view::npos) {
    auto l = parse_uint<unsigned>(s.substr(slash + 1));
    if (!l || *l > 32) return std::nullopt;
    len = static_cast<std::uint8_t>(*l);
  }
  return Prefix{Ipv4Address{addr->value & Prefix::mask_for(len)}, len};
}

inline std::string to_string(const Prefix& p) {
  return to_string(p.network) + '/' + std::to_string(p.length);
}

/// Splits the inclusive address range [first, last] into the minimal list of CIDR prefixes.
inline std::vector<Prefix> range_to_prefixes(std::uint32_t first, std::uint32_t last) {
  std::vector<Prefix> out;
  std::uint64_t lo = first;
  const std::uint64_t hi = std::uint64_t{last} + 1;
  while (lo < hi) {
    int len = 32;
    while (len > 0) {
      const std::uint64_t size = std::uint64_t{1} << (32 - (len - 1));
      if (lo % size != 0 || lo + size > hi) break;
      --len;
    }
    out.push_back(Prefix{Ipv4Address{static_cast<std::uint32_t>(lo)}, static_cast<std::uint8_t>(len)});
    lo += std::uint64_t{1} << (32 - len);
  }
  return out;
}

/// Runs fn(lo, hi) over disjoint chunks of [lo, hi). Chunk boundaries are multiples of
/// `align` so that callers writing packed bitsets never share a word between workers.
template <class Fn>
void parallel_for(unsigned threads, std::uint64_t lo, std::uint64_t hi, Fn&& fn, std::uint64_t align = 64) {
  if (hi <= lo) return;
  const std::uint64_t n = hi - lo;
  if (threads <= 1 || n < 2 * align) {
    fn(lo, hi);
    return;
  }
  const std::uint64_t chunk = (n + threads - 1) / threads;
  std::vector<std::uint64_t> cuts{lo};
  for (unsigned k = 1; k < threads; ++k) {
    std::uint64_t c = (lo + k * chunk + align - 1) / align * align;
    if (c > cuts.back() && c < hi) cuts.push_back(c);
  }
  cuts.push_back(hi);
  std::vector<std::exception_ptr> errors(cuts.size() - 1);
  {
    std::vector<std::jthread> workers;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      workers.emplace_back([&fn, &err = errors[k], s = cuts[k], e = cuts[k + 1]] {
        try {
          fn(s, e);
        } catch (...) {
          err = std::current_exception();
        }
      });
  }
  // Rethrow the lowest-range failure so the reported error does not depend on scheduling.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

} // namespace v4census

#endif
