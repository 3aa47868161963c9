#ifndef V4CENSUS_CONFIG_HPP
#define V4CENSUS_CONFIG_HPP

#include <istream>
#include <limits>
#include <stdexcept>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "v4census/common.hpp"

namespace v4census {

/// INI-style key/value document: optional top-level `key = value` lines followed by
/// `[section]` blocks. Keys and section names keep file order.
class KeyValueConfig {
public:
  using Section = std::vector<std::pair<std::string, std::string>>;

  static KeyValueConfig parse(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
    }
    KeyValueConfig cfg;
    for (const auto& [key, node] : tree) {
      if (node.empty()) {
        cfg.top_.emplace_back(key, node.data());
      } else {
        Section s;
        for (const auto& [k, v] : node) s.emplace_back(k, v.data());
        cfg.sections_.emplace_back(key, std::move(s));
      }
    }
    return cfg;
  }

  const Section& top() const noexcept { return top_; }
  const std::vector<std::pair<std::string, Section>>& sections() const noexcept { return sections_; }

  std::optional<std::string> get(const std::string& key) const { return lookup(top_, key); }

  const Section* section(const std::string& name) const {
    for (const auto& [n, s] : sections_)
      if (n == name) return &s;
    return nullptr;
  }

  static std::optional<std::string> lookup(const Section& s, const std::string& key) {
    for (const auto& [k, v] : s)
      if (k == key) return v;
    return std::nullopt;
  }

private:
  Section top_;
  std::vector<std::pair<std::string, Section>> sections_;
};

namespace detail {

template <class T>
T config_uint(const std::string& key, const std::string& v, std::uint64_t max = std::numeric_limits<T>::max()) {
  auto x = parse_uint<std::uint64_t>(v, 0);
  if (!x || *x > max) throw ConfigError("bad value for '" + key + "': " + v);
  return static_cast<T>(*x);
}

inline double config_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw ConfigError("bad value for '" + key + "': " + v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError("bad value for '" + key + "': " + v);
  }
}

inline std::vector<std::string> config_list(const std::string& v) {
  std::vector<std::string> out;
  for (auto p : split(v, ','))
    if (auto t = trim(p); !t.empty()) out.emplace_back(t);
  return out;
}

} // namespace detail

} // namespace v4census

#endif
