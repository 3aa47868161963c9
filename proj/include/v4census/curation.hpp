#ifndef V4CENSUS_CURATION_HPP
#define V4CENSUS_CURATION_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "v4census/blockmap.hpp"
#include "v4census/config.hpp"
#include "v4census/traffic.hpp"

namespace v4census {

// ---------------------------------------------------------------------------
// Results and validation
// ---------------------------------------------------------------------------

struct FilterTally {
  std::string name;
  std::uint64_t records = 0; ///< records dropped by this rule (first matching rule wins)
  std::uint64_t blocks = 0;  ///< distinct inference-side /24s among records matching the rule

  friend bool operator==(const FilterTally&, const FilterTally&) = default;
};

/// Timestamped inference-side block of a retained record, for growth curves.
struct BlockObservation {
  std::int64_t ts = 0;
  Block24Id block = 0;
  friend bool operator==(const BlockObservation&, const BlockObservation&) = default;
};

struct CurationResult {
  BlockSet input_blocks; ///< inference-side /24s of every well-formed input record
  BlockSet blocks;       ///< /24s that survive curation
  std::vector<FilterTally> tallies;
  std::uint64_t records_in = 0;
  std::uint64_t records_kept = 0;
  std::uint64_t malformed = 0;
  std::vector<BlockObservation> observations;
};

struct ValidationMetrics {
  std::uint64_t blocks = 0;
  std::uint64_t unrouted = 0;
  std::uint64_t dark = 0;
  double unrouted_fraction = 0.0;
  double dark_fraction = 0.0;

  friend bool operator==(const ValidationMetrics&, const ValidationMetrics&) = default;
};

/// |set \ routed| and |set ∩ dark|, absolute and as fractions of |set|.
inline ValidationMetrics validation_metrics(const BlockSet& set, const BlockSet& routed, const BlockSet& dark) {
  ValidationMetrics m;
  m.blocks = set.count();
  m.unrouted = difference_count(set, routed);
  m.dark = intersection_count(set, dark);
  if (m.blocks) {
    m.unrouted_fraction = static_cast<double>(m.unrouted) / static_cast<double>(m.blocks);
    m.dark_fraction = static_cast<double>(m.dark) / static_cast<double>(m.blocks);
  }
  return m;
}

struct CurationMetrics {
  ValidationMetrics before, after;
  std::vector<FilterTally> tallies;
  std::uint64_t records_in = 0, records_kept = 0, malformed = 0;
};

inline CurationMetrics curation_metrics(const CurationResult& r, const BlockSet& routed, const BlockSet& dark) {
  return {validation_metrics(r.input_blocks, routed, dark), validation_metrics(r.blocks, routed, dark), r.tallies,
          r.records_in, r.records_kept, r.malformed};
}

/// The remote end of a record: the source unless the source lies in the monitored space.
inline Ipv4Address remote_address(const TrafficRecord& r, const BlockSet& monitored) {
  return monitored.contains(block_of(r.src)) ? r.dst : r.src;
}

// ---------------------------------------------------------------------------
// Darknet
// ---------------------------------------------------------------------------

/// Declarative event filter: every field that is set must match, and the record
/// timestamp must fall in [from, to) when those bounds are given.
struct SpecificFilter {
  std::string name;
  std::optional<std::int64_t> from, to;
  std::optional<std::uint8_t> proto;
  std::optional<std::uint16_t> src_port, dst_port;
  std::optional<Prefix> src, dst;
  std::optional<std::uint8_t> ttl_min, ttl_max;
  std::optional<std::uint8_t> tcp_flags;
  std::optional<std::uint32_t> payload_len;

  bool matches(const TrafficRecord& r) const {
    if (from && r.ts < *from) return false;
    if (to && r.ts >= *to) return false;
    if (proto && r.proto != *proto) return false;
    if (src_port && r.src_port != src_port) return false;
    if (dst_port && r.dst_port != dst_port) return false;
    if (src && !src->contains(r.src)) return false;
    if (dst && !dst->contains(r.dst)) return false;
    if (ttl_min && (!r.ttl || *r.ttl < *ttl_min)) return false;
    if (ttl_max && (!r.ttl || *r.ttl > *ttl_max)) return false;
    if (tcp_flags && r.tcp_flags != tcp_flags) return false;
    if (payload_len && r.payload_len != payload_len) return false;
    return true;
  }
};

struct DarknetFilterConfig {
  std::uint8_t ttl_threshold = 200;
  std::vector<std::uint8_t> traditional_protocols{kProtoIcmp, kProtoTcp, kProtoUdp};
  std::vector<SpecificFilter> specific;
};

/// Reads the filter config. Top-level keys: `ttl_threshold`, `traditional_protocols`
/// (comma list). Each `[name]` section defines one specific filter with any of
/// `from to proto sport dport src dst ttl_min ttl_max flags payload_len`. A section
/// without keys is dropped by the INI reader and defines no filter.
inline DarknetFilterConfig parse_darknet_filter_config(std::istream& in) {
  using detail::config_uint;
  auto kv = KeyValueConfig::parse(in);
  DarknetFilterConfig cfg;
  for (const auto& [k, v] : kv.top()) {
    if (k == "ttl_threshold") cfg.ttl_threshold = config_uint<std::uint8_t>(k, v);
    else if (k == "traditional_protocols") {
      cfg.traditional_protocols.clear();
      for (const auto& p : detail::config_list(v)) cfg.traditional_protocols.push_back(config_uint<std::uint8_t>(k, p));
    } else throw ConfigError("unknown darknet filter key '" + k + "'");
  }
  for (const auto& [name, sec] : kv.sections()) {
    SpecificFilter f;
    f.name = name;
    for (const auto& [k, v] : sec) {
      if (k == "from" || k == "to") {
        auto t = parse_int(v);
        if (!t) throw ConfigError("bad timestamp for '" + k + "' in [" + name + "]");
        (k == "from" ? f.from : f.to) = *t;
      } else if (k == "proto") f.proto = config_uint<std::uint8_t>(k, v);
      else if (k == "sport") f.src_port = config_uint<std::uint16_t>(k, v);
      else if (k == "dport") f.dst_port = config_uint<std::uint16_t>(k, v);
      else if (k == "ttl_min") f.ttl_min = config_uint<std::uint8_t>(k, v);
      else if (k == "ttl_max") f.ttl_max = config_uint<std::uint8_t>(k, v);
      else if (k == "flags") f.tcp_flags = config_uint<std::uint8_t>(k, v);
      else if (k == "payload_len") f.payload_len = config_uint<std::uint32_t>(k, v);
      else if (k == "src" || k == "dst") {
        auto p = parse_prefix(v);
        if (!p) throw ConfigError("bad prefix for '" + k + "' in [" + name + "]");
        (k == "src" ? f.src : f.dst) = *p;
      } else throw ConfigError("unknown key '" + k + "' in filter [" + name + "]");
    }
    cfg.specific.push_back(std::move(f));
  }
  return cfg;
}

namespace detail {

struct Rule {
  std::string name;
  std::function<bool(const TrafficRecord&)> pred;
};

/// Runs an ordered drop-rule chain. A record is dropped iff at least one rule matches;
/// the drop is attributed to the first match, while block tallies count every match.
template <class AddressOf>
CurationResult run_drop_chain(std::span<const TrafficRecord> records, const std::vector<Rule>& rules,
                              std::function<bool(const TrafficRecord&)> well_formed, AddressOf address_of) {
  CurationResult res;
  std::vector<BlockSet> matched(rules.size());
  res.tallies.resize(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) res.tallies[i].name = rules[i].name;
  for (const auto& r : records) {
    if (!well_formed(r)) {
      ++res.malformed;
      continue;
    }
    ++res.records_in;
    const Block24Id b = block_of(address_of(r));
    res.input_blocks.insert(b);
    bool dropped = false;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (!rules[i].pred(r)) continue;
      matched[i].insert(b);
      if (!dropped) ++res.tallies[i].records;
      dropped = true;
    }
    if (!dropped) {
      ++res.records_kept;
      res.blocks.insert(b);
      res.observations.push_back({r.ts, b});
    }
  }
  for (std::size_t i = 0; i < rules.size(); ++i) res.tallies[i].blocks = matched[i].count();
  return res;
}

} // namespace detail

/// Darknet (telescope) curation: drops spoofing signatures and keeps source /24s.
inline CurationResult curate_darknet(std::span<const TrafficRecord> records, const DarknetFilterConfig& cfg = {}) {
  std::vector<detail::Rule> rules;
  const auto ttl_max = cfg.ttl_threshold;
  rules.push_back({"TTL>" + std::to_string(ttl_max) + " and not ICMP",
                   [ttl_max](const TrafficRecord& r) { return r.proto != kProtoIcmp && r.ttl && *r.ttl > ttl_max; }});
  rules.push_back({"Least signif. byte src addr 0", [](const TrafficRecord& r) { return r.src.last_octet() == 0; }});
  rules.push_back({"Least signif. byte src addr 255", [](const TrafficRecord& r) { return r.src.last_octet() == 255; }});
  rules.push_back({"Non-traditional protocol", [protos = cfg.traditional_protocols](const TrafficRecord& r) {
                     return std::find(protos.begin(), protos.end(), r.proto) == protos.end();
                   }});
  rules.push_back({"Same src and dst addr", [](const TrafficRecord& r) { return r.src == r.dst; }});
  rules.push_back({"No TCP flags", [](const TrafficRecord& r) { return r.proto == kProtoTcp && r.tcp_flags == std::uint8_t{0}; }});
  rules.push_back({"UDP without payload", [](const TrafficRecord& r) { return r.proto == kProtoUdp && r.payload_len == std::uint32_t{0}; }});
  for (const auto& f : cfg.specific)
    rules.push_back({"Specific: " + f.name, [f](const TrafficRecord& r) { return f.matches(r); }});
  return detail::run_drop_chain(
      records, rules, [](const TrafficRecord& r) { return r.kind == RecordKind::packet; },
      [](const TrafficRecord& r) { return r.src; });
}

// ---------------------------------------------------------------------------
// Unsampled flow exports and bidirectional flow logs
// ---------------------------------------------------------------------------

struct FlowlogParams {
  std::uint64_t min_packets = 5;
  std::uint64_t min_avg_bytes = 80;
};

/// Keeps bidirectional TCP flows with packets >= min_packets and bytes/packets >=
/// min_avg_bytes (both inclusive, average over the whole flow); emits remote /24s.
inline CurationResult curate_flowlog(std::span<const TrafficRecord> records, const BlockSet& monitored,
                                     FlowlogParams params = {}) {
  std::vector<detail::Rule> rules{
      {"Not TCP", [](const TrafficRecord& r) { return r.proto != kProtoTcp; }},
      {"Unidirectional", [](const TrafficRecord& r) { return r.bidirectional != true; }},
      {"Too few packets", [params](const TrafficRecord& r) { return *r.packets < params.min_packets; }},
      {"Average size too small",
       [params](const TrafficRecord& r) { return *r.bytes < params.min_avg_bytes * *r.packets; }},
  };
  return detail::run_drop_chain(
      records, rules, [](const TrafficRecord& r) { return r.kind == RecordKind::flow && r.packets && r.bytes; },
      [&monitored](const TrafficRecord& r) { return remote_address(r, monitored); });
}

/// Flow logs whose producer only records handshake-completed TCP flows. TCP passes;
/// UDP needs local initiation and payload in both directions; other protocols drop.
inline CurationResult curate_bidirlog(std::span<const TrafficRecord> records, const BlockSet& monitored) {
  std::vector<detail::Rule> rules{
      {"Other protocol", [](const TrafficRecord& r) { return r.proto != kProtoTcp && r.proto != kProtoUdp; }},
      {"UDP not locally initiated",
       [](const TrafficRecord& r) { return r.proto == kProtoUdp && r.initiated_locally != true; }},
      {"UDP without payload both ways",
       [](const TrafficRecord& r) { return r.proto == kProtoUdp && !(r.payload_fwd == true && r.payload_rev == true); }},
  };
  return detail::run_drop_chain(
      records, rules, [](const TrafficRecord& r) { return r.kind == RecordKind::flow; },
      [&monitored](const TrafficRecord& r) { return remote_address(r, monitored); });
}

// ---------------------------------------------------------------------------
// Sampled packets (IXP)
// ---------------------------------------------------------------------------

class NoFeasibleThreshold : public Error {
public:
  using Error::Error;
};

struct ThresholdGrid {
  std::vector<std::uint32_t> min_packets;  ///< ascending
  std::vector<std::uint32_t> min_avg_size; ///< ascending

  /// min_packets 1..50, min_avg_size 40..1500 in steps of 10.
  static ThresholdGrid standard() {
    ThresholdGrid g;
    for (std::uint32_t p = 1; p <= 50; ++p) g.min_packets.push_back(p);
    for (std::uint32_t s = 40; s <= 1500; s += 10) g.min_avg_size.push_back(s);
    return g;
  }
};

struct ThresholdPair {
  std::uint32_t min_packets = 0;
  std::uint32_t min_avg_size = 0;
  friend bool operator==(const ThresholdPair&, const ThresholdPair&) = default;
};

struct BlockAggregate {
  Block24Id block = 0;
  std::uint64_t packets = 0;
  std::uint64_t bytes = 0;

  /// Mean packet size >= s, evaluated without division.
  bool passes(const ThresholdPair& t) const noexcept {
    return packets >= t.min_packets && bytes >= std::uint64_t{t.min_avg_size} * packets;
  }
  friend bool operator==(const BlockAggregate&, const BlockAggregate&) = default;
};

struct SampledParams {
  double epsilon_unrouted = 0.001;
  std::uint64_t dst_dark_bound = 3;
  ThresholdGrid grid = ThresholdGrid::standard();
  bool include_udp = false;
};

/// Size attributed to a sampled packet: its `bytes` field (IP length) when present,
/// otherwise payload plus a 40-byte IPv4+TCP header.
inline std::uint64_t sampled_packet_size(const TrafficRecord& r) {
  if (r.bytes) return *r.bytes;
  return std::uint64_t{r.payload_len.value_or(0)} + 40;
}

struct GridChoice {
  ThresholdPair thresholds;
  std::uint64_t selected = 0; ///< blocks passing the chosen thresholds
  std::uint64_t errors = 0;   ///< error blocks (unrouted or dark) among them
};

/// Finds the grid point maximizing the number of passing blocks subject to
/// `feasible(errors, selected)`. Ties go to the first point in (min_packets,
/// min_avg_size) ascending order. Runs in O(blocks + grid) via 2-D suffix sums.
template <class IsError, class Feasible>
GridChoice grid_search(std::span<const BlockAggregate> aggs, const ThresholdGrid& grid, IsError is_error,
                       Feasible feasible) {
  const std::size_t np = grid.min_packets.size(), ns = grid.min_avg_size.size();
  if (np == 0 || ns == 0) throw ConfigError("empty threshold grid");
  // A block passes (i, j) iff i < pi and j < si, where pi/si count passed thresholds.
  const std::size_t w = ns + 1;
  std::vector<std::uint64_t> total((np + 1) * w, 0), bad((np + 1) * w, 0);
  for (const auto& a : aggs) {
    const auto pi = static_cast<std::size_t>(
        std::upper_bound(grid.min_packets.begin(), grid.min_packets.end(), a.packets) - grid.min_packets.begin());
    std::size_t si = 0;
    if (a.packets > 0) {
      // largest j with s_j * packets <= bytes
      si = static_cast<std::size_t>(std::partition_point(grid.min_avg_size.begin(), grid.min_avg_size.end(),
                                                         [&](std::uint32_t s) { return std::uint64_t{s} * a.packets <= a.bytes; }) -
                                    grid.min_avg_size.begin());
    }
    ++total[pi * w + si];
    if (is_error(a.block)) ++bad[pi * w + si];
  }
  // suffix sums: S(i, j) = sum over pi >= i, si >= j
  for (std::size_t i = np + 1; i-- > 0;)
    for (std::size_t j = w; j-- > 0;) {
      const std::size_t k = i * w + j;
      if (i + 1 <= np) total[k] += total[k + w], bad[k] += bad[k + w];
      if (j + 1 < w) total[k] += total[k + 1], bad[k] += bad[k + 1];
      if (i + 1 <= np && j + 1 < w) total[k] -= total[k + w + 1], bad[k] -= bad[k + w + 1];
    }
  std::optional<GridChoice> best;
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < ns; ++j) {
      // passing (i, j) means pi >= i+1 and si >= j+1
      const std::size_t k = (i + 1) * w + (j + 1);
      if (!feasible(bad[k], total[k])) continue;
      if (!best || total[k] > best->selected)
        best = GridChoice{{grid.min_packets[i], grid.min_avg_size[j]}, total[k], bad[k]};
    }
  if (!best) throw NoFeasibleThreshold("no threshold pair meets the error bound");
  return *best;
}

struct SampledAggregates {
  std::vector<BlockAggregate> src, dst; ///< sorted by block
};

struct SampledResult : CurationResult {
  ThresholdPair src_thresholds, dst_thresholds;
  GridChoice src_choice, dst_choice;
  BlockSet src_selected, dst_selected;
  SampledAggregates aggregates;
};

/// Per-/24 packet and byte sums for each address role. TCP SYN packets are discarded
/// (and UDP unless requested); the discards are tallied into `res`.
inline SampledAggregates aggregate_sampled(std::span<const TrafficRecord> records, bool include_udp,
                                           CurationResult& res) {
  std::unordered_map<Block24Id, BlockAggregate> src, dst;
  res.tallies = {{"TCP SYN set", 0, 0}, {"Protocol excluded", 0, 0}};
  BlockSet syn_blocks, proto_blocks;
  for (const auto& r : records) {
    if (r.kind != RecordKind::packet) {
      ++res.malformed;
      continue;
    }
    ++res.records_in;
    const Block24Id sb = block_of(r.src), db = block_of(r.dst);
    res.input_blocks.insert(sb);
    res.input_blocks.insert(db);
    const bool is_tcp = r.proto == kProtoTcp, is_udp = r.proto == kProtoUdp;
    if (!(is_tcp || (include_udp && is_udp))) {
      ++res.tallies[1].records;
      proto_blocks.insert(sb);
      continue;
    }
    if (is_tcp && r.tcp_flags && (*r.tcp_flags & kTcpSyn)) {
      ++res.tallies[0].records;
      syn_blocks.insert(sb);
      continue;
    }
    const std::uint64_t size = sampled_packet_size(r);
    auto& s = src[sb];
    s.block = sb, s.packets += 1, s.bytes += size;
    auto& d = dst[db];
    d.block = db, d.packets += 1, d.bytes += size;
  }
  res.tallies[0].blocks = syn_blocks.count();
  res.tallies[1].blocks = proto_blocks.count();
  SampledAggregates out;
  for (auto& [b, a] : src) out.src.push_back(a);
  for (auto& [b, a] : dst) out.dst.push_back(a);
  auto by_block = [](const BlockAggregate& x, const BlockAggregate& y) { return x.block < y.block; };
  std::sort(out.src.begin(), out.src.end(), by_block);
  std::sort(out.dst.begin(), out.dst.end(), by_block);
  return out;
}

inline BlockSet select_blocks(std::span<const BlockAggregate> aggs, ThresholdPair t) {
  BlockSet s;
  for (const auto& a : aggs)
    if (a.passes(t)) s.insert(a.block);
  return s;
}

/// Sampled-packet curation. Source-role thresholds are the grid point that maximizes
/// selected /24s with unrouted fraction <= epsilon; destination-role thresholds do the
/// same with at most `dst_dark_bound` dark /24s. The result is the union of both roles.
inline SampledResult curate_sampled(std::span<const TrafficRecord> records, const BlockSet& routed,
                                    const BlockSet& dark, const SampledParams& params = {}) {
  SampledResult res;
  res.aggregates = aggregate_sampled(records, params.include_udp, res);
  const double eps = params.epsilon_unrouted;
  res.src_choice = grid_search(
      res.aggregates.src, params.grid, [&](Block24Id b) { return !routed.contains(b); },
      [eps](std::uint64_t bad, std::uint64_t total) {
        return static_cast<double>(bad) <= eps * static_cast<double>(total);
      });
  const auto bound = params.dst_dark_bound;
  res.dst_choice = grid_search(
      res.aggregates.dst, params.grid, [&](Block24Id b) { return dark.contains(b); },
      [bound](std::uint64_t bad, std::uint64_t) { return bad <= bound; });
  res.src_thresholds = res.src_choice.thresholds;
  res.dst_thresholds = res.dst_choice.thresholds;
  res.src_selected = select_blocks(res.aggregates.src, res.src_thresholds);
  res.dst_selected = select_blocks(res.aggregates.dst, res.dst_thresholds);
  res.blocks = res.src_selected | res.dst_selected;
  res.tallies.push_back({"Source below thresholds", 0, res.aggregates.src.size() - res.src_choice.selected});
  res.tallies.push_back({"Destination below thresholds", 0, res.aggregates.dst.size() - res.dst_choice.selected});

  for (const auto& r : records) {
    if (r.kind != RecordKind::packet) continue;
    const bool is_tcp = r.proto == kProtoTcp;
    if (!(is_tcp || (params.include_udp && r.proto == kProtoUdp))) continue;
    if (is_tcp && r.tcp_flags && (*r.tcp_flags & kTcpSyn)) continue;
    const Block24Id sb = block_of(r.src), db = block_of(r.dst);
    const bool keep_src = res.src_selected.contains(sb), keep_dst = res.dst_selected.contains(db);
    if (keep_src || keep_dst) ++res.records_kept;
    if (keep_src) res.observations.push_back({r.ts, sb});
    if (keep_dst) res.observations.push_back({r.ts, db});
  }
  return res;
}

// ---------------------------------------------------------------------------
// Traffic components
// ---------------------------------------------------------------------------

/// Classifier rule: matches on protocol, on either port, and/or on the producer tag.
struct ClassRule {
  std::string cls;
  std::optional<std::uint8_t> proto;
  std::vector<std::uint16_t> ports;
  std::optional<std::string> tag;

  bool matches(const TrafficRecord& r) const {
    if (proto && r.proto != *proto) return false;
    if (!ports.empty()) {
      auto hit = [&](const std::optional<std::uint16_t>& p) {
        return p && std::find(ports.begin(), ports.end(), *p) != ports.end();
      };
      if (!hit(r.src_port) && !hit(r.dst_port)) return false;
    }
    if (tag && r.cls != *tag) return false;
    return true;
  }
};

/// `[class]` sections with optional `proto`, `ports` (comma list) and `tag` keys.
inline std::vector<ClassRule> parse_class_rules(std::istream& in) {
  auto kv = KeyValueConfig::parse(in);
  if (!kv.top().empty()) throw ConfigError("class rules must live in [class] sections");
  std::vector<ClassRule> rules;
  for (const auto& [name, sec] : kv.sections()) {
    ClassRule r;
    r.cls = name;
    for (const auto& [k, v] : sec) {
      if (k == "proto") r.proto = detail::config_uint<std::uint8_t>(k, v);
      else if (k == "ports")
        for (const auto& p : detail::config_list(v)) r.ports.push_back(detail::config_uint<std::uint16_t>(k, p));
      else if (k == "tag") r.tag = v;
      else throw ConfigError("unknown key '" + k + "' in class [" + name + "]");
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

struct ComponentRow {
  std::string cls;
  std::uint64_t blocks = 0;
  std::uint64_t unique_blocks = 0; ///< blocks seen in this class and no other
  friend bool operator==(const ComponentRow&, const ComponentRow&) = default;
};

/// Class of a record: the first matching rule, else the producer tag, else "unclassified".
inline std::string classify_record(const TrafficRecord& r, std::span<const ClassRule> rules) {
  for (const auto& rule : rules)
    if (rule.matches(r)) return rule.cls;
  return r.cls.empty() ? std::string("unclassified") : r.cls;
}

/// Per-class /24 counts and unique contributions. Rows follow rule order, then any other
/// classes in name order. Blocks come from the source address, or from the remote side
/// when a monitored set is given.
inline std::vector<ComponentRow> traffic_component_tally(std::span<const TrafficRecord> records,
                                                         std::span<const ClassRule> rules,
                                                         const BlockSet* monitored = nullptr) {
  std::vector<std::string> order;
  for (const auto& r : rules)
    if (std::find(order.begin(), order.end(), r.cls) == order.end()) order.push_back(r.cls);
  std::map<std::string, std::size_t> extra;
  std::vector<std::string> labels;
  labels.reserve(records.size());
  for (const auto& r : records) {
    labels.push_back(classify_record(r, rules));
    if (std::find(order.begin(), order.end(), labels.back()) == order.end()) extra.emplace(labels.back(), 0);
  }
  for (const auto& [name, _] : extra) order.push_back(name);
  if (order.size() > 64) throw ConfigError("at most 64 traffic classes are supported");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < order.size(); ++i) index.emplace(order[i], i);

  std::unordered_map<Block24Id, std::uint64_t> masks;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    const Block24Id b = block_of(monitored ? remote_address(r, *monitored) : r.src);
    masks[b] |= std::uint64_t{1} << index.at(labels[k]);
  }
  std::vector<ComponentRow> rows(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rows[i].cls = order[i];
  for (const auto& [b, m] : masks) {
    for (std::uint64_t w = m; w; w &= w - 1) ++rows[static_cast<std::size_t>(std::countr_zero(w))].blocks;
    if (std::popcount(m) == 1) ++rows[static_cast<std::size_t>(std::countr_zero(m))].unique_blocks;
  }
  return rows;
}

} // namespace v4census

#endif
