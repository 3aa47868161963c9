#ifndef V4CENSUS_SYNTH_HPP
#define V4CENSUS_SYNTH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "v4census/active.hpp"
#include "v4census/bgp.hpp"
#include "v4census/blockmap.hpp"
#include "v4census/config.hpp"
#include "v4census/curation.hpp"
#include "v4census/mapping.hpp"
#include "v4census/registry.hpp"
#include "v4census/report.hpp"

namespace v4census {

/// Deterministic random source: raw std::mt19937_64 output (fully specified by the
/// standard) with hand-written conversions, so sequences agree across platforms.
class SynthRng {
public:
  explicit SynthRng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do x = eng_();
    while (x >= limit);
    return x % n;
  }

  /// Uniform integer in [lo, hi].
  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

  template <class T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

private:
  std::mt19937_64 eng_;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  Prefix window{Ipv4Address{20u << 24}, 8};
  /// Target shares of reserved, available, unrouted assigned, routed unused, used.
  std::array<double, 5> proportions{0.04, 0.06, 0.20, 0.35, 0.35};
  std::uint32_t mean_run_blocks = 16;

  std::uint32_t peer_threshold = 10;
  std::uint32_t bgp_peers = 24;
  std::uint32_t bgp_days = 2;
  double unrouted_visible_fraction = 0.3;  ///< unrouted-assigned runs seen by a few peers
  double available_visible_fraction = 0.2; ///< available runs announced by many peers
  double dark_fraction = 0.1;              ///< routed-unused blocks in the dark validation set

  double detect_isi = 0.6, detect_http = 0.4, detect_ark = 0.15;
  double detect_darknet = 0.5, detect_flowlog = 0.45, detect_bidirlog = 0.5, detect_sampled = 0.45;
  double special_octet_fraction = 0.08;

  double spoof_rate = 1.0; ///< 0 disables every spoofed, scanning and noise record
  double darknet_unrouted_fraction = 0.316;
  double darknet_spoof_routed_fraction = 0.1;
  double spoof_leak = 0.0004; ///< spoofed darknet records that carry no filterable signature
  double noise_fraction = 0.04;

  double multi_origin_fraction = 0.02, as_set_fraction = 0.01, multi_country_fraction = 0.01;

  Prefix darknet_prefix{Ipv4Address{44u << 24}, 8};
  Prefix local_prefix{Ipv4Address{(130u << 24) | (59u << 16)}, 16};
  std::int64_t start_time = 1372636800;
  std::uint32_t days = 7;

  void validate() const {
    double sum = 0;
    for (double p : proportions) {
      if (p < 0 || p > 1) throw ConfigError("leaf proportions must lie in [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("leaf proportions must sum to 1");
    for (double p : {unrouted_visible_fraction, available_visible_fraction, dark_fraction, detect_isi, detect_http,
                     detect_ark, detect_darknet, detect_flowlog, detect_bidirlog, detect_sampled,
                     special_octet_fraction, spoof_rate, darknet_spoof_routed_fraction, spoof_leak, noise_fraction,
                     multi_origin_fraction, as_set_fraction, multi_country_fraction})
      if (!(p >= 0 && p <= 1)) throw ConfigError("probabilities must lie in [0, 1]");
    if (!(darknet_unrouted_fraction >= 0 && darknet_unrouted_fraction < 1))
      throw ConfigError("darknet_unrouted_fraction must lie in [0, 1)");
    if (window.length > 24) throw ConfigError("window must be /24 or shorter");
    if (window.contains(darknet_prefix) || darknet_prefix.contains(window) || window.contains(local_prefix) ||
        local_prefix.contains(window))
      throw ConfigError("darknet and local prefixes must lie outside the window");
    if (peer_threshold < 1 || bgp_peers < peer_threshold) throw ConfigError("need bgp_peers >= peer_threshold >= 1");
    if (bgp_days < 1 || days < 2 || mean_run_blocks < 1) throw ConfigError("days, bgp_days and run length must be positive");
  }
};

/// Reads `key = value` lines; unknown keys are errors. Proportions are given as
/// p_reserved, p_available, p_unrouted_assigned, p_routed_unused, p_used.
inline ScenarioConfig parse_scenario_config(std::istream& in) {
  using detail::config_double;
  using detail::config_uint;
  auto kv = KeyValueConfig::parse(in);
  if (!kv.sections().empty()) throw ConfigError("scenario config takes top-level keys only");
  ScenarioConfig c;
  std::map<std::string, double*> doubles{
      {"p_reserved", &c.proportions[0]}, {"p_available", &c.proportions[1]},
      {"p_unrouted_assigned", &c.proportions[2]}, {"p_routed_unused", &c.proportions[3]},
      {"p_used", &c.proportions[4]}, {"unrouted_visible_fraction", &c.unrouted_visible_fraction},
      {"available_visible_fraction", &c.available_visible_fraction}, {"dark_fraction", &c.dark_fraction},
      {"detect_isi", &c.detect_isi}, {"detect_http", &c.detect_http}, {"detect_ark", &c.detect_ark},
      {"detect_darknet", &c.detect_darknet}, {"detect_flowlog", &c.detect_flowlog},
      {"detect_bidirlog", &c.detect_bidirlog}, {"detect_sampled", &c.detect_sampled},
      {"special_octet_fraction", &c.special_octet_fraction}, {"spoof_rate", &c.spoof_rate},
      {"darknet_unrouted_fraction", &c.darknet_unrouted_fraction},
      {"darknet_spoof_routed_fraction", &c.darknet_spoof_routed_fraction}, {"spoof_leak", &c.spoof_leak},
      {"noise_fraction", &c.noise_fraction}, {"multi_origin_fraction", &c.multi_origin_fraction},
      {"as_set_fraction", &c.as_set_fraction}, {"multi_country_fraction", &c.multi_country_fraction}};
  std::map<std::string, std::uint32_t*> uints{{"mean_run_blocks", &c.mean_run_blocks},
                                              {"peer_threshold", &c.peer_threshold},
                                              {"bgp_peers", &c.bgp_peers},
                                              {"bgp_days", &c.bgp_days},
                                              {"days", &c.days}};
  for (const auto& [k, v] : kv.top()) {
    if (auto d = doubles.find(k); d != doubles.end()) *d->second = config_double(k, v);
    else if (auto u = uints.find(k); u != uints.end()) *u->second = config_uint<std::uint32_t>(k, v);
    else if (k == "seed") c.seed = config_uint<std::uint64_t>(k, v);
    else if (k == "start_time") {
      auto t = parse_int(v);
      if (!t) throw ConfigError("bad start_time");
      c.start_time = *t;
    } else if (k == "window" || k == "darknet_prefix" || k == "local_prefix") {
      auto p = parse_prefix(v);
      if (!p) throw ConfigError("bad prefix for '" + k + "'");
      (k == "window" ? c.window : k == "darknet_prefix" ? c.darknet_prefix : c.local_prefix) = *p;
    } else throw ConfigError("unknown scenario key '" + k + "'");
  }
  c.validate();
  return c;
}

/// Names of the seven sources in registration order.
inline const std::vector<std::string>& synth_source_names() {
  static const std::vector<std::string> names{"icmp", "http", "traceroute", "darknet", "flowlog", "bidirlog", "sampled"};
  return names;
}

struct GroundTruth {
  Window window;
  BlockLabelMap labels;
  BlockSet routed, used, dark;
  std::map<std::string, BlockSet> visible; ///< per source: blocks with at least one clean observation
  std::uint64_t darknet_unrouted_spoof_blocks = 0;
  std::uint64_t darknet_input_blocks = 0;
  double expected_detectability = 0; ///< P(a used block is seen by at least one source)
};

struct SynthWorld {
  ScenarioConfig config;
  GroundTruth truth;
  std::vector<DelegationRecord> delegations;
  std::vector<Prefix> reserved;
  std::vector<std::uint8_t> legacy;
  std::vector<PeerVisibilityRecord> visibility;
  std::vector<TrafficRecord> darknet, flowlog, bidirlog, sampled;
  DarknetFilterConfig darknet_filters;
  std::vector<ProbeRecord> probes;
  std::vector<PrefixOrigin> prefix2as;
  std::vector<GeoRange> geo;
  ContinentMap continents;
  std::map<std::string, double> indicator;
};

namespace detail {

struct Run {
  Block24Id first;
  std::uint32_t length;
  int category; // 0 reserved, 1 available, 2 unrouted assigned, 3 routed
};

inline const std::vector<std::pair<std::string, std::string>>& synth_countries() {
  static const std::vector<std::pair<std::string, std::string>> c{
      {"US", "North America"}, {"CA", "North America"}, {"MX", "North America"}, {"BR", "South America"},
      {"AR", "South America"}, {"DE", "Europe"},        {"GB", "Europe"},        {"FR", "Europe"},
      {"IT", "Europe"},        {"NL", "Europe"},        {"CN", "Asia"},          {"JP", "Asia"},
      {"KR", "Asia"},          {"IN", "Asia"},          {"ZA", "Africa"},        {"EG", "Africa"},
      {"AU", "Oceania"},       {"NZ", "Oceania"}};
  return c;
}

inline Ipv4Address host_in(SynthRng& rng, Block24Id b, unsigned lo = 1, unsigned hi = 254) {
  return Ipv4Address{(b << 8) | static_cast<std::uint32_t>(rng.range(lo, hi))};
}

inline Ipv4Address addr_in(SynthRng& rng, const Prefix& p) {
  const std::uint64_t size = std::uint64_t{1} << (32 - p.length);
  return Ipv4Address{p.first() + static_cast<std::uint32_t>(rng.below(size))};
}

inline TrafficRecord packet(std::int64_t ts, Ipv4Address src, Ipv4Address dst, std::uint8_t proto) {
  TrafficRecord r;
  r.kind = RecordKind::packet;
  r.ts = ts;
  r.src = src;
  r.dst = dst;
  r.proto = proto;
  return r;
}

inline TrafficRecord flow(std::int64_t ts, Ipv4Address src, Ipv4Address dst, std::uint8_t proto, std::uint64_t pkts,
                          std::uint64_t bytes) {
  TrafficRecord r;
  r.kind = RecordKind::flow;
  r.ts = ts;
  r.src = src;
  r.dst = dst;
  r.proto = proto;
  r.packets = pkts;
  r.bytes = bytes;
  return r;
}

inline void sort_by_time(std::vector<TrafficRecord>& v) {
  std::stable_sort(v.begin(), v.end(), [](const TrafficRecord& a, const TrafficRecord& b) { return a.ts < b.ts; });
}

} // namespace detail

/// Builds a synthetic world with a hidden taxonomy and every input dataset.
inline SynthWorld generate(const ScenarioConfig& cfg) {
  using namespace detail;
  cfg.validate();
  SynthWorld w;
  w.config = cfg;
  SynthRng rng(cfg.seed);
  const Window win = Window::of(cfg.window);
  GroundTruth& t = w.truth;
  t.window = win;
  const std::int64_t t_begin = cfg.start_time, t_end = cfg.start_time + std::int64_t{cfg.days} * 86400;
  auto any_time = [&] { return t_begin + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(t_end - t_begin))); };

  // --- Registry-level runs -------------------------------------------------
  const auto& P = cfg.proportions;
  const std::array<double, 4> run_weights{P[0], P[1], P[2], P[3] + P[4]};
  const double p_used_given_routed = (P[3] + P[4]) > 0 ? P[4] / (P[3] + P[4]) : 0.0;
  std::vector<Run> runs;
  for (std::uint64_t b = win.lo; b < win.hi;) {
    const auto len = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(rng.range(1, 2 * std::uint64_t{cfg.mean_run_blocks} - 1), win.hi - b));
    double u = rng.unit(), acc = 0;
    int cat = 3;
    for (int k = 0; k < 4; ++k) {
      acc += run_weights[static_cast<std::size_t>(k)];
      if (u < acc) {
        cat = k;
        break;
      }
    }
    runs.push_back({static_cast<Block24Id>(b), len, cat});
    b += len;
  }
  std::vector<Block24Id> routed_list, unrouted_list, used_list;
  for (const auto& r : runs)
    for (std::uint32_t i = 0; i < r.length; ++i) {
      const Block24Id b = r.first + i;
      TaxonomyLabel l = TaxonomyLabel::Reserved;
      switch (r.category) {
        case 0: l = TaxonomyLabel::Reserved; break;
        case 1: l = TaxonomyLabel::Available; break;
        case 2: l = TaxonomyLabel::UnroutedAssigned; break;
        default: l = rng.chance(p_used_given_routed) ? TaxonomyLabel::Used : TaxonomyLabel::RoutedUnused; break;
      }
      t.labels.set_label(b, l);
      if (r.category == 3) {
        t.routed.insert(b);
        routed_list.push_back(b);
        if (l == TaxonomyLabel::Used) {
          t.used.insert(b);
          used_list.push_back(b);
        } else if (rng.chance(cfg.dark_fraction)) {
          t.dark.insert(b);
        }
      } else {
        unrouted_list.push_back(b);
      }
    }

  // --- Registry files --------------------------------------------------------
  static constexpr std::array<Rir, 5> rirs{Rir::arin, Rir::ripencc, Rir::apnic, Rir::lacnic, Rir::afrinic};
  const auto& countries = synth_countries();
  std::vector<std::size_t> run_country(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    run_country[i] = rng.below(countries.size());
    const std::uint32_t first = r.first << 8, last = ((r.first + r.length) << 8) - 1;
    if (r.category == 0) {
      for (const auto& p : range_to_prefixes(first, last)) w.reserved.push_back(p);
      continue;
    }
    DelegationRecord d;
    d.registry = rirs[rng.below(rirs.size())];
    d.cc = countries[run_country[i]].first;
    d.date = "20" + std::to_string(10 + rng.below(4)) + "0" + std::to_string(1 + rng.below(9)) + "15";
    d.start = Ipv4Address{first};
    d.count = std::uint64_t{r.length} * 256;
    if (r.category == 1) {
      d.status = rng.chance(0.5) ? DelegationStatus::available : DelegationStatus::ianapool;
      d.cc = "ZZ";
      w.delegations.push_back(d);
    } else {
      d.status = rng.chance(0.5) ? DelegationStatus::assigned : DelegationStatus::allocated;
      if (r.length >= 2 && rng.chance(0.2)) {
        // split at a half block so a partial /24 appears on each side
        DelegationRecord a = d, b = d;
        a.count = 256 + 128;
        b.start = Ipv4Address{first + 256 + 128};
        b.count = d.count - a.count;
        w.delegations.push_back(a);
        w.delegations.push_back(b);
      } else {
        w.delegations.push_back(d);
      }
    }
  }

  // --- BGP visibility --------------------------------------------------------
  std::vector<std::string> peers;
  for (std::uint32_t i = 0; i < cfg.bgp_peers; ++i) peers.push_back("peer" + std::to_string(100 + i));
  std::vector<std::string> days;
  for (std::uint32_t d = 0; d < cfg.bgp_days; ++d) days.push_back("2013-07-" + std::string(d + 1 < 10 ? "0" : "") + std::to_string(d + 1));
  auto announce = [&](const std::vector<Prefix>& prefixes, std::uint32_t max_peers_any_day, bool reach_max) {
    const std::size_t peak_day = rng.below(days.size());
    for (std::size_t d = 0; d < days.size(); ++d) {
      std::uint32_t k = max_peers_any_day;
      if (d != peak_day || !reach_max) k = static_cast<std::uint32_t>(rng.range(0, max_peers_any_day));
      if (k == 0) continue;
      std::vector<std::string> chosen = peers;
      rng.shuffle(chosen);
      chosen.resize(k);
      for (const auto& peer : chosen)
        for (const auto& p : prefixes) {
          w.visibility.push_back({days[d], peer, p});
          if (rng.chance(0.02)) w.visibility.push_back({days[d], peer, p}); // duplicate dump entry
        }
    }
  };
  for (const auto& r : runs) {
    const std::uint32_t first = r.first << 8, last = ((r.first + r.length) << 8) - 1;
    const auto prefixes = range_to_prefixes(first, last);
    if (r.category == 3) {
      announce(prefixes, static_cast<std::uint32_t>(rng.range(cfg.peer_threshold, cfg.bgp_peers)), true);
    } else if (r.category == 2 && rng.chance(cfg.unrouted_visible_fraction) && cfg.peer_threshold > 1) {
      announce(prefixes, static_cast<std::uint32_t>(rng.range(1, cfg.peer_threshold - 1)), true);
    } else if (r.category == 1 && rng.chance(cfg.available_visible_fraction)) {
      announce(prefixes, static_cast<std::uint32_t>(rng.range(cfg.peer_threshold, cfg.bgp_peers)), true);
    } else if (r.category == 2 && rng.chance(0.05)) {
      // sub-/24 announcements never make a block routed
      w.visibility.push_back({days.front(), peers.front(), Prefix{Ipv4Address{first}, 25}});
    }
  }

  // --- Detection per source -------------------------------------------------
  const std::array<double, 7> detect{cfg.detect_isi,     cfg.detect_http,     cfg.detect_ark,    cfg.detect_darknet,
                                     cfg.detect_flowlog, cfg.detect_bidirlog, cfg.detect_sampled};
  const auto& names = synth_source_names();
  std::array<std::vector<Block24Id>, 7> detected;
  double miss_all = 1.0;
  for (double p : detect) miss_all *= 1.0 - p;
  t.expected_detectability = 1.0 - miss_all;
  for (Block24Id b : used_list)
    for (std::size_t s = 0; s < 7; ++s)
      if (rng.chance(detect[s])) detected[s].push_back(b);
  for (std::size_t s = 0; s < 7; ++s) {
    BlockSet v;
    for (Block24Id b : detected[s]) v.insert(b);
    t.visible[names[s]] = v;
  }
  const bool spoofing = cfg.spoof_rate > 0;
  std::vector<Block24Id> all_blocks;
  for (std::uint32_t b = win.lo; b < win.hi; ++b) all_blocks.push_back(b);
  auto noise_pool = [&](double fraction) {
    std::vector<Block24Id> pool;
    if (!spoofing) return pool;
    const auto n = static_cast<std::size_t>(std::llround(fraction * cfg.spoof_rate * static_cast<double>(win.size())));
    for (std::size_t i = 0; i < n; ++i) pool.push_back(rng.pick(all_blocks));
    return pool;
  };

  // --- Active probing --------------------------------------------------------
  for (Block24Id b : detected[0]) {
    if (rng.chance(cfg.special_octet_fraction)) {
      static constexpr std::array<unsigned, 3> special{0, 1, 255};
      const Ipv4Address a{(b << 8) | special[rng.below(3)]};
      w.probes.push_back({ProbeKind::icmp_echo, a, a, 1});
      continue;
    }
    const auto n = rng.range(1, 6);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto a = host_in(rng, b, 2, 254);
      w.probes.push_back({ProbeKind::icmp_echo, a, a, 1});
    }
  }
  for (std::size_t i = 0; i < detected[0].size() / 50 + 1; ++i) {
    const Block24Id b = rng.pick(all_blocks);
    const auto target = host_in(rng, b);
    w.probes.push_back({ProbeKind::icmp_echo, target, Ipv4Address{target.value ^ 0x100u}, 1});
  }
  for (Block24Id b : detected[1]) w.probes.push_back({ProbeKind::http_get, host_in(rng, b), host_in(rng, b), rng.range(1, 5)});
  for (Block24Id b : detected[2]) {
    const auto hop = host_in(rng, b);
    w.probes.push_back({ProbeKind::ttl_exceeded, Ipv4Address{hop.value ^ 0x00ff0000u}, hop, 1});
  }

  // --- Darknet -------------------------------------------------------------
  {
    auto& out = w.darknet;
    for (Block24Id b : detected[3]) {
      const auto n = rng.range(1, 4);
      for (std::uint64_t i = 0; i < n; ++i) {
        const double u = rng.unit();
        const std::uint8_t proto = u < 0.7 ? kProtoTcp : u < 0.9 ? kProtoUdp : kProtoIcmp;
        auto r = packet(any_time(), host_in(rng, b), addr_in(rng, cfg.darknet_prefix), proto);
        r.ttl = static_cast<std::uint8_t>(rng.range(30, 128));
        if (proto == kProtoTcp) {
          r.tcp_flags = kTcpSyn;
          r.src_port = static_cast<std::uint16_t>(rng.range(1024, 65535));
          r.dst_port = static_cast<std::uint16_t>(rng.pick(std::vector<std::uint64_t>{22, 23, 80, 443, 445, 3389}));
          r.payload_len = 0;
        } else if (proto == kProtoUdp) {
          r.src_port = static_cast<std::uint16_t>(rng.range(1024, 65535));
          r.dst_port = static_cast<std::uint16_t>(rng.pick(std::vector<std::uint64_t>{53, 123, 137, 1900, 6881}));
          r.payload_len = static_cast<std::uint32_t>(rng.range(8, 400));
        } else {
          r.payload_len = 56;
        }
        out.push_back(r);
      }
      if (rng.chance(0.05)) {
        auto r = packet(any_time(), host_in(rng, b), addr_in(rng, cfg.darknet_prefix), kProtoUdp);
        r.ttl = 64;
        r.payload_len = 0;
        out.push_back(r);
      }
    }
    if (spoofing) {
      BlockSet routed_spoof;
      for (Block24Id b : routed_list)
        if (rng.chance(cfg.darknet_spoof_routed_fraction * cfg.spoof_rate)) routed_spoof.insert(b);
      BlockSet legit_or_routed = routed_spoof;
      for (Block24Id b : detected[3]) legit_or_routed.insert(b);
      const double target = cfg.darknet_unrouted_fraction;
      auto k = static_cast<std::size_t>(
          std::llround(target / (1.0 - target) * static_cast<double>(legit_or_routed.count())));
      std::vector<Block24Id> pool = unrouted_list;
      rng.shuffle(pool);
      k = std::min(k, pool.size());
      std::vector<Block24Id> spoof_blocks = routed_spoof.to_vector();
      spoof_blocks.insert(spoof_blocks.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
      t.darknet_unrouted_spoof_blocks = k;
      t.darknet_input_blocks = legit_or_routed.count() + k;

      const std::int64_t ev_from = t_begin + 86400, ev_to = t_begin + 2 * 86400;
      SpecificFilter ev;
      ev.name = "chargen-flood";
      ev.from = ev_from;
      ev.to = ev_to;
      ev.proto = kProtoUdp;
      ev.dst_port = 19;
      w.darknet_filters.specific.push_back(ev);

      for (Block24Id b : spoof_blocks) {
        const auto n = rng.range(1, 3);
        for (std::uint64_t i = 0; i < n; ++i) {
          auto r = packet(any_time(), host_in(rng, b), addr_in(rng, cfg.darknet_prefix), kProtoTcp);
          r.ttl = static_cast<std::uint8_t>(rng.range(40, 120));
          r.tcp_flags = kTcpSyn;
          r.src_port = static_cast<std::uint16_t>(rng.range(1024, 65535));
          r.dst_port = 80;
          r.payload_len = 0;
          if (!rng.chance(cfg.spoof_leak)) {
            const double u = rng.unit();
            if (u < 0.80) {
              r.ttl = static_cast<std::uint8_t>(rng.range(201, 255));
              if (rng.chance(0.3)) r.proto = kProtoUdp, r.tcp_flags.reset(), r.payload_len = 20;
            } else if (u < 0.82) {
              r.src = Ipv4Address{b << 8};
            } else if (u < 0.86) {
              r.src = Ipv4Address{(b << 8) | 255u};
            } else if (u < 0.89) {
              r.proto = rng.chance(0.5) ? 47 : 50;
              r.tcp_flags.reset();
              r.src_port.reset();
              r.dst_port.reset();
            } else if (u < 0.90) {
              r.dst = r.src;
            } else if (u < 0.93) {
              r.tcp_flags = 0;
            } else if (u < 0.96) {
              r.proto = kProtoUdp;
              r.tcp_flags.reset();
              r.dst_port = 53;
              r.payload_len = 0;
            } else {
              r.ts = ev_from + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(ev_to - ev_from)));
              r.proto = kProtoUdp;
              r.tcp_flags.reset();
              r.dst_port = 19;
              r.payload_len = static_cast<std::uint32_t>(rng.range(1, 100));
            }
          }
          out.push_back(r);
        }
      }
    }
    sort_by_time(out);
  }

  // --- Unsampled flow exports ---------------------------------------------
  {
    auto& out = w.flowlog;
    for (Block24Id b : detected[4]) {
      const auto n = rng.range(1, 3);
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto pkts = rng.range(5, 80);
        auto r = flow(any_time(), host_in(rng, b), addr_in(rng, cfg.local_prefix), kProtoTcp, pkts, pkts * rng.range(80, 1400));
        if (rng.chance(0.5)) std::swap(r.src, r.dst);
        r.bidirectional = true;
        out.push_back(r);
      }
    }
    for (Block24Id b : noise_pool(cfg.noise_fraction)) {
      const double u = rng.unit();
      TrafficRecord r;
      if (u < 0.4) {
        const auto pkts = rng.range(1, 3);
        r = flow(any_time(), host_in(rng, b), addr_in(rng, cfg.local_prefix), kProtoTcp, pkts, pkts * rng.range(40, 60));
        r.bidirectional = false;
      } else if (u < 0.6) {
        const auto pkts = rng.range(1, 4);
        r = flow(any_time(), host_in(rng, b), addr_in(rng, cfg.local_prefix), kProtoTcp, pkts, pkts * rng.range(40, 1000));
        r.bidirectional = true;
      } else if (u < 0.8) {
        const auto pkts = rng.range(5, 40);
        r = flow(any_time(), host_in(rng, b), addr_in(rng, cfg.local_prefix), kProtoTcp, pkts, pkts * rng.range(40, 79));
        r.bidirectional = true;
      } else {
        const auto pkts = rng.range(5, 40);
        r = flow(any_time(), host_in(rng, b), addr_in(rng, cfg.local_prefix), kProtoUdp, pkts, pkts * rng.range(80, 500));
        r.bidirectional = true;
      }
      out.push_back(r);
    }
    sort_by_time(out);
  }

  // --- Bidirectional flow logs ---------------------------------------------
  {
    auto& out = w.bidirlog;
    for (Block24Id b : detected[5]) {
      const auto n = rng.range(1, 3);
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto pkts = rng.range(3, 200);
        const auto local = addr_in(rng, cfg.local_prefix), remote = host_in(rng, b);
        if (rng.chance(0.6)) {
          const bool out_bound = rng.chance(0.8);
          auto r = flow(any_time(), out_bound ? local : remote, out_bound ? remote : local, kProtoTcp, pkts, pkts * rng.range(60, 1400));
          r.bidirectional = true;
          r.initiated_locally = out_bound;
          r.cls = rng.chance(0.5) ? "web" : "p2p";
          out.push_back(r);
        } else {
          auto r = flow(any_time(), local, remote, kProtoUdp, pkts, pkts * rng.range(60, 1200));
          r.bidirectional = true;
          r.initiated_locally = true;
          r.payload_fwd = true;
          r.payload_rev = true;
          r.cls = rng.chance(0.5) ? "p2p" : "dns";
          out.push_back(r);
        }
      }
    }
    for (Block24Id b : noise_pool(cfg.noise_fraction)) {
      const auto local = addr_in(rng, cfg.local_prefix), remote = host_in(rng, b);
      const double u = rng.unit();
      TrafficRecord r;
      if (u < 0.5) {
        r = flow(any_time(), remote, local, kProtoUdp, 1, 120);
        r.initiated_locally = false;
        r.payload_fwd = true;
        r.payload_rev = rng.chance(0.3);
      } else if (u < 0.8) {
        r = flow(any_time(), local, remote, kProtoUdp, 1, 80);
        r.initiated_locally = true;
        r.payload_fwd = true;
        r.payload_rev = false;
      } else {
        r = flow(any_time(), remote, local, kProtoIcmp, 1, 84);
        r.initiated_locally = false;
      }
      r.bidirectional = false;
      out.push_back(r);
    }
    sort_by_time(out);
  }

  // --- Sampled packets --------------------------------------------------------
  {
    auto& out = w.sampled;
    const auto& vs = detected[6];
    if (!vs.empty()) {
      for (Block24Id b : vs) {
        const auto n = rng.range(2, 12);
        for (std::uint64_t i = 0; i < n; ++i) {
          auto r = packet(any_time(), host_in(rng, b), host_in(rng, rng.pick(vs)), kProtoTcp);
          r.ttl = static_cast<std::uint8_t>(rng.range(40, 128));
          r.tcp_flags = kTcpAck | kTcpPsh;
          r.src_port = 443;
          r.dst_port = static_cast<std::uint16_t>(rng.range(1024, 65535));
          r.bytes = rng.range(200, 1500);
          r.payload_len = static_cast<std::uint32_t>(*r.bytes - 40);
          out.push_back(r);
        }
        if (rng.chance(0.2)) {
          auto r = packet(any_time(), host_in(rng, b), host_in(rng, rng.pick(vs)), kProtoTcp);
          r.ttl = 64;
          r.tcp_flags = kTcpSyn;
          r.bytes = 60;
          out.push_back(r);
        }
        if (rng.chance(0.1)) {
          auto r = packet(any_time(), host_in(rng, b), host_in(rng, rng.pick(vs)), kProtoUdp);
          r.ttl = 64;
          r.bytes = rng.range(60, 600);
          out.push_back(r);
        }
      }
      for (Block24Id b : noise_pool(cfg.noise_fraction)) {
        const auto n = rng.range(1, 2);
        for (std::uint64_t i = 0; i < n; ++i) {
          auto r = packet(any_time(), host_in(rng, b), host_in(rng, rng.pick(vs)), kProtoTcp);
          r.ttl = static_cast<std::uint8_t>(rng.range(30, 255));
          r.tcp_flags = rng.chance(0.5) ? static_cast<std::uint8_t>(kTcpRst | kTcpAck) : kTcpSyn;
          r.bytes = rng.range(40, 60);
          out.push_back(r);
        }
      }
      if (spoofing) {
        const auto dark = t.dark.to_vector(win);
        for (Block24Id d : dark) {
          if (!rng.chance(0.5 * cfg.spoof_rate)) continue;
          auto r = packet(any_time(), host_in(rng, rng.pick(vs)), host_in(rng, d), kProtoTcp);
          r.ttl = 50;
          r.tcp_flags = kTcpAck;
          r.bytes = 40;
          out.push_back(r);
        }
      }
    }
    sort_by_time(out);
  }

  // --- Prefix-to-AS and geolocation -----------------------------------------
  {
    const std::size_t n_as = std::max<std::size_t>(8, runs.size() / 12);
    auto asn_of = [&](std::size_t i) { return static_cast<std::uint32_t>(64512 + i); };
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& r = runs[i];
      if (r.category != 3) continue;
      const std::uint32_t first = r.first << 8, last = ((r.first + r.length) << 8) - 1;
      const std::uint32_t a = asn_of(rng.below(n_as));
      Origin o{Origin::Kind::single, {a}};
      const double u = rng.unit();
      if (u < cfg.multi_origin_fraction) o = Origin{Origin::Kind::multi, {a, a + 100000}};
      else if (u < cfg.multi_origin_fraction + cfg.as_set_fraction) o = Origin{Origin::Kind::set, {a, a + 200000}};
      for (const auto& p : range_to_prefixes(first, last)) {
        w.prefix2as.push_back({p, o});
        if (rng.chance(0.05)) w.prefix2as.push_back({p, o});
      }
      if (r.length >= 2 && rng.chance(0.1)) {
        const Block24Id b = r.first + static_cast<Block24Id>(rng.below(r.length));
        w.prefix2as.push_back({Prefix{block_base(b), 24}, Origin{Origin::Kind::single, {asn_of(rng.below(n_as))}}});
      }
      if (rng.chance(0.02)) {
        const Block24Id b = r.first + static_cast<Block24Id>(rng.below(r.length));
        w.prefix2as.push_back({Prefix{block_base(b), 25}, Origin{Origin::Kind::single, {asn_of(rng.below(n_as))}}});
        w.prefix2as.push_back({Prefix{Ipv4Address{block_base(b).value | 128}, 25},
                               Origin{Origin::Kind::single, {asn_of(rng.below(n_as))}}});
      }
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& r = runs[i];
      if (r.category == 0) continue;
      const std::uint32_t first = r.first << 8, last = ((r.first + r.length) << 8) - 1;
      const auto cc = *parse_cc(countries[run_country[i]].first);
      w.geo.push_back({Ipv4Address{first}, Ipv4Address{last}, cc});
      for (std::uint32_t k = 0; k < r.length; ++k) {
        if (!rng.chance(cfg.multi_country_fraction)) continue;
        const std::uint32_t base = (r.first + k) << 8;
        const auto other = *parse_cc(countries[(run_country[i] + 1 + rng.below(countries.size() - 1)) % countries.size()].first);
        w.geo.push_back({Ipv4Address{base + 64}, Ipv4Address{base + 127}, other});
      }
    }
    for (const auto& [cc, cont] : countries) w.continents[cc] = cont;
    // Indicator loosely proportional to each country's true used space.
    std::map<std::string, double> used_per_cc;
    for (const auto& [cc, cont] : countries) used_per_cc[cc] = 0;
    for (std::size_t i = 0; i < runs.size(); ++i)
      for (std::uint32_t k = 0; k < runs[i].length; ++k)
        if (t.used.contains(runs[i].first + k)) used_per_cc[countries[run_country[i]].first] += 1;
    for (const auto& [cc, n] : used_per_cc) w.indicator[cc] = n * (0.8 + 0.4 * rng.unit()) + 10.0 * rng.unit();
  }
  return w;
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

inline std::string format_origin(const Origin& o) {
  std::string s;
  const char sep = o.kind == Origin::Kind::set ? '_' : ',';
  for (std::size_t i = 0; i < o.asns.size(); ++i) {
    if (i) s += sep;
    s += "AS" + std::to_string(o.asns[i]);
  }
  return s;
}

inline std::string format_delegation(const DelegationRecord& d) {
  static constexpr std::array<std::string_view, 5> status{"available", "ianapool", "reserved", "assigned", "allocated"};
  return std::string(kRirNames[static_cast<std::size_t>(d.registry)]) + '|' + d.cc + "|ipv4|" + to_string(d.start) +
         '|' + std::to_string(d.count) + '|' + d.date + '|' + std::string(status[static_cast<std::size_t>(d.status)]);
}

inline void write_darknet_filter_config(std::ostream& os, const DarknetFilterConfig& c) {
  os << "ttl_threshold = " << unsigned{c.ttl_threshold} << '\n';
  os << "traditional_protocols = ";
  for (std::size_t i = 0; i < c.traditional_protocols.size(); ++i)
    os << (i ? "," : "") << unsigned{c.traditional_protocols[i]};
  os << '\n';
  for (const auto& f : c.specific) {
    os << "\n[" << f.name << "]\n";
    if (f.from) os << "from = " << *f.from << '\n';
    if (f.to) os << "to = " << *f.to << '\n';
    if (f.proto) os << "proto = " << unsigned{*f.proto} << '\n';
    if (f.src_port) os << "sport = " << *f.src_port << '\n';
    if (f.dst_port) os << "dport = " << *f.dst_port << '\n';
    if (f.src) os << "src = " << to_string(*f.src) << '\n';
    if (f.dst) os << "dst = " << to_string(*f.dst) << '\n';
    if (f.ttl_min) os << "ttl_min = " << unsigned{*f.ttl_min} << '\n';
    if (f.ttl_max) os << "ttl_max = " << unsigned{*f.ttl_max} << '\n';
    if (f.tcp_flags) os << "flags = " << unsigned{*f.tcp_flags} << '\n';
    if (f.payload_len) os << "payload_len = " << *f.payload_len << '\n';
  }
}

/// Writes every dataset plus a ready-to-run pipeline config (`pipeline.ini`) and the
/// hidden truth (`truth.labels`, `truth_*.blocks`) into `dir`.
inline void write_scenario(const SynthWorld& w, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw Error("cannot write " + (dir / name).string());
    return os;
  };
  {
    auto os = open("delegations.txt");
    os << "2|synth|20130701|" << w.delegations.size() << "|19700101|20130701|+0000\n";
    for (const auto& d : w.delegations) os << format_delegation(d) << '\n';
  }
  {
    auto os = open("reserved.txt");
    for (const auto& p : w.reserved) os << to_string(p) << '\n';
  }
  {
    auto os = open("legacy.txt");
    for (auto s8 : w.legacy) os << unsigned{s8} << '\n';
  }
  {
    auto os = open("visibility.txt");
    for (const auto& r : w.visibility) os << r.day << '|' << r.peer << '|' << to_string(r.prefix) << '\n';
  }
  for (auto [name, recs] : {std::pair{"darknet", &w.darknet}, std::pair{"flowlog", &w.flowlog},
                            std::pair{"bidirlog", &w.bidirlog}, std::pair{"sampled", &w.sampled}}) {
    auto os = open(std::string(name) + ".traffic");
    write_traffic(os, *recs);
  }
  {
    auto os = open("darknet.filters");
    write_darknet_filter_config(os, w.darknet_filters);
  }
  {
    auto os = open("local.monitored");
    os << to_string(w.config.local_prefix) << '\n';
  }
  {
    auto os = open("darknet.monitored");
    os << to_string(w.config.darknet_prefix) << '\n';
  }
  {
    auto os = open("dark.blocks");
    write_block_list(os, w.truth.dark);
  }
  {
    auto os = open("probes.txt");
    for (const auto& p : w.probes)
      os << kProbeKindNames[static_cast<std::size_t>(p.kind)] << '|' << to_string(p.target) << '|'
         << to_string(p.responder) << '|' << p.count << '\n';
  }
  {
    auto os = open("prefix2as.txt");
    for (const auto& e : w.prefix2as) os << to_string(e.prefix) << '|' << format_origin(e.origin) << '\n';
  }
  {
    auto os = open("geo.txt");
    for (const auto& g : w.geo) os << to_string(g.first) << '|' << to_string(g.last) << '|' << cc_to_string(g.cc) << '\n';
  }
  {
    auto os = open("continents.txt");
    for (const auto& [cc, c] : w.continents) os << cc << '|' << c << '\n';
  }
  {
    auto os = open("indicator.txt");
    os.precision(17);
    for (const auto& [cc, v] : w.indicator) os << cc << '|' << v << '\n';
  }
  {
    auto os = open("classes.ini");
    os << "[web]\nproto = 6\nports = 80,443\n\n[dns]\nproto = 17\nports = 53\n\n[p2p]\ntag = p2p\n";
  }
  {
    auto os = open("truth.labels");
    w.truth.labels.write_snapshot(os);
  }
  {
    auto os = open("truth_routed.blocks");
    write_block_list(os, w.truth.routed);
  }
  {
    auto os = open("truth_used.blocks");
    write_block_list(os, w.truth.used);
  }
  {
    auto os = open("pipeline.ini");
    os << "out = out\n"
       << "window = " << to_string(w.config.window) << '\n'
       << "peer_threshold = " << w.config.peer_threshold << '\n'
       << "hilbert_order = 12\n"
       << "baseline = icmp\n\n"
       << "[registry]\ndelegations = delegations.txt\nreserved = reserved.txt\nlegacy = legacy.txt\n\n"
       << "[bgp]\nvisibility = visibility.txt\n\n"
       << "[active]\nprobes = probes.txt\n\n"
       << "[mapping]\nprefix2as = prefix2as.txt\ngeo = geo.txt\ncontinents = continents.txt\n"
       << "indicator = indicator.txt\n\n"
       << "[vp:darknet]\nkind = darknet\ntraffic = darknet.traffic\nfilters = darknet.filters\n"
       << "dark = dark.blocks\ngrowth_window = 86400\n\n"
       << "[vp:flowlog]\nkind = flowlog\ntraffic = flowlog.traffic\nmonitored = local.monitored\n"
       << "dark = dark.blocks\ngrowth_window = 86400\n\n"
       << "[vp:bidirlog]\nkind = bidirlog\ntraffic = bidirlog.traffic\nmonitored = local.monitored\n"
       << "dark = dark.blocks\nclasses = classes.ini\ngrowth_window = 86400\n\n"
       << "[vp:sampled]\nkind = sampled\ntraffic = sampled.traffic\ndark = dark.blocks\ngrowth_window = 86400\n";
  }
}

} // namespace v4census

#endif
