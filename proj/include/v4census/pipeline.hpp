#ifndef V4CENSUS_PIPELINE_HPP
#define V4CENSUS_PIPELINE_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "v4census/active.hpp"
#include "v4census/bgp.hpp"
#include "v4census/blockmap.hpp"
#include "v4census/census.hpp"
#include "v4census/config.hpp"
#include "v4census/curation.hpp"
#include "v4census/hilbert.hpp"
#include "v4census/mapping.hpp"
#include "v4census/registry.hpp"
#include "v4census/report.hpp"

#ifndef V4CENSUS_VERSION
#define V4CENSUS_VERSION "0.0.0"
#endif

namespace v4census {

namespace fs = std::filesystem;
using Json = nlohmann::json;

/// Unreadable or missing input file.
class InputError : public Error {
public:
  using Error::Error;
};

/// Process exit status for an exception escaping a stage.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NoFeasibleThreshold*>(&e)) return 3;
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ConfigError*>(&e))
    return 2;
  return 1;
}

// ---------------------------------------------------------------------------
// Files and digests
// ---------------------------------------------------------------------------

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open input file " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open input file " + p.string());
  return in;
}

inline void write_file(const fs::path& p, std::string_view content) {
  std::ofstream os(p, std::ios::binary);
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw Error("cannot write " + p.string());
}

template <class Fn>
void write_stream(const fs::path& p, Fn&& fn) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  fn(os);
  if (!os) throw Error("cannot write " + p.string());
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  std::ostringstream ss;
  for (unsigned i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << unsigned{md[i]};
  return ss.str();
}

inline std::string sha256_file(const fs::path& p) { return sha256_hex(read_file(p)); }

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

/// Shortest round-trip text for a double, as used in JSON output.
inline std::string fmt_double(double d) { return Json(d).dump(); }

template <class T>
T load(const fs::path& p, T (*parse)(std::istream&)) {
  auto in = open_input(p);
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

inline BlockSet load_block_list(const fs::path& p) { return load(p, &read_block_list); }

inline Json window_json(Window w) {
  return Json{{"first", block_to_string(w.lo)}, {"last", block_to_string(w.hi - 1)}, {"blocks", w.size()}};
}

// ---------------------------------------------------------------------------
// Stage: registry
// ---------------------------------------------------------------------------

inline RegistryState registry_stage(const std::vector<fs::path>& delegations, const fs::path& reserved,
                                    const std::optional<fs::path>& legacy) {
  std::vector<DelegationRecord> records;
  for (const auto& p : delegations) {
    auto r = load(p, &parse_delegations);
    records.insert(records.end(), r.begin(), r.end());
  }
  const auto rfc = load(reserved, &parse_prefix_list);
  std::vector<std::uint8_t> leg;
  if (legacy) leg = load(*legacy, &parse_legacy_list);
  return build_registry_state(records, rfc, leg);
}

inline void write_registry_outputs(const RegistryState& st, Window win, const fs::path& out) {
  write_stream(out / "registry.state", [&](std::ostream& os) { st.write(os); });
  const auto c = st.counts(win);
  Json tags = Json::object();
  for (std::uint32_t s8 = win.lo >> 16; s8 <= (win.hi - 1) >> 16; ++s8)
    tags[std::to_string(s8)] = std::string(admin_tag_name(st.slash8[s8]));
  write_file(out / "registry.json", dump_json({{"window", window_json(win)},
                                               {"reserved", c[0]},
                                               {"available", c[1]},
                                               {"assigned", c[2]},
                                               {"slash8_tags", tags}}));
}

// ---------------------------------------------------------------------------
// Stage: bgp
// ---------------------------------------------------------------------------

struct BgpStage {
  BlockSet routed;
  std::uint64_t records = 0, days = 0, ignored_long_prefixes = 0;
  std::uint64_t visible_not_assigned = 0; ///< above threshold but registry Reserved/Available
};

inline BgpStage bgp_stage(const std::vector<fs::path>& visibility, const RegistryState& reg, std::uint32_t threshold,
                          Window win) {
  if (threshold < 1) throw ConfigError("peer threshold must be >= 1");
  std::vector<PeerVisibilityRecord> recs;
  for (const auto& p : visibility) {
    auto r = load(p, &parse_visibility);
    recs.insert(recs.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  const auto idx = accumulate_visibility(recs);
  BgpStage s;
  s.routed = classify_routed(idx, reg, threshold, win);
  s.records = idx.records();
  s.days = idx.days();
  s.ignored_long_prefixes = idx.ignored_long_prefixes();
  for (std::uint32_t b = win.lo; b < win.hi; ++b)
    if (idx.count(b) >= threshold && reg[b] != RegistryStatus::Assigned) ++s.visible_not_assigned;
  return s;
}

inline void write_bgp_outputs(const BgpStage& s, std::uint32_t threshold, Window win, const fs::path& out) {
  write_stream(out / "routed.blocks", [&](std::ostream& os) { write_block_list(os, s.routed); });
  write_file(out / "bgp.json", dump_json({{"window", window_json(win)},
                                          {"peer_threshold", threshold},
                                          {"records", s.records},
                                          {"days", s.days},
                                          {"ignored_long_prefixes", s.ignored_long_prefixes},
                                          {"routed", s.routed.count()},
                                          {"visible_not_assigned", s.visible_not_assigned}}));
}

// ---------------------------------------------------------------------------
// Stage: curation
// ---------------------------------------------------------------------------

enum class VpKind : std::uint8_t { darknet, flowlog, bidirlog, sampled };

inline std::string_view vp_kind_name(VpKind k) noexcept {
  static constexpr std::array<std::string_view, 4> n{"darknet", "flowlog", "bidirlog", "sampled"};
  return n[static_cast<std::size_t>(k)];
}

inline VpKind parse_vp_kind(std::string_view s) {
  for (auto k : {VpKind::darknet, VpKind::flowlog, VpKind::bidirlog, VpKind::sampled})
    if (s == vp_kind_name(k)) return k;
  throw ConfigError("unknown vantage-point kind '" + std::string(s) + "'");
}

/// Curation settings of one vantage point; paths are resolved by the caller.
struct VpSpec {
  std::string name;
  VpKind kind = VpKind::darknet;
  fs::path traffic;
  std::optional<fs::path> monitored, dark, filters, classes;
  FlowlogParams flow;
  SampledParams sampled;
  std::int64_t growth_window = 86400;

  std::vector<fs::path> inputs() const {
    std::vector<fs::path> v{traffic};
    for (const auto* p : {&monitored, &dark, &filters, &classes})
      if (*p) v.push_back(**p);
    return v;
  }
};

struct VpOutput {
  std::string name;
  VpKind kind = VpKind::darknet;
  CurationResult res;
  CurationMetrics metrics;
  std::optional<GridChoice> src_choice, dst_choice;
  GrowthCurve growth;
  std::vector<ComponentRow> components;
  bool has_components = false;
};

inline VpOutput curation_stage(const VpSpec& spec, const BlockSet& routed, Window win) {
  TrafficReadStats stats;
  std::vector<TrafficRecord> records;
  {
    auto in = open_input(spec.traffic);
    records = read_traffic(in, &stats);
  }
  BlockSet dark = spec.dark ? load_block_list(*spec.dark) : BlockSet{};
  std::optional<BlockSet> monitored;
  if (spec.monitored) monitored = load_block_list(*spec.monitored);
  auto need_monitored = [&]() -> const BlockSet& {
    if (!monitored) throw ConfigError("vantage point '" + spec.name + "' needs a monitored prefix list");
    return *monitored;
  };

  VpOutput out;
  out.name = spec.name;
  out.kind = spec.kind;
  switch (spec.kind) {
    case VpKind::darknet: {
      DarknetFilterConfig cfg;
      if (spec.filters) cfg = load(*spec.filters, &parse_darknet_filter_config);
      out.res = curate_darknet(records, cfg);
      break;
    }
    case VpKind::flowlog: out.res = curate_flowlog(records, need_monitored(), spec.flow); break;
    case VpKind::bidirlog: out.res = curate_bidirlog(records, need_monitored()); break;
    case VpKind::sampled: {
      auto s = curate_sampled(records, routed, dark, spec.sampled);
      out.src_choice = s.src_choice;
      out.dst_choice = s.dst_choice;
      out.res = std::move(static_cast<CurationResult&>(s));
      break;
    }
  }
  out.res.malformed += stats.malformed;
  out.res.blocks.restrict_to(win);
  out.res.input_blocks.restrict_to(win);
  std::erase_if(out.res.observations, [&](const BlockObservation& o) { return !win.contains(o.block); });
  out.metrics = curation_metrics(out.res, routed, dark);
  out.growth = growth_curve(out.res.observations, spec.growth_window);
  if (spec.classes) {
    const auto rules = load(*spec.classes, &parse_class_rules);
    out.components = traffic_component_tally(records, rules, monitored ? &*monitored : nullptr);
    out.has_components = true;
  }
  return out;
}

inline Json metrics_json(const ValidationMetrics& m) {
  return {{"blocks", m.blocks},
          {"unrouted", m.unrouted},
          {"dark", m.dark},
          {"unrouted_fraction", m.unrouted_fraction},
          {"dark_fraction", m.dark_fraction}};
}

inline void write_vp_outputs(const VpOutput& v, const fs::path& out) {
  write_stream(out / (v.name + ".blocks"), [&](std::ostream& os) { write_block_list(os, v.res.blocks); });
  Json tallies = Json::array();
  for (const auto& t : v.metrics.tallies) tallies.push_back({{"filter", t.name}, {"records", t.records}, {"blocks", t.blocks}});
  Json j{{"name", v.name},
         {"kind", std::string(vp_kind_name(v.kind))},
         {"records_in", v.metrics.records_in},
         {"records_kept", v.metrics.records_kept},
         {"malformed", v.metrics.malformed},
         {"filters", tallies},
         {"before", metrics_json(v.metrics.before)},
         {"after", metrics_json(v.metrics.after)},
         {"growth", {{"windows", v.growth.points.size()}, {"relative_stddev", v.growth.relative_stddev}}}};
  if (v.src_choice) {
    auto choice = [](const GridChoice& c) {
      return Json{{"min_packets", c.thresholds.min_packets},
                  {"min_avg_size", c.thresholds.min_avg_size},
                  {"selected", c.selected},
                  {"errors", c.errors}};
    };
    j["thresholds"] = {{"source", choice(*v.src_choice)}, {"destination", choice(*v.dst_choice)}};
  }
  write_file(out / (v.name + ".metrics.json"), dump_json(j));
  std::ostringstream g;
  g << "window_start,per_window,cumulative\n";
  for (const auto& p : v.growth.points) g << p.window_start << ',' << p.per_window << ',' << p.cumulative << '\n';
  write_file(out / (v.name + ".growth.csv"), g.str());
  if (v.has_components) {
    std::ostringstream c;
    c << "class,blocks,unique_blocks\n";
    for (const auto& r : v.components) c << csv_field(r.cls) << ',' << r.blocks << ',' << r.unique_blocks << '\n';
    write_file(out / (v.name + ".components.csv"), c.str());
  }
}

// ---------------------------------------------------------------------------
// Stage: active
// ---------------------------------------------------------------------------

/// Source names of the three probe kinds, in registration order.
inline constexpr std::array<std::string_view, 3> kActiveSourceNames{"icmp", "http", "traceroute"};

struct ActiveStage {
  ActiveSets sets;
  std::uint64_t records = 0;
};

inline ActiveStage active_stage(const fs::path& probes) {
  ActiveStage s;
  const auto recs = load(probes, &parse_probes);
  s.records = recs.size();
  s.sets = ingest_probes(recs);
  return s;
}

inline void write_active_outputs(const ActiveStage& s, const fs::path& out) {
  Json counts = Json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    write_stream(out / (std::string(kActiveSourceNames[k]) + ".blocks"),
                 [&](std::ostream& os) { write_block_list(os, s.sets.by_kind[k]); });
    counts[std::string(kActiveSourceNames[k])] = s.sets.by_kind[k].count();
  }
  write_stream(out / "icmp_octets.txt", [&](std::ostream& os) { write_octet_masks(os, s.sets.icmp_octets); });
  write_file(out / "active.json",
             dump_json({{"records", s.records}, {"mismatched_icmp", s.sets.mismatched_icmp}, {"blocks", counts}}));
}

// ---------------------------------------------------------------------------
// Stage: census
// ---------------------------------------------------------------------------

struct CensusStage {
  std::vector<SourceSet> sources;
  MergeResult merge;
  BlockLabelMap labels;
  std::vector<SpecialOctetRow> special;
};

inline CensusStage census_stage(std::vector<SourceSet> sources, const BlockSet& routed, const RegistryState& reg,
                                const std::map<Block24Id, OctetMask>& icmp_octets, Window win, unsigned threads) {
  CensusStage c;
  for (auto& s : sources) s.blocks.restrict_to(win);
  BlockSet r = routed;
  r.restrict_to(win);
  c.merge = merge_used(sources, r);
  finalize_taxonomy(c.labels, r, c.merge.used, reg.status, win, threads);
  for (std::size_t i = 0; i < sources.size(); ++i) c.labels.mark_source(sources[i].blocks & r, i);
  std::vector<SourceSet> passive;
  for (const auto& s : sources)
    if (s.family == SourceFamily::passive) passive.push_back(s);
  std::map<Block24Id, OctetMask> in_window;
  for (const auto& [b, m] : icmp_octets)
    if (win.contains(b)) in_window.emplace(b, m);
  c.special = special_octet_analysis(in_window, passive);
  c.sources = std::move(sources);
  return c;
}

inline void write_census_outputs(const CensusStage& c, Window win, const fs::path& out) {
  write_stream(out / "labelmap.bin", [&](std::ostream& os) { c.labels.write_snapshot(os); });
  Json src = Json::array();
  for (std::size_t i = 0; i < c.sources.size(); ++i)
    src.push_back({{"bit", i}, {"name", c.sources[i].name}, {"family", std::string(family_name(c.sources[i].family))}});
  write_file(out / "sources.json", dump_json(src));

  const auto& t = c.merge.table;
  std::ostringstream csv;
  csv << "source,family,total,unique_within_family,unique_overall\n";
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    csv << csv_field(r.name) << ',' << family_name(r.family) << ',' << r.total << ',' << r.unique_within_family << ','
        << r.unique_overall << '\n';
    rows.push_back({{"source", r.name},
                    {"family", std::string(family_name(r.family))},
                    {"total", r.total},
                    {"unique_within_family", r.unique_within_family},
                    {"unique_overall", r.unique_overall}});
  }
  csv << "active_subtotal,active," << t.active_subtotal << ",,\n";
  csv << "passive_subtotal,passive," << t.passive_subtotal << ",,\n";
  csv << "total,all," << t.grand_total << ",,\n";
  write_file(out / "contributions.csv", csv.str());
  write_file(out / "contributions.json", dump_json({{"sources", rows},
                                                    {"active_subtotal", t.active_subtotal},
                                                    {"passive_subtotal", t.passive_subtotal},
                                                    {"total", t.grand_total}}));
  std::ostringstream so;
  so << "passive_sources,special,nonspecial\n";
  for (const auto& r : c.special) so << r.vps << ',' << r.special << ',' << r.nonspecial << '\n';
  write_file(out / "special_octets.csv", so.str());

  const auto lc = c.labels.leaf_counts(win);
  Json leaves = Json::object();
  for (auto l : kAllLabels) leaves[std::string(label_name(l))] = lc[static_cast<std::size_t>(l)];
  write_file(out / "census.json",
             dump_json({{"window", window_json(win)}, {"leaves", leaves}, {"routed_unused", c.merge.routed_unused}}));
}

inline std::vector<SourceSet> read_sources_manifest(const fs::path& sources_json, const fs::path& dir) {
  const Json j = Json::parse(read_file(sources_json), nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw ParseError(sources_json.string() + ": expected a JSON array");
  std::vector<SourceSet> out;
  for (const auto& e : j) {
    SourceSet s;
    s.name = e.at("name").get<std::string>();
    s.family = e.at("family").get<std::string>() == "active" ? SourceFamily::active : SourceFamily::passive;
    s.blocks = load_block_list(dir / (s.name + ".blocks"));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stage: mapping
// ---------------------------------------------------------------------------

struct MappingStage {
  AsMapping as;
  GeoMapping geo;
};

inline MappingStage mapping_stage(const std::vector<fs::path>& prefix2as, const std::optional<fs::path>& geo, Window win,
                                  unsigned threads) {
  std::vector<PrefixOrigin> entries;
  for (const auto& p : prefix2as) {
    auto e = load(p, &parse_prefix2as);
    entries.insert(entries.end(), std::make_move_iterator(e.begin()), std::make_move_iterator(e.end()));
  }
  MappingStage m{build_as_mapping(entries, win, threads), GeoMapping(win)};
  if (geo) {
    const auto ranges = load(*geo, &parse_geo_ranges);
    m.geo = build_geo_mapping(ranges, win);
  }
  return m;
}

inline void write_mapping_outputs(const MappingStage& m, const fs::path& out) {
  write_stream(out / "as_map.bin", [&](std::ostream& os) { m.as.write(os); });
  write_stream(out / "geo_map.bin", [&](std::ostream& os) { m.geo.write(os); });
  auto totals = [](const auto& mapping) {
    Json j = Json::object();
    const auto t = mapping.totals();
    for (std::size_t k = 0; k < t.size(); ++k) j[std::string(map_status_name(static_cast<MapStatus>(k)))] = t[k];
    return j;
  };
  write_file(out / "mapping.json", dump_json({{"as", totals(m.as)}, {"geo", totals(m.geo)}}));
}

// ---------------------------------------------------------------------------
// Stage: report
// ---------------------------------------------------------------------------

struct ReportOptions {
  const RegistryState* registry = nullptr;
  const ContinentMap* continents = nullptr;
  const std::map<std::string, double>* indicator = nullptr;
  std::size_t baseline_bit = 0;
  unsigned hilbert_order = 12;
  bool ppm = true;
  unsigned threads = 1;
};

inline Json breakdown_json(const BreakdownTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    Json counts = Json::object();
    for (auto l : kAllLabels) counts[std::string(label_name(l))] = r.counts[static_cast<std::size_t>(l)];
    rows.push_back({{"group", r.group},
                    {"counts", counts},
                    {"total", r.total()},
                    {"used_fraction", r.fraction(TaxonomyLabel::Used)},
                    {"unused_of_assigned", r.unused_of_assigned()}});
  }
  return {{"rows", rows}, {"excluded", t.excluded}};
}

inline std::string breakdown_csv(const BreakdownTable& t) {
  std::ostringstream os;
  os << "group";
  for (auto l : kAllLabels) os << ',' << label_name(l);
  os << ",total,used_fraction,unused_of_assigned\n";
  for (const auto& r : t.rows) {
    os << csv_field(r.group);
    for (auto c : r.counts) os << ',' << c;
    os << ',' << r.total() << ',' << fmt_double(r.fraction(TaxonomyLabel::Used)) << ','
       << fmt_double(r.unused_of_assigned()) << '\n';
  }
  return os.str();
}

inline std::string errors_csv(const std::vector<GroupError>& errs, bool with_continent) {
  std::ostringstream os;
  os << "group," << (with_continent ? "continent," : "") << "routed,used,error\n";
  for (const auto& g : errs) {
    os << csv_field(g.group) << ',';
    if (with_continent) os << csv_field(g.continent) << ',';
    os << g.routed << ',' << g.used << ',' << fmt_double(g.error()) << '\n';
  }
  return os.str();
}

inline Json size_bins_json(const std::vector<GroupError>& errs) {
  Json a = Json::array();
  for (const auto& b : summarize_by_size(errs))
    a.push_back({{"log2_routed", b.log2}, {"groups", b.groups}, {"median_error", b.median_error}});
  return a;
}

inline void report_stage(const BlockLabelMap& labels, const AsMapping& as, const GeoMapping& geo,
                         const ReportOptions& opt, const fs::path& out) {
  const Window win = as.window();
  if (!(geo.window() == win)) throw ConfigError("AS and geo mappings cover different windows");
  const BlockSet used = labels.blocks_with(TaxonomyLabel::Used, win);
  const BlockSet routed = used | labels.blocks_with(TaxonomyLabel::RoutedUnused, win);
  BlockSet baseline;
  for (std::uint32_t b = win.lo; b < win.hi; ++b)
    if (labels.source_bits(b) >> opt.baseline_bit & 1u) baseline.insert(b);

  Json rep;
  rep["window"] = window_json(win);
  const auto lc = labels.leaf_counts(win);
  Json leaves = Json::object();
  for (auto l : kAllLabels) leaves[std::string(label_name(l))] = lc[static_cast<std::size_t>(l)];
  rep["leaves"] = leaves;

  // Coverage
  const auto cov = coverage(used, routed, as, baseline);
  Json bins = Json::array();
  std::ostringstream bins_csv;
  bins_csv << "bin,baseline_from,ases,baseline_min,min,q1,median,q3,max\n";
  for (const auto& b : cov.bins) {
    bins.push_back({{"bin", b.bin},
                    {"ases", b.ases},
                    {"baseline_min", b.baseline_min},
                    {"min", b.min},
                    {"q1", b.q1},
                    {"median", b.median},
                    {"q3", b.q3},
                    {"max", b.max}});
    bins_csv << b.bin << ',' << fmt_double(b.bin * 0.02) << ',' << b.ases << ',' << fmt_double(b.baseline_min) << ','
             << fmt_double(b.min) << ',' << fmt_double(b.q1) << ',' << fmt_double(b.median) << ','
             << fmt_double(b.q3) << ',' << fmt_double(b.max) << '\n';
  }
  rep["coverage"] = {{"used", cov.used},
                     {"routed", cov.routed},
                     {"global", cov.global_coverage()},
                     {"ases_announcing", cov.ases_announcing},
                     {"ases_with_used", cov.ases_with_used},
                     {"ases_zero_routed", cov.ases_zero_routed},
                     {"as_level", cov.as_level_coverage()},
                     {"bins", bins}};
  write_file(out / "coverage_bins.csv", bins_csv.str());
  std::ostringstream as_csv;
  as_csv << "asn,routed,used,baseline,coverage,baseline_coverage\n";
  for (const auto& a : cov.intra_as)
    as_csv << a.asn << ',' << a.routed << ',' << a.used << ',' << a.baseline << ',' << fmt_double(a.coverage()) << ','
           << fmt_double(a.baseline_coverage()) << '\n';
  write_file(out / "coverage_as.csv", as_csv.str());

  // Breakdowns
  BreakdownInputs bi{opt.registry, &geo, &as, opt.continents};
  Json bd = Json::object();
  std::vector<Grouping> groupings{Grouping::country, Grouping::asn};
  if (opt.registry) groupings.insert(groupings.begin(), Grouping::rir_or_legacy);
  if (opt.continents) groupings.push_back(Grouping::continent);
  for (auto g : groupings) {
    const auto t = breakdown(labels, g, bi, win);
    const std::string name(grouping_name(g));
    write_file(out / ("breakdown_" + name + ".csv"), breakdown_csv(t));
    if (g == Grouping::asn) {
      BreakdownTable top{g, top_n(t, TaxonomyLabel::Used, 20), t.excluded};
      bd["asn_top_used"] = breakdown_json(top);
    } else {
      bd[name] = breakdown_json(t);
    }
  }
  rep["breakdowns"] = bd;

  // Overestimation
  std::uint64_t skipped_as = 0, skipped_cc = 0;
  const auto as_err = overestimation_by_as(as, used, routed, &skipped_as);
  const auto cc_err = overestimation_by_country(geo, used, routed, opt.continents, &skipped_cc);
  write_file(out / "overestimation_as.csv", errors_csv(as_err, false));
  write_file(out / "overestimation_country.csv", errors_csv(cc_err, true));
  rep["overestimation"] = {{"as", {{"groups", as_err.size()}, {"skipped", skipped_as}, {"size_bins", size_bins_json(as_err)}}},
                           {"country", {{"groups", cc_err.size()}, {"skipped", skipped_cc}, {"size_bins", size_bins_json(cc_err)}}}};

  // Indicator correlation
  if (opt.indicator) {
    std::map<std::string, double> used_cc;
    for (std::uint32_t b = win.lo; b < win.hi; ++b)
      if (geo.resolved(b) && labels.label(b) == TaxonomyLabel::Used) used_cc[cc_to_string(geo.value(b))] += 1;
    try {
      const auto c = indicator_correlation(used_cc, *opt.indicator);
      rep["correlation"] = {{"r", c.r}, {"n", c.n}, {"excluded", c.excluded}};
    } catch (const ZeroVariance& e) {
      rep["correlation"] = {{"error", e.what()}};
    }
  }

  // Mapping status totals
  auto totals = [](const auto& mapping) {
    Json j = Json::object();
    const auto t = mapping.totals();
    for (std::size_t k = 0; k < t.size(); ++k) j[std::string(map_status_name(static_cast<MapStatus>(k)))] = t[k];
    return j;
  };
  rep["mapping"] = {{"as", totals(as)}, {"geo", totals(geo)}};

  const Raster img = render_hilbert(labels, opt.hilbert_order, kDefaultPalette, opt.threads);
  if (opt.ppm) write_stream(out / "hilbert.ppm", [&](std::ostream& os) { write_ppm(os, img); });
  write_stream(out / "hilbert.png", [&](std::ostream& os) { write_png(os, img); });
  rep["hilbert"] = {{"order", opt.hilbert_order}, {"width", img.width}, {"height", img.height}};
  write_file(out / "report.json", dump_json(rep));
}

// ---------------------------------------------------------------------------
// Full run
// ---------------------------------------------------------------------------

struct RunConfig {
  fs::path config_file;
  fs::path out = "out";
  Window window = Window::full();
  std::string window_text = "0.0.0.0/0";
  std::uint32_t peer_threshold = 10;
  unsigned hilbert_order = 12;
  bool ppm = true;
  std::string baseline = "icmp";

  std::vector<fs::path> delegations;
  fs::path reserved;
  std::optional<fs::path> legacy;
  std::vector<fs::path> visibility;
  std::optional<fs::path> probes;
  std::vector<fs::path> prefix2as;
  std::optional<fs::path> geo, continents, indicator;
  std::vector<VpSpec> vps;

  /// Every input path, in a fixed order, with the spelling used in the config.
  std::vector<std::pair<std::string, fs::path>> inputs;
};

#ifdef V4CENSUS_DATA_DIR
inline const fs::path kDefaultReserved = fs::path(V4CENSUS_DATA_DIR) / "rfc5735.txt";
#else
inline const fs::path kDefaultReserved = "data/rfc5735.txt";
#endif

/// Reads a run config. Paths are relative to the config file's directory.
inline RunConfig parse_run_config(const fs::path& file) {
  using detail::config_uint;
  RunConfig c;
  c.config_file = file;
  const fs::path base = file.parent_path();
  KeyValueConfig kv;
  {
    auto in = open_input(file);
    kv = KeyValueConfig::parse(in);
  }
  auto path_of = [&](const std::string& v) {
    const fs::path p(v);
    c.inputs.emplace_back(v, p.is_absolute() ? p : base / p);
    return c.inputs.back().second;
  };
  auto paths_of = [&](const std::string& v) {
    std::vector<fs::path> out;
    for (const auto& s : detail::config_list(v)) out.push_back(path_of(s));
    return out;
  };
  for (const auto& [k, v] : kv.top()) {
    if (k == "out") c.out = fs::path(v).is_absolute() ? fs::path(v) : base / v;
    else if (k == "window") {
      auto p = parse_prefix(v);
      if (!p) throw ConfigError("bad window '" + v + "'");
      c.window = Window::of(*p);
      c.window_text = to_string(*p);
    } else if (k == "peer_threshold") c.peer_threshold = config_uint<std::uint32_t>(k, v, 65535);
    else if (k == "hilbert_order") c.hilbert_order = config_uint<unsigned>(k, v, 12);
    else if (k == "ppm") c.ppm = v == "true" || v == "1" || v == "yes";
    else if (k == "baseline") c.baseline = v;
    else throw ConfigError("unknown top-level key '" + k + "'");
  }
  if (c.peer_threshold < 1) throw ConfigError("peer_threshold must be >= 1");
  if (c.hilbert_order < 1) throw ConfigError("hilbert_order must be in [1, 12]");
  bool have_reserved = false;
  for (const auto& [name, sec] : kv.sections()) {
    auto unknown = [&](const std::string& k) { return ConfigError("unknown key '" + k + "' in [" + name + "]"); };
    if (name == "registry") {
      for (const auto& [k, v] : sec) {
        if (k == "delegations") c.delegations = paths_of(v);
        else if (k == "reserved") c.reserved = path_of(v), have_reserved = true;
        else if (k == "legacy") c.legacy = path_of(v);
        else throw unknown(k);
      }
    } else if (name == "bgp") {
      for (const auto& [k, v] : sec) {
        if (k == "visibility") c.visibility = paths_of(v);
        else throw unknown(k);
      }
    } else if (name == "active") {
      for (const auto& [k, v] : sec) {
        if (k == "probes") c.probes = path_of(v);
        else throw unknown(k);
      }
    } else if (name == "mapping") {
      for (const auto& [k, v] : sec) {
        if (k == "prefix2as") c.prefix2as = paths_of(v);
        else if (k == "geo") c.geo = path_of(v);
        else if (k == "continents") c.continents = path_of(v);
        else if (k == "indicator") c.indicator = path_of(v);
        else throw unknown(k);
      }
    } else if (name.rfind("vp:", 0) == 0) {
      VpSpec vp;
      vp.name = name.substr(3);
      if (vp.name.empty() || vp.name.find_first_of("/\\ ") != std::string::npos)
        throw ConfigError("bad vantage-point name '" + vp.name + "'");
      bool have_kind = false, have_traffic = false;
      for (const auto& [k, v] : sec) {
        if (k == "kind") vp.kind = parse_vp_kind(v), have_kind = true;
        else if (k == "traffic") vp.traffic = path_of(v), have_traffic = true;
        else if (k == "monitored") vp.monitored = path_of(v);
        else if (k == "dark") vp.dark = path_of(v);
        else if (k == "filters") vp.filters = path_of(v);
        else if (k == "classes") vp.classes = path_of(v);
        else if (k == "min_packets") vp.flow.min_packets = config_uint<std::uint64_t>(k, v);
        else if (k == "min_avg_bytes") vp.flow.min_avg_bytes = config_uint<std::uint64_t>(k, v);
        else if (k == "epsilon") vp.sampled.epsilon_unrouted = detail::config_double(k, v);
        else if (k == "dst_dark_bound") vp.sampled.dst_dark_bound = config_uint<std::uint64_t>(k, v);
        else if (k == "include_udp") vp.sampled.include_udp = v == "true" || v == "1" || v == "yes";
        else if (k == "growth_window") vp.growth_window = config_uint<std::int64_t>(k, v);
        else throw unknown(k);
      }
      if (!have_kind || !have_traffic) throw ConfigError("[" + name + "] needs kind and traffic");
      c.vps.push_back(std::move(vp));
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  if (c.delegations.empty()) throw ConfigError("[registry] delegations is required");
  if (c.visibility.empty()) throw ConfigError("[bgp] visibility is required");
  if (!have_reserved) c.reserved = kDefaultReserved;
  if (c.vps.size() + (c.probes ? 3 : 0) == 0) throw ConfigError("no sources configured");
  if (c.vps.size() + (c.probes ? 3 : 0) > kMaxSources) throw ConfigError("at most 16 sources can be registered");
  return c;
}

struct StageTiming {
  std::string stage;
  double seconds = 0;
};

struct RunResult {
  int exit_code = 0;
  std::string failed_stage;
  std::string error;
  std::vector<StageTiming> timings;
};

/// Runs every stage in order, writing into the configured output directory. On failure
/// the directory keeps an INCOMPLETE marker naming the stage and cause.
inline RunResult run_pipeline(const RunConfig& cfg, unsigned threads = 1) {
  RunResult rr;
  fs::create_directories(cfg.out);
  const fs::path& out = cfg.out;
  const fs::path marker = out / "INCOMPLETE";
  write_file(marker, "stage: (starting)\n");

  std::string stage;
  auto timed = [&](const std::string& name, const std::function<void()>& fn) {
    stage = name;
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    rr.timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  };
  try {
    RegistryState reg;
    BgpStage bgp;
    std::vector<VpOutput> vps;
    ActiveStage active;
    CensusStage census;
    MappingStage maps{AsMapping(cfg.window), GeoMapping(cfg.window)};
    timed("registry", [&] {
      reg = registry_stage(cfg.delegations, cfg.reserved, cfg.legacy);
      write_registry_outputs(reg, cfg.window, out);
    });
    timed("bgp", [&] {
      bgp = bgp_stage(cfg.visibility, reg, cfg.peer_threshold, cfg.window);
      write_bgp_outputs(bgp, cfg.peer_threshold, cfg.window, out);
    });
    for (const auto& vp : cfg.vps)
      timed("curation:" + vp.name, [&] {
        vps.push_back(curation_stage(vp, bgp.routed, cfg.window));
        write_vp_outputs(vps.back(), out);
      });
    if (cfg.probes)
      timed("active", [&] {
        active = active_stage(*cfg.probes);
        write_active_outputs(active, out);
      });
    timed("census", [&] {
      std::vector<SourceSet> sources;
      if (cfg.probes)
        for (std::size_t k = 0; k < 3; ++k)
          sources.push_back({std::string(kActiveSourceNames[k]), SourceFamily::active, active.sets.by_kind[k]});
      for (const auto& v : vps) sources.push_back({v.name, SourceFamily::passive, v.res.blocks});
      census = census_stage(std::move(sources), bgp.routed, reg, active.sets.icmp_octets, cfg.window, threads);
      write_census_outputs(census, cfg.window, out);
    });
    timed("mapping", [&] {
      maps = mapping_stage(cfg.prefix2as, cfg.geo, cfg.window, threads);
      write_mapping_outputs(maps, out);
    });
    timed("report", [&] {
      ReportOptions opt;
      opt.registry = &reg;
      ContinentMap cont;
      std::map<std::string, double> ind;
      if (cfg.continents) {
        cont = load(*cfg.continents, &parse_continent_map);
        opt.continents = &cont;
      }
      if (cfg.indicator) {
        ind = load(*cfg.indicator, &parse_indicator);
        opt.indicator = &ind;
      }
      bool found = false;
      for (std::size_t i = 0; i < census.sources.size(); ++i)
        if (census.sources[i].name == cfg.baseline) opt.baseline_bit = i, found = true;
      if (!found) throw ConfigError("baseline source '" + cfg.baseline + "' is not registered");
      opt.hilbert_order = cfg.hilbert_order;
      opt.ppm = cfg.ppm;
      opt.threads = threads;
      report_stage(census.labels, maps.as, maps.geo, opt, out);
    });
    timed("manifest", [&] {
      Json inputs = Json::object();
      for (const auto& [spelled, p] : cfg.inputs) inputs[spelled] = sha256_file(p);
      if (cfg.reserved == kDefaultReserved) inputs["(default) rfc5735.txt"] = sha256_file(cfg.reserved);
      Json outputs = Json::object();
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(out))
        if (e.is_regular_file()) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        const auto n = f.filename().string();
        if (n == "manifest.json" || n == "timings.json" || n == "INCOMPLETE") continue;
        outputs[n] = sha256_file(f);
      }
      Json order = Json::array();
      for (const auto& s : census.sources) order.push_back(s.name);
      write_file(out / "manifest.json",
                 dump_json({{"tool", "census"},
                            {"version", V4CENSUS_VERSION},
                            {"config", {{"file", cfg.config_file.filename().string()},
                                        {"sha256", sha256_file(cfg.config_file)}}},
                            {"inputs", inputs},
                            {"outputs", outputs},
                            {"sources", order},
                            {"window", cfg.window_text},
                            {"peer_threshold", cfg.peer_threshold}}));
    });
  } catch (const std::exception& e) {
    rr.exit_code = exit_code_for(e);
    rr.failed_stage = stage;
    rr.error = e.what();
    write_file(marker, "stage: " + stage + "\nerror: " + rr.error + "\n");
    return rr;
  }
  Json t = Json::array();
  for (const auto& s : rr.timings) t.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
  write_file(out / "timings.json", dump_json(t));
  fs::remove(marker);
  return rr;
}

} // namespace v4census

#endif
