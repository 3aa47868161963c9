#ifndef V4CENSUS_REPORT_HPP
#define V4CENSUS_REPORT_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <stdexcept>
#include <tuple>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "v4census/blockmap.hpp"
#include "v4census/curation.hpp"
#include "v4census/mapping.hpp"
#include "v4census/registry.hpp"

namespace v4census {

class ZeroVariance : public Error {
public:
  using Error::Error;
};

/// Linear-interpolation quantile of a sorted sample (q in [0, 1]).
inline double quantile_sorted(std::span<const double> v, double q) {
  if (v.empty()) return 0.0;
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + (v[hi] - v[lo]) * frac;
}

inline double median_sorted(std::span<const double> v) { return quantile_sorted(v, 0.5); }

/// "9.5%"-style rendering of a fraction.
inline std::string format_percent(double fraction, int decimals = 1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f%%", decimals, fraction * 100.0);
  return buf;
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

struct AsCoverage {
  std::uint32_t asn = 0;
  std::uint64_t routed = 0;
  std::uint64_t used = 0;
  std::uint64_t baseline = 0;
  double coverage() const { return static_cast<double>(used) / static_cast<double>(routed); }
  double baseline_coverage() const { return static_cast<double>(baseline) / static_cast<double>(routed); }
};

/// ASes grouped by baseline intra-AS coverage in 2% bins.
struct CoverageBin {
  unsigned bin = 0; ///< covers baseline coverage [bin*2%, (bin+1)*2%), last bin closed
  std::size_t ases = 0;
  double baseline_min = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0; ///< combined coverage quartiles
};

struct CoverageReport {
  std::uint64_t used = 0;   ///< |used ∩ routed|
  std::uint64_t routed = 0; ///< |routed|
  std::uint64_t ases_announcing = 0;
  std::uint64_t ases_with_used = 0;
  std::uint64_t ases_zero_routed = 0; ///< mapped ASes without routed blocks, excluded
  std::vector<AsCoverage> intra_as;   ///< ascending ASN
  std::vector<CoverageBin> bins;      ///< non-empty bins, ascending

  double global_coverage() const { return routed ? static_cast<double>(used) / static_cast<double>(routed) : 0.0; }
  double as_level_coverage() const {
    return ases_announcing ? static_cast<double>(ases_with_used) / static_cast<double>(ases_announcing) : 0.0;
  }
};

inline constexpr unsigned kCoverageBins = 50;

/// Bin of a baseline coverage ratio k/n, computed in integers: floor(50 k / n), capped at 49.
inline unsigned coverage_bin(std::uint64_t k, std::uint64_t n) {
  return static_cast<unsigned>(std::min<std::uint64_t>(k * kCoverageBins / n, kCoverageBins - 1));
}

inline CoverageReport coverage(const BlockSet& used, const BlockSet& routed, const AsMapping& as_map,
                               const BlockSet& baseline) {
  CoverageReport rep;
  rep.routed = routed.count();
  rep.used = intersection_count(used, routed);

  std::map<std::uint32_t, AsCoverage> per_as;
  const Window w = as_map.window();
  for (std::uint32_t b = w.lo; b < w.hi; ++b) {
    if (!as_map.resolved(b)) continue;
    auto& a = per_as[as_map.value(b)];
    a.asn = as_map.value(b);
    if (!routed.contains(b)) continue;
    ++a.routed;
    a.used += used.contains(b);
    a.baseline += baseline.contains(b);
  }
  std::array<std::vector<std::pair<double, double>>, kCoverageBins> binned; // (baseline, combined)
  for (const auto& [asn, a] : per_as) {
    if (a.routed == 0) {
      ++rep.ases_zero_routed;
      continue;
    }
    ++rep.ases_announcing;
    rep.ases_with_used += a.used > 0;
    rep.intra_as.push_back(a);
    binned[coverage_bin(a.baseline, a.routed)].emplace_back(a.baseline_coverage(), a.coverage());
  }
  for (unsigned k = 0; k < kCoverageBins; ++k) {
    if (binned[k].empty()) continue;
    std::vector<double> combined;
    double bmin = 1.0;
    for (auto [b, c] : binned[k]) {
      combined.push_back(c);
      bmin = std::min(bmin, b);
    }
    std::sort(combined.begin(), combined.end());
    rep.bins.push_back({k, combined.size(), bmin, combined.front(), quantile_sorted(combined, 0.25),
                        quantile_sorted(combined, 0.5), quantile_sorted(combined, 0.75), combined.back()});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Breakdowns
// ---------------------------------------------------------------------------

enum class Grouping : std::uint8_t { rir_or_legacy, country, continent, asn };

constexpr std::string_view grouping_name(Grouping g) noexcept {
  switch (g) {
    case Grouping::rir_or_legacy: return "rir";
    case Grouping::country: return "country";
    case Grouping::continent: return "continent";
    case Grouping::asn: return "asn";
  }
  return "?";
}

struct BreakdownRow {
  std::string group;
  LeafCounts counts{};

  std::uint64_t total() const noexcept {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
  double fraction(TaxonomyLabel l) const noexcept {
    const auto t = total();
    return t ? static_cast<double>(counts[static_cast<std::size_t>(l)]) / static_cast<double>(t) : 0.0;
  }
  std::uint64_t assigned() const noexcept {
    return counts[static_cast<std::size_t>(TaxonomyLabel::Used)] +
           counts[static_cast<std::size_t>(TaxonomyLabel::RoutedUnused)] +
           counts[static_cast<std::size_t>(TaxonomyLabel::UnroutedAssigned)];
  }
  /// (routed unused + unrouted assigned) / assigned.
  double unused_of_assigned() const noexcept {
    const auto a = assigned();
    if (!a) return 0.0;
    return static_cast<double>(counts[static_cast<std::size_t>(TaxonomyLabel::RoutedUnused)] +
                               counts[static_cast<std::size_t>(TaxonomyLabel::UnroutedAssigned)]) /
           static_cast<double>(a);
  }
};

struct BreakdownTable {
  Grouping grouping = Grouping::rir_or_legacy;
  std::vector<BreakdownRow> rows;
  std::uint64_t excluded = 0; ///< blocks with no (or an ambiguous) group
};

/// Country code to continent name, read from `CC|Continent` lines.
using ContinentMap = std::map<std::string, std::string>;

inline ContinentMap parse_continent_map(std::istream& in) {
  ContinentMap m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(std::string_view(line).substr(0, line.find('#')));
    if (s.empty()) continue;
    auto f = split(s, '|');
    if (f.size() != 2 || !parse_cc(f[0])) throw ParseError("expected CC|continent", lineno);
    m[std::string(trim(f[0]))] = std::string(trim(f[1]));
  }
  return m;
}

struct BreakdownInputs {
  const RegistryState* registry = nullptr;
  const GeoMapping* geo = nullptr;
  const AsMapping* as = nullptr;
  const ContinentMap* continents = nullptr;
};

inline BreakdownTable breakdown(const BlockLabelMap& labels, Grouping grouping, const BreakdownInputs& in,
                                Window w = Window::full()) {
  BreakdownTable t;
  t.grouping = grouping;
  std::map<std::string, LeafCounts> groups;
  std::map<std::uint32_t, LeafCounts> by_asn;
  std::array<LeafCounts, 7> by_tag{};
  for (std::uint32_t b = w.lo; b < w.hi; ++b) {
    const auto l = static_cast<std::size_t>(labels.label(b));
    switch (grouping) {
      case Grouping::rir_or_legacy:
        if (!in.registry) throw ConfigError("rir breakdown needs registry state");
        ++by_tag[static_cast<std::size_t>(in.registry->tag_of(b))][l];
        break;
      case Grouping::country:
      case Grouping::continent: {
        if (!in.geo) throw ConfigError("geographic breakdown needs a geo mapping");
        if (!in.geo->resolved(b)) {
          ++t.excluded;
          break;
        }
        std::string cc = cc_to_string(in.geo->value(b));
        if (grouping == Grouping::continent) {
          if (!in.continents) throw ConfigError("continent breakdown needs a continent map");
          auto it = in.continents->find(cc);
          cc = it == in.continents->end() ? "unknown" : it->second;
        }
        ++groups[cc][l];
        break;
      }
      case Grouping::asn:
        if (!in.as) throw ConfigError("AS breakdown needs an AS mapping");
        if (!in.as->resolved(b)) {
          ++t.excluded;
          break;
        }
        ++by_asn[in.as->value(b)][l];
        break;
    }
  }
  if (grouping == Grouping::rir_or_legacy) {
    for (std::size_t k = 0; k < by_tag.size(); ++k) {
      BreakdownRow r{std::string(admin_tag_name(static_cast<AdminTag>(k))), by_tag[k]};
      if (r.total()) t.rows.push_back(std::move(r));
    }
  } else if (grouping == Grouping::asn) {
    for (const auto& [asn, c] : by_asn) t.rows.push_back({"AS" + std::to_string(asn), c});
  } else {
    for (const auto& [g, c] : groups) t.rows.push_back({g, c});
  }
  return t;
}

/// Top-n rows by the count of one leaf (ties by group name).
inline std::vector<BreakdownRow> top_n(const BreakdownTable& t, TaxonomyLabel by, std::size_t n) {
  auto rows = t.rows;
  const auto k = static_cast<std::size_t>(by);
  std::stable_sort(rows.begin(), rows.end(), [k](const BreakdownRow& a, const BreakdownRow& b) {
    if (a.counts[k] != b.counts[k]) return a.counts[k] > b.counts[k];
    return a.group < b.group;
  });
  if (rows.size() > n) rows.resize(n);
  return rows;
}

// ---------------------------------------------------------------------------
// Overestimation error
// ---------------------------------------------------------------------------

struct GroupError {
  std::string group;
  std::string continent; ///< countries only
  std::uint64_t routed = 0;
  std::uint64_t used = 0;
  double error() const { return static_cast<double>(routed - used) / static_cast<double>(routed); }
};

/// Error of using routed space as a proxy for used space: (routed - used) / routed per
/// group. Groups without routed blocks are skipped and counted in `skipped`.
template <class Value, class GroupName>
std::vector<GroupError> overestimation_error(const BlockMapping<Value>& mapping, const BlockSet& used,
                                             const BlockSet& routed, GroupName name_of,
                                             std::uint64_t* skipped = nullptr) {
  std::map<Value, GroupError> groups;
  const Window w = mapping.window();
  for (std::uint32_t b = w.lo; b < w.hi; ++b) {
    if (!mapping.resolved(b)) continue;
    auto& g = groups[mapping.value(b)];
    if (routed.contains(b)) {
      ++g.routed;
      g.used += used.contains(b);
    }
  }
  std::vector<GroupError> out;
  std::uint64_t zero = 0;
  for (auto& [v, g] : groups) {
    if (!g.routed) {
      ++zero;
      continue;
    }
    g.group = name_of(v);
    out.push_back(g);
  }
  if (skipped) *skipped = zero;
  return out;
}

inline std::vector<GroupError> overestimation_by_as(const AsMapping& m, const BlockSet& used, const BlockSet& routed,
                                                    std::uint64_t* skipped = nullptr) {
  return overestimation_error(m, used, routed, [](std::uint32_t asn) { return "AS" + std::to_string(asn); }, skipped);
}

/// Per-country errors sorted by continent, then country code.
inline std::vector<GroupError> overestimation_by_country(const GeoMapping& m, const BlockSet& used,
                                                         const BlockSet& routed, const ContinentMap* continents,
                                                         std::uint64_t* skipped = nullptr) {
  auto out = overestimation_error(m, used, routed, [](CountryCode c) { return cc_to_string(c); }, skipped);
  for (auto& g : out) {
    auto it = continents ? continents->find(g.group) : ContinentMap::const_iterator{};
    g.continent = continents && it != continents->end() ? it->second : "unknown";
  }
  std::stable_sort(out.begin(), out.end(), [](const GroupError& a, const GroupError& b) {
    return std::tie(a.continent, a.group) < std::tie(b.continent, b.group);
  });
  return out;
}

struct SizeBinSummary {
  unsigned log2 = 0; ///< groups with routed in [2^log2, 2^(log2+1))
  std::size_t groups = 0;
  double median_error = 0;
};

inline std::vector<SizeBinSummary> summarize_by_size(std::span<const GroupError> errors) {
  std::map<unsigned, std::vector<double>> bins;
  for (const auto& g : errors) bins[static_cast<unsigned>(std::bit_width(g.routed) - 1)].push_back(g.error());
  std::vector<SizeBinSummary> out;
  for (auto& [k, v] : bins) {
    std::sort(v.begin(), v.end());
    out.push_back({k, v.size(), median_sorted(v)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Indicator correlation
// ---------------------------------------------------------------------------

struct Correlation {
  double r = 0;
  std::size_t n = 0;        ///< countries with both values
  std::size_t excluded = 0; ///< countries missing one of the values
};

/// Pearson correlation between per-country used counts and an indicator.
inline Correlation indicator_correlation(const std::map<std::string, double>& used,
                                         const std::map<std::string, double>& indicator) {
  std::vector<double> x, y;
  Correlation c;
  for (const auto& [k, v] : used) {
    auto it = indicator.find(k);
    if (it == indicator.end()) {
      ++c.excluded;
      continue;
    }
    x.push_back(v);
    y.push_back(it->second);
  }
  for (const auto& [k, v] : indicator) c.excluded += used.count(k) == 0;
  c.n = x.size();
  if (c.n < 2) throw ZeroVariance("correlation needs at least two countries with both values");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < c.n; ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(c.n);
  my /= static_cast<double>(c.n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < c.n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw ZeroVariance("indicator or used counts are constant");
  c.r = sxy / std::sqrt(sxx * syy);
  return c;
}

/// `CC|value` lines.
inline std::map<std::string, double> parse_indicator(std::istream& in) {
  std::map<std::string, double> m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto f = split(s, '|');
    if (f.size() != 2 || !parse_cc(f[0])) throw ParseError("expected CC|value", lineno);
    try {
      std::size_t pos = 0;
      const std::string v(trim(f[1]));
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw ParseError("bad value", lineno);
      m[std::string(trim(f[0]))] = d;
    } catch (const std::logic_error&) {
      throw ParseError("bad value", lineno);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Growth curves
// ---------------------------------------------------------------------------

struct GrowthPoint {
  std::int64_t window_start = 0;
  std::uint64_t per_window = 0; ///< distinct /24s seen in this window
  std::uint64_t cumulative = 0; ///< distinct /24s seen up to the end of this window
  friend bool operator==(const GrowthPoint&, const GrowthPoint&) = default;
};

struct GrowthCurve {
  std::vector<GrowthPoint> points;
  double relative_stddev = 0; ///< population stddev / mean of per-window counts
};

/// Windows start at the earliest timestamp and have fixed `window` length (seconds).
inline GrowthCurve growth_curve(std::span<const BlockObservation> obs, std::int64_t window) {
  if (window <= 0) throw ConfigError("growth window must be positive");
  GrowthCurve g;
  if (obs.empty()) return g;
  std::vector<BlockObservation> sorted(obs.begin(), obs.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const BlockObservation& a, const BlockObservation& b) { return a.ts < b.ts; });
  const std::int64_t t0 = sorted.front().ts;
  const auto n_windows = static_cast<std::size_t>((sorted.back().ts - t0) / window + 1);
  g.points.resize(n_windows);
  std::unordered_map<Block24Id, std::size_t> last_window; // window index + 1
  std::unordered_map<Block24Id, bool> seen;
  std::vector<std::uint64_t> new_blocks(n_windows, 0);
  for (const auto& o : sorted) {
    const auto k = static_cast<std::size_t>((o.ts - t0) / window);
    auto& lw = last_window[o.block];
    if (lw != k + 1) {
      lw = k + 1;
      ++g.points[k].per_window;
    }
    if (seen.emplace(o.block, true).second) ++new_blocks[k];
  }
  std::uint64_t cum = 0;
  for (std::size_t k = 0; k < n_windows; ++k) {
    cum += new_blocks[k];
    g.points[k].window_start = t0 + static_cast<std::int64_t>(k) * window;
    g.points[k].cumulative = cum;
  }
  if (n_windows >= 2) {
    double mean = 0;
    for (const auto& p : g.points) mean += static_cast<double>(p.per_window);
    mean /= static_cast<double>(n_windows);
    double var = 0;
    for (const auto& p : g.points) var += (static_cast<double>(p.per_window) - mean) * (static_cast<double>(p.per_window) - mean);
    var /= static_cast<double>(n_windows);
    g.relative_stddev = mean > 0 ? std::sqrt(var) / mean : 0.0;
  }
  return g;
}

} // namespace v4census

#endif
