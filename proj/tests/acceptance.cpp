// Acceptance checks: prints one PASS/FAIL line per criterion, exits nonzero on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include "v4census/pipeline.hpp"
#include "v4census/synth.hpp"

using namespace v4census;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

fs::path scratch(const std::string& tag) {
  const auto p = fs::temp_directory_path() / ("v4census_accept_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> outputs_of(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "timings.json") m[e.path().filename().string()] = slurp(e.path());
  return m;
}

RunResult run_in(const fs::path& dir, unsigned threads) {
  return run_pipeline(parse_run_config(dir / "pipeline.ini"), threads);
}

struct Check {
  bool ok = true;
  std::ostringstream why;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) why << what;
    ok = ok && cond;
  }
};

// ---------------------------------------------------------------------------

Check partition_invariant() {
  Check c;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto dir = scratch("c1");
    const auto t0 = Clock::now();
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.window = Prefix{Ipv4Address{static_cast<std::uint32_t>(20 + seed) << 24}, 8};
    write_scenario(generate(cfg), dir);
    const auto rr = run_in(dir, 1);
    const double secs = seconds_since(t0);
    worst = std::max(worst, secs);
    c.expect(rr.exit_code == 0, "seed " + std::to_string(seed) + " failed: " + rr.error);
    if (rr.exit_code != 0) continue;
    std::ifstream in(dir / "out" / "labelmap.bin", std::ios::binary);
    const auto labels = BlockLabelMap::read_snapshot(in);
    const Window w = Window::of(cfg.window);
    std::uint64_t sum = 0;
    for (auto n : labels.leaf_counts(w)) sum += n;
    c.expect(sum == w.size(), "leaf sum mismatch for seed " + std::to_string(seed));
    const auto routed = load_block_list(dir / "out" / "routed.blocks");
    c.expect(labels.blocks_with(TaxonomyLabel::Used, w).is_subset_of(routed),
             "used not within routed for seed " + std::to_string(seed));
    c.expect(secs < 10.0, "seed " + std::to_string(seed) + " took " + std::to_string(secs) + " s");
    fs::remove_all(dir);
  }
  if (c.ok) c.why << "20 seeds, slowest " << worst << " s";
  return c;
}

Check darknet_curation() {
  Check c;
  double worst_post = 0, worst_recall = 1, worst_pre_dev = 0;
  for (std::uint64_t seed : {101u, 102u, 103u}) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    const auto w = generate(cfg);
    const Window win = w.truth.window;
    auto res = curate_darknet(w.darknet, w.darknet_filters);
    res.input_blocks.restrict_to(win);
    res.blocks.restrict_to(win);
    const auto pre = validation_metrics(res.input_blocks, w.truth.routed, w.truth.dark);
    const auto post = validation_metrics(res.blocks, w.truth.routed, w.truth.dark);
    // used blocks that genuinely originated darknet traffic
    const auto& present = w.truth.visible.at("darknet");
    const double recall =
        static_cast<double>(intersection_count(res.blocks, present)) / static_cast<double>(present.count());
    worst_post = std::max(worst_post, post.unrouted_fraction);
    worst_recall = std::min(worst_recall, recall);
    worst_pre_dev = std::max(worst_pre_dev, std::abs(pre.unrouted_fraction - cfg.darknet_unrouted_fraction));
  }
  c.expect(worst_post <= 0.001, "post-filter unrouted fraction " + std::to_string(worst_post));
  c.expect(worst_recall >= 0.95, "recall " + std::to_string(worst_recall));
  c.expect(worst_pre_dev <= 0.0005, "pre-filter unrouted fraction off by " + std::to_string(worst_pre_dev));
  c.why << "pre-filter deviation " << worst_pre_dev * 100 << " pp, post-filter unrouted " << worst_post * 100
        << "%, recall " << worst_recall * 100 << "%";
  return c;
}

Check flow_boundaries() {
  Check c;
  BlockSet local;
  local.insert(*parse_prefix("130.59.0.0/16"));
  auto flow = [](const char* remote, std::uint64_t pkts, std::uint64_t bytes) {
    TrafficRecord r;
    r.kind = RecordKind::flow;
    r.src = *parse_ipv4("130.59.1.1");
    r.dst = *parse_ipv4(remote);
    r.proto = kProtoTcp;
    r.packets = pkts;
    r.bytes = bytes;
    r.bidirectional = true;
    return r;
  };
  const std::vector<TrafficRecord> recs{flow("5.0.0.1", 5, 5 * 80), flow("5.0.1.1", 4, 4 * 200), flow("5.0.2.1", 10, 10 * 79)};
  const auto res = curate_flowlog(recs, local);
  c.expect(res.blocks.contains(block_of(*parse_ipv4("5.0.0.1"))), "(5, 80) rejected");
  c.expect(!res.blocks.contains(block_of(*parse_ipv4("5.0.1.1"))), "(4, 200) accepted");
  c.expect(!res.blocks.contains(block_of(*parse_ipv4("5.0.2.1"))), "(10, 79) accepted");
  c.expect(res.blocks.count() == 1, "unexpected extra blocks");
  if (c.ok) c.why << "(5, 80) kept; (4, 200) and (10, 79) dropped";
  return c;
}

// Oracle: every grid point evaluated directly; first strict maximum wins.
std::optional<GridChoice> exhaustive(const std::vector<BlockAggregate>& aggs, const ThresholdGrid& g,
                                     const std::function<bool(Block24Id)>& is_error,
                                     const std::function<bool(std::uint64_t, std::uint64_t)>& feasible) {
  std::optional<GridChoice> best;
  for (auto p : g.min_packets)
    for (auto s : g.min_avg_size) {
      std::uint64_t sel = 0, bad = 0;
      for (const auto& a : aggs)
        if (a.packets >= p && a.bytes >= std::uint64_t{s} * a.packets) ++sel, bad += is_error(a.block);
      if (feasible(bad, sel) && (!best || sel > best->selected)) best = GridChoice{{p, s}, sel, bad};
    }
  return best;
}

Check sampled_grid() {
  Check c;
  const auto grid = ThresholdGrid::standard();
  double worst = 0;
  for (std::uint64_t seed = 201; seed < 211; ++seed) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.window = Prefix{Ipv4Address{(60u << 24) | (static_cast<std::uint32_t>(seed % 4) << 22)}, 10};
    const auto w = generate(cfg);
    const auto& routed = w.truth.routed;
    const auto& dark = w.truth.dark;
    const auto res = curate_sampled(w.sampled, routed, dark);
    const auto src = exhaustive(
        res.aggregates.src, grid, [&](Block24Id b) { return !routed.contains(b); },
        [](std::uint64_t bad, std::uint64_t total) { return static_cast<double>(bad) <= 0.001 * static_cast<double>(total); });
    const auto dst = exhaustive(
        res.aggregates.dst, grid, [&](Block24Id b) { return dark.contains(b); },
        [](std::uint64_t bad, std::uint64_t) { return bad <= 3; });
    const std::string tag = "seed " + std::to_string(seed) + ": ";
    c.expect(src && dst, tag + "oracle found no feasible point");
    if (!src || !dst) continue;
    c.expect(res.src_thresholds == src->thresholds && res.dst_thresholds == dst->thresholds, tag + "thresholds differ");
    BlockSet want;
    for (const auto& a : res.aggregates.src)
      if (a.packets >= src->thresholds.min_packets && a.bytes >= std::uint64_t{src->thresholds.min_avg_size} * a.packets)
        want.insert(a.block);
    for (const auto& a : res.aggregates.dst)
      if (a.packets >= dst->thresholds.min_packets && a.bytes >= std::uint64_t{dst->thresholds.min_avg_size} * a.packets)
        want.insert(a.block);
    c.expect(res.blocks == want, tag + "output set differs");
    auto chosen = res.blocks;
    chosen.restrict_to(w.truth.window);
    const auto m = validation_metrics(chosen, routed, dark);
    worst = std::max(worst, m.unrouted_fraction);
    c.expect(m.unrouted_fraction <= 0.001, tag + "unrouted fraction " + std::to_string(m.unrouted_fraction));
  }
  if (c.ok) c.why << "10 scenarios agree, worst unrouted " << worst * 100 << "%";
  return c;
}

Check bgp_routedness() {
  Check c;
  std::mt19937_64 rng(5);
  const Window w{50u << 16, (50u << 16) + 4096};
  for (int it = 0; it < 10; ++it) {
    RegistryState reg;
    for (std::uint32_t b = w.lo; b < w.hi; ++b)
      reg.status[b] = static_cast<RegistryStatus>(rng() % 3);
    std::vector<PeerVisibilityRecord> recs;
    for (int i = 0; i < 3000; ++i) {
      const auto len = static_cast<std::uint8_t>(18 + rng() % 9);
      const std::uint32_t a = (w.lo << 8) + static_cast<std::uint32_t>(rng() % (w.size() << 8));
      recs.push_back({"d" + std::to_string(rng() % 3), "p" + std::to_string(rng() % 24),
                      Prefix{Ipv4Address{a & Prefix::mask_for(len)}, len}});
    }
    const auto idx = accumulate_visibility(recs);
    BlockSet prev = classify_routed(idx, reg, 1, w);
    for (std::uint32_t t = 2; t <= 20; ++t) {
      const auto cur = classify_routed(idx, reg, t, w);
      c.expect(cur.is_subset_of(prev), "threshold " + std::to_string(t) + " not monotone");
      if (t == 10)
        for (std::uint32_t b = w.lo; b < w.hi; ++b)
          if (reg[b] == RegistryStatus::Available && idx.count(b) >= 10)
            c.expect(!cur.contains(b), "available block " + block_to_string(b) + " routed");
      prev = cur;
    }
  }
  // synthetic scenarios announce some available runs to many peers on purpose
  std::uint64_t announced_available = 0;
  for (std::uint64_t seed : {301u, 302u}) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    const auto sw = generate(cfg);
    const auto reg = build_registry_state(sw.delegations, sw.reserved, sw.legacy);
    const auto idx = accumulate_visibility(sw.visibility);
    const Window win = sw.truth.window;
    const auto routed = classify_routed(idx, reg, 10, win);
    for (std::uint32_t b = win.lo; b < win.hi; ++b)
      if (reg[b] == RegistryStatus::Available && idx.count(b) >= 10) {
        ++announced_available;
        c.expect(!routed.contains(b), "available block " + block_to_string(b) + " routed");
      }
  }
  c.expect(announced_available > 0, "scenarios contained no announced available blocks");
  if (c.ok) c.why << "monotone over 1..20; " << announced_available << " announced available blocks excluded";
  return c;
}

Check mapping_lookup() {
  Check c;
  std::mt19937_64 rng(6);
  const std::uint32_t base = 77u << 24;
  std::vector<PrefixOrigin> entries;
  for (int i = 0; i < 600; ++i) {
    const auto len = static_cast<std::uint8_t>(9 + rng() % 18);
    PrefixOrigin po;
    po.prefix = Prefix{Ipv4Address{(base | (static_cast<std::uint32_t>(rng()) & 0x00ffffffu)) & Prefix::mask_for(len)}, len};
    const auto r = rng() % 20;
    po.origin.asns = {static_cast<std::uint32_t>(1 + rng() % 40)};
    if (r == 0) po.origin.kind = Origin::Kind::set, po.origin.asns.push_back(999);
    else if (r == 1) po.origin.kind = Origin::Kind::multi, po.origin.asns.push_back(998);
    entries.push_back(po);
  }
  std::map<std::pair<std::uint32_t, int>, Origin> merged;
  for (const auto& e : entries) {
    const auto key = std::pair{e.prefix.network.value, int{e.prefix.length}};
    auto it = merged.find(key);
    if (it == merged.end()) merged.emplace(key, e.origin);
    else it->second = merge_origins(it->second, e.origin);
  }
  const Window w{base >> 8, (base >> 8) + 65536};
  const auto as_map = build_as_mapping(entries, w);

  std::vector<GeoRange> ranges;
  const char* ccs[] = {"US", "DE", "JP", "BR"};
  for (int i = 0; i < 300; ++i) {
    const std::uint32_t a = base + static_cast<std::uint32_t>(rng() % (1u << 24));
    const std::uint32_t z = std::min<std::uint64_t>(a + rng() % 200000, base + 0xffffffu);
    ranges.push_back({Ipv4Address{a}, Ipv4Address{z}, *parse_cc(ccs[rng() % 4])});
  }
  const auto geo = build_geo_mapping(ranges, w);

  std::uint64_t multi_origin = 0, multi_country = 0;
  for (int q = 0; q < 100000 && c.ok; ++q) {
    const Block24Id b = w.lo + static_cast<Block24Id>(rng() % w.size());
    const Prefix bp{block_base(b), 24};
    bool inside = false;
    for (const auto& [k, o] : merged)
      if (k.second > 24 && bp.contains(Prefix{Ipv4Address{k.first}, static_cast<std::uint8_t>(k.second)})) inside = true;
    int best_len = -1;
    std::vector<const Origin*> best;
    for (const auto& [k, o] : merged) {
      const Prefix p{Ipv4Address{k.first}, static_cast<std::uint8_t>(k.second)};
      if (!(inside ? (k.second > 24 && bp.contains(p)) : p.contains(bp))) continue;
      if (k.second > best_len) best_len = k.second, best.clear();
      if (k.second == best_len) best.push_back(&o);
    }
    MapStatus st = MapStatus::unmapped;
    std::uint32_t asn = 0;
    if (!best.empty()) {
      bool same = true;
      for (auto* o : best) same = same && o->kind == Origin::Kind::single && o->asns == best.front()->asns;
      if (same) st = MapStatus::resolved, asn = best.front()->asns.front();
      else if (best.size() == 1 && best.front()->kind == Origin::Kind::set) st = MapStatus::as_set;
      else st = MapStatus::multi_origin;
    }
    multi_origin += st == MapStatus::multi_origin;
    c.expect(as_map.status(b) == st && as_map.value(b) == asn, "AS mismatch at " + block_to_string(b));

    std::set<CountryCode> seen;
    for (const auto& r : ranges)
      if (block_of(r.first) <= b && b <= block_of(r.last)) seen.insert(r.cc);
    const MapStatus gs = seen.empty() ? MapStatus::unmapped : seen.size() == 1 ? MapStatus::resolved : MapStatus::multi_country;
    multi_country += gs == MapStatus::multi_country;
    c.expect(geo.status(b) == gs && (gs != MapStatus::resolved || geo.value(b) == *seen.begin()),
             "geo mismatch at " + block_to_string(b));
  }
  c.expect(multi_origin > 0 && multi_country > 0, "no exclusions exercised");
  if (c.ok) c.why << "1e5 lookups; " << multi_origin << " multi-origin and " << multi_country << " multi-country hits";
  return c;
}

Check contribution_table() {
  Check c;
  std::mt19937_64 rng(7);
  const Window w{40000, 60000};
  std::vector<SourceSet> sources{{"icmp", SourceFamily::active, {}},     {"http", SourceFamily::active, {}},
                                 {"traceroute", SourceFamily::active, {}}, {"darknet", SourceFamily::passive, {}},
                                 {"flowlog", SourceFamily::passive, {}},   {"bidirlog", SourceFamily::passive, {}},
                                 {"sampled", SourceFamily::passive, {}}};
  BlockSet routed;
  for (std::uint32_t b = w.lo; b < w.hi; ++b) {
    if (rng() % 3) routed.insert(b);
    for (auto& s : sources)
      if (rng() % 5 == 0) s.blocks.insert(b);
  }
  const auto res = merge_used(sources, routed);

  // set algebra: restrict, union of the others, difference
  std::vector<BlockSet> r;
  for (const auto& s : sources) r.push_back(s.blocks & routed);
  BlockSet all;
  for (const auto& x : r) all |= x;
  for (std::size_t i = 0; i < r.size(); ++i) {
    BlockSet others, fam_others;
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j == i) continue;
      others |= r[j];
      if (sources[j].family == sources[i].family) fam_others |= r[j];
    }
    const auto& row = res.table.rows[i];
    c.expect(row.total == r[i].count(), sources[i].name + " total");
    c.expect(row.unique_overall == (r[i] - others).count(), sources[i].name + " unique overall");
    c.expect(row.unique_within_family == (r[i] - fam_others).count(), sources[i].name + " unique within family");

    auto rest = sources;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
    const auto part = merge_used(rest, routed);
    c.expect(res.table.grand_total - part.table.grand_total == row.unique_overall, sources[i].name + " removal");
  }
  c.expect(res.table.grand_total == all.count() && res.used == all, "grand total");
  if (c.ok) c.why << "7 sources, " << all.count() << " used blocks";
  return c;
}

// Order-k curve built from four transformed copies of order k-1.
std::vector<Point> hilbert_recursive(unsigned order) {
  std::vector<Point> cur{{0, 0}};
  for (unsigned k = 1; k <= order; ++k) {
    const std::uint32_t h = 1u << (k - 1);
    std::vector<Point> next;
    next.reserve(cur.size() * 4);
    for (auto p : cur) next.push_back({p.y, p.x});
    for (auto p : cur) next.push_back({p.x, p.y + h});
    for (auto p : cur) next.push_back({p.x + h, p.y + h});
    for (auto p : cur) next.push_back({h - 1 - p.y + h, h - 1 - p.x});
    cur = std::move(next);
  }
  return cur;
}

Check hilbert_render() {
  Check c;
  for (unsigned order = 1; order <= 6; ++order) {
    const auto pts = hilbert_recursive(order);
    for (std::uint64_t d = 0; d < pts.size(); ++d) {
      c.expect(hilbert_d2xy(order, d) == pts[d], "d2xy order " + std::to_string(order));
      c.expect(hilbert_xy2d(order, pts[d]) == d, "xy2d order " + std::to_string(order));
    }
  }
  std::mt19937_64 rng(8);
  BlockLabelMap labels;
  for (Block24Id b = 0; b < kUniverseSize; ++b) labels.set_label(b, static_cast<TaxonomyLabel>(rng() % 5));
  const auto t0 = Clock::now();
  const auto img = render_hilbert(labels, 12, kDefaultPalette, 1);
  std::ostringstream png;
  write_png(png, img);
  const double secs = seconds_since(t0);
  std::array<std::uint64_t, 5> got{};
  for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
    const Rgb px{img.rgb[i], img.rgb[i + 1], img.rgb[i + 2]};
    std::size_t k = 0;
    while (k < 5 && !(kDefaultPalette[k] == px)) ++k;
    c.expect(k < 5, "unknown pixel color");
    if (k < 5) ++got[k];
  }
  c.expect(got == labels.leaf_counts(Window::full()), "pixel multiset differs from label multiset");
  c.expect(secs < 60.0, "render took " + std::to_string(secs) + " s");
  if (c.ok) c.why << "orders 1..6 exhaustive; order 12 render and PNG in " << secs << " s";
  return c;
}

Check coverage_math() {
  Check c;
  // AS 64500 announces a /17 (128 blocks); 100 routed, 51 used
  std::vector<PrefixOrigin> entries{{*parse_prefix("20.0.0.0/17"), Origin{Origin::Kind::single, {64500}}}};
  const Window w = Window::of(*parse_prefix("20.0.0.0/16"));
  const auto as_map = build_as_mapping(entries, w);
  BlockSet routed, used;
  for (std::uint32_t i = 0; i < 100; ++i) routed.insert(w.lo + i);
  for (std::uint32_t i = 0; i < 51; ++i) used.insert(w.lo + i);
  const auto rep = coverage(used, routed, as_map, BlockSet{});
  c.expect(rep.intra_as.size() == 1 && rep.intra_as[0].coverage() == 0.51, "intra-AS coverage is not 0.51");

  std::mt19937_64 rng(9);
  BlockSet r2, u2;
  std::uint64_t nr = 0, nu = 0;
  for (std::uint32_t b = 0; b < 200000; ++b) {
    const bool is_r = rng() % 3 != 0, is_u = rng() % 2 == 0;
    if (is_r) r2.insert(b), ++nr;
    if (is_u) u2.insert(b), nu += is_r;
  }
  const auto rep2 = coverage(u2, r2, AsMapping(Window{0, 16}), BlockSet{});
  c.expect(rep2.routed == nr && rep2.used == nu, "global coverage counts");
  c.expect(rep2.global_coverage() == static_cast<double>(nu) / static_cast<double>(nr), "global coverage ratio");

  std::map<std::string, double> x, y;
  std::vector<long double> xs, ys;
  for (int i = 0; i < 80; ++i) {
    const std::string cc{static_cast<char>('A' + i / 26), static_cast<char>('A' + i % 26)};
    const double a = static_cast<double>(rng() % 1000000), b = 0.3 * a + static_cast<double>(rng() % 500000);
    x[cc] = a, y[cc] = b;
    xs.push_back(a), ys.push_back(b);
  }
  long double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  const long double n = static_cast<long double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    sx += xs[i], sy += ys[i], sxy += xs[i] * ys[i], sxx += xs[i] * xs[i], syy += ys[i] * ys[i];
  const double want = static_cast<double>((n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
  const auto corr = indicator_correlation(x, y);
  c.expect(std::abs(corr.r - want) <= 1e-12, "pearson differs by " + std::to_string(std::abs(corr.r - want)));
  if (c.ok) c.why << "0.51 exact; global " << nu << "/" << nr << "; |dr| = " << std::abs(corr.r - want);
  return c;
}

Check determinism() {
  Check c;
  const auto dir = scratch("c10");
  ScenarioConfig cfg;
  cfg.seed = 1001;
  write_scenario(generate(cfg), dir);
  std::map<std::string, std::string> first;
  int runs = 0;
  for (unsigned threads : {1u, 1u, 8u, 8u}) {
    const auto rr = run_in(dir, threads);
    c.expect(rr.exit_code == 0, "run failed: " + rr.error);
    if (rr.exit_code != 0) break;
    auto now = outputs_of(dir / "out");
    if (runs++ == 0) {
      first = std::move(now);
      continue;
    }
    for (const char* must : {"labelmap.bin", "report.json", "hilbert.png"})
      c.expect(first.count(must) > 0, std::string("missing ") + must);
    c.expect(now.size() == first.size(), "file set differs");
    for (const auto& [name, bytes] : first)
      c.expect(now.count(name) && now.at(name) == bytes, name + " differs with threads " + std::to_string(threads));
  }
  if (c.ok) c.why << first.size() << " files identical over 4 runs (threads 1, 1, 8, 8)";
  fs::remove_all(dir);
  return c;
}

} // namespace

int main() {
  const std::vector<std::pair<const char*, Check (*)()>> criteria{
      {"partition invariant", &partition_invariant}, {"darknet curation", &darknet_curation},
      {"flow boundaries", &flow_boundaries},         {"sampled threshold search", &sampled_grid},
      {"bgp routedness", &bgp_routedness},           {"mapping lookups", &mapping_lookup},
      {"contribution table", &contribution_table},   {"hilbert rendering", &hilbert_render},
      {"coverage math", &coverage_math},             {"determinism", &determinism}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.why << "exception: " << e.what();
    }
    std::cout << "Criterion " << i + 1 << ": " << (c.ok ? "PASS" : "FAIL") << " (" << criteria[i].first << ") "
              << c.why.str() << std::endl;
    failed += !c.ok;
  }
  return failed == 0 ? 0 : 1;
}
