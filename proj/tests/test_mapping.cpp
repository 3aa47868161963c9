#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "v4census/mapping.hpp"

using namespace v4census;

namespace {
Block24Id blk(const char* a) { return block_of(*parse_ipv4(a)); }
std::vector<PrefixOrigin> parse(const std::string& s) {
  std::istringstream in(s);
  return parse_prefix2as(in);
}
} // namespace

TEST(Origin, Forms) {
  EXPECT_EQ(parse_origin("AS123")->asns, std::vector<std::uint32_t>{123});
  EXPECT_EQ(parse_origin("123")->kind, Origin::Kind::single);
  EXPECT_EQ(parse_origin("AS1_AS2")->kind, Origin::Kind::set);
  const auto m = parse_origin("AS7,AS3,AS7");
  EXPECT_EQ(m->kind, Origin::Kind::multi);
  EXPECT_EQ(m->asns, (std::vector<std::uint32_t>{3, 7}));
  EXPECT_EQ(parse_origin("AS5,AS5")->kind, Origin::Kind::single);
  EXPECT_FALSE(parse_origin("ASX"));
  EXPECT_FALSE(parse_origin(""));
}

TEST(AsMapping, Examples) {
  const auto e = parse("10.0.0.0/8|AS1\n"
                       "10.1.0.0/16|AS2\n"
                       "10.1.2.0/23|AS3\n"
                       "10.2.0.0/24|AS4,AS5\n"
                       "10.3.0.0/24|AS6_AS7\n"
                       "10.4.0.0/25|AS8\n"
                       "10.4.0.128/25|AS8\n"
                       "10.5.0.0/25|AS8\n"
                       "10.5.0.128/25|AS9\n"
                       "10.6.0.0\t24\t11\n"
                       "10.7.0.0/24|AS12\n"
                       "10.7.0.0/24|AS13\n");
  const auto m = build_as_mapping(e, Window::of(*parse_prefix("10.0.0.0/8")));
  EXPECT_EQ(m.value(blk("10.9.0.0")), 1u);
  EXPECT_EQ(m.value(blk("10.1.9.0")), 2u);
  EXPECT_EQ(m.value(blk("10.1.3.0")), 3u);
  EXPECT_EQ(m.status(blk("10.2.0.0")), MapStatus::multi_origin);
  EXPECT_EQ(m.status(blk("10.3.0.0")), MapStatus::as_set);
  EXPECT_EQ(m.value(blk("10.4.0.0")), 8u);
  EXPECT_EQ(m.status(blk("10.5.0.0")), MapStatus::multi_origin);
  EXPECT_EQ(m.value(blk("10.6.0.0")), 11u);
  EXPECT_EQ(m.status(blk("10.7.0.0")), MapStatus::multi_origin);
  EXPECT_EQ(m.status(blk("11.0.0.0")), MapStatus::unmapped);
  const auto t = m.totals();
  EXPECT_EQ(t[0] + t[1] + t[2] + t[3] + t[4], 65536u);
}

TEST(AsMapping, ParseErrors) {
  EXPECT_THROW(parse("10.0.0.0|AS1\n"), ParseError);
  EXPECT_THROW(parse("10.0.0.0/8|ASx\n"), ParseError);
  EXPECT_THROW(parse("10.0.0.0/8\n"), ParseError);
}

// Oracle: for each block, scan every entry, keep those overlapping the block at the
// greatest prefix length (covering or contained), and resolve by hand.
TEST(AsMapping, MatchesLinearScan) {
  std::mt19937_64 rng(6);
  std::vector<PrefixOrigin> e;
  const std::uint32_t base = 77u << 24;
  for (int i = 0; i < 600; ++i) {
    const auto len = static_cast<std::uint8_t>(9 + rng() % 18);
    PrefixOrigin po;
    po.prefix = Prefix{Ipv4Address{(base | (static_cast<std::uint32_t>(rng()) & 0x00ffffffu)) & Prefix::mask_for(len)}, len};
    const auto r = rng() % 20;
    po.origin.asns = {static_cast<std::uint32_t>(1 + rng() % 40)};
    if (r == 0) po.origin.kind = Origin::Kind::set, po.origin.asns.push_back(999);
    else if (r == 1) po.origin.kind = Origin::Kind::multi, po.origin.asns.push_back(998);
    e.push_back(po);
  }
  // dedupe duplicates the way the trie does
  std::map<std::pair<std::uint32_t, int>, Origin> merged;
  for (const auto& x : e) {
    auto key = std::pair{x.prefix.network.value, int{x.prefix.length}};
    auto it = merged.find(key);
    if (it == merged.end()) merged.emplace(key, x.origin);
    else it->second = merge_origins(it->second, x.origin);
  }
  const Window w{base >> 8, (base >> 8) + 65536};
  // 10^5 block queries: the whole /8 plus a second pass over a random sample.
  for (unsigned threads : {1u, 3u}) {
    const auto m = build_as_mapping(e, w, threads);
    std::vector<Block24Id> queries;
    for (Block24Id b = w.lo; b < w.hi; ++b) queries.push_back(b);
    for (int i = 0; i < 34464; ++i) queries.push_back(w.lo + static_cast<Block24Id>(rng() % 65536));
    if (threads > 1) queries.resize(20000);
    for (Block24Id b : queries) {
      const Prefix bp{block_base(b), 24};
      int best_len = -1;
      std::vector<const Origin*> best;
      // contained (more specific) prefixes take priority over covering ones
      bool any_inside = false;
      for (const auto& [key, o] : merged)
        if (key.second > 24 && bp.contains(Prefix{Ipv4Address{key.first}, static_cast<std::uint8_t>(key.second)})) any_inside = true;
      for (const auto& [key, o] : merged) {
        const Prefix p{Ipv4Address{key.first}, static_cast<std::uint8_t>(key.second)};
        const bool ok = any_inside ? (key.second > 24 && bp.contains(p)) : p.contains(bp);
        if (!ok) continue;
        if (key.second > best_len) best_len = key.second, best.clear();
        if (key.second == best_len) best.push_back(&o);
      }
      MapStatus st = MapStatus::unmapped;
      std::uint32_t asn = 0;
      if (!best.empty()) {
        bool all_same_single = true;
        for (auto* o : best)
          if (o->kind != Origin::Kind::single || o->asns != best.front()->asns) all_same_single = false;
        if (all_same_single) st = MapStatus::resolved, asn = best.front()->asns.front();
        else if (best.size() == 1 && best.front()->kind == Origin::Kind::set) st = MapStatus::as_set;
        else st = MapStatus::multi_origin;
      }
      ASSERT_EQ(m.status(b), st) << block_to_string(b);
      ASSERT_EQ(m.value(b), asn) << block_to_string(b);
    }
  }
}

TEST(GeoMapping, Examples) {
  std::istringstream in("20.0.0.0|20.0.3.255|US\n"
                        "20.0.2.128|20.0.2.200|CA\n"
                        "20.0.3.0|20.0.3.255|US\n"
                        "20.0.5.10|20.0.5.20|DE\n");
  const auto ranges = parse_geo_ranges(in);
  const auto g = build_geo_mapping(ranges, Window::of(*parse_prefix("20.0.0.0/16")));
  EXPECT_EQ(cc_to_string(g.value(blk("20.0.0.0"))), "US");
  EXPECT_EQ(g.status(blk("20.0.2.0")), MapStatus::multi_country);
  EXPECT_EQ(g.status(blk("20.0.3.0")), MapStatus::resolved);
  EXPECT_EQ(cc_to_string(g.value(blk("20.0.5.0"))), "DE");
  EXPECT_EQ(g.status(blk("20.0.4.0")), MapStatus::unmapped);
  std::istringstream bad("20.0.0.9|20.0.0.1|US\n");
  EXPECT_THROW(parse_geo_ranges(bad), ParseError);
  std::istringstream bad_cc("20.0.0.1|20.0.0.9|usa\n");
  EXPECT_THROW(parse_geo_ranges(bad_cc), ParseError);
}

// Oracle: for each block, collect the codes of every overlapping range.
TEST(GeoMapping, MatchesLinearScan) {
  std::mt19937_64 rng(12);
  std::vector<GeoRange> ranges;
  const char* ccs[] = {"US", "DE", "JP", "BR"};
  for (int i = 0; i < 300; ++i) {
    const std::uint32_t a = (30u << 24) + static_cast<std::uint32_t>(rng() % (1u << 22));
    const std::uint32_t z = a + static_cast<std::uint32_t>(rng() % 5000);
    ranges.push_back({Ipv4Address{a}, Ipv4Address{z}, *parse_cc(ccs[rng() % 4])});
  }
  const Window w{30u << 16, (30u << 16) + (1u << 14)};
  const auto g = build_geo_mapping(ranges, w);
  for (Block24Id b = w.lo; b < w.hi; ++b) {
    std::set<CountryCode> seen;
    for (const auto& r : ranges)
      if (block_of(r.first) <= b && b <= block_of(r.last)) seen.insert(r.cc);
    const MapStatus want = seen.empty() ? MapStatus::unmapped : seen.size() == 1 ? MapStatus::resolved : MapStatus::multi_country;
    ASSERT_EQ(g.status(b), want);
    if (want == MapStatus::resolved) {
      ASSERT_EQ(g.value(b), *seen.begin());
    }
  }
}

TEST(BlockMapping, SerializationRoundTrip) {
  AsMapping m(Window{100, 200});
  m.set(100, MapStatus::resolved, 65000);
  m.set(150, MapStatus::as_set);
  m.set(199, MapStatus::resolved, 0xfffffffeu);
  std::stringstream ss;
  m.write(ss);
  EXPECT_EQ(ss.str().size(), 8u + 8 + 100 + 400);
  EXPECT_EQ(AsMapping::read(ss), m);
  std::stringstream trunc(ss.str().substr(0, 50));
  EXPECT_THROW(AsMapping::read(trunc), ParseError);
  EXPECT_EQ(m.status(99), MapStatus::unmapped);
}
