#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "v4census/blockmap.hpp"

using namespace v4census;

TEST(BlockOf, Examples) {
  EXPECT_EQ(block_of(*parse_ipv4("0.0.0.0")), 0u);
  EXPECT_EQ(block_of(*parse_ipv4("1.2.3.45")), 66051u);
  EXPECT_EQ(block_of(*parse_ipv4("255.255.255.255")), 16777215u);
  EXPECT_EQ(block_to_string(66051), "1.2.3.0/24");
}

TEST(Window, OfPrefix) {
  const auto w = Window::of(*parse_prefix("20.0.0.0/8"));
  EXPECT_EQ(w.lo, 20u << 16);
  EXPECT_EQ(w.size(), 65536u);
  EXPECT_THROW(Window::of(*parse_prefix("1.2.3.0/25")), ConfigError);
}

TEST(BlockSet, IdentityAndIdempotence) {
  BlockSet a, empty;
  for (Block24Id b : {1u, 5u, 64u, 65u, 16777215u}) a.insert(b);
  EXPECT_EQ(set_algebra(a, empty, SetOp::union_), a);
  EXPECT_EQ(set_algebra(a, a, SetOp::intersect), a);
  EXPECT_TRUE(set_algebra(a, a, SetOp::diff).empty());
}

// Oracle: std::set with explicit enumeration.
TEST(BlockSet, AlgebraMatchesBruteForce) {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 20; ++it) {
    std::set<Block24Id> sa, sb;
    BlockSet a, b;
    const std::uint32_t span = 1u << (8 + it % 12);
    for (int k = 0; k < 300; ++k) {
      const auto x = static_cast<Block24Id>(rng() % span), y = static_cast<Block24Id>(rng() % span);
      sa.insert(x), a.insert(x);
      sb.insert(y), b.insert(y);
    }
    std::vector<Block24Id> u, i, d;
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(u));
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(i));
    std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(d));
    EXPECT_EQ((a | b).to_vector(), u);
    EXPECT_EQ((a & b).to_vector(), i);
    EXPECT_EQ((a - b).to_vector(), d);
    EXPECT_EQ(intersection_count(a, b), i.size());
    EXPECT_EQ(difference_count(a, b), d.size());
    EXPECT_EQ(difference_count(a, b) + intersection_count(a, b), a.count());
    EXPECT_EQ((a & b).is_subset_of(a), true);
    const Window w{span / 4, span / 2};
    EXPECT_EQ(a.count(w), static_cast<std::uint64_t>(std::count_if(sa.begin(), sa.end(), [&](Block24Id x) { return w.contains(x); })));
    BlockSet r = a;
    r.restrict_to(w);
    EXPECT_EQ(r.count(), a.count(w));
  }
}

TEST(BlockSet, InsertPrefixCoversOverlappingBlocks) {
  BlockSet s;
  s.insert(*parse_prefix("10.0.0.0/23"));
  EXPECT_EQ(s.count(), 2u);
  s.insert(*parse_prefix("10.0.5.128/25"));
  EXPECT_TRUE(s.contains(block_of(*parse_ipv4("10.0.5.1"))));
  EXPECT_EQ(s.count(), 3u);
}

TEST(BlockLabelMap, SnapshotRoundTrip) {
  BlockLabelMap m;
  m.set_label(7, TaxonomyLabel::Used);
  m.set_label(16777215, TaxonomyLabel::Reserved);
  m.add_source_bit(7, 0);
  m.add_source_bit(7, 15);
  std::stringstream ss;
  m.write_snapshot(ss);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.size(), 8u + 4 + 3u * kUniverseSize);
  EXPECT_EQ(bytes.substr(0, 8), "CENSUS01");
  auto back = BlockLabelMap::read_snapshot(ss);
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.source_bits(7), 0x8001);
  EXPECT_THROW(m.add_source_bit(1, 16), ConfigError);
}

TEST(BlockLabelMap, RejectsCorruptSnapshot) {
  std::stringstream bad("CENSUS02....");
  EXPECT_THROW(BlockLabelMap::read_snapshot(bad), ParseError);
  std::stringstream trunc(std::string("CENSUS01") + std::string("\0\0\0\1", 4));
  EXPECT_THROW(BlockLabelMap::read_snapshot(trunc), ParseError);
}

TEST(FinalizeTaxonomy, Definitions) {
  std::vector<RegistryStatus> reg(kUniverseSize, RegistryStatus::Available);
  reg[1] = reg[2] = reg[3] = RegistryStatus::Assigned;
  reg[4] = RegistryStatus::Reserved;
  BlockSet routed, used;
  routed.insert(1), routed.insert(2), used.insert(1);
  BlockLabelMap m;
  finalize_taxonomy(m, routed, used, reg, Window{0, 8});
  EXPECT_EQ(m.label(1), TaxonomyLabel::Used);
  EXPECT_EQ(m.label(2), TaxonomyLabel::RoutedUnused);
  EXPECT_EQ(m.label(3), TaxonomyLabel::UnroutedAssigned);
  EXPECT_EQ(m.label(4), TaxonomyLabel::Reserved);
  EXPECT_EQ(m.label(5), TaxonomyLabel::Available);
}

TEST(FinalizeTaxonomy, RejectsOverlappingLeaves) {
  std::vector<RegistryStatus> reg(kUniverseSize, RegistryStatus::Available);
  BlockSet routed, used;
  routed.insert(9);
  BlockLabelMap m;
  EXPECT_THROW(finalize_taxonomy(m, routed, used, reg, Window{0, 16}), PartitionViolation);
  reg[9] = RegistryStatus::Assigned;
  used.insert(10);
  reg[10] = RegistryStatus::Assigned;
  EXPECT_THROW(finalize_taxonomy(m, routed, used, reg, Window{0, 16}), PartitionViolation);
}

// Oracle: a 1,000-block universe with random hidden labels; inputs derived from them.
TEST(FinalizeTaxonomy, RecoversHiddenLabelsOnThousandBlockUniverse) {
  std::mt19937_64 rng(3);
  const Window w{5000, 6000};
  std::vector<RegistryStatus> reg(kUniverseSize, RegistryStatus::Available);
  BlockSet routed, used;
  LeafCounts truth{};
  std::vector<TaxonomyLabel> hidden(w.size());
  for (std::uint32_t b = w.lo; b < w.hi; ++b) {
    const auto l = static_cast<TaxonomyLabel>(rng() % 5);
    hidden[b - w.lo] = l;
    ++truth[static_cast<std::size_t>(l)];
    switch (l) {
      case TaxonomyLabel::Reserved: reg[b] = RegistryStatus::Reserved; break;
      case TaxonomyLabel::Available: reg[b] = RegistryStatus::Available; break;
      case TaxonomyLabel::UnroutedAssigned: reg[b] = RegistryStatus::Assigned; break;
      case TaxonomyLabel::RoutedUnused: reg[b] = RegistryStatus::Assigned, routed.insert(b); break;
      case TaxonomyLabel::Used: reg[b] = RegistryStatus::Assigned, routed.insert(b), used.insert(b); break;
    }
  }
  for (unsigned threads : {1u, 4u}) {
    BlockLabelMap m;
    finalize_taxonomy(m, routed, used, reg, w, threads);
    EXPECT_EQ(m.leaf_counts(w), truth);
    for (std::uint32_t b = w.lo; b < w.hi; ++b) ASSERT_EQ(m.label(b), hidden[b - w.lo]);
    std::uint64_t sum = 0;
    for (auto c : m.leaf_counts(w)) sum += c;
    EXPECT_EQ(sum, w.size());
  }
}
