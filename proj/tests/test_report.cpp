#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "v4census/report.hpp"

using namespace v4census;

TEST(Coverage, GlobalFraction) {
  BlockSet used, routed, baseline;
  for (Block24Id b = 0; b < 100; ++b) routed.insert(b);
  for (Block24Id b = 0; b < 51; ++b) used.insert(b);
  used.insert(500); // unrouted, ignored
  AsMapping as(Window{0, 1000});
  const auto rep = coverage(used, routed, as, baseline);
  EXPECT_DOUBLE_EQ(rep.global_coverage(), 0.51);
  EXPECT_EQ(rep.ases_announcing, 0u);
}

TEST(Coverage, BinBoundaries) {
  EXPECT_EQ(coverage_bin(0, 10), 0u);
  EXPECT_EQ(coverage_bin(1, 50), 1u);
  EXPECT_EQ(coverage_bin(1, 51), 0u);
  EXPECT_EQ(coverage_bin(10, 10), 49u);
  EXPECT_EQ(coverage_bin(49, 50), 49u);
}

// Oracle: group ASes by hand-computed 2% bins and take sorted-sample quartiles.
TEST(Coverage, PerAsBinsMatchBruteForce) {
  std::mt19937_64 rng(41);
  const Window w{0, 40000};
  AsMapping as(w);
  BlockSet used, routed, baseline;
  for (Block24Id b = w.lo; b < w.hi; ++b) {
    const auto asn = static_cast<std::uint32_t>(1 + (b / 50) % 300);
    if (rng() % 10) as.set(b, MapStatus::resolved, asn);
    if (asn % 37 == 0) continue; // some ASes without routed blocks
    if (rng() % 4) routed.insert(b);
    const auto p = asn % 10;
    if (rng() % 10 < p) baseline.insert(b), used.insert(b);
    else if (rng() % 3 == 0) used.insert(b);
  }
  const auto rep = coverage(used, routed, as, baseline);

  std::map<std::uint32_t, std::array<std::uint64_t, 3>> per; // routed, used, baseline
  std::set<std::uint32_t> mapped;
  for (Block24Id b = w.lo; b < w.hi; ++b) {
    if (!as.resolved(b)) continue;
    mapped.insert(as.value(b));
    if (!routed.contains(b)) continue;
    auto& a = per[as.value(b)];
    ++a[0];
    a[1] += used.contains(b);
    a[2] += baseline.contains(b);
  }
  std::map<unsigned, std::vector<double>> bins;
  std::uint64_t with_used = 0;
  for (const auto& [asn, a] : per) {
    const double frac = static_cast<double>(a[2]) / static_cast<double>(a[0]);
    unsigned bin = 0;
    while (bin < 49 && frac >= 0.02 * (bin + 1) - 1e-12) ++bin;
    bins[bin].push_back(static_cast<double>(a[1]) / static_cast<double>(a[0]));
    with_used += a[1] > 0;
  }
  EXPECT_EQ(rep.ases_announcing, per.size());
  EXPECT_EQ(rep.ases_with_used, with_used);
  EXPECT_EQ(rep.ases_zero_routed, mapped.size() - per.size());
  ASSERT_EQ(rep.bins.size(), bins.size());
  std::size_t k = 0;
  for (auto& [bin, v] : bins) {
    std::sort(v.begin(), v.end());
    const auto q = [&](double p) {
      const double pos = p * static_cast<double>(v.size() - 1);
      const auto lo = static_cast<std::size_t>(pos);
      return lo + 1 < v.size() ? v[lo] + (v[lo + 1] - v[lo]) * (pos - static_cast<double>(lo)) : v[lo];
    };
    const auto& got = rep.bins[k++];
    EXPECT_EQ(got.bin, bin);
    EXPECT_EQ(got.ases, v.size());
    EXPECT_DOUBLE_EQ(got.min, v.front());
    EXPECT_DOUBLE_EQ(got.max, v.back());
    EXPECT_NEAR(got.q1, q(0.25), 1e-12);
    EXPECT_NEAR(got.median, q(0.5), 1e-12);
    EXPECT_NEAR(got.q3, q(0.75), 1e-12);
  }
}

TEST(Breakdown, RowsSumToWindowAndFormatPercent) {
  std::mt19937_64 rng(42);
  const Window w{60u << 16, (60u << 16) + 4096};
  BlockLabelMap labels;
  GeoMapping geo(w);
  const char* ccs[] = {"US", "DE", "FR"};
  for (Block24Id b = w.lo; b < w.hi; ++b) {
    labels.set_label(b, static_cast<TaxonomyLabel>(rng() % 5));
    if (rng() % 8) geo.set(b, MapStatus::resolved, *parse_cc(ccs[rng() % 3]));
  }
  const ContinentMap cont{{"US", "North America"}, {"DE", "Europe"}, {"FR", "Europe"}};
  const auto t = breakdown(labels, Grouping::country, {nullptr, &geo, nullptr, &cont}, w);
  std::uint64_t sum = t.excluded;
  for (const auto& r : t.rows) sum += r.total();
  EXPECT_EQ(sum, w.size());
  const auto c = breakdown(labels, Grouping::continent, {nullptr, &geo, nullptr, &cont}, w);
  ASSERT_EQ(c.rows.size(), 2u);
  EXPECT_EQ(c.rows[0].group, "Europe");
  std::uint64_t eu_used = 0;
  for (const auto& r : t.rows)
    if (r.group != "US") eu_used += r.counts[4];
  EXPECT_EQ(c.rows[0].counts[4], eu_used);
  EXPECT_EQ(format_percent(0.095), "9.5%");
  EXPECT_EQ(format_percent(1.0, 0), "100%");
  EXPECT_THROW(breakdown(labels, Grouping::asn, {}, w), ConfigError);
}

TEST(Breakdown, RirTagsAndTopN) {
  RegistryState reg;
  reg.slash8[1] = AdminTag::apnic;
  reg.slash8[2] = AdminTag::legacy;
  BlockLabelMap labels;
  for (Block24Id b = 1u << 16; b < (1u << 16) + 10; ++b) labels.set_label(b, TaxonomyLabel::Used);
  for (Block24Id b = 2u << 16; b < (2u << 16) + 20; ++b) labels.set_label(b, TaxonomyLabel::Used);
  const auto t = breakdown(labels, Grouping::rir_or_legacy, {&reg, nullptr, nullptr, nullptr}, Window{1u << 16, 3u << 16});
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].group, "apnic");
  const auto top = top_n(t, TaxonomyLabel::Used, 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].group, "legacy");
  BreakdownRow r{"x", {0, 0, 2, 3, 5}};
  EXPECT_DOUBLE_EQ(r.unused_of_assigned(), 0.5);
  EXPECT_DOUBLE_EQ(r.fraction(TaxonomyLabel::Used), 0.5);
}

TEST(Overestimation, Examples) {
  const Window w{0, 300};
  AsMapping as(w);
  BlockSet used, routed;
  // AS1: 100 routed, 4 used. AS2: 100 routed, all used. AS3: 50 routed, none used. AS4: no routed.
  for (Block24Id b = 0; b < 100; ++b) as.set(b, MapStatus::resolved, 1), routed.insert(b);
  for (Block24Id b = 0; b < 4; ++b) used.insert(b);
  for (Block24Id b = 100; b < 200; ++b) as.set(b, MapStatus::resolved, 2), routed.insert(b), used.insert(b);
  for (Block24Id b = 200; b < 250; ++b) as.set(b, MapStatus::resolved, 3), routed.insert(b);
  for (Block24Id b = 250; b < 260; ++b) as.set(b, MapStatus::resolved, 4);
  std::uint64_t skipped = 0;
  const auto e = overestimation_by_as(as, used, routed, &skipped);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_DOUBLE_EQ(e[0].error(), 0.96);
  EXPECT_DOUBLE_EQ(e[1].error(), 0.0);
  EXPECT_DOUBLE_EQ(e[2].error(), 1.0);
  EXPECT_EQ(skipped, 1u);
  const auto bins = summarize_by_size(e);
  ASSERT_EQ(bins.size(), 2u);
  EXPECT_EQ(bins[0].log2, 5u);
  EXPECT_EQ(bins[1].log2, 6u);
  EXPECT_DOUBLE_EQ(bins[1].median_error, 0.48);
}

TEST(Correlation, MatchesTextbookFormula) {
  std::mt19937_64 rng(43);
  std::map<std::string, double> u, ind;
  std::vector<double> x, y;
  for (int i = 0; i < 60; ++i) {
    const std::string cc{static_cast<char>('A' + i / 26), static_cast<char>('A' + i % 26)};
    const double a = static_cast<double>(rng() % 100000), b = a * 0.7 + static_cast<double>(rng() % 30000);
    u[cc] = a, ind[cc] = b;
    x.push_back(a), y.push_back(b);
  }
  ind["ZZ"] = 5;
  // r = (n Σxy - Σx Σy) / sqrt((n Σx² - (Σx)²)(n Σy² - (Σy)²))
  long double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  const long double n = static_cast<long double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    sx += x[i], sy += y[i], sxy += x[i] * y[i], sxx += x[i] * x[i], syy += y[i] * y[i];
  const double want = static_cast<double>((n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
  const auto c = indicator_correlation(u, ind);
  EXPECT_NEAR(c.r, want, 1e-12);
  EXPECT_EQ(c.n, 60u);
  EXPECT_EQ(c.excluded, 1u);

  std::map<std::string, double> lin, neg;
  for (int i = 0; i < 5; ++i) lin["A" + std::string(1, static_cast<char>('A' + i))] = 3.0 * i + 1;
  for (const auto& [k, v] : lin) neg[k] = -v;
  EXPECT_NEAR(indicator_correlation(lin, lin).r, 1.0, 1e-12);
  EXPECT_NEAR(indicator_correlation(lin, neg).r, -1.0, 1e-12);
  std::map<std::string, double> flat{{"AA", 2}, {"AB", 2}, {"AC", 2}};
  EXPECT_THROW(indicator_correlation(flat, lin), ZeroVariance);
}

TEST(Indicator, Parse) {
  std::istringstream in("# cc|value\nUS|12.5\nDE|3\n");
  const auto m = parse_indicator(in);
  EXPECT_DOUBLE_EQ(m.at("US"), 12.5);
  std::istringstream bad("US|x\n");
  EXPECT_THROW(parse_indicator(bad), ParseError);
}

// Oracle: per window, a std::set of blocks; cumulative is the union so far.
TEST(Growth, MatchesBruteForce) {
  std::mt19937_64 rng(44);
  std::vector<BlockObservation> obs;
  for (int i = 0; i < 5000; ++i)
    obs.push_back({1000 + static_cast<std::int64_t>(rng() % 86400 * 7), static_cast<Block24Id>(rng() % 3000)});
  const std::int64_t win = 86400;
  const auto g = growth_curve(obs, win);
  std::int64_t t0 = obs[0].ts;
  for (const auto& o : obs) t0 = std::min(t0, o.ts);
  std::map<std::int64_t, std::set<Block24Id>> per;
  for (const auto& o : obs) per[(o.ts - t0) / win].insert(o.block);
  std::set<Block24Id> cum;
  ASSERT_EQ(g.points.size(), static_cast<std::size_t>(per.rbegin()->first + 1));
  std::vector<double> counts;
  for (std::size_t k = 0; k < g.points.size(); ++k) {
    const auto& s = per[static_cast<std::int64_t>(k)];
    cum.insert(s.begin(), s.end());
    EXPECT_EQ(g.points[k].per_window, s.size());
    EXPECT_EQ(g.points[k].cumulative, cum.size());
    EXPECT_EQ(g.points[k].window_start, t0 + static_cast<std::int64_t>(k) * win);
    counts.push_back(static_cast<double>(s.size()));
  }
  double mean = 0, var = 0;
  for (double c : counts) mean += c;
  mean /= static_cast<double>(counts.size());
  for (double c : counts) var += (c - mean) * (c - mean);
  EXPECT_NEAR(g.relative_stddev, std::sqrt(var / static_cast<double>(counts.size())) / mean, 1e-12);
  EXPECT_THROW(growth_curve(obs, 0), ConfigError);
  EXPECT_TRUE(growth_curve({}, win).points.empty());
}

TEST(Quantile, Interpolates) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(median_sorted(v), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
}
