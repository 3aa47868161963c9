#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "v4census/pipeline.hpp"
#include "v4census/synth.hpp"

namespace fs = std::filesystem;
using namespace v4census;

namespace {

Window parse_window(const std::string& s) {
  auto p = parse_prefix(s);
  if (!p) throw ConfigError("bad window prefix '" + s + "'");
  return Window::of(*p);
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

int fail(const std::string& stage, const std::exception& e) {
  std::cerr << "census: stage " << stage << " failed: " << e.what() << '\n';
  return exit_code_for(e);
}

template <class Fn>
int guarded(const std::string& stage, Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const std::exception& e) {
    return fail(stage, e);
  }
}

void ensure_out(const std::string& out) { fs::create_directories(out); }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"IPv4 /24 address-space census"};
  app.set_version_flag("--version", std::string(V4CENSUS_VERSION));
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads for parallel stages")->capture_default_str();

  // registry
  auto* reg = app.add_subcommand("registry", "Build per-/24 registry state from delegation files");
  std::vector<std::string> reg_delegations;
  std::string reg_reserved = kDefaultReserved.string(), reg_legacy, reg_window = "0.0.0.0/0", reg_out;
  reg->add_option("--delegations", reg_delegations, "RIR delegation files (repeatable)")->required();
  reg->add_option("--reserved", reg_reserved, "Special-purpose prefix list")->capture_default_str();
  reg->add_option("--legacy", reg_legacy, "Legacy /8 list");
  reg->add_option("--window", reg_window, "Window prefix for summary counts")->capture_default_str();
  reg->add_option("--out", reg_out, "Output directory")->required();

  // bgp
  auto* bgp = app.add_subcommand("bgp", "Classify routed /24s from peer visibility");
  std::vector<std::string> bgp_vis;
  std::string bgp_state, bgp_window = "0.0.0.0/0", bgp_out;
  std::uint32_t bgp_threshold = 10;
  bgp->add_option("--visibility", bgp_vis, "Visibility files day|peer|prefix (repeatable)")->required();
  bgp->add_option("--registry-state", bgp_state, "registry.state from the registry stage")->required();
  bgp->add_option("--peer-threshold", bgp_threshold, "Minimum peers on some day")->capture_default_str();
  bgp->add_option("--window", bgp_window, "Window prefix")->capture_default_str();
  bgp->add_option("--out", bgp_out, "Output directory")->required();

  // curate
  auto* cur = app.add_subcommand("curate", "Curate one vantage point's traffic into used /24s");
  VpSpec vp;
  std::string cur_kind, cur_traffic, cur_routed, cur_monitored, cur_dark, cur_filters, cur_classes;
  std::string cur_window = "0.0.0.0/0", cur_out;
  cur->add_option("--kind", cur_kind, "darknet | flowlog | bidirlog | sampled")->required();
  cur->add_option("--name", vp.name, "Source name (default: the kind)");
  cur->add_option("--traffic", cur_traffic, "Traffic record file")->required();
  cur->add_option("--routed", cur_routed, "routed.blocks from the bgp stage")->required();
  cur->add_option("--monitored", cur_monitored, "Local monitored prefixes (flow kinds)");
  cur->add_option("--dark", cur_dark, "Dark /24 list for validation and the sampled destination bound");
  cur->add_option("--filters", cur_filters, "Darknet filter config");
  cur->add_option("--classes", cur_classes, "Traffic class rules for component tallies");
  cur->add_option("--min-packets", vp.flow.min_packets, "Flow heuristic: minimum packets")->capture_default_str();
  cur->add_option("--min-avg-bytes", vp.flow.min_avg_bytes, "Flow heuristic: minimum mean packet size")
      ->capture_default_str();
  cur->add_option("--epsilon", vp.sampled.epsilon_unrouted, "Sampled: maximum unrouted fraction")
      ->capture_default_str();
  cur->add_option("--dst-dark-bound", vp.sampled.dst_dark_bound, "Sampled: maximum dark destination /24s")
      ->capture_default_str();
  cur->add_flag("--include-udp", vp.sampled.include_udp, "Sampled: keep UDP packets");
  cur->add_option("--growth-window", vp.growth_window, "Growth-curve window in seconds")->capture_default_str();
  cur->add_option("--window", cur_window, "Window prefix")->capture_default_str();
  cur->add_option("--out", cur_out, "Output directory")->required();

  // active
  auto* act = app.add_subcommand("active", "Ingest probe logs (ICMP, HTTP, traceroute)");
  std::string act_probes, act_out;
  act->add_option("--probes", act_probes, "Probe log kind|target|responder|count")->required();
  act->add_option("--out", act_out, "Output directory")->required();

  // census
  auto* cen = app.add_subcommand("census", "Merge sources into the label map and contribution table");
  std::vector<std::string> cen_sources;
  std::string cen_routed, cen_state, cen_octets, cen_window = "0.0.0.0/0", cen_out;
  cen->add_option("--source", cen_sources, "name:active|passive:blocks-file, in registration order (repeatable)")
      ->required();
  cen->add_option("--routed", cen_routed, "routed.blocks")->required();
  cen->add_option("--registry-state", cen_state, "registry.state")->required();
  cen->add_option("--octets", cen_octets, "icmp_octets.txt for the special-octet table");
  cen->add_option("--window", cen_window, "Window prefix")->capture_default_str();
  cen->add_option("--out", cen_out, "Output directory")->required();

  // map
  auto* map = app.add_subcommand("map", "Build per-/24 AS and country mappings");
  std::vector<std::string> map_p2as;
  std::string map_geo, map_window = "0.0.0.0/0", map_out;
  map->add_option("--prefix2as", map_p2as, "prefix|origin files (repeatable)");
  map->add_option("--geo", map_geo, "start|end|cc range file");
  map->add_option("--window", map_window, "Window prefix")->capture_default_str();
  map->add_option("--out", map_out, "Output directory")->required();

  // report
  auto* rep = app.add_subcommand("report", "Coverage, breakdowns, overestimation, correlation and Hilbert map");
  std::string rep_labels, rep_as, rep_geo, rep_out, rep_state, rep_cont, rep_ind, rep_sources, rep_baseline;
  unsigned rep_order = 12;
  bool rep_no_ppm = false;
  rep->add_option("--label-map", rep_labels, "labelmap.bin")->required();
  rep->add_option("--as-map", rep_as, "as_map.bin")->required();
  rep->add_option("--geo-map", rep_geo, "geo_map.bin")->required();
  rep->add_option("--out", rep_out, "Output directory")->required();
  rep->add_option("--hilbert-order", rep_order, "Hilbert curve order, 1..12")->capture_default_str();
  rep->add_option("--registry-state", rep_state, "registry.state (enables the RIR breakdown)");
  rep->add_option("--continents", rep_cont, "CC|continent file (enables the continent breakdown)");
  rep->add_option("--indicator", rep_ind, "CC|value file for the correlation");
  rep->add_option("--sources", rep_sources, "sources.json naming the label-map source bits");
  rep->add_option("--baseline", rep_baseline, "Baseline source name for coverage bins (default: first source)");
  rep->add_flag("--no-ppm", rep_no_ppm, "Skip the PPM raster");

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a synthetic scenario with hidden ground truth");
  std::string syn_config, syn_out;
  std::optional<std::uint64_t> syn_seed;
  syn->add_option("--config", syn_config, "Scenario config (key = value)");
  syn->add_option("--seed", syn_seed, "Override the scenario seed");
  syn->add_option("--out", syn_out, "Output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "Run every stage from a pipeline config");
  std::string run_config;
  run->add_option("--config", run_config, "Pipeline config")->required();

  CLI11_PARSE(app, argc, argv);
  if (threads < 1) threads = 1;

  if (reg->parsed())
    return guarded("registry", [&] {
      std::vector<fs::path> d(reg_delegations.begin(), reg_delegations.end());
      const auto st = registry_stage(d, reg_reserved, opt_path(reg_legacy));
      ensure_out(reg_out);
      write_registry_outputs(st, parse_window(reg_window), reg_out);
    });

  if (bgp->parsed())
    return guarded("bgp", [&] {
      const auto st = load(bgp_state, &RegistryState::read);
      std::vector<fs::path> v(bgp_vis.begin(), bgp_vis.end());
      const Window w = parse_window(bgp_window);
      const auto s = bgp_stage(v, st, bgp_threshold, w);
      ensure_out(bgp_out);
      write_bgp_outputs(s, bgp_threshold, w, bgp_out);
    });

  if (cur->parsed())
    return guarded("curation", [&] {
      vp.kind = parse_vp_kind(cur_kind);
      if (vp.name.empty()) vp.name = cur_kind;
      vp.traffic = cur_traffic;
      vp.monitored = opt_path(cur_monitored);
      vp.dark = opt_path(cur_dark);
      vp.filters = opt_path(cur_filters);
      vp.classes = opt_path(cur_classes);
      const auto routed = load_block_list(cur_routed);
      const auto out = curation_stage(vp, routed, parse_window(cur_window));
      ensure_out(cur_out);
      write_vp_outputs(out, cur_out);
    });

  if (act->parsed())
    return guarded("active", [&] {
      const auto s = active_stage(act_probes);
      ensure_out(act_out);
      write_active_outputs(s, act_out);
    });

  if (cen->parsed())
    return guarded("census", [&] {
      std::vector<SourceSet> sources;
      for (const auto& spec : cen_sources) {
        const auto a = spec.find(':'), b = spec.find(':', a == std::string::npos ? a : a + 1);
        if (a == std::string::npos || b == std::string::npos)
          throw ConfigError("--source expects name:family:file, got '" + spec + "'");
        const std::string fam = spec.substr(a + 1, b - a - 1);
        if (fam != "active" && fam != "passive") throw ConfigError("source family must be active or passive");
        sources.push_back({spec.substr(0, a), fam == "active" ? SourceFamily::active : SourceFamily::passive,
                           load_block_list(spec.substr(b + 1))});
      }
      const auto routed = load_block_list(cen_routed);
      const auto st = load(cen_state, &RegistryState::read);
      std::map<Block24Id, OctetMask> octets;
      if (!cen_octets.empty()) octets = load(cen_octets, &read_octet_masks);
      const Window w = parse_window(cen_window);
      const auto c = census_stage(std::move(sources), routed, st, octets, w, threads);
      ensure_out(cen_out);
      write_census_outputs(c, w, cen_out);
    });

  if (map->parsed())
    return guarded("mapping", [&] {
      std::vector<fs::path> p(map_p2as.begin(), map_p2as.end());
      const auto m = mapping_stage(p, opt_path(map_geo), parse_window(map_window), threads);
      ensure_out(map_out);
      write_mapping_outputs(m, map_out);
    });

  if (rep->parsed())
    return guarded("report", [&] {
      const auto labels = load(rep_labels, &BlockLabelMap::read_snapshot);
      const auto as = load(rep_as, &AsMapping::read);
      const auto geo = load(rep_geo, &GeoMapping::read);
      ReportOptions opt;
      RegistryState st;
      ContinentMap cont;
      std::map<std::string, double> ind;
      if (!rep_state.empty()) {
        st = load(rep_state, &RegistryState::read);
        opt.registry = &st;
      }
      if (!rep_cont.empty()) {
        cont = load(rep_cont, &parse_continent_map);
        opt.continents = &cont;
      }
      if (!rep_ind.empty()) {
        ind = load(rep_ind, &parse_indicator);
        opt.indicator = &ind;
      }
      if (!rep_baseline.empty()) {
        if (rep_sources.empty()) throw ConfigError("--baseline needs --sources");
        const Json j = Json::parse(read_file(rep_sources), nullptr, false);
        if (j.is_discarded() || !j.is_array()) throw ParseError(rep_sources + ": expected a JSON array");
        bool found = false;
        for (const auto& e : j)
          if (e.at("name").get<std::string>() == rep_baseline) opt.baseline_bit = e.at("bit").get<std::size_t>(), found = true;
        if (!found) throw ConfigError("baseline source '" + rep_baseline + "' is not in " + rep_sources);
      }
      opt.hilbert_order = rep_order;
      opt.ppm = !rep_no_ppm;
      opt.threads = threads;
      ensure_out(rep_out);
      report_stage(labels, as, geo, opt, rep_out);
    });

  if (syn->parsed())
    return guarded("synth", [&] {
      ScenarioConfig cfg;
      if (!syn_config.empty()) {
        auto in = open_input(syn_config);
        cfg = parse_scenario_config(in);
      }
      if (syn_seed) cfg.seed = *syn_seed;
      write_scenario(generate(cfg), syn_out);
    });

  if (run->parsed()) {
    RunConfig cfg;
    try {
      cfg = parse_run_config(run_config);
    } catch (const std::exception& e) {
      return fail("config", e);
    }
    const auto r = run_pipeline(cfg, threads);
    if (r.exit_code != 0) {
      std::cerr << "census: stage " << r.failed_stage << " failed: " << r.error << '\n'
                << "census: partial outputs in " << cfg.out.string() << " (see INCOMPLETE)\n";
      return r.exit_code;
    }
    std::cout << "census: outputs written to " << cfg.out.string() << '\n';
    return 0;
  }
  return 1;
}
