/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

#include "forasec/checker.hpp"
#include "forasec/intrusion.hpp"

namespace forasec {

inline std::string sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace detail {

inline std::string bits_to_string(std::span<const uint8_t> bits) {
  std::string s;
  s.reserve(bits.size());
  for (uint8_t b : bits) s.push_back(b ? '1' : '0');
  return s;
}

}  // namespace detail

// Per-gate side-channel profile at nominal parameters:
// gate id, kind, state/transition, DP, LP, delay. SI units, 9 significant
// digits.
inline std::string profile_csv(const Circuit& c, const TechnologyParams& p,
                               std::span<const double> c_int_by_net = {}) {
  std::string out = "gate,kind,state_or_transition,dp_w,lp_w,delay_s\n";
  for (const Gate& g : c.gates()) {
    const double ct = gate_total_capacitance(c, g.id, p, c_int_by_net);
    const int fo = c.fanout(g);
    const unsigned ns = leakage_state_count(g.kind);
    const double dp = dynamic_power(1.0, ct, p);
    for (unsigned s = 0; s < ns; ++s) {
      out += std::to_string(g.id);
      out += ',';
      out += to_string(g.kind);
      out += ",s";
      for (unsigned b = ns == 2 ? 1 : 2; b-- > 0;)
        out += ((s >> b) & 1u) ? '1' : '0';
      out += ',';
      out += sig9(dp);
      out += ',';
      out += sig9(leakage_power(p, g.kind, s, fo));
      out += ',';
      double dly = 0.0;
      if (g.kind != GateKind::Dff) {
        for (unsigned so = 0; so < ns; ++so)
          if (so != s) dly = std::max(dly, elmore_delay(p, g.kind, so, s, ct, fo));
      }
      out += sig9(dly);
      out += '\n';
    }
  }
  return out;
}

inline std::string envelope_report(const BoundEnvelope& env) {
  std::string out;
  out += "process-variation envelope (" + std::to_string(env.sample_count) + " samples)\n";
  out += "  DP_max  = " + sig9(env.dp_max) + " W (lower bound 0 in steady state)\n";
  out += "  LP_max  = " + sig9(env.lp_max) + " W\n";
  out += "  LP_min  = " + sig9(env.lp_min) + " W\n";
  for (size_t k = 0; k < env.path_delay_max.size(); ++k)
    out += "  D_max(" + std::to_string(k) + ") = " + sig9(env.path_delay_max[k]) + " s\n";
  return out;
}

inline std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out =
      "size,delta_dp_w,delta_lp_w,delta_delay_s,overlap_dp,overlap_lp,overlap_delay\n";
  for (const SweepRow& r : rows) {
    out += std::to_string(r.size) + "," + sig9(r.delta_dp) + "," + sig9(r.delta_lp) +
           "," + sig9(r.delta_delay) + "," + (r.overlap_dp ? "1" : "0") + "," +
           (r.overlap_lp ? "1" : "0") + "," + (r.overlap_delay ? "1" : "0") + "\n";
  }
  return out;
}

inline nlohmann::json counterexample_json(const Circuit& c, const Counterexample& ce) {
  nlohmann::json j;
  j["property"] = ce.property;
  j["violating_step"] = ce.violating_step;
  j["metric_value"] = ce.metric_value;
  j["bound"] = ce.bound;
  j["pattern"] = {{"state", detail::bits_to_string(ce.pattern.state)},
                  {"input", detail::bits_to_string(ce.pattern.input)},
                  {"next_input", detail::bits_to_string(ce.pattern.next_input)}};
  nlohmann::json nets = nlohmann::json::array();
  for (int n : ce.implicated_nets) nets.push_back(c.net(n).name);
  j["implicated_nets"] = nets;
  j["implicated_excess"] = ce.implicated_excess;
  nlohmann::json trace = nlohmann::json::array();
  for (const TraceStep& s : ce.trace) {
    trace.push_back({{"step", s.step},
                     {"state", detail::bits_to_string(s.state)},
                     {"input", detail::bits_to_string(s.input)},
                     {"dp", s.valuation.dp},
                     {"lp", s.valuation.lp},
                     {"path_delay", s.valuation.path_delay}});
  }
  j["trace"] = trace;
  return j;
}

// Versioned analysis report. Volatile run metadata (timestamp, wall time,
// memory) lives under "volatile" so reproducibility checks can drop that one
// object and compare the rest byte for byte.
inline nlohmann::json report_json(const Circuit& c, const AnalysisReport& report,
                                  const BoundEnvelope& env, uint64_t config_hash,
                                  uint64_t seed, const std::string& timestamp) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["tool_version"] = kVersion;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["volatile"] = {{"timestamp", timestamp},
                   {"wall_seconds", report.wall_seconds},
                   {"max_rss_kb", report.max_rss_kb}};
  j["envelope"] = {{"dp_max", env.dp_max},
                   {"lp_max", env.lp_max},
                   {"lp_min", env.lp_min},
                   {"path_delay_max", env.path_delay_max},
                   {"samples", env.sample_count}};
  nlohmann::json runs = nlohmann::json::array();
  for (const PropertyRun& run : report.runs) {
    nlohmann::json r;
    r["property"] = run.property.name();
    r["bound"] = run.property.bound;
    r["iterations"] = run.iterations;
    r["counterexamples"] = run.counterexamples.size();
    r["final_verdict"] = to_string(run.final_verdict);
    r["truncated"] = run.truncated;
    r["transitions_evaluated"] = run.transitions_evaluated;
    nlohmann::json ces = nlohmann::json::array();
    for (const Counterexample& ce : run.counterexamples)
      ces.push_back(counterexample_json(c, ce));
    r["counterexample_list"] = ces;
    runs.push_back(r);
  }
  j["runs"] = runs;
  nlohmann::json ranked = nlohmann::json::array();
  for (const RankedLocation& r : report.ranked)
    ranked.push_back({{"net", r.net_name},
                      {"count", r.count},
                      {"max_excess", r.max_excess}});
  j["vulnerable_locations"] = ranked;
  j["total_transitions_evaluated"] = report.total_transitions_evaluated;
  return j;
}

// Performance-comparison summary (bundled loop vs naive restart), in the
// shape of one CSV row per property.
inline std::string performance_csv(std::span<const PropertyRun> bundled,
                                   std::span<const PropertyRun> naive) {
  std::string out = "property,ces,evals_bundled,evals_naive,speedup\n";
  for (size_t i = 0; i < bundled.size() && i < naive.size(); ++i) {
    double speedup = bundled[i].transitions_evaluated
                         ? static_cast<double>(naive[i].transitions_evaluated) /
                               static_cast<double>(bundled[i].transitions_evaluated)
                         : 0.0;
    out += bundled[i].property.name() + "," +
           std::to_string(bundled[i].counterexamples.size()) + "," +
           std::to_string(bundled[i].transitions_evaluated) + "," +
           std::to_string(naive[i].transitions_evaluated) + "," + sig9(speedup) + "\n";
  }
  return out;
}

}  // namespace forasec
