/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "forasec/netlist.hpp"
#include "forasec/paths.hpp"
#include "forasec/techmodel.hpp"

namespace forasec {

// ---------------------------------------------------------------------------
// Subthreshold leakage
//
// Per-device current:
//   I = 2 n mu C_ox (W/L) phi_t^2 exp((sigma V_dd - V_th) / (n phi_t))
// with W = WR * W_min. A series stack of two off devices conducts like a
// single device attenuated by 10^(-V_dd sigma / n).
// ---------------------------------------------------------------------------

inline double subthreshold_current(const TechnologyParams& p, Polarity pol,
                                   double wr) {
  const double phi = p.phi_t();
  const double w = wr * p.min_width(pol);
  return 2.0 * p.slope(pol) * p.mobility(pol) * p.c_ox *
         (w / p.channel_length(pol)) * phi * phi *
         std::exp((p.dibl(pol) * p.v_dd - p.v_th(pol)) / (p.slope(pol) * phi));
}

inline double subthreshold_current(const TechnologyParams& p, Polarity pol) {
  return subthreshold_current(p, pol, p.width_ratio(pol));
}

inline double stack_suppression(const TechnologyParams& p, Polarity pol) {
  return std::pow(10.0, -(p.v_dd * p.dibl(pol)) / p.slope(pol));
}

// Input states are encoded as (in0 << 1) | in1 for two-input gates, the bare
// bit for NOT, and (D << 1) | Q for flip-flops.
inline unsigned leakage_state_count(GateKind k) {
  switch (k) {
    case GateKind::Not: return 2;
    case GateKind::Nand2:
    case GateKind::Nor2:
    case GateKind::Dff: return 4;
    default: throw InvariantError(std::string("no leakage table for ") + to_string(k));
  }
}

// Leakage power by gate kind and input state.
//
// NAND2 (series nMOS, parallel pMOS):
//   00 -> FO V_dd I_n * 10^(-V_dd sigma_n / n_n)   (off-stack of two nMOS)
//   01 -> FO V_dd (I_n + I_p)
//   10 -> FO V_dd (I_n + I_p)
//   11 -> 2 FO V_dd I_p                            (two parallel off pMOS)
// NOR2 and NOT follow from the mirrored transistor topology; the NOR2 off
// pMOS stack on input 11 takes the pMOS stack suppression.
inline double leakage_power(const TechnologyParams& p, GateKind kind,
                            unsigned state, int fo) {
  const double in = subthreshold_current(p, Polarity::Nmos);
  const double ip = subthreshold_current(p, Polarity::Pmos);
  const double base = fo * p.v_dd;
  switch (kind) {
    case GateKind::Nand2:
      switch (state & 3u) {
        case 0: return base * in * stack_suppression(p, Polarity::Nmos);
        case 1:
        case 2: return base * (in + ip);
        default: return 2.0 * base * ip;
      }
    case GateKind::Nor2:
      switch (state & 3u) {
        case 0: return 2.0 * base * in;
        case 1:
        case 2: return base * (in + ip);
        default: return base * ip * stack_suppression(p, Polarity::Pmos);
      }
    case GateKind::Not:
      return (state & 1u) ? base * ip : base * in;
    case GateKind::Dff: {
      // Fig.-5 latch cell at hold (CLK = 0): settled internal values are
      // nd = !D, sb = rb = 1, q = Q, qb = !Q. The output NAND sees the
      // external fanout on top of its internal sink.
      const unsigned d = (state >> 1) & 1u;
      const unsigned q = state & 1u;
      double lp = 0.0;
      lp += leakage_power(p, GateKind::Not, d, 1);                      // inverter
      lp += leakage_power(p, GateKind::Nand2, (d << 1) | 0u, 1);        // set NAND
      lp += leakage_power(p, GateKind::Nand2, ((1u - d) << 1) | 0u, 1); // reset NAND
      lp += leakage_power(p, GateKind::Nand2, (1u << 1) | (1u - q), fo + 1);  // Q stage
      lp += leakage_power(p, GateKind::Nand2, (1u << 1) | q, 1);        // QB stage
      return lp;
    }
    default:
      throw InvariantError(std::string("no leakage table for ") + to_string(kind));
  }
}

// ---------------------------------------------------------------------------
// Elmore propagation delay, t = ln2 * tau.
//
// NAND2 rows (states are (A,B), series nMOS stack ordered A at the output):
//   01 -> 11 : tau = 2 R_n C_total / (FO WR_n)
//   10 -> 11 : tau = 2 R_n (C_total + C_nstack) / (FO WR_n)
//   00 -> 11 : tau = 2 R_n C_total / (FO WR_n)
//   11 -> 01 : tau =   R_p C_total / (FO WR_p)
//   11 -> 00 : tau =   R_p C_total / (2 FO WR_p)
//   11 -> 10 : tau =   R_p (C_total + C_nstack) / (FO WR_p)
// R_n/R_p are minimum-width on-resistances; the FO*WR divisor rescales to
// the actual device width. NOR2 is the mirrored table with the pMOS stack
// node; NOT is a single-stage RC. Transitions that leave the output
// unchanged cost nothing.
// ---------------------------------------------------------------------------

// Stack node capacitance between the series pMOS pair of a NOR2; scaled from
// the configured nMOS value by bounding-device width.
inline double pstack_capacitance(const TechnologyParams& p) {
  return p.c_nstack * (p.wr_p * p.w_pmin) / (p.wr_n * p.w_nmin);
}

inline bool output_changes(GateKind kind, unsigned s_old, unsigned s_new) {
  uint8_t a[2] = {static_cast<uint8_t>((s_old >> 1) & 1u), static_cast<uint8_t>(s_old & 1u)};
  uint8_t b[2] = {static_cast<uint8_t>((s_new >> 1) & 1u), static_cast<uint8_t>(s_new & 1u)};
  if (kind == GateKind::Not)
    return (s_old & 1u) != (s_new & 1u);
  std::span<const uint8_t> sa(a, 2), sb(b, 2);
  return Circuit::eval_gate(kind, sa) != Circuit::eval_gate(kind, sb);
}

inline double elmore_tau(const TechnologyParams& p, GateKind kind,
                         unsigned s_old, unsigned s_new, double c_total, int fo) {
  if (!output_changes(kind, s_old, s_new)) return 0.0;
  const double rn = on_resistance(p, Polarity::Nmos, 1.0);
  const double rp = on_resistance(p, Polarity::Pmos, 1.0);
  switch (kind) {
    case GateKind::Not:
      return (s_new & 1u) ? rn * c_total / (fo * p.wr_n)
                          : rp * c_total / (fo * p.wr_p);
    case GateKind::Nand2: {
      s_old &= 3u;
      s_new &= 3u;
      if (s_new == 3u) {  // output falls through the nMOS stack
        double c = c_total + (s_old == 2u ? p.c_nstack : 0.0);
        return 2.0 * rn * c / (fo * p.wr_n);
      }
      // output rises; s_old == 11
      switch (s_new) {
        case 1u: return rp * c_total / (fo * p.wr_p);
        case 0u: return rp * c_total / (2.0 * fo * p.wr_p);
        default: return rp * (c_total + p.c_nstack) / (fo * p.wr_p);  // 11 -> 10
      }
    }
    case GateKind::Nor2: {
      s_old &= 3u;
      s_new &= 3u;
      const double cps = pstack_capacitance(p);
      if (s_new == 0u) {  // output rises through the pMOS stack
        double c = c_total + (s_old == 2u ? cps : 0.0);
        return 2.0 * rp * c / (fo * p.wr_p);
      }
      // output falls; s_old == 00
      switch (s_new) {
        case 1u: return rn * c_total / (fo * p.wr_n);
        case 3u: return rn * c_total / (2.0 * fo * p.wr_n);
        default: return rn * (c_total + cps) / (fo * p.wr_n);  // 00 -> 10
      }
    }
    default:
      throw InvariantError(std::string("no delay table for ") + to_string(kind));
  }
}

inline double elmore_delay(const TechnologyParams& p, GateKind kind,
                           unsigned s_old, unsigned s_new, double c_total, int fo) {
  return M_LN2 * elmore_tau(p, kind, s_old, s_new, c_total, fo);
}

// Worst transition of a gate kind at a fixed load.
inline double max_elmore_delay(const TechnologyParams& p, GateKind kind,
                               double c_total, int fo) {
  const unsigned n = leakage_state_count(kind);
  double best = 0.0;
  for (unsigned a = 0; a < n; ++a)
    for (unsigned b = 0; b < n; ++b)
      if (a != b) best = std::max(best, elmore_delay(p, kind, a, b, c_total, fo));
  return best;
}

// CLK-to-Q of the latch cell: set NAND followed by the Q NAND, both at their
// worst transition.
inline double dff_clk_to_q(const TechnologyParams& p, double c_total_q, int fo) {
  const double internal = gate_capacitance(p, Polarity::Pmos, 1) * 2.0 +
                          gate_capacitance(p, Polarity::Nmos, 1) * 2.0 +
                          diffusion_capacitance(p, GateKind::Nand2, 1);
  return max_elmore_delay(p, GateKind::Nand2, internal, 1) +
         max_elmore_delay(p, GateKind::Nand2, c_total_q, fo);
}

// ---------------------------------------------------------------------------
// Dynamic power: P = alpha * C_total * V_dd^2 * f
// ---------------------------------------------------------------------------

inline double dynamic_power(double alpha, double c_total, const TechnologyParams& p) {
  if (alpha < 0.0 || alpha > 1.0)
    throw InvariantError("switching activity outside [0, 1]");
  return alpha * c_total * p.v_dd * p.v_dd * p.f_clk;
}

// ---------------------------------------------------------------------------
// Circuit-level capacitances
// ---------------------------------------------------------------------------

// Per-gate input-capacitance multiplicity: the load model counts the full
// transistor complement of each connected gate (two pairs for the 2-input
// kinds, one for NOT, three for the flip-flop cell front end: inverter plus
// set NAND).
inline int input_pair_count(GateKind k) {
  switch (k) {
    case GateKind::Nand2:
    case GateKind::Nor2: return 2;
    case GateKind::Not: return 1;
    case GateKind::Dff: return 3;
    default: throw InvariantError(std::string("no load model for ") + to_string(k));
  }
}

// C_load of a net: sum of gate capacitances of the distinct gates connected
// to it, each sized by its own fanout. Sink-less nets carry the configured
// output-pad capacitance. Trojan-marked sinks are excluded here; their
// loading enters through the explicit C_int term.
inline double load_capacitance(const Circuit& c, int net_id,
                               const TechnologyParams& p) {
  const Net& n = c.net(net_id);
  double total = 0.0;
  int last_gate = -1;
  bool any = false;
  // sinks are grouped by gate id at insertion; dedupe consecutive pins
  std::vector<int> seen;
  for (auto [gid, pin] : n.sinks) {
    (void)pin;
    if (c.is_trojan(gid)) continue;
    if (std::find(seen.begin(), seen.end(), gid) != seen.end()) continue;
    seen.push_back(gid);
    const Gate& g = c.gate(gid);
    const int fo = c.fanout(g);
    const int pairs = input_pair_count(g.kind);
    total += pairs * (gate_capacitance(p, Polarity::Pmos, fo) +
                      gate_capacitance(p, Polarity::Nmos, fo));
    any = true;
  }
  (void)last_gate;
  if (!any && n.sinks.empty()) total = p.c_pad;
  return total;
}

// C_total at a gate output: C_load + C_diff + C_int.
inline double total_capacitance(const Circuit& c, const Gate& g,
                                const TechnologyParams& p,
                                double intrusion_load = 0.0) {
  GateKind diff_kind = g.kind == GateKind::Dff ? GateKind::Nand2 : g.kind;
  return load_capacitance(c, g.output, p) +
         diffusion_capacitance(p, diff_kind, c.fanout(g)) + intrusion_load;
}

inline double gate_total_capacitance(const Circuit& c, int gate_id,
                                     const TechnologyParams& p,
                                     std::span<const double> c_int_by_net = {}) {
  const Gate& g = c.gate(gate_id);
  double ci = c_int_by_net.empty() ? 0.0 : c_int_by_net[g.output];
  return total_capacitance(c, g, p, ci);
}

// Nominal per-gate delays (worst transition at nominal load); used for path
// enumeration and location classification. Flip-flops sit between paths and
// report zero here.
inline std::vector<double> nominal_gate_delays(const Circuit& c,
                                               const TechnologyParams& p,
                                               std::span<const double> c_int_by_net = {}) {
  std::vector<double> d(c.gates().size(), 0.0);
  for (const Gate& g : c.gates()) {
    if (g.kind == GateKind::Dff) continue;
    d[g.id] = max_elmore_delay(p, g.kind, gate_total_capacitance(c, g.id, p, c_int_by_net),
                               c.fanout(g));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Switching activity from a trace
// ---------------------------------------------------------------------------

// alpha(gate) = output toggles / (trace length - 1), from zero-delay
// cycle-accurate simulation starting at `initial_state` (one bit per DFF in
// flipflops() order).
inline std::vector<double> switching_activity(const Circuit& c,
                                              std::span<const std::vector<uint8_t>> trace,
                                              std::span<const uint8_t> initial_state) {
  if (trace.size() < 2) throw InvariantError("trace must contain at least 2 vectors");
  const auto& pis = c.primary_inputs();
  const auto& ffs = c.flipflops();
  std::vector<uint8_t> values(c.nets().size(), 0);
  std::vector<uint8_t> state(initial_state.begin(), initial_state.end());
  std::vector<double> toggles(c.gates().size(), 0.0);
  std::vector<uint8_t> prev_out(c.gates().size(), 0);

  for (size_t t = 0; t < trace.size(); ++t) {
    if (trace[t].size() != pis.size())
      throw InvariantError("trace vector width does not match primary inputs");
    for (size_t i = 0; i < pis.size(); ++i) values[pis[i]] = trace[t][i];
    for (size_t i = 0; i < ffs.size(); ++i) values[c.gate(ffs[i]).output] = state[i];
    c.eval_combinational(values);
    for (const Gate& g : c.gates()) {
      uint8_t v = values[g.output];
      if (t > 0 && v != prev_out[g.id]) toggles[g.id] += 1.0;
      prev_out[g.id] = v;
    }
    for (size_t i = 0; i < ffs.size(); ++i)
      state[i] = values[c.gate(ffs[i]).inputs[0]];
  }
  const double steps = static_cast<double>(trace.size() - 1);
  for (double& x : toggles) x /= steps;
  return toggles;
}

// ---------------------------------------------------------------------------
// Profiles and process-variation bound envelopes
// ---------------------------------------------------------------------------

struct GateMetrics {
  int gate = -1;
  double dynamic_power = 0.0;  // at the supplied activity
  double leakage_power = 0.0;  // at the supplied input state
  double delay = 0.0;          // worst transition at this load
};

struct SideChannelProfile {
  std::vector<GateMetrics> per_gate;
  double total_dynamic = 0.0;
  double total_leakage = 0.0;
  std::vector<double> path_delays;
};

// Input state of each gate from settled net values.
inline unsigned gate_input_state(const Circuit& c, const Gate& g,
                                 std::span<const uint8_t> net_values) {
  if (g.kind == GateKind::Not) return net_values[g.inputs[0]];
  if (g.kind == GateKind::Dff)
    return (static_cast<unsigned>(net_values[g.inputs[0]]) << 1) |
           net_values[g.output];
  return (static_cast<unsigned>(net_values[g.inputs[0]]) << 1) |
         net_values[g.inputs[1]];
}

inline SideChannelProfile profile(const Circuit& c, const TechnologyParams& p,
                                  std::span<const double> alpha,
                                  std::span<const unsigned> states,
                                  std::span<const PathDescriptor> paths,
                                  std::span<const double> c_int_by_net = {}) {
  SideChannelProfile prof;
  prof.per_gate.reserve(c.gates().size());
  for (const Gate& g : c.gates()) {
    GateMetrics m;
    m.gate = g.id;
    const double ct = gate_total_capacitance(c, g.id, p, c_int_by_net);
    m.dynamic_power = dynamic_power(alpha.empty() ? 1.0 : alpha[g.id], ct, p);
    m.leakage_power = leakage_power(p, g.kind, states.empty() ? 0u : states[g.id],
                                    c.fanout(g));
    m.delay = g.kind == GateKind::Dff ? dff_clk_to_q(p, ct, c.fanout(g))
                                      : max_elmore_delay(p, g.kind, ct, c.fanout(g));
    prof.total_dynamic += m.dynamic_power;
    prof.total_leakage += m.leakage_power;
    prof.per_gate.push_back(m);
  }
  for (const auto& path : paths) {
    double d = 0.0;
    for (int gid : path.gates) d += prof.per_gate[gid].delay;
    prof.path_delays.push_back(d);
  }
  return prof;
}

// Process-variation envelope per the bound definitions:
//   DP_max    = sum_i max-over-samples DP_i at alpha = 1
//   Dmax(k)   = sum over path gates of max-over-samples worst-transition delay
//   LP_max/min = sum_i max/min over samples and over (reachable) input states
// Lower bounds of dynamic power and delay are zero in the steady state.
struct BoundEnvelope {
  double dp_max = 0.0;
  double lp_max = 0.0;
  double lp_min = 0.0;
  std::vector<double> path_delay_max;
  int sample_count = 0;
};

// reachable_states: optional per-gate bitmask of input states observed to be
// reachable; zero bits fall back to "all states reachable".
inline BoundEnvelope circuit_bounds(const Circuit& c,
                                    std::span<const TechnologyParams> samples,
                                    std::span<const PathDescriptor> paths,
                                    std::span<const double> c_int_by_net = {},
                                    std::span<const unsigned> reachable_states = {}) {
  if (samples.empty()) throw InvariantError("envelope needs at least one parameter sample");
  BoundEnvelope env;
  env.sample_count = static_cast<int>(samples.size());
  const size_t ng = c.gates().size();
  std::vector<double> gate_dp_max(ng, 0.0), gate_lp_max(ng, 0.0),
      gate_lp_min(ng, 0.0), gate_delay_max(ng, 0.0);

  for (const Gate& g : c.gates()) {
    const int fo = c.fanout(g);
    unsigned mask = reachable_states.empty() ? 0u : reachable_states[g.id];
    const unsigned nstates = leakage_state_count(g.kind);
    if (mask == 0u) mask = (1u << nstates) - 1u;
    double dp = 0.0, lmax = 0.0, lmin = std::numeric_limits<double>::infinity(),
           dmax = 0.0;
    for (const TechnologyParams& p : samples) {
      const double ct = gate_total_capacitance(c, g.id, p, c_int_by_net);
      dp = std::max(dp, dynamic_power(1.0, ct, p));
      for (unsigned s = 0; s < nstates; ++s) {
        if (!(mask & (1u << s))) continue;
        double lp = leakage_power(p, g.kind, s, fo);
        lmax = std::max(lmax, lp);
        lmin = std::min(lmin, lp);
      }
      if (g.kind != GateKind::Dff)
        dmax = std::max(dmax, max_elmore_delay(p, g.kind, ct, fo));
    }
    gate_dp_max[g.id] = dp;
    gate_lp_max[g.id] = lmax;
    gate_lp_min[g.id] = lmin;
    gate_delay_max[g.id] = dmax;
  }
  for (size_t i = 0; i < ng; ++i) {
    env.dp_max += gate_dp_max[i];
    env.lp_max += gate_lp_max[i];
    env.lp_min += gate_lp_min[i];
  }
  env.path_delay_max.reserve(paths.size());
  for (const auto& path : paths) {
    double d = 0.0;
    for (int gid : path.gates) d += gate_delay_max[gid];
    env.path_delay_max.push_back(d);
  }
  return env;
}

}  // namespace forasec
