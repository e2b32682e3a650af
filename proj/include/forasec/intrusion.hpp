/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forasec/sidechannel.hpp"

namespace forasec {

enum class Metric : uint8_t { DynamicPower, LeakagePower, Delay };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::DynamicPower: return "dp";
    case Metric::LeakagePower: return "lp";
    case Metric::Delay: return "delay";
  }
  return "?";
}

enum class IntrusionMode : uint8_t { Parallel, Series };

struct IntrusionSpec {
  std::string target_net;                      // explicit net name, or empty
  std::optional<LocationClass> target_class;   // class-based placement
  IntrusionMode mode = IntrusionMode::Parallel;
  int size = 1;                                // inserted gate count
  GateKind gate_kind = GateKind::Nand2;
  uint64_t seed = 1;                           // placement seed within a class
  int tie_inputs = 2;  // input pins of each parallel gate tied to the host net

  void validate() const {
    if (size < 1) throw InvariantError("intrusion size must be >= 1");
    if (target_net.empty() && !target_class)
      throw InvariantError("intrusion target missing");
    if (mode == IntrusionMode::Series && size % 2 != 0)
      throw InvariantError("series intrusion needs an even gate count to stay transparent");
    if (tie_inputs < 1 || tie_inputs > 2)
      throw InvariantError("tie_inputs must be 1 or 2");
    if (gate_kind != GateKind::Nand2 && gate_kind != GateKind::Nor2 &&
        gate_kind != GateKind::Not)
      throw InvariantError("intruded gates must be NAND2, NOR2 or NOT");
  }
};

// One parallel injection's gates and the net they tap.
struct TrojanGroup {
  int host_net = -1;
  std::vector<int> gates;
};

struct IntrudedCircuit {
  Circuit circuit;
  std::vector<double> c_int;        // added trojan load per net id
  std::vector<int> intruded_nets;   // resolved host nets (new circuit ids)
  std::vector<int> trojan_gates;    // parallel-mode gate ids, flattened
  std::vector<TrojanGroup> groups;
  std::vector<IntrusionSpec> specs;
};

namespace detail {

inline Circuit copy_structure(const Circuit& src) {
  Circuit out;
  for (const Net& n : src.nets()) out.add_net(n.name);
  for (int id : src.primary_inputs()) out.mark_input(id);
  for (int id : src.primary_outputs()) out.mark_output(id);
  for (const Gate& g : src.gates()) out.add_gate(g.kind, g.inputs, g.output);
  for (const Gate& g : src.gates())
    if (src.is_trojan(g.id)) out.mark_trojan(g.id);
  return out;  // caller finalizes
}

inline int pick_class_net(const Circuit& c, LocationClass cls,
                          const TechnologyParams& p, uint64_t seed) {
  auto delays = nominal_gate_delays(c, p);
  auto classes = classify_locations(c, delays);
  std::vector<int> candidates;
  for (const Net& n : c.nets())
    if (classes[n.id] == cls) candidates.push_back(n.id);
  std::sort(candidates.begin(), candidates.end());
  if (candidates.empty())
    throw InvariantError(std::string("no net of class ") + to_string(cls) +
                         " in circuit");
  return candidates[mix_key(seed, 0x10c, 0) % candidates.size()];
}

}  // namespace detail

// Attachment capacitance one inserted gate presents to the host net:
// tie_inputs input pins, each one pMOS + one nMOS gate terminal, minimum
// sizing (the trojan drives nothing, FO = 1).
inline double intrusion_tap_capacitance(const TechnologyParams& p, int tie_inputs) {
  return tie_inputs * (gate_capacitance(p, Polarity::Pmos, 1) +
                       gate_capacitance(p, Polarity::Nmos, 1));
}

// Applies one intrusion.
//
// PARALLEL: `size` gates tap the host net; outputs dangle into the pad sink
// model. The tap load is recorded as C_int on the host net, the victim's
// design fanout is untouched, and the logic function cannot change.
//
// SERIES: a transparent chain of size/2 inverter pairs (built from the
// chosen kind with tied inputs) is spliced between the host net and its
// original sinks. The chain gates are functional circuit elements, so their
// loading is structural and C_int stays zero.
inline IntrudedCircuit inject(const Circuit& base, const IntrusionSpec& spec,
                              const TechnologyParams& params) {
  spec.validate();
  int host = -1;
  if (!spec.target_net.empty()) {
    host = base.find_net(spec.target_net);
    if (host < 0)
      throw InvariantError("intrusion target net '" + spec.target_net + "' not found");
  } else {
    host = detail::pick_class_net(base, *spec.target_class, params, spec.seed);
  }

  IntrudedCircuit out;
  out.specs.push_back(spec);

  if (spec.mode == IntrusionMode::Parallel) {
    Circuit c = detail::copy_structure(base);
    const std::string host_name = base.net(host).name;
    TrojanGroup group;
    group.host_net = host;
    for (int i = 0; i < spec.size; ++i) {
      int onet = c.add_net(host_name + "_troj" + std::to_string(i));
      std::vector<int> ins;
      if (spec.gate_kind == GateKind::Not) {
        ins = {host};
      } else if (spec.tie_inputs == 2) {
        ins = {host, host};
      } else {
        // single tie: second pin rides the previous trojan's output
        int other = group.gates.empty() ? host : c.gate(group.gates.back()).output;
        ins = {host, other};
      }
      int gid = c.add_gate(spec.gate_kind, std::move(ins), onet);
      c.mark_trojan(gid);
      group.gates.push_back(gid);
      out.trojan_gates.push_back(gid);
    }
    out.groups.push_back(std::move(group));
    c.finalize(base.has_latch_loops());
    out.circuit = std::move(c);
    out.c_int.assign(out.circuit.nets().size(), 0.0);
    double per_gate = spec.gate_kind == GateKind::Not
                          ? intrusion_tap_capacitance(params, 1)
                          : intrusion_tap_capacitance(params, spec.tie_inputs);
    // single-tie chaining puts later pins on trojan nets, not the host
    if (spec.gate_kind != GateKind::Not && spec.tie_inputs == 1) {
      out.c_int[host] = intrusion_tap_capacitance(params, 2) +
                        (spec.size - 1) * intrusion_tap_capacitance(params, 1);
    } else {
      out.c_int[host] = spec.size * per_gate;
    }
  } else {
    if (base.net(host).is_input)
      throw InvariantError("series intrusion on a primary-input pad");
    // rebuild with sinks of `host` re-pointed at the chain tail
    Circuit c;
    for (const Net& n : base.nets()) c.add_net(n.name);
    const std::string host_name = base.net(host).name;
    std::vector<int> chain_nets;
    for (int i = 0; i < spec.size; ++i)
      chain_nets.push_back(c.add_net(host_name + "_ser" + std::to_string(i)));
    for (int id : base.primary_inputs()) c.mark_input(id);
    for (int id : base.primary_outputs()) c.mark_output(id);
    int tail = chain_nets.back();
    for (const Gate& g : base.gates()) {
      std::vector<int> ins = g.inputs;
      for (int& n : ins)
        if (n == host) n = tail;
      c.add_gate(g.kind, std::move(ins), g.output);
    }
    int prev = host;
    for (int i = 0; i < spec.size; ++i) {
      std::vector<int> ins;
      if (spec.gate_kind == GateKind::Not)
        ins = {prev};
      else
        ins = {prev, prev};
      c.add_gate(spec.gate_kind, std::move(ins), chain_nets[i]);
      prev = chain_nets[i];
    }
    for (const Gate& g : base.gates())
      if (base.is_trojan(g.id)) c.mark_trojan(g.id);
    c.finalize(base.has_latch_loops());
    out.circuit = std::move(c);
    out.c_int.assign(out.circuit.nets().size(), 0.0);
  }

  out.intruded_nets.push_back(host);
  return out;
}

// Structurally reachable input-state masks. Each parallel group's gates are
// functions of that group's host net alone, so only two states occur; the
// mask keeps leakage bounds from assuming unreachable mixed states. Regular
// gates get the full mask.
inline std::vector<unsigned> reachable_state_masks(const IntrudedCircuit& ic) {
  const Circuit& c = ic.circuit;
  std::vector<unsigned> masks(c.gates().size(), 0u);
  std::vector<uint8_t> vals(c.nets().size(), 0);
  for (const TrojanGroup& group : ic.groups) {
    for (uint8_t host_val : {uint8_t{0}, uint8_t{1}}) {
      vals[group.host_net] = host_val;
      for (int t : group.gates) {
        const Gate& tg = c.gate(t);
        std::vector<uint8_t> in;
        for (int n : tg.inputs) in.push_back(vals[n]);
        vals[tg.output] = Circuit::eval_gate(tg.kind, in) ? 1 : 0;
        masks[t] |= 1u << gate_input_state(c, tg, vals);
      }
    }
  }
  return masks;
}

// Chained application of several intrusion records. Net ids of earlier
// circuits carry over, so per-net C_int merges by index.
inline IntrudedCircuit apply_intrusions(const Circuit& base,
                                        std::span<const IntrusionSpec> specs,
                                        const TechnologyParams& params) {
  if (specs.empty()) throw InvariantError("no intrusion records");
  IntrudedCircuit acc = inject(base, specs.front(), params);
  for (size_t i = 1; i < specs.size(); ++i) {
    IntrudedCircuit next = inject(acc.circuit, specs[i], params);
    for (size_t n = 0; n < acc.c_int.size(); ++n) next.c_int[n] += acc.c_int[n];
    next.intruded_nets.insert(next.intruded_nets.begin(), acc.intruded_nets.begin(),
                              acc.intruded_nets.end());
    next.trojan_gates.insert(next.trojan_gates.begin(), acc.trojan_gates.begin(),
                             acc.trojan_gates.end());
    next.groups.insert(next.groups.begin(), acc.groups.begin(), acc.groups.end());
    next.specs.insert(next.specs.begin(), acc.specs.begin(), acc.specs.end());
    acc = std::move(next);
  }
  return acc;
}

// Bound-basis nominal aggregates used for detectability decisions: the same
// per-gate aggregation as the envelope, evaluated at one parameter set.
inline double nominal_metric_bound(const Circuit& c, const TechnologyParams& p,
                                   Metric metric,
                                   std::span<const double> c_int_by_net = {},
                                   std::span<const unsigned> reachable = {}) {
  switch (metric) {
    case Metric::DynamicPower: {
      double sum = 0.0;
      for (const Gate& g : c.gates())
        sum += dynamic_power(1.0, gate_total_capacitance(c, g.id, p, c_int_by_net), p);
      return sum;
    }
    case Metric::LeakagePower: {
      double sum = 0.0;
      for (const Gate& g : c.gates()) {
        unsigned mask = reachable.empty() ? 0u : reachable[g.id];
        const unsigned nstates = leakage_state_count(g.kind);
        if (mask == 0u) mask = (1u << nstates) - 1u;
        double best = 0.0;
        for (unsigned s = 0; s < nstates; ++s)
          if (mask & (1u << s))
            best = std::max(best, leakage_power(p, g.kind, s, c.fanout(g)));
        sum += best;
      }
      return sum;
    }
    case Metric::Delay: {
      auto delays = nominal_gate_delays(c, p, c_int_by_net);
      auto paths = enumerate_paths(c, delays, 1);
      return paths.empty() ? 0.0 : paths.front().delay;
    }
  }
  return 0.0;
}

inline double envelope_upper(const BoundEnvelope& env, Metric metric) {
  switch (metric) {
    case Metric::DynamicPower: return env.dp_max;
    case Metric::LeakagePower: return env.lp_max;
    case Metric::Delay: {
      double d = 0.0;
      for (double x : env.path_delay_max) d = std::max(d, x);
      return d;
    }
  }
  return 0.0;
}

// Seeded random input trace, one vector per cycle.
inline std::vector<std::vector<uint8_t>> random_trace(size_t n_inputs, size_t length,
                                                      uint64_t seed) {
  std::vector<std::vector<uint8_t>> trace(length, std::vector<uint8_t>(n_inputs, 0));
  for (size_t t = 0; t < length; ++t)
    for (size_t i = 0; i < n_inputs; ++i)
      trace[t][i] = static_cast<uint8_t>(mix_key(seed, t, i) & 1u);
  return trace;
}

struct SweepRow {
  int size = 0;
  double delta_dp = 0.0;     // trace-averaged total dynamic power delta
  double delta_lp = 0.0;     // trace-averaged total leakage delta
  double delta_delay = 0.0;  // nominal critical-path delay delta
  bool overlap_dp = true;    // nominal intruded bound inside the clean envelope
  bool overlap_lp = true;
  bool overlap_delay = true;
};

namespace detail {

struct TraceAverages {
  double dp = 0.0;
  double lp = 0.0;
};

// Average per-cycle dynamic and leakage power over a trace.
inline TraceAverages trace_averages(const Circuit& c, const TechnologyParams& p,
                                    std::span<const std::vector<uint8_t>> trace,
                                    std::span<const double> c_int_by_net) {
  const auto& pis = c.primary_inputs();
  const auto& ffs = c.flipflops();
  std::vector<uint8_t> values(c.nets().size(), 0);
  std::vector<uint8_t> state(ffs.size(), 0);
  std::vector<uint8_t> prev_out(c.gates().size(), 0);
  std::vector<double> dp_per_toggle(c.gates().size(), 0.0);
  for (const Gate& g : c.gates())
    dp_per_toggle[g.id] = dynamic_power(1.0, gate_total_capacitance(c, g.id, p, c_int_by_net), p);

  TraceAverages avg;
  size_t transitions = 0;
  for (size_t t = 0; t < trace.size(); ++t) {
    for (size_t i = 0; i < pis.size(); ++i) values[pis[i]] = trace[t][i];
    for (size_t i = 0; i < ffs.size(); ++i) values[c.gate(ffs[i]).output] = state[i];
    c.eval_combinational(values);
    if (t > 0) {
      ++transitions;
      for (const Gate& g : c.gates()) {
        if (values[g.output] != prev_out[g.id]) avg.dp += dp_per_toggle[g.id];
        avg.lp += leakage_power(p, g.kind, gate_input_state(c, g, values), c.fanout(g));
      }
    }
    for (const Gate& g : c.gates()) prev_out[g.id] = values[g.output];
    for (size_t i = 0; i < ffs.size(); ++i)
      state[i] = values[c.gate(ffs[i]).inputs[0]];
  }
  if (transitions) {
    avg.dp /= static_cast<double>(transitions);
    avg.lp /= static_cast<double>(transitions);
  }
  return avg;
}

}  // namespace detail

// Effect table across intrusion sizes at one location class: trace-based
// power deltas against the clean circuit plus the hidden-by-process-variation
// flags (nominal intruded bound still inside the clean PV envelope).
inline std::vector<SweepRow> sweep(const Circuit& clean, LocationClass where,
                                   IntrusionMode mode, std::span<const int> sizes,
                                   const TechnologyParams& params,
                                   std::span<const TechnologyParams> samples,
                                   uint64_t seed = 1, size_t trace_length = 256) {
  auto delays = nominal_gate_delays(clean, params);
  auto paths = enumerate_paths(clean, delays);
  auto env = circuit_bounds(clean, samples, paths);
  auto trace = random_trace(clean.primary_inputs().size(), trace_length, seed ^ 0xace);
  auto clean_avg = detail::trace_averages(clean, params, trace, {});
  const double clean_delay_env = envelope_upper(env, Metric::Delay);
  const double clean_crit = nominal_metric_bound(clean, params, Metric::Delay);

  std::vector<SweepRow> rows;
  for (int size : sizes) {
    SweepRow row;
    row.size = size;
    if (size == 0) {
      row.overlap_dp = row.overlap_lp = row.overlap_delay = true;
      rows.push_back(row);
      continue;
    }
    IntrusionSpec spec;
    spec.target_class = where;
    spec.mode = mode;
    spec.size = size;
    spec.seed = seed;
    auto ic = inject(clean, spec, params);
    auto masks = reachable_state_masks(ic);
    auto avg = detail::trace_averages(ic.circuit, params, trace, ic.c_int);
    row.delta_dp = avg.dp - clean_avg.dp;
    row.delta_lp = avg.lp - clean_avg.lp;
    row.delta_delay = nominal_metric_bound(ic.circuit, params, Metric::Delay, ic.c_int) - clean_crit;
    row.overlap_dp = nominal_metric_bound(ic.circuit, params, Metric::DynamicPower, ic.c_int) <= env.dp_max;
    row.overlap_lp = nominal_metric_bound(ic.circuit, params, Metric::LeakagePower, ic.c_int, masks) <= env.lp_max;
    row.overlap_delay = nominal_metric_bound(ic.circuit, params, Metric::Delay, ic.c_int) <= clean_delay_env;
    rows.push_back(row);
  }
  return rows;
}

// Smallest intrusion whose nominal metric bound exits the clean PV envelope;
// nullopt when none within max_size.
inline std::optional<int> min_detectable_size(const Circuit& clean, LocationClass where,
                                              Metric metric, const TechnologyParams& params,
                                              std::span<const TechnologyParams> samples,
                                              int max_size, uint64_t seed = 1,
                                              IntrusionMode mode = IntrusionMode::Parallel) {
  if (max_size < 1) throw InvariantError("max_size must be >= 1");
  auto delays = nominal_gate_delays(clean, params);
  auto paths = enumerate_paths(clean, delays);
  auto env = circuit_bounds(clean, samples, paths);
  const double ceiling = envelope_upper(env, metric);
  for (int size = 1; size <= max_size; ++size) {
    if (mode == IntrusionMode::Series && size % 2) continue;
    IntrusionSpec spec;
    spec.target_class = where;
    spec.mode = mode;
    spec.size = size;
    spec.seed = seed;
    auto ic = inject(clean, spec, params);
    auto masks = reachable_state_masks(ic);
    double value = nominal_metric_bound(ic.circuit, params, metric, ic.c_int,
                                        metric == Metric::LeakagePower
                                            ? std::span<const unsigned>(masks)
                                            : std::span<const unsigned>{});
    if (value > ceiling) return size;
  }
  return std::nullopt;
}

}  // namespace forasec
