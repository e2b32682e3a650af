/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "forasec/statespace.hpp"

namespace forasec {

enum class Quantifier : uint8_t { Eventually, Globally };
enum class PropertyMetric : uint8_t { Dp, LpUpper, LpLower, Delay };

inline Metric base_metric(PropertyMetric m) {
  switch (m) {
    case PropertyMetric::Dp: return Metric::DynamicPower;
    case PropertyMetric::LpUpper:
    case PropertyMetric::LpLower: return Metric::LeakagePower;
    case PropertyMetric::Delay: return Metric::Delay;
  }
  return Metric::DynamicPower;
}

// Exact transition pattern (state, input, next input) recorded from a
// counterexample and excluded from subsequent checks.
struct TransitionPattern {
  std::vector<uint8_t> state;
  std::vector<uint8_t> input;
  std::vector<uint8_t> next_input;

  bool matches(const Transition& t) const {
    return state == t.state && input == t.input && next_input == t.next_input;
  }
  bool operator==(const TransitionPattern&) const = default;
};

// Bound property over the explored transitions. The eventually form states
// that some transition pushes the metric past its envelope bound; its
// complement is the globally form asserting the bound is respected. Both
// search for the same witness transitions, so complementation is an
// involution that preserves the counterexample set.
struct BoundProperty {
  Quantifier quantifier = Quantifier::Eventually;
  PropertyMetric metric = PropertyMetric::Dp;
  int path_index = -1;  // Delay only
  double bound = 0.0;
  bool guard_nonzero = true;  // `metric != 0 ->` antecedent
  std::vector<TransitionPattern> exceptions;

  std::string name() const {
    std::string n;
    switch (metric) {
      case PropertyMetric::Dp: n = "DP"; break;
      case PropertyMetric::LpUpper: n = "LP_UPPER"; break;
      case PropertyMetric::LpLower: n = "LP_LOWER"; break;
      case PropertyMetric::Delay: n = "DELAY(" + std::to_string(path_index) + ")"; break;
    }
    return n;
  }

  double metric_value(const Transition& t) const {
    switch (metric) {
      case PropertyMetric::Dp: return t.valuation.dp;
      case PropertyMetric::LpUpper:
      case PropertyMetric::LpLower: return t.valuation.lp;
      case PropertyMetric::Delay:
        return path_index >= 0 && path_index < static_cast<int>(t.valuation.path_delay.size())
                   ? t.valuation.path_delay[path_index]
                   : 0.0;
    }
    return 0.0;
  }

  // Witness predicate: the transition whose metric leaves the bound.
  bool violates(const Transition& t) const {
    double v = metric_value(t);
    if (guard_nonzero && v == 0.0) return false;
    bool out_of_bound = metric == PropertyMetric::LpLower ? v < bound : v > bound;
    if (!out_of_bound) return false;
    for (const auto& e : exceptions)
      if (e.matches(t)) return false;
    return true;
  }
};

inline BoundProperty complement(const BoundProperty& p) {
  BoundProperty q = p;
  q.quantifier = p.quantifier == Quantifier::Eventually ? Quantifier::Globally
                                                        : Quantifier::Eventually;
  return q;
}

// Factory for the standard property set against an envelope.
inline BoundProperty make_property(PropertyMetric m, const BoundEnvelope& env,
                                   int path_index = -1) {
  BoundProperty p;
  p.metric = m;
  p.path_index = path_index;
  switch (m) {
    case PropertyMetric::Dp: p.bound = env.dp_max; break;
    case PropertyMetric::LpUpper: p.bound = env.lp_max; p.guard_nonzero = false; break;
    case PropertyMetric::LpLower: p.bound = env.lp_min; p.guard_nonzero = false; break;
    case PropertyMetric::Delay:
      p.bound = path_index >= 0 && path_index < static_cast<int>(env.path_delay_max.size())
                    ? env.path_delay_max[path_index]
                    : 0.0;
      break;
  }
  return p;
}

struct TraceStep {
  int step = 0;
  std::vector<uint8_t> state;
  std::vector<uint8_t> input;       // input applied at this step
  MetricValuation valuation;
};

struct Counterexample {
  std::vector<TraceStep> trace;     // from reset to the violating step
  int violating_step = 0;
  std::string property;
  double metric_value = 0.0;
  double bound = 0.0;
  TransitionPattern pattern;        // the violating transition
  std::vector<int> implicated_nets; // largest metric excess first
  double implicated_excess = 0.0;
};

enum class Verdict : uint8_t { HoldsWithinBound, Violated, UnknownBudget };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::HoldsWithinBound: return "HOLDS_WITHIN_BOUND";
    case Verdict::Violated: return "VIOLATED";
    case Verdict::UnknownBudget: return "UNKNOWN_BUDGET";
  }
  return "?";
}

struct CheckResult {
  Verdict verdict = Verdict::HoldsWithinBound;
  std::optional<Counterexample> counterexample;
  ExplorationStats stats;
};

namespace detail {

// Per-gate clean-nominal ceilings used for implicating locations: the gate
// whose contribution exceeds this the most at the violating transition is
// the suspect, and its output (or host net) is reported.
inline std::vector<double> nominal_gate_ceiling(const TransitionSystem& sys,
                                                Metric metric, int path_index) {
  const Circuit& c = sys.circuit();
  const TechnologyParams& p = sys.params();
  std::vector<double> ceiling(c.gates().size(), 0.0);
  for (const Gate& g : c.gates()) {
    switch (metric) {
      case Metric::DynamicPower:
        ceiling[g.id] = dynamic_power(1.0, total_capacitance(c, g, p), p);
        break;
      case Metric::LeakagePower: {
        double best = 0.0;
        const unsigned ns = leakage_state_count(g.kind);
        for (unsigned s = 0; s < ns; ++s)
          best = std::max(best, leakage_power(p, g.kind, s, c.fanout(g)));
        ceiling[g.id] = best;
        break;
      }
      case Metric::Delay:
        if (g.kind != GateKind::Dff)
          ceiling[g.id] = max_elmore_delay(p, g.kind, total_capacitance(c, g, p),
                                           c.fanout(g));
        break;
    }
    (void)path_index;
  }
  return ceiling;
}

inline std::vector<int> implicate_nets(const TransitionSystem& sys,
                                       const BoundProperty& prop,
                                       const ExplorationCursor& cursor,
                                       double& excess_out) {
  const Circuit& c = sys.circuit();
  Metric m = base_metric(prop.metric);
  auto contrib = sys.per_gate_contribution(m, prop.path_index,
                                           cursor.last_old_values(),
                                           cursor.last_new_values());
  auto ceiling = nominal_gate_ceiling(sys, m, prop.path_index);
  // margin vs the clean-nominal ceiling; trojan taps carry their full
  // contribution as margin and point back at their host net
  std::vector<std::pair<double, int>> margins;
  for (const Gate& g : c.gates()) {
    double margin = c.is_trojan(g.id) ? contrib[g.id]
                                      : contrib[g.id] - ceiling[g.id];
    if (margin <= 0.0) continue;
    int net = g.output;
    if (c.is_trojan(g.id)) {
      // host net: the non-trojan net its first pin taps
      net = g.inputs[0];
    }
    margins.emplace_back(margin, net);
  }
  std::sort(margins.begin(), margins.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> nets;
  for (auto& [margin, net] : margins) {
    if (std::find(nets.begin(), nets.end(), net) == nets.end()) nets.push_back(net);
    if (nets.size() >= 4) break;
  }
  excess_out = margins.empty() ? 0.0 : margins.front().first;
  return nets;
}

inline Counterexample build_counterexample(const TransitionSystem& sys,
                                           const BoundProperty& prop,
                                           const ExplorationCursor& cursor,
                                           const Transition& t) {
  Counterexample ce;
  ce.property = prop.name();
  ce.metric_value = prop.metric_value(t);
  ce.bound = prop.bound;
  ce.violating_step = t.step;
  ce.pattern = {t.state, t.input, t.next_input};
  ce.implicated_nets = implicate_nets(sys, prop, cursor, ce.implicated_excess);

  // replay the recorded input sequence to materialize the full trace
  const auto& seq = cursor.last_sequence();
  std::vector<uint8_t> state(cursor.reset_state().begin(), cursor.reset_state().end());
  std::vector<uint8_t> cur_input(sys.input_bits(), 0);
  std::vector<uint8_t> v_old(sys.circuit().nets().size(), 0), v_new(v_old.size(), 0);
  sys.settle(state, cur_input, v_old);
  for (size_t i = 0; i < seq.size(); ++i) {
    std::vector<uint8_t> nstate = sys.next_state(v_old);
    sys.settle(nstate, seq[i], v_new);
    TraceStep step;
    step.step = static_cast<int>(i) + 1;
    step.state = state;
    step.input = seq[i];
    step.valuation = sys.value_transition(v_old, v_new);
    ce.trace.push_back(std::move(step));
    state = std::move(nstate);
    std::swap(v_old, v_new);
  }
  return ce;
}

}  // namespace detail

// Bounded check of one property. The eventually form returns VIOLATED with
// the first witness in deterministic exploration order (lexicographically
// smallest input sequence); the globally form returns VIOLATED at the first
// transition where its comparison fails. Both locate the same transitions.
inline CheckResult check(const TransitionSystem& sys, const BoundProperty& prop,
                         int bound, InputPolicy policy,
                         std::span<const uint8_t> reset_state = {},
                         uint64_t budget = (uint64_t{1} << 32)) {
  CheckResult res;
  std::vector<uint8_t> reset(reset_state.begin(), reset_state.end());
  if (reset.empty()) reset.assign(sys.state_bits(), 0);
  try {
    ExplorationCursor cursor(sys, bound, policy, reset, budget);
    Transition t;
    while (cursor.next(t)) {
      if (prop.violates(t)) {
        res.verdict = Verdict::Violated;
        res.counterexample = detail::build_counterexample(sys, prop, cursor, t);
        res.stats = cursor.stats();
        return res;
      }
    }
    res.stats = cursor.stats();
    res.verdict = Verdict::HoldsWithinBound;
  } catch (const BudgetError&) {
    res.verdict = Verdict::UnknownBudget;
  }
  return res;
}

// --- iterative vulnerability analysis (counterexample-driven loop) ----------

struct PropertyRun {
  BoundProperty property;           // final state, exceptions included
  std::vector<Counterexample> counterexamples;
  int iterations = 0;               // checker invocations; == CEs + 1
  Verdict final_verdict = Verdict::HoldsWithinBound;
  bool truncated = false;           // max_iterations reached
  uint64_t transitions_evaluated = 0;
};

struct RankedLocation {
  int net = -1;
  std::string net_name;
  int count = 0;          // implication frequency
  double max_excess = 0.0;
};

struct AnalysisReport {
  std::vector<PropertyRun> runs;
  std::vector<RankedLocation> ranked;
  uint64_t total_transitions_evaluated = 0;
  double wall_seconds = 0.0;
  long max_rss_kb = 0;
};

enum class LoopStrategy : uint8_t {
  ExceptionBundled,  // resume after each counterexample; one sweep total
  NaiveRestart,      // fresh scan from reset for every counterexample
};

// One property's while-loop: check, record counterexample, add it as an
// exception, repeat until the property stops being violated. The bundled
// strategy resumes the sweep behind the newly added exception (exceptions
// are disjoint, a cleared prefix stays clear); the naive strategy restarts
// from reset each iteration and is kept as the cost baseline.
inline PropertyRun run_property_loop(const TransitionSystem& sys, BoundProperty prop,
                                     int bound, InputPolicy policy,
                                     std::span<const uint8_t> reset_state,
                                     int max_iterations,
                                     LoopStrategy strategy = LoopStrategy::ExceptionBundled,
                                     uint64_t budget = (uint64_t{1} << 32)) {
  PropertyRun run;
  std::vector<uint8_t> reset(reset_state.begin(), reset_state.end());
  if (reset.empty()) reset.assign(sys.state_bits(), 0);

  if (strategy == LoopStrategy::NaiveRestart) {
    while (true) {
      if (run.iterations >= max_iterations) {
        run.truncated = true;
        break;
      }
      ++run.iterations;
      CheckResult r = check(sys, prop, bound, policy, reset, budget);
      run.transitions_evaluated += r.stats.transitions_evaluated;
      run.final_verdict = r.verdict;
      if (r.verdict != Verdict::Violated) break;
      prop.exceptions.push_back(r.counterexample->pattern);
      run.counterexamples.push_back(std::move(*r.counterexample));
    }
    run.property = prop;
    return run;
  }

  // exception-bundled: one cursor; every violation opens a new iteration
  // that continues where the previous one stopped
  try {
    ExplorationCursor cursor(sys, bound, policy, reset, budget);
    ++run.iterations;  // the sweep in progress
    Transition t;
    while (cursor.next(t)) {
      if (!prop.violates(t)) continue;
      Counterexample ce = detail::build_counterexample(sys, prop, cursor, t);
      prop.exceptions.push_back(ce.pattern);
      run.counterexamples.push_back(std::move(ce));
      if (run.iterations >= max_iterations) {
        run.truncated = true;
        run.final_verdict = Verdict::Violated;
        run.transitions_evaluated = cursor.stats().transitions_evaluated;
        run.property = prop;
        return run;
      }
      ++run.iterations;  // resumed check behind the new exception
    }
    run.transitions_evaluated = cursor.stats().transitions_evaluated;
    run.final_verdict = Verdict::HoldsWithinBound;
  } catch (const BudgetError&) {
    run.final_verdict = Verdict::UnknownBudget;
  }
  run.property = prop;
  return run;
}

inline std::vector<RankedLocation> rank_vulnerable(const Circuit& c,
                                                   std::span<const PropertyRun> runs) {
  std::vector<RankedLocation> all;
  for (const auto& run : runs) {
    for (const auto& ce : run.counterexamples) {
      for (int net : ce.implicated_nets) {
        auto it = std::find_if(all.begin(), all.end(),
                               [&](const RankedLocation& r) { return r.net == net; });
        if (it == all.end()) {
          all.push_back({net, c.net(net).name, 1, ce.implicated_excess});
        } else {
          it->count += 1;
          it->max_excess = std::max(it->max_excess, ce.implicated_excess);
        }
      }
    }
  }
  std::sort(all.begin(), all.end(), [](const RankedLocation& a, const RankedLocation& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.max_excess != b.max_excess) return a.max_excess > b.max_excess;
    return a.net < b.net;
  });
  return all;
}

// Full Algorithm-1 style analysis: the DP, delay, and leakage loops run in
// sequence over the same bounded space; each loop peels counterexamples via
// exceptions until its property holds.
inline AnalysisReport vulnerability_analysis(const TransitionSystem& sys,
                                             const BoundEnvelope& env, int bound,
                                             InputPolicy policy,
                                             std::span<const uint8_t> reset_state,
                                             int max_iterations,
                                             std::span<const Metric> metrics,
                                             LoopStrategy strategy = LoopStrategy::ExceptionBundled,
                                             uint64_t budget = (uint64_t{1} << 32),
                                             int monitored_paths = 4) {
  AnalysisReport report;
  auto want = [&](Metric m) {
    return std::find(metrics.begin(), metrics.end(), m) != metrics.end();
  };
  std::vector<BoundProperty> props;
  if (metrics.empty() || want(Metric::DynamicPower))
    props.push_back(make_property(PropertyMetric::Dp, env));
  if (metrics.empty() || want(Metric::Delay)) {
    int npaths = std::min<int>(monitored_paths,
                               static_cast<int>(sys.monitored_paths().size()));
    for (int k = 0; k < npaths; ++k)
      props.push_back(make_property(PropertyMetric::Delay, env, k));
  }
  if (metrics.empty() || want(Metric::LeakagePower)) {
    props.push_back(make_property(PropertyMetric::LpUpper, env));
    props.push_back(make_property(PropertyMetric::LpLower, env));
  }
  for (auto& p : props) {
    report.runs.push_back(run_property_loop(sys, p, bound, policy, reset_state,
                                            max_iterations, strategy, budget));
    report.total_transitions_evaluated += report.runs.back().transitions_evaluated;
  }
  report.ranked = rank_vulnerable(sys.circuit(), report.runs);
  return report;
}

}  // namespace forasec
