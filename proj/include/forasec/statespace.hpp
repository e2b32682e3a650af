/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "forasec/intrusion.hpp"
#include "forasec/sidechannel.hpp"

namespace forasec {

// Side-channel valuation of one transition.
struct MetricValuation {
  double dp = 0.0;                 // per-cycle switching power
  double lp = 0.0;                 // leakage at the settled new cycle
  std::vector<double> path_delay;  // per monitored path
};

// One explored transition: from configuration (state, input) on next_input.
struct Transition {
  int step = 0;                      // 1-based depth from reset
  std::vector<uint8_t> state;        // DFF bits before the transition
  std::vector<uint8_t> input;        // input vector of the current cycle
  std::vector<uint8_t> next_input;   // input vector applied by the transition
  MetricValuation valuation;
};

// Explicit-state transition system over the DFF bit vector. The label
// function is evaluated on demand from precomputed per-gate tables:
//   dp  = sum of C_total V_dd^2 f over gates whose output toggles
//   lp  = sum of per-gate leakage at the settled input states
//   D(k) = sum over path-k gates of the Elmore delay of their transition
class TransitionSystem {
 public:
  TransitionSystem(const Circuit& c, const TechnologyParams& p,
                   std::vector<PathDescriptor> monitored_paths,
                   std::span<const double> c_int_by_net = {})
      : circuit_(&c), paths_(std::move(monitored_paths)) {
    if (c.has_latch_loops())
      throw InvariantError("state-space build requires the atomic DFF view");
    const size_t ng = c.gates().size();
    dp_per_toggle_.resize(ng, 0.0);
    lp_table_.resize(ng);
    fo_.resize(ng);
    kind_.resize(ng);
    ct_.resize(ng, 0.0);
    params_ = p;
    for (const Gate& g : c.gates()) {
      const double ct = gate_total_capacitance(c, g.id, p, c_int_by_net);
      ct_[g.id] = ct;
      fo_[g.id] = c.fanout(g);
      kind_[g.id] = g.kind;
      dp_per_toggle_[g.id] = dynamic_power(1.0, ct, p);
      const unsigned ns = leakage_state_count(g.kind);
      lp_table_[g.id].resize(ns);
      for (unsigned s = 0; s < ns; ++s)
        lp_table_[g.id][s] = leakage_power(p, g.kind, s, fo_[g.id]);
    }
    on_path_.assign(paths_.size(), {});
    for (size_t k = 0; k < paths_.size(); ++k) on_path_[k] = paths_[k].gates;
  }

  const Circuit& circuit() const { return *circuit_; }
  const std::vector<PathDescriptor>& monitored_paths() const { return paths_; }
  size_t state_bits() const { return circuit_->flipflops().size(); }
  size_t input_bits() const { return circuit_->primary_inputs().size(); }

  // Settles the combinational part for (state, input).
  void settle(std::span<const uint8_t> state, std::span<const uint8_t> input,
              std::vector<uint8_t>& net_values) const {
    const Circuit& c = *circuit_;
    const auto& pis = c.primary_inputs();
    const auto& ffs = c.flipflops();
    for (size_t i = 0; i < pis.size(); ++i) net_values[pis[i]] = input[i];
    for (size_t i = 0; i < ffs.size(); ++i)
      net_values[c.gate(ffs[i]).output] = state[i];
    c.eval_combinational(net_values);
  }

  std::vector<uint8_t> next_state(std::span<const uint8_t> net_values) const {
    const Circuit& c = *circuit_;
    std::vector<uint8_t> s(c.flipflops().size());
    for (size_t i = 0; i < s.size(); ++i)
      s[i] = net_values[c.gate(c.flipflops()[i]).inputs[0]];
    return s;
  }

  // Valuation of the step from settled values V_old to V_new.
  MetricValuation value_transition(std::span<const uint8_t> v_old,
                                   std::span<const uint8_t> v_new) const {
    const Circuit& c = *circuit_;
    MetricValuation m;
    m.path_delay.assign(paths_.size(), 0.0);
    for (const Gate& g : c.gates()) {
      if (v_old[g.output] != v_new[g.output]) m.dp += dp_per_toggle_[g.id];
      m.lp += lp_table_[g.id][gate_input_state(c, g, v_new)];
    }
    for (size_t k = 0; k < on_path_.size(); ++k) {
      double d = 0.0;
      for (int gid : on_path_[k]) {
        const Gate& g = c.gate(gid);
        unsigned so = gate_input_state(c, g, v_old);
        unsigned sn = gate_input_state(c, g, v_new);
        if (so != sn)
          d += elmore_delay(params_, g.kind, so, sn, ct_[gid], fo_[gid]);
      }
      m.path_delay[k] = d;
    }
    return m;
  }

  // Per-gate contributions at a transition, for counterexample attribution.
  std::vector<double> per_gate_contribution(Metric metric, int path_index,
                                            std::span<const uint8_t> v_old,
                                            std::span<const uint8_t> v_new) const {
    const Circuit& c = *circuit_;
    std::vector<double> contrib(c.gates().size(), 0.0);
    switch (metric) {
      case Metric::DynamicPower:
        for (const Gate& g : c.gates())
          if (v_old[g.output] != v_new[g.output])
            contrib[g.id] = dp_per_toggle_[g.id];
        break;
      case Metric::LeakagePower:
        for (const Gate& g : c.gates())
          contrib[g.id] = lp_table_[g.id][gate_input_state(c, g, v_new)];
        break;
      case Metric::Delay:
        if (path_index >= 0 && path_index < static_cast<int>(on_path_.size()))
          for (int gid : on_path_[path_index]) {
            const Gate& g = c.gate(gid);
            unsigned so = gate_input_state(c, g, v_old);
            unsigned sn = gate_input_state(c, g, v_new);
            if (so != sn)
              contrib[gid] = elmore_delay(params_, g.kind, so, sn, ct_[gid], fo_[gid]);
          }
        break;
    }
    return contrib;
  }

  const TechnologyParams& params() const { return params_; }

 private:
  const Circuit* circuit_;
  TechnologyParams params_;
  std::vector<PathDescriptor> paths_;
  std::vector<double> dp_per_toggle_;
  std::vector<std::vector<double>> lp_table_;
  std::vector<double> ct_;
  std::vector<int> fo_;
  std::vector<GateKind> kind_;
  std::vector<std::vector<int>> on_path_;
};

// --- exploration ------------------------------------------------------------

struct InputPolicy {
  enum Kind : uint8_t { Exhaustive, Random } kind = Exhaustive;
  uint64_t seed = 1;       // Random only
  uint64_t sequences = 0;  // Random only
};

struct ExplorationStats {
  uint64_t transitions_evaluated = 0;
};

// Streaming cursor over the bounded exploration tree. Configurations are
// (state, current input); the reset configuration holds all-zero inputs.
// EXHAUSTIVE walks every input sequence of length <= bound in lexicographic
// order (each prefix visited exactly once); RANDOM walks `sequences` seeded
// sequences of exactly `bound` steps.
class ExplorationCursor {
 public:
  ExplorationCursor(const TransitionSystem& sys, int bound, InputPolicy policy,
                    std::span<const uint8_t> reset_state, uint64_t budget)
      : sys_(&sys), bound_(bound), policy_(policy), budget_(budget) {
    if (bound < 1) throw InvariantError("exploration bound must be >= 1");
    const size_t ib = sys.input_bits();
    if (policy.kind == InputPolicy::Exhaustive) {
      if (ib >= 31) throw BudgetError("exhaustive exploration over >30 input bits");
      long double total = 0.0L;
      long double level = 1.0L;
      for (int t = 1; t <= bound; ++t) {
        level *= std::pow(2.0L, static_cast<long double>(ib));
        total += level;
        if (total > static_cast<long double>(budget))
          throw BudgetError("exhaustive exploration exceeds the transition budget");
      }
    } else {
      if (policy.sequences == 0) throw InvariantError("random policy needs >= 1 sequence");
      if (policy.sequences * static_cast<uint64_t>(bound) > budget)
        throw BudgetError("random exploration exceeds the transition budget");
    }
    reset_state_.assign(reset_state.begin(), reset_state.end());
    if (reset_state_.empty()) reset_state_.assign(sys.state_bits(), 0);
    baseline_values_.assign(sys.circuit().nets().size(), 0);
    zero_input_.assign(ib, 0);
    sys.settle(reset_state_, zero_input_, baseline_values_);
    push_root();
  }

  // Advances to the next transition; false when the space is exhausted.
  bool next(Transition& out) {
    while (!frames_.empty()) {
      Frame& f = frames_.back();
      uint64_t total_inputs = policy_.kind == InputPolicy::Exhaustive
                                  ? (uint64_t{1} << sys_->input_bits())
                                  : 1;
      if (f.next_choice >= total_inputs) {
        frames_.pop_back();
        if (policy_.kind == InputPolicy::Random && frames_.empty() &&
            ++seq_index_ < policy_.sequences)
          push_root();
        continue;
      }
      uint64_t choice = f.next_choice++;
      std::vector<uint8_t> next_input(sys_->input_bits());
      if (policy_.kind == InputPolicy::Exhaustive) {
        for (size_t i = 0; i < next_input.size(); ++i)
          next_input[i] = static_cast<uint8_t>((choice >> i) & 1u);
      } else {
        for (size_t i = 0; i < next_input.size(); ++i)
          next_input[i] = static_cast<uint8_t>(
              mix_key(policy_.seed, (seq_index_ << 16) | static_cast<uint64_t>(f.depth), i) & 1u);
      }
      std::vector<uint8_t> new_state = sys_->next_state(f.values);
      std::vector<uint8_t> new_values(baseline_values_.size(), 0);
      sys_->settle(new_state, next_input, new_values);

      ++stats_.transitions_evaluated;
      out.step = f.depth + 1;
      out.state = f.state;
      out.input = f.input;
      out.next_input = next_input;
      out.valuation = sys_->value_transition(f.values, new_values);

      last_old_values_ = f.values;
      last_new_values_ = new_values;
      branch_inputs_.resize(f.depth);
      branch_inputs_.push_back(next_input);

      if (f.depth + 1 < bound_) {
        Frame child;
        child.depth = f.depth + 1;
        child.state = std::move(new_state);
        child.input = std::move(next_input);
        child.values = std::move(new_values);
        child.next_choice = 0;
        frames_.push_back(std::move(child));
      } else if (policy_.kind == InputPolicy::Random) {
        // sequences do not branch; pop to start the next one
        frames_.pop_back();
        if (frames_.empty() && ++seq_index_ < policy_.sequences) push_root();
      }
      return true;
    }
    return false;
  }

  // Input sequence from reset up to and including the last transition.
  const std::vector<std::vector<uint8_t>>& last_sequence() const {
    return branch_inputs_;
  }

  const ExplorationStats& stats() const { return stats_; }
  std::span<const uint8_t> last_old_values() const { return last_old_values_; }
  std::span<const uint8_t> last_new_values() const { return last_new_values_; }
  std::span<const uint8_t> reset_state() const { return reset_state_; }

 private:
  struct Frame {
    int depth = 0;
    std::vector<uint8_t> state;
    std::vector<uint8_t> input;
    std::vector<uint8_t> values;  // settled nets of this configuration
    uint64_t next_choice = 0;
  };

  void push_root() {
    Frame root;
    root.depth = 0;
    root.state = reset_state_;
    root.input = zero_input_;
    root.values = baseline_values_;
    root.next_choice = 0;
    frames_.clear();
    frames_.push_back(std::move(root));
  }

  const TransitionSystem* sys_;
  int bound_;
  InputPolicy policy_;
  uint64_t budget_;
  uint64_t seq_index_ = 0;
  std::vector<uint8_t> reset_state_, zero_input_, baseline_values_;
  std::vector<uint8_t> last_old_values_, last_new_values_;
  std::vector<std::vector<uint8_t>> branch_inputs_;
  std::vector<Frame> frames_;
  ExplorationStats stats_;
};

// Visitor-style exploration; the visitor may stop the walk by returning false.
using TransitionVisitor = std::function<bool(const Transition&)>;

inline ExplorationStats explore(const TransitionSystem& sys, int bound,
                                InputPolicy policy, std::span<const uint8_t> reset_state,
                                const TransitionVisitor& visit,
                                uint64_t budget = (uint64_t{1} << 32)) {
  ExplorationCursor cursor(sys, bound, policy, reset_state, budget);
  Transition t;
  while (cursor.next(t))
    if (!visit(t)) break;
  return cursor.stats();
}

// --- metric-scoped partitioning ---------------------------------------------

// Cone partition: one per cut signal (DFF data input or primary output).
// `cone` is the full transitive fan-in; `owned` assigns every gate to
// exactly one partition so additive metrics sum without double counting.
struct Partition {
  int id = 0;
  Metric metric = Metric::LeakagePower;
  int cut_net = -1;  // -1 for the residual partition
  std::vector<int> cone;
  std::vector<int> owned;
};

inline std::vector<Partition> partition(const Circuit& c, Metric metric) {
  std::vector<int> cuts;
  for (const Gate& g : c.gates())
    if (g.kind == GateKind::Dff) cuts.push_back(g.inputs[0]);
  for (int po : c.primary_outputs()) cuts.push_back(po);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Partition> parts;
  std::vector<char> owned_already(c.gates().size(), 0);
  int pid = 0;
  for (int cut : cuts) {
    Partition part;
    part.id = pid++;
    part.metric = metric;
    part.cut_net = cut;
    // transitive fan-in over combinational gates, plus the flip-flops that
    // feed the cone boundary
    std::vector<char> in_cone(c.gates().size(), 0);
    std::vector<int> work;
    if (int d = c.net(cut).driver; d >= 0) work.push_back(d);
    while (!work.empty()) {
      int gid = work.back();
      work.pop_back();
      if (in_cone[gid]) continue;
      in_cone[gid] = 1;
      const Gate& g = c.gate(gid);
      if (g.kind == GateKind::Dff) continue;  // cones stop at DFF outputs
      for (int n : g.inputs)
        if (int d = c.net(n).driver; d >= 0) work.push_back(d);
    }
    for (size_t gid = 0; gid < c.gates().size(); ++gid) {
      if (!in_cone[gid]) continue;
      part.cone.push_back(static_cast<int>(gid));
      if (!owned_already[gid]) {
        owned_already[gid] = 1;
        part.owned.push_back(static_cast<int>(gid));
      }
    }
    parts.push_back(std::move(part));
  }
  // residual partition for gates feeding no cut (dangling trojan taps)
  Partition rest;
  rest.id = pid;
  rest.metric = metric;
  rest.cut_net = -1;
  for (size_t gid = 0; gid < c.gates().size(); ++gid)
    if (!owned_already[gid]) {
      rest.cone.push_back(static_cast<int>(gid));
      rest.owned.push_back(static_cast<int>(gid));
    }
  if (!rest.owned.empty()) parts.push_back(std::move(rest));
  return parts;
}

// Local bound share of a partition: the owned gates' share of the envelope
// sum. Summed across partitions this reproduces the monolithic bound, so a
// no-partition-violates outcome is conservative for the whole property.
inline double partition_bound_share(const Circuit& c,
                                    std::span<const TechnologyParams> samples,
                                    const Partition& part, Metric metric) {
  if (samples.empty()) throw InvariantError("envelope needs at least one parameter sample");
  double total = 0.0;
  for (int gid : part.owned) {
    const Gate& g = c.gate(gid);
    const int fo = c.fanout(g);
    double best = 0.0;
    for (const TechnologyParams& p : samples) {
      switch (metric) {
        case Metric::DynamicPower:
          best = std::max(best, dynamic_power(1.0, gate_total_capacitance(c, gid, p), p));
          break;
        case Metric::LeakagePower: {
          const unsigned ns = leakage_state_count(g.kind);
          for (unsigned s = 0; s < ns; ++s)
            best = std::max(best, leakage_power(p, g.kind, s, fo));
          break;
        }
        case Metric::Delay:
          if (g.kind != GateKind::Dff)
            best = std::max(best, max_elmore_delay(p, g.kind,
                                                   gate_total_capacitance(c, gid, p), fo));
          break;
      }
    }
    total += best;
  }
  return total;
}

}  // namespace forasec
