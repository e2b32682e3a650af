/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "forasec/netlist.hpp"

namespace forasec {

enum class LocationClass : uint8_t {
  Input,
  Output,
  CriticalPath,
  NonCriticalPath,
  Feedback,
};

inline const char* to_string(LocationClass c) {
  switch (c) {
    case LocationClass::Input: return "INPUT";
    case LocationClass::Output: return "OUTPUT";
    case LocationClass::CriticalPath: return "CP";
    case LocationClass::NonCriticalPath: return "NCP";
    case LocationClass::Feedback: return "FEEDBACK";
  }
  return "?";
}

// Source-to-sink combinational path: gate ids ordered from the gate fed by
// a primary input or DFF output down to the gate driving a primary output
// or DFF data input. `delay` is the sum of per-gate nominal delays.
struct PathDescriptor {
  std::vector<int> gates;
  double delay = 0.0;
  bool critical = false;
};

namespace detail {

inline bool net_is_source(const Circuit& c, int net) {
  const Net& n = c.net(net);
  if (n.is_input) return true;
  return n.driver >= 0 && c.gate(n.driver).kind == GateKind::Dff;
}

// A gate terminates a path when its output net is a primary output or feeds
// the data pin of a flip-flop.
inline bool gate_is_terminal(const Circuit& c, int gid) {
  const Net& n = c.net(c.gate(gid).output);
  if (n.is_output) return true;
  for (auto [sink, pin] : n.sinks) {
    (void)pin;
    if (c.gate(sink).kind == GateKind::Dff) return true;
  }
  return false;
}

inline std::vector<int> comb_successors(const Circuit& c, int gid) {
  std::vector<int> out;
  for (auto [sink, pin] : c.net(c.gate(gid).output).sinks) {
    (void)pin;
    if (c.gate(sink).kind != GateKind::Dff) out.push_back(sink);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline bool gate_has_source_input(const Circuit& c, const Gate& g) {
  for (int n : g.inputs)
    if (net_is_source(c, n)) return true;
  return false;
}

struct PathEntry {
  double priority;   // exact delay for complete paths, upper bound otherwise
  bool complete;
  std::vector<int> gates;
  double acc;        // delay accumulated so far
};

struct PathEntryLess {
  // max-heap: larger priority first; ties broken toward the
  // lexicographically smaller gate sequence, complete before partial
  bool operator()(const PathEntry& a, const PathEntry& b) const {
    if (a.priority != b.priority) return a.priority < b.priority;
    if (a.complete != b.complete) return !a.complete;
    return a.gates > b.gates;
  }
};

}  // namespace detail

// Top-`limit` source-to-sink paths by nominal delay, descending; ties broken
// by lexicographic gate-id sequence. Best-first search with an exact
// longest-completion bound, so only the emitted prefix is materialized.
// Latch-loop circuits (expanded DFF cells) fall back to exhaustive
// cycle-guarded DFS; those circuits are cell-sized.
inline std::vector<PathDescriptor> enumerate_paths(const Circuit& c,
                                                   std::span<const double> gate_delay,
                                                   std::size_t limit = 10000) {
  using namespace detail;
  std::vector<PathDescriptor> result;
  if (limit == 0) return result;

  if (c.has_latch_loops()) {
    // exhaustive DFS with on-path cycle guard
    std::vector<char> on_path(c.gates().size(), 0);
    std::vector<int> cur;
    auto dfs = [&](auto&& self, int gid, double acc) -> void {
      on_path[gid] = 1;
      cur.push_back(gid);
      if (gate_is_terminal(c, gid)) {
        result.push_back({cur, acc, false});
      }
      for (int s : comb_successors(c, gid))
        if (!on_path[s]) self(self, s, acc + gate_delay[s]);
      cur.pop_back();
      on_path[gid] = 0;
    };
    for (const Gate& g : c.gates()) {
      if (g.kind == GateKind::Dff || !gate_has_source_input(c, g)) continue;
      dfs(dfs, g.id, gate_delay[g.id]);
    }
    std::sort(result.begin(), result.end(), [](const PathDescriptor& a, const PathDescriptor& b) {
      if (a.delay != b.delay) return a.delay > b.delay;
      return a.gates < b.gates;
    });
    if (result.size() > limit) result.resize(limit);
  } else {
    // remaining[g]: largest delay addable after g; -inf when no sink is
    // reachable. Computed over the reverse topological order.
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> remaining(c.gates().size(), ninf);
    const auto& topo = c.topo_order();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      int gid = *it;
      double best = gate_is_terminal(c, gid) ? 0.0 : ninf;
      for (int s : comb_successors(c, gid))
        if (remaining[s] != ninf)
          best = std::max(best, gate_delay[s] + remaining[s]);
      remaining[gid] = best;
    }

    std::priority_queue<PathEntry, std::vector<PathEntry>, PathEntryLess> q;
    for (const Gate& g : c.gates()) {
      if (g.kind == GateKind::Dff || !gate_has_source_input(c, g)) continue;
      if (remaining[g.id] == ninf) continue;
      double acc = gate_delay[g.id];
      q.push({acc + remaining[g.id], false, {g.id}, acc});
    }
    while (!q.empty() && result.size() < limit) {
      PathEntry e = q.top();
      q.pop();
      if (e.complete) {
        result.push_back({std::move(e.gates), e.acc, false});
        continue;
      }
      int last = e.gates.back();
      if (gate_is_terminal(c, last))
        q.push({e.acc, true, e.gates, e.acc});
      for (int s : comb_successors(c, last)) {
        if (remaining[s] == ninf) continue;
        PathEntry next;
        next.acc = e.acc + gate_delay[s];
        next.priority = next.acc + remaining[s];
        next.complete = false;
        next.gates = e.gates;
        next.gates.push_back(s);
        q.push(std::move(next));
      }
    }
  }

  if (!result.empty()) {
    double dmax = result.front().delay;
    for (auto& p : result)
      p.critical = std::abs(p.delay - dmax) <= 1e-12 * std::max(1.0, std::abs(dmax));
  }
  return result;
}

namespace detail {

// Nets lying on a cycle of the full graph (every such cycle passes through
// a flip-flop, or through a latch loop in expanded circuits). Tarjan SCC
// over the gate graph.
inline std::vector<char> cycle_nets(const Circuit& c) {
  const int n = static_cast<int>(c.gates().size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stk;
  int next_index = 0, next_comp = 0;
  std::vector<int> comp_size;

  struct Frame {
    int gate;
    size_t succ_pos;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stk.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      const Net& onet = c.net(c.gate(f.gate).output);
      if (f.succ_pos < onet.sinks.size()) {
        int s = onet.sinks[f.succ_pos++].first;
        if (index[s] == -1) {
          index[s] = low[s] = next_index++;
          stk.push_back(s);
          on_stack[s] = 1;
          call.push_back({s, 0});
        } else if (on_stack[s]) {
          low[f.gate] = std::min(low[f.gate], index[s]);
        }
      } else {
        if (low[f.gate] == index[f.gate]) {
          int sz = 0;
          while (true) {
            int g = stk.back();
            stk.pop_back();
            on_stack[g] = 0;
            comp[g] = next_comp;
            ++sz;
            if (g == f.gate) break;
          }
          comp_size.push_back(sz);
          ++next_comp;
        }
        int done = f.gate;
        call.pop_back();
        if (!call.empty())
          low[call.back().gate] = std::min(low[call.back().gate], low[done]);
      }
    }
  }

  std::vector<char> result(c.nets().size(), 0);
  for (const Net& net : c.nets()) {
    if (net.feedback_hint) result[net.id] = 1;
    if (net.driver < 0) continue;
    int dc = comp[net.driver];
    if (comp_size[dc] < 2) continue;
    for (auto [sink, pin] : net.sinks) {
      (void)pin;
      if (comp[sink] == dc) {
        result[net.id] = 1;
        break;
      }
    }
  }
  return result;
}

}  // namespace detail

// Total classification of every net. Precedence: INPUT, OUTPUT, FEEDBACK,
// then CP for nets on a maximal-delay path, NCP otherwise.
inline std::vector<LocationClass> classify_locations(const Circuit& c,
                                                     std::span<const double> gate_delay,
                                                     std::size_t path_limit = 10000) {
  std::vector<LocationClass> cls(c.nets().size(), LocationClass::NonCriticalPath);

  auto paths = enumerate_paths(c, gate_delay, path_limit);
  std::vector<char> on_cp(c.nets().size(), 0);
  for (const auto& p : paths) {
    if (!p.critical) break;  // sorted descending, critical first
    for (int gid : p.gates) on_cp[c.gate(gid).output] = 1;
  }
  auto fb = detail::cycle_nets(c);

  for (const Net& n : c.nets()) {
    if (n.is_input)
      cls[n.id] = LocationClass::Input;
    else if (n.is_output)
      cls[n.id] = LocationClass::Output;
    else if (fb[n.id])
      cls[n.id] = LocationClass::Feedback;
    else if (on_cp[n.id])
      cls[n.id] = LocationClass::CriticalPath;
    else
      cls[n.id] = LocationClass::NonCriticalPath;
  }
  return cls;
}

}  // namespace forasec
