/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "forasec/common.hpp"

namespace forasec {

// Gate kinds. The first four are the universal basis every circuit is
// decomposed into; the rest only appear in freshly parsed netlists.
enum class GateKind : uint8_t {
  Nand2,
  Nor2,
  Not,
  Dff,
  And,
  Or,
  Nand,
  Nor,
  Xor,
  Xnor,
  Buf,
};

inline const char* to_string(GateKind k) {
  switch (k) {
    case GateKind::Nand2: return "NAND";
    case GateKind::Nor2: return "NOR";
    case GateKind::Not: return "NOT";
    case GateKind::Dff: return "DFF";
    case GateKind::And: return "AND";
    case GateKind::Or: return "OR";
    case GateKind::Nand: return "NAND";
    case GateKind::Nor: return "NOR";
    case GateKind::Xor: return "XOR";
    case GateKind::Xnor: return "XNOR";
    case GateKind::Buf: return "BUF";
  }
  return "?";
}

inline bool is_universal(GateKind k) {
  return k == GateKind::Nand2 || k == GateKind::Nor2 || k == GateKind::Not ||
         k == GateKind::Dff;
}

inline bool is_combinational(GateKind k) { return k != GateKind::Dff; }

inline std::optional<GateKind> gate_kind_from(std::string_view name) {
  std::string up;
  up.reserve(name.size());
  for (char c : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "NAND") return GateKind::Nand;
  if (up == "NOR") return GateKind::Nor;
  if (up == "NOT" || up == "INV") return GateKind::Not;
  if (up == "AND") return GateKind::And;
  if (up == "OR") return GateKind::Or;
  if (up == "XOR") return GateKind::Xor;
  if (up == "XNOR") return GateKind::Xnor;
  if (up == "BUF" || up == "BUFF") return GateKind::Buf;
  if (up == "DFF") return GateKind::Dff;
  return std::nullopt;
}

struct Net {
  int id = -1;
  std::string name;
  int driver = -1;  // driving gate id; -1 for primary inputs
  std::vector<std::pair<int, int>> sinks;  // (gate id, input pin)
  bool is_input = false;
  bool is_output = false;
  bool feedback_hint = false;  // set on latch-loop nets by DFF expansion
};

struct Gate {
  int id = -1;
  GateKind kind = GateKind::Not;
  std::vector<int> inputs;  // net ids; DFF carries {data}
  int output = -1;          // net id
};

// Gate-level circuit graph. Immutable once finalize() has run; analyses
// share const references across threads.
class Circuit {
 public:
  int add_net(const std::string& name) {
    auto it = net_by_name_.find(name);
    if (it != net_by_name_.end()) return it->second;
    int id = static_cast<int>(nets_.size());
    Net n;
    n.id = id;
    n.name = name;
    nets_.push_back(std::move(n));
    net_by_name_.emplace(name, id);
    return id;
  }

  int find_net(const std::string& name) const {
    auto it = net_by_name_.find(name);
    return it == net_by_name_.end() ? -1 : it->second;
  }

  void mark_input(int net) {
    nets_[net].is_input = true;
    primary_inputs_.push_back(net);
  }

  void mark_output(int net) {
    nets_[net].is_output = true;
    primary_outputs_.push_back(net);
  }

  int add_gate(GateKind kind, std::vector<int> inputs, int output) {
    int id = static_cast<int>(gates_.size());
    Gate g;
    g.id = id;
    g.kind = kind;
    g.inputs = std::move(inputs);
    g.output = output;
    if (nets_[output].driver >= 0)
      throw InvariantError("net '" + nets_[output].name + "' is multiply driven");
    if (nets_[output].is_input)
      throw InvariantError("primary input '" + nets_[output].name + "' is driven by a gate");
    nets_[output].driver = id;
    for (size_t pin = 0; pin < g.inputs.size(); ++pin)
      nets_[g.inputs[pin]].sinks.emplace_back(id, static_cast<int>(pin));
    if (kind == GateKind::Dff) flipflops_.push_back(id);
    gates_.push_back(std::move(g));
    return id;
  }

  // Validates structural invariants and levelizes the combinational part.
  // allow_latch_loops is used by the DFF cell expansion, whose cross-coupled
  // NAND pair is a deliberate combinational loop.
  void finalize(bool allow_latch_loops = false) {
    if (gates_.empty()) throw ParseError("no gates defined", 1, 1);
    check_arity();
    check_connectivity();
    levelize(allow_latch_loops);
  }

  const std::vector<Gate>& gates() const { return gates_; }
  const std::vector<Net>& nets() const { return nets_; }
  const Gate& gate(int id) const { return gates_[id]; }
  const Net& net(int id) const { return nets_[id]; }
  const std::vector<int>& primary_inputs() const { return primary_inputs_; }
  const std::vector<int>& primary_outputs() const { return primary_outputs_; }
  const std::vector<int>& flipflops() const { return flipflops_; }
  bool has_latch_loops() const { return has_latch_loops_; }

  // Combinational gates in dependency order (inputs before outputs).
  const std::vector<int>& topo_order() const { return topo_order_; }

  size_t gate_count(GateKind k) const {
    size_t n = 0;
    for (auto& g : gates_)
      if (g.kind == k) ++n;
    return n;
  }

  // FO symbol of a gate: sink count of its output net, floored at 1 so
  // output-pad drivers keep minimum drive. Trojan sinks do not count: an
  // inserted gate loads the net electrically (C_int) but the victim gate
  // keeps its design-time sizing.
  int fanout(const Gate& g) const {
    int n = 0;
    for (auto [sink, pin] : nets_[g.output].sinks) {
      (void)pin;
      if (!is_trojan(sink)) ++n;
    }
    return std::max(1, n);
  }
  int fanout(int gate_id) const { return fanout(gates_[gate_id]); }

  void set_feedback_hint(int net) { nets_[net].feedback_hint = true; }

  void mark_trojan(int gate_id) {
    trojan_.resize(gates_.size(), 0);
    trojan_[gate_id] = 1;
  }
  bool is_trojan(int gate_id) const {
    return gate_id < static_cast<int>(trojan_.size()) && trojan_[gate_id];
  }

  // --- evaluation -----------------------------------------------------

  static bool eval_gate(GateKind kind, std::span<const uint8_t> in) {
    switch (kind) {
      case GateKind::Not: return !in[0];
      case GateKind::Buf: return in[0] != 0;
      case GateKind::Nand2:
      case GateKind::Nand: {
        for (uint8_t v : in)
          if (!v) return true;
        return false;
      }
      case GateKind::Nor2:
      case GateKind::Nor: {
        for (uint8_t v : in)
          if (v) return false;
        return true;
      }
      case GateKind::And: {
        for (uint8_t v : in)
          if (!v) return false;
        return true;
      }
      case GateKind::Or: {
        for (uint8_t v : in)
          if (v) return true;
        return false;
      }
      case GateKind::Xor: {
        int acc = 0;
        for (uint8_t v : in) acc ^= (v != 0);
        return acc != 0;
      }
      case GateKind::Xnor: {
        int acc = 1;
        for (uint8_t v : in) acc ^= (v != 0);
        return acc != 0;
      }
      case GateKind::Dff: return in[0] != 0;  // next-state function
    }
    return false;
  }

  // Settles all combinational nets given primary-input and DFF-output values
  // already placed in `net_values`. Levelized single pass; for latch-loop
  // circuits a relaxation loop runs until fixpoint.
  void eval_combinational(std::vector<uint8_t>& net_values) const {
    std::vector<uint8_t> tmp;
    for (int gid : topo_order_) {
      const Gate& g = gates_[gid];
      tmp.clear();
      for (int n : g.inputs) tmp.push_back(net_values[n]);
      net_values[g.output] = eval_gate(g.kind, tmp) ? 1 : 0;
    }
    if (!has_latch_loops_) return;
    // relaxation for cross-coupled cells; converges in a few sweeps once
    // the clock value is fixed
    for (size_t iter = 0; iter <= loop_gates_.size() + 2; ++iter) {
      bool changed = false;
      for (int gid : loop_gates_) {
        const Gate& g = gates_[gid];
        tmp.clear();
        for (int n : g.inputs) tmp.push_back(net_values[n]);
        uint8_t v = eval_gate(g.kind, tmp) ? 1 : 0;
        if (net_values[g.output] != v) {
          net_values[g.output] = v;
          changed = true;
        }
      }
      if (!changed) return;
    }
    throw InvariantError("latch relaxation did not converge");
  }

 private:
  void check_arity() const {
    for (const Gate& g : gates_) {
      size_t n = g.inputs.size();
      bool ok = true;
      switch (g.kind) {
        case GateKind::Nand2:
        case GateKind::Nor2: ok = (n == 2); break;
        case GateKind::Not:
        case GateKind::Buf:
        case GateKind::Dff: ok = (n == 1); break;
        case GateKind::And:
        case GateKind::Or:
        case GateKind::Nand:
        case GateKind::Nor:
        case GateKind::Xor:
        case GateKind::Xnor: ok = (n >= 2); break;
      }
      if (!ok)
        throw InvariantError(std::string("gate '") + nets_[g.output].name +
                             "': arity " + std::to_string(n) +
                             " invalid for " + to_string(g.kind));
    }
  }

  void check_connectivity() const {
    for (const Net& n : nets_) {
      if (n.driver < 0 && !n.is_input && !n.sinks.empty())
        throw InvariantError("net '" + n.name + "' is referenced but never driven");
      if (n.driver < 0 && !n.is_input && n.is_output)
        throw InvariantError("output net '" + n.name + "' is never driven");
    }
  }

  void levelize(bool allow_latch_loops) {
    topo_order_.clear();
    loop_gates_.clear();
    has_latch_loops_ = false;
    // Kahn over combinational gates only; DFF outputs act as sources.
    std::vector<int> pending(gates_.size(), 0);
    std::vector<int> ready;
    for (const Gate& g : gates_) {
      if (g.kind == GateKind::Dff) continue;
      int deps = 0;
      for (int n : g.inputs) {
        int d = nets_[n].driver;
        if (d >= 0 && gates_[d].kind != GateKind::Dff) ++deps;
      }
      pending[g.id] = deps;
      if (deps == 0) ready.push_back(g.id);
    }
    size_t comb_total = 0;
    for (const Gate& g : gates_)
      if (g.kind != GateKind::Dff) ++comb_total;
    std::priority_queue<int, std::vector<int>, std::greater<>> q(ready.begin(),
                                                                 ready.end());
    while (!q.empty()) {
      int gid = q.top();
      q.pop();
      topo_order_.push_back(gid);
      for (auto [sink, pin] : nets_[gates_[gid].output].sinks) {
        (void)pin;
        if (gates_[sink].kind == GateKind::Dff) continue;
        if (--pending[sink] == 0) q.push(sink);
      }
    }
    if (topo_order_.size() < comb_total) {
      if (!allow_latch_loops)
        throw InvariantError("combinational cycle detected");
      has_latch_loops_ = true;
      for (const Gate& g : gates_) {
        if (g.kind == GateKind::Dff) continue;
        if (std::find(topo_order_.begin(), topo_order_.end(), g.id) ==
            topo_order_.end())
          loop_gates_.push_back(g.id);
      }
      std::sort(loop_gates_.begin(), loop_gates_.end());
    }
  }

  std::vector<Gate> gates_;
  std::vector<Net> nets_;
  std::unordered_map<std::string, int> net_by_name_;
  std::vector<int> primary_inputs_;
  std::vector<int> primary_outputs_;
  std::vector<int> flipflops_;
  std::vector<int> topo_order_;
  std::vector<int> loop_gates_;
  std::vector<char> trojan_;
  bool has_latch_loops_ = false;
};

// --- ISCAS89 .bench parsing ---------------------------------------------
//
// Grammar: `INPUT(name)`, `OUTPUT(name)`, `name = GATE(a, b, ...)`,
// `name = DFF(a)`, `#` comments. Gate names are case-insensitive, net
// names are not.

namespace detail {

struct BenchLine {
  int number = 0;
  std::string_view text;
};

inline void skip_ws(std::string_view s, size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
}

inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         c == '[' || c == ']' || c == '$' || c == '/';
}

inline std::string_view take_ident(std::string_view s, size_t& i, int line) {
  size_t b = i;
  while (i < s.size() && is_ident_char(s[i])) ++i;
  if (i == b) throw ParseError("identifier expected", line, static_cast<int>(i) + 1);
  return s.substr(b, i - b);
}

}  // namespace detail

inline Circuit parse_bench(std::string_view text) {
  using namespace detail;
  Circuit c;
  struct PendingGate {
    std::string out;
    GateKind kind;
    std::vector<std::string> args;
    int line;
  };
  std::vector<PendingGate> pend;
  std::vector<std::pair<std::string, int>> inputs, outputs;

  size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    size_t i = 0;
    skip_ws(line, i);
    if (i >= line.size()) continue;

    std::string_view first = take_ident(line, i, line_no);
    skip_ws(line, i);

    auto parse_args = [&](std::vector<std::string>& out_args) {
      if (i >= line.size() || line[i] != '(')
        throw ParseError("'(' expected", line_no, static_cast<int>(i) + 1);
      ++i;
      while (true) {
        skip_ws(line, i);
        out_args.emplace_back(take_ident(line, i, line_no));
        skip_ws(line, i);
        if (i < line.size() && line[i] == ',') {
          ++i;
          continue;
        }
        break;
      }
      if (i >= line.size() || line[i] != ')')
        throw ParseError("')' expected", line_no, static_cast<int>(i) + 1);
      ++i;
      skip_ws(line, i);
      if (i < line.size())
        throw ParseError("trailing characters", line_no, static_cast<int>(i) + 1);
    };

    std::string upper;
    for (char ch : first) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));

    if (i < line.size() && line[i] == '(' && (upper == "INPUT" || upper == "OUTPUT")) {
      std::vector<std::string> args;
      parse_args(args);
      if (args.size() != 1)
        throw ParseError(upper + " takes one net", line_no, 1);
      if (upper == "INPUT")
        inputs.emplace_back(args[0], line_no);
      else
        outputs.emplace_back(args[0], line_no);
      continue;
    }

    // assignment form: name = GATE(args)
    if (i >= line.size() || line[i] != '=')
      throw ParseError("'=' expected", line_no, static_cast<int>(i) + 1);
    ++i;
    skip_ws(line, i);
    std::string_view kind_tok = take_ident(line, i, line_no);
    auto kind = gate_kind_from(kind_tok);
    if (!kind)
      throw ParseError("unknown gate kind '" + std::string(kind_tok) + "'",
                       line_no, static_cast<int>(i) + 1);
    PendingGate pg;
    pg.out = std::string(first);
    pg.kind = *kind;
    pg.line = line_no;
    parse_args(pg.args);
    if (pg.kind == GateKind::Dff && pg.args.size() != 1)
      throw ParseError("DFF takes one data net", line_no, 1);
    pend.push_back(std::move(pg));
  }

  for (auto& [name, ln] : inputs) {
    (void)ln;
    c.mark_input(c.add_net(name));
  }
  for (auto& pg : pend) {
    c.add_net(pg.out);
    for (auto& a : pg.args) c.add_net(a);
  }
  for (auto& [name, ln] : outputs) {
    int id = c.find_net(name);
    if (id < 0)
      throw ParseError("output net '" + name + "' is never defined", ln, 1);
    if (!c.net(id).is_output) c.mark_output(id);
  }
  for (auto& pg : pend) {
    std::vector<int> in_ids;
    in_ids.reserve(pg.args.size());
    for (auto& a : pg.args) in_ids.push_back(c.find_net(a));
    // collapse multi-input gates with binary arity onto the 2-input kinds
    GateKind k = pg.kind;
    if (pg.args.size() == 2) {
      if (k == GateKind::Nand) k = GateKind::Nand2;
      if (k == GateKind::Nor) k = GateKind::Nor2;
    }
    c.add_gate(k, std::move(in_ids), c.find_net(pg.out));
  }
  c.finalize();
  return c;
}

// Canonical serialization: inputs first, then outputs, then gates sorted by
// output net name, one declaration per line.
inline std::string serialize_bench(const Circuit& c) {
  std::string out;
  for (int id : c.primary_inputs()) out += "INPUT(" + c.net(id).name + ")\n";
  for (int id : c.primary_outputs()) out += "OUTPUT(" + c.net(id).name + ")\n";
  std::vector<int> order;
  order.reserve(c.gates().size());
  for (const Gate& g : c.gates()) order.push_back(g.id);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return c.net(c.gate(a).output).name < c.net(c.gate(b).output).name;
  });
  for (int gid : order) {
    const Gate& g = c.gate(gid);
    out += c.net(g.output).name;
    out += " = ";
    out += to_string(g.kind);
    out += "(";
    for (size_t i = 0; i < g.inputs.size(); ++i) {
      if (i) out += ", ";
      out += c.net(g.inputs[i]).name;
    }
    out += ")\n";
  }
  return out;
}

// --- decomposition to the universal basis ---------------------------------
//
// Fixed canonical rewrites so decomposed structure is reproducible:
//   ANDn  -> left fold of (NAND2 + NOT)
//   ORn   -> left fold of (NOR2 + NOT)
//   NANDn -> NAND2(AND(a1..an-1), an), recursively
//   NORn  -> NOR2(OR(a1..an-1), an), recursively
//   XOR2  -> 4-NAND pattern, XORn left fold
//   XNOR  -> XOR + NOT, BUF -> NOT + NOT

class Decomposer {
 public:
  explicit Decomposer(const Circuit& src) : src_(src) {
    for (int id : src.primary_inputs())
      out_.mark_input(map_net(id));
    for (const Gate& g : src.gates()) emit(g);
    for (int id : src.primary_outputs())
      out_.mark_output(map_net(id));
    out_.finalize();
  }

  Circuit take() { return std::move(out_); }

 private:
  int map_net(int src_net) {
    auto it = net_map_.find(src_net);
    if (it != net_map_.end()) return it->second;
    int id = out_.add_net(src_.net(src_net).name);
    net_map_.emplace(src_net, id);
    return id;
  }

  int fresh_net(const std::string& base) {
    return out_.add_net(base + "_u" + std::to_string(fresh_counter_++));
  }

  int mk_not(int in, const std::string& base) {
    int o = fresh_net(base);
    out_.add_gate(GateKind::Not, {in}, o);
    return o;
  }
  int mk_nand(int a, int b, const std::string& base) {
    int o = fresh_net(base);
    out_.add_gate(GateKind::Nand2, {a, b}, o);
    return o;
  }
  int mk_nor(int a, int b, const std::string& base) {
    int o = fresh_net(base);
    out_.add_gate(GateKind::Nor2, {a, b}, o);
    return o;
  }

  // AND of all ins, output at `sink` if >= 0 else a fresh net; returns net id
  int build_and(std::vector<int> ins, int sink, const std::string& base) {
    int acc = ins[0];
    for (size_t i = 1; i < ins.size(); ++i) {
      int nand = mk_nand(acc, ins[i], base);
      if (i + 1 == ins.size() && sink >= 0) {
        out_.add_gate(GateKind::Not, {nand}, sink);
        return sink;
      }
      acc = mk_not(nand, base);
    }
    if (sink >= 0) {  // single-input degenerate AND
      out_.add_gate(GateKind::Not, {mk_not(acc, base)}, sink);
      return sink;
    }
    return acc;
  }

  int build_or(std::vector<int> ins, int sink, const std::string& base) {
    int acc = ins[0];
    for (size_t i = 1; i < ins.size(); ++i) {
      int nor = mk_nor(acc, ins[i], base);
      if (i + 1 == ins.size() && sink >= 0) {
        out_.add_gate(GateKind::Not, {nor}, sink);
        return sink;
      }
      acc = mk_not(nor, base);
    }
    if (sink >= 0) {
      out_.add_gate(GateKind::Not, {mk_not(acc, base)}, sink);
      return sink;
    }
    return acc;
  }

  int build_xor2(int a, int b, int sink, const std::string& base) {
    int t = mk_nand(a, b, base);
    int l = mk_nand(a, t, base);
    int r = mk_nand(b, t, base);
    if (sink >= 0) {
      out_.add_gate(GateKind::Nand2, {l, r}, sink);
      return sink;
    }
    return mk_nand(l, r, base);
  }

  void emit(const Gate& g) {
    const std::string base = src_.net(g.output).name;
    int out_net = map_net(g.output);
    std::vector<int> ins;
    ins.reserve(g.inputs.size());
    for (int n : g.inputs) ins.push_back(map_net(n));

    switch (g.kind) {
      case GateKind::Not:
        out_.add_gate(GateKind::Not, {ins[0]}, out_net);
        break;
      case GateKind::Dff:
        out_.add_gate(GateKind::Dff, {ins[0]}, out_net);
        break;
      case GateKind::Buf:
        out_.add_gate(GateKind::Not, {mk_not(ins[0], base)}, out_net);
        break;
      case GateKind::Nand2:
        out_.add_gate(GateKind::Nand2, ins, out_net);
        break;
      case GateKind::Nor2:
        out_.add_gate(GateKind::Nor2, ins, out_net);
        break;
      case GateKind::Nand: {
        std::vector<int> head(ins.begin(), ins.end() - 1);
        int left = head.size() == 1 ? head[0] : build_and(head, -1, base);
        out_.add_gate(GateKind::Nand2, {left, ins.back()}, out_net);
        break;
      }
      case GateKind::Nor: {
        std::vector<int> head(ins.begin(), ins.end() - 1);
        int left = head.size() == 1 ? head[0] : build_or(head, -1, base);
        out_.add_gate(GateKind::Nor2, {left, ins.back()}, out_net);
        break;
      }
      case GateKind::And:
        build_and(ins, out_net, base);
        break;
      case GateKind::Or:
        build_or(ins, out_net, base);
        break;
      case GateKind::Xor: {
        int acc = ins[0];
        for (size_t i = 1; i < ins.size(); ++i)
          acc = build_xor2(acc, ins[i], i + 1 == ins.size() ? out_net : -1, base);
        break;
      }
      case GateKind::Xnor: {
        int acc = ins[0];
        for (size_t i = 1; i + 1 < ins.size(); ++i)
          acc = build_xor2(acc, ins[i], -1, base);
        int x = build_xor2(acc, ins.back(), -1, base);
        out_.add_gate(GateKind::Not, {x}, out_net);
        break;
      }
    }
  }

  const Circuit& src_;
  Circuit out_;
  std::map<int, int> net_map_;
  int fresh_counter_ = 0;
};

inline Circuit decompose_universal(const Circuit& c) {
  for (const Gate& g : c.gates())
    if (g.kind == GateKind::Dff && g.inputs.size() != 1)
      throw InvariantError("unsupported DFF arity");
  return Decomposer(c).take();
}

// --- DFF internal cell (4 NAND + inverter latch) ---------------------------
//
// Expansion used for DFF-internal analysis only: adds an explicit CLK
// primary input and replaces each DFF with the latch cell. The Q/QB
// cross-coupling is a genuine combinational loop, so the expanded circuit
// is evaluated by relaxation and is not accepted by the state-space
// builder; the atomic DFF remains the sequential-semantics view.
inline Circuit expand_dffs(const Circuit& c, const std::string& clk_name = "CLK") {
  Circuit out;
  for (int id : c.primary_inputs()) out.mark_input(out.add_net(c.net(id).name));
  int clk = out.add_net(clk_name);
  out.mark_input(clk);
  for (const Net& n : c.nets()) out.add_net(n.name);

  for (const Gate& g : c.gates()) {
    if (g.kind != GateKind::Dff) {
      std::vector<int> ins;
      for (int n : g.inputs) ins.push_back(out.find_net(c.net(n).name));
      out.add_gate(g.kind, std::move(ins), out.find_net(c.net(g.output).name));
      continue;
    }
    const std::string base = c.net(g.output).name;
    int d = out.find_net(c.net(g.inputs[0]).name);
    int q = out.find_net(base);
    int nd = out.add_net(base + "_nd");
    int sb = out.add_net(base + "_sb");
    int rb = out.add_net(base + "_rb");
    int qb = out.add_net(base + "_qb");
    out.add_gate(GateKind::Not, {d}, nd);
    out.add_gate(GateKind::Nand2, {d, clk}, sb);
    out.add_gate(GateKind::Nand2, {nd, clk}, rb);
    out.add_gate(GateKind::Nand2, {sb, qb}, q);
    out.add_gate(GateKind::Nand2, {rb, q}, qb);
  }
  for (int id : c.primary_outputs()) out.mark_output(out.find_net(c.net(id).name));
  out.finalize(/*allow_latch_loops=*/true);
  for (const Gate& g : c.gates()) {
    if (g.kind != GateKind::Dff) continue;
    const std::string base = c.net(g.output).name;
    out.set_feedback_hint(out.find_net(base));
    out.set_feedback_hint(out.find_net(base + "_qb"));
  }
  return out;
}

}  // namespace forasec
