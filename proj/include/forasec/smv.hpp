/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cstdio>
#include <string>

#include "forasec/checker.hpp"
#include "forasec/sidechannel.hpp"

namespace forasec {

namespace detail {

inline std::string smv_ident(const std::string& name) {
  std::string s;
  for (char c : name)
    s += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) s = "n_" + s;
  return s;
}

inline std::string smv_real(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9e", v);
  return buf;
}

}  // namespace detail

// SMV model of the circuit for optional cross-validation with a symbolic
// checker. State variables per flip-flop plus one previous-value latch per
// gate output so per-transition metrics (switching power, transition delay)
// are expressible; dp_total at cycle t therefore describes the t-1 -> t
// edge. Leakage is a function of the settled current cycle.
inline std::string export_smv(const Circuit& c, const TechnologyParams& p,
                              const BoundEnvelope& env,
                              std::span<const PathDescriptor> paths,
                              int delay_paths = 1) {
  using detail::smv_ident;
  using detail::smv_real;
  std::string out;
  out += "-- generated by forasec " + std::string(kVersion) + "\n";
  out += "-- gates: " + std::to_string(c.gates().size()) +
         ", flip-flops: " + std::to_string(c.flipflops().size()) + "\n";
  out += "MODULE main\n";

  auto net_ref = [&](int net_id) -> std::string {
    const Net& n = c.net(net_id);
    if (n.is_input) return "in_" + smv_ident(n.name);
    if (n.driver >= 0 && c.gate(n.driver).kind == GateKind::Dff)
      return "st_" + smv_ident(n.name);
    return "g_" + smv_ident(n.name);
  };

  out += "VAR\n";
  for (int id : c.primary_inputs())
    out += "  in_" + smv_ident(c.net(id).name) + " : boolean;\n";
  for (int ff : c.flipflops())
    out += "  st_" + smv_ident(c.net(c.gate(ff).output).name) + " : boolean;\n";
  for (const Gate& g : c.gates())
    if (g.kind != GateKind::Dff)
      out += "  pv_" + smv_ident(c.net(g.output).name) + " : boolean;\n";

  out += "DEFINE\n";
  for (int gid : c.topo_order()) {
    const Gate& g = c.gate(gid);
    std::string expr;
    switch (g.kind) {
      case GateKind::Not: expr = "!" + net_ref(g.inputs[0]); break;
      case GateKind::Nand2:
        expr = "!(" + net_ref(g.inputs[0]) + " & " + net_ref(g.inputs[1]) + ")";
        break;
      case GateKind::Nor2:
        expr = "!(" + net_ref(g.inputs[0]) + " | " + net_ref(g.inputs[1]) + ")";
        break;
      default:
        throw InvariantError("SMV export expects a decomposed circuit");
    }
    out += "  g_" + smv_ident(c.net(g.output).name) + " := " + expr + ";\n";
  }

  // per-gate switching power over the previous-value latches
  for (const Gate& g : c.gates()) {
    if (g.kind == GateKind::Dff) continue;
    const std::string n = smv_ident(c.net(g.output).name);
    const double dp = dynamic_power(1.0, total_capacitance(c, g, p), p);
    out += "  dp_" + n + " := (pv_" + n + " xor g_" + n + ") ? " + smv_real(dp) +
           " : 0.0;\n";
  }
  std::string dp_sum;
  for (const Gate& g : c.gates()) {
    if (g.kind == GateKind::Dff) continue;
    if (!dp_sum.empty()) dp_sum += " + ";
    dp_sum += "dp_" + smv_ident(c.net(g.output).name);
  }
  out += "  dp_total := " + (dp_sum.empty() ? "0.0" : dp_sum) + ";\n";

  // per-gate leakage as a case over settled input states
  std::string lp_sum;
  for (const Gate& g : c.gates()) {
    const std::string n = smv_ident(c.net(g.output).name);
    const int fo = c.fanout(g);
    out += "  lp_" + n + " := case\n";
    if (g.kind == GateKind::Not) {
      out += "    " + net_ref(g.inputs[0]) + " : " +
             smv_real(leakage_power(p, GateKind::Not, 1, fo)) + ";\n";
      out += "    TRUE : " + smv_real(leakage_power(p, GateKind::Not, 0, fo)) + ";\n";
    } else if (g.kind == GateKind::Dff) {
      const std::string d = net_ref(g.inputs[0]);
      const std::string q = "st_" + smv_ident(c.net(g.output).name);
      for (unsigned s = 0; s < 4; ++s) {
        std::string cond = ((s >> 1) ? d : "!" + d) + " & " + ((s & 1) ? q : "!" + q);
        out += "    " + cond + " : " + smv_real(leakage_power(p, GateKind::Dff, s, fo)) + ";\n";
      }
      out += "    TRUE : 0.0;\n";
    } else {
      const std::string a = net_ref(g.inputs[0]);
      const std::string b = net_ref(g.inputs[1]);
      for (unsigned s = 0; s < 4; ++s) {
        std::string cond = ((s >> 1) ? a : "!" + a) + " & " + ((s & 1) ? b : "!" + b);
        out += "    " + cond + " : " + smv_real(leakage_power(p, g.kind, s, fo)) + ";\n";
      }
      out += "    TRUE : 0.0;\n";
    }
    out += "  esac;\n";
    if (!lp_sum.empty()) lp_sum += " + ";
    lp_sum += "lp_" + n;
  }
  out += "  lp_total := " + lp_sum + ";\n";

  // transition delay of the first monitored paths
  const int npaths = std::min<int>(delay_paths, static_cast<int>(paths.size()));
  for (int k = 0; k < npaths; ++k) {
    std::string sum;
    for (int gid : paths[k].gates) {
      const Gate& g = c.gate(gid);
      const std::string n = smv_ident(c.net(g.output).name);
      const double ct = total_capacitance(c, g, p);
      const int fo = c.fanout(g);
      out += "  dly" + std::to_string(k) + "_" + n + " := case\n";
      const unsigned ns = leakage_state_count(g.kind);
      auto state_cond = [&](unsigned s) {
        if (g.kind == GateKind::Not)
          return (s & 1u) ? net_ref(g.inputs[0]) : "!" + net_ref(g.inputs[0]);
        std::string a = net_ref(g.inputs[0]), b = net_ref(g.inputs[1]);
        return ((s >> 1) ? a : "!" + a) + " & " + ((s & 1) ? b : "!" + b);
      };
      // keyed on (previous output latch, current settled state); the row
      // carries the worst entering transition for that state since per-pin
      // history is not latched in the export
      const std::string pv = "pv_" + n;
      for (unsigned s = 0; s < ns; ++s) {
        uint8_t bits[2] = {static_cast<uint8_t>((s >> 1) & 1u),
                           static_cast<uint8_t>(s & 1u)};
        std::span<const uint8_t> sp(bits + (g.kind == GateKind::Not ? 1 : 0),
                                    g.kind == GateKind::Not ? 1 : 2);
        const bool out_now = Circuit::eval_gate(g.kind, sp);
        double worst = 0.0;
        for (unsigned so = 0; so < ns; ++so)
          if (so != s) worst = std::max(worst, elmore_delay(p, g.kind, so, s, ct, fo));
        std::string cond = state_cond(s) + std::string(" & ") +
                           (out_now ? "!" + pv : pv);
        out += "    " + cond + " : " + smv_real(worst) + ";\n";
      }
      out += "    TRUE : 0.0;\n  esac;\n";
      if (!sum.empty()) sum += " + ";
      sum += "dly" + std::to_string(k) + "_" + n;
    }
    out += "  delay_" + std::to_string(k) + " := " + (sum.empty() ? "0.0" : sum) + ";\n";
  }

  out += "ASSIGN\n";
  for (int ff : c.flipflops()) {
    const Gate& g = c.gate(ff);
    const std::string st = "st_" + smv_ident(c.net(g.output).name);
    out += "  init(" + st + ") := FALSE;\n";
    out += "  next(" + st + ") := " + net_ref(g.inputs[0]) + ";\n";
  }
  for (const Gate& g : c.gates()) {
    if (g.kind == GateKind::Dff) continue;
    const std::string n = smv_ident(c.net(g.output).name);
    out += "  init(pv_" + n + ") := FALSE;\n";
    out += "  next(pv_" + n + ") := g_" + n + ";\n";
  }

  // bound properties; exceptions accumulate during analysis and would be
  // conjoined into the antecedent of the F-form
  out += "-- Property I / II: dynamic power upper bound\n";
  out += "LTLSPEC F(dp_total != 0.0 -> " + smv_real(env.dp_max) + " < dp_total)\n";
  out += "LTLSPEC G(dp_total != 0.0 -> " + smv_real(env.dp_max) + " >= dp_total)\n";
  out += "-- Property III: exception-augmented form of Property I\n";
  out += "LTLSPEC F((dp_total != 0.0 & TRUE) -> " + smv_real(env.dp_max) + " < dp_total)\n";
  out += "-- Property IV / V: path delay upper bound\n";
  for (int k = 0; k < npaths; ++k) {
    const double b = k < static_cast<int>(env.path_delay_max.size())
                         ? env.path_delay_max[k]
                         : 0.0;
    out += "LTLSPEC F(delay_" + std::to_string(k) + " != 0.0 -> " + smv_real(b) +
           " < delay_" + std::to_string(k) + ")\n";
    out += "LTLSPEC G(delay_" + std::to_string(k) + " != 0.0 -> " + smv_real(b) +
           " >= delay_" + std::to_string(k) + ")\n";
  }
  out += "-- Property VI / VII: leakage power upper and lower bounds\n";
  out += "LTLSPEC F(" + smv_real(env.lp_max) + " < lp_total)\n";
  out += "LTLSPEC G(" + smv_real(env.lp_max) + " >= lp_total)\n";
  out += "LTLSPEC F(" + smv_real(env.lp_min) + " > lp_total)\n";
  out += "LTLSPEC G(" + smv_real(env.lp_min) + " <= lp_total)\n";
  return out;
}

}  // namespace forasec
