/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "forasec/common.hpp"
#include "forasec/netlist.hpp"

namespace forasec {

enum class Polarity : uint8_t { Nmos, Pmos };

// Transistor-level technology symbols, SI units throughout. The shipped
// defaults are 45 nm-class textbook values; every quantitative result of
// the tool is relative to whatever file the user loads.
struct TechnologyParams {
  double v_dd = 1.0;          // supply [V]
  double f_clk = 1.0e9;       // operating clock [Hz]
  double l_n = 45e-9;         // nMOS effective channel length [m]
  double l_p = 45e-9;         // pMOS effective channel length [m]
  double w_nmin = 90e-9;      // minimum nMOS width [m]
  double w_pmin = 90e-9;      // minimum pMOS width [m]
  double wr_n = 1.0;          // nMOS width ratio
  double wr_p = 2.0;          // pMOS width ratio
  double c_ox = 2.9e-2;       // oxide capacitance per area [F/m^2]
  double c_gso = 2.7e-17;     // gate-source overlap cap of the minimum-width device [F]
  double c_gdo = 2.7e-17;     // gate-drain overlap cap of the minimum-width device [F]
  double mu_n = 4.5e-2;       // electron mobility [m^2/Vs]
  double mu_p = 2.0e-2;       // hole mobility [m^2/Vs]
  double v_thn = 0.3;         // nMOS threshold [V]
  double v_thp = 0.3;         // pMOS threshold magnitude [V]
  double n_n = 1.5;           // nMOS subthreshold slope factor
  double n_p = 1.5;           // pMOS subthreshold slope factor
  double sigma_n = 0.1;       // nMOS DIBL factor
  double sigma_p = 0.1;       // pMOS DIBL factor
  double temperature = 300.0; // [K]
  double c_jbd = 1.0e-3;      // junction bottom cap per area [F/m^2]
  double c_jbsdw = 1.0e-10;   // junction sidewall cap per length [F/m]
  double as_diff = 1.0e-14;   // drain diffusion area of the minimum device [m^2]
  double ps_diff = 4.0e-7;    // drain sidewall perimeter of the minimum device [m]
  double c_nstack = 5.0e-17;  // series-nMOS internal stack node cap [F]
  double c_pad = 0.0;         // output pad load on sink-less nets [F]

  // thermal voltage K*T/q
  double phi_t() const {
    constexpr double kB = 1.380649e-23;
    constexpr double q = 1.602176634e-19;
    return kB * temperature / q;
  }

  double channel_length(Polarity p) const { return p == Polarity::Nmos ? l_n : l_p; }
  double min_width(Polarity p) const { return p == Polarity::Nmos ? w_nmin : w_pmin; }
  double width_ratio(Polarity p) const { return p == Polarity::Nmos ? wr_n : wr_p; }
  double mobility(Polarity p) const { return p == Polarity::Nmos ? mu_n : mu_p; }
  double v_th(Polarity p) const { return p == Polarity::Nmos ? v_thn : v_thp; }
  double slope(Polarity p) const { return p == Polarity::Nmos ? n_n : n_p; }
  double dibl(Polarity p) const { return p == Polarity::Nmos ? sigma_n : sigma_p; }

  void validate() const {
    struct Item { const char* name; double v; };
    const Item positive[] = {
        {"v_dd", v_dd},       {"f_clk", f_clk},   {"l_n", l_n},
        {"l_p", l_p},         {"w_nmin", w_nmin}, {"w_pmin", w_pmin},
        {"wr_n", wr_n},       {"wr_p", wr_p},     {"c_ox", c_ox},
        {"mu_n", mu_n},       {"mu_p", mu_p},     {"v_thn", v_thn},
        {"v_thp", v_thp},     {"n_n", n_n},       {"n_p", n_p},
        {"sigma_n", sigma_n}, {"sigma_p", sigma_p},
        {"temperature", temperature},
    };
    for (auto& it : positive)
      if (!(it.v > 0.0))
        throw InvariantError(std::string("technology parameter ") + it.name +
                             " must be strictly positive");
    if (!(v_thn < v_dd) || !(v_thp < v_dd))
      throw InvariantError("threshold voltage must be below v_dd");
  }
};

namespace detail {

struct ParamField {
  const char* key;
  double TechnologyParams::* member;
  const char* unit;
};

inline std::span<const ParamField> param_fields() {
  static const ParamField fields[] = {
      {"v_dd", &TechnologyParams::v_dd, "V"},
      {"f_clk", &TechnologyParams::f_clk, "Hz"},
      {"l_n", &TechnologyParams::l_n, "m"},
      {"l_p", &TechnologyParams::l_p, "m"},
      {"w_nmin", &TechnologyParams::w_nmin, "m"},
      {"w_pmin", &TechnologyParams::w_pmin, "m"},
      {"wr_n", &TechnologyParams::wr_n, "1"},
      {"wr_p", &TechnologyParams::wr_p, "1"},
      {"c_ox", &TechnologyParams::c_ox, "F/m^2"},
      {"c_gso", &TechnologyParams::c_gso, "F"},
      {"c_gdo", &TechnologyParams::c_gdo, "F"},
      {"mu_n", &TechnologyParams::mu_n, "m^2/Vs"},
      {"mu_p", &TechnologyParams::mu_p, "m^2/Vs"},
      {"v_thn", &TechnologyParams::v_thn, "V"},
      {"v_thp", &TechnologyParams::v_thp, "V"},
      {"n_n", &TechnologyParams::n_n, "1"},
      {"n_p", &TechnologyParams::n_p, "1"},
      {"sigma_n", &TechnologyParams::sigma_n, "1"},
      {"sigma_p", &TechnologyParams::sigma_p, "1"},
      {"temperature", &TechnologyParams::temperature, "K"},
      {"c_jbd", &TechnologyParams::c_jbd, "F/m^2"},
      {"c_jbsdw", &TechnologyParams::c_jbsdw, "F/m"},
      {"as_diff", &TechnologyParams::as_diff, "m^2"},
      {"ps_diff", &TechnologyParams::ps_diff, "m"},
      {"c_nstack", &TechnologyParams::c_nstack, "F"},
      {"c_pad", &TechnologyParams::c_pad, "F"},
  };
  return fields;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// strips comments and whitespace; yields key/value halves of `key = value`
inline bool split_kv(const std::string& raw, std::string& key, std::string& value,
                     int line_no) {
  std::string line = raw;
  if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
  auto trim = [](std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
  };
  trim(line);
  if (line.empty()) return false;
  auto eq = line.find('=');
  if (eq == std::string::npos)
    throw ParseError("expected 'key = value'", line_no, 1);
  key = line.substr(0, eq);
  value = line.substr(eq + 1);
  trim(key);
  trim(value);
  if (key.empty() || value.empty())
    throw ParseError("expected 'key = value'", line_no, 1);
  return true;
}

}  // namespace detail

// Flat `symbol = value # unit` file. Values are printed with 17 significant
// digits so load(store(p)) == p bit-for-bit.
inline std::string store_tech_params(const TechnologyParams& p) {
  std::string out = "# technology parameters (SI units)\n";
  for (const auto& f : detail::param_fields())
    out += std::string(f.key) + " = " + detail::format_double(p.*(f.member)) +
           " # " + f.unit + "\n";
  return out;
}

inline TechnologyParams load_tech_params(const std::string& text) {
  TechnologyParams p;
  std::string key, value;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = (eol == std::string::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    if (!detail::split_kv(line, key, value, line_no)) continue;
    bool found = false;
    for (const auto& f : detail::param_fields()) {
      if (key == f.key) {
        try {
          p.*(f.member) = std::stod(value);
        } catch (const std::exception&) {
          throw ParseError("bad numeric value for " + key, line_no, 1);
        }
        found = true;
        break;
      }
    }
    if (!found) throw ParseError("unknown technology parameter '" + key + "'", line_no, 1);
  }
  p.validate();
  return p;
}

// --- capacitances and resistance (transistor-level model) -----------------

// Gate capacitance of one MOS transistor terminal:
//   C_gMOS = FO * WR * (C_GSO + C_GDO + W_min * L * C_ox)
inline double gate_capacitance(const TechnologyParams& p, Polarity pol, int fo,
                               double wr) {
  return fo * wr * (p.c_gso + p.c_gdo + p.min_width(pol) * p.channel_length(pol) * p.c_ox);
}

inline double gate_capacitance(const TechnologyParams& p, Polarity pol, int fo) {
  return gate_capacitance(p, pol, fo, p.width_ratio(pol));
}

// Minimum drain diffusion capacitance C_dmin = AS*C_jbd + PS*C_jbsdw, and its
// per-width form used by the C_diff sums.
inline double min_diffusion_capacitance(const TechnologyParams& p) {
  return p.as_diff * p.c_jbd + p.ps_diff * p.c_jbsdw;
}

inline double diffusion_cap_per_width(const TechnologyParams& p, Polarity pol) {
  return min_diffusion_capacitance(p) / p.min_width(pol);
}

// Internal diffusion capacitance at the gate output.
//   NAND2: 2*FO*WR_p*W_pmin*C_pdmin + FO*WR_n*W_nmin*C_ndmin
//   NOR2 is the dual (two nMOS drains, one pMOS stack drain), NOT has one
//   drain of each polarity.
inline double diffusion_capacitance(const TechnologyParams& p, GateKind kind,
                                    int fo = 1) {
  const double cp = p.wr_p * p.w_pmin * diffusion_cap_per_width(p, Polarity::Pmos);
  const double cn = p.wr_n * p.w_nmin * diffusion_cap_per_width(p, Polarity::Nmos);
  switch (kind) {
    case GateKind::Nand2: return fo * (2.0 * cp + cn);
    case GateKind::Nor2: return fo * (cp + 2.0 * cn);
    case GateKind::Not: return fo * (cp + cn);
    default:
      throw InvariantError(std::string("diffusion capacitance undefined for ") +
                           to_string(kind));
  }
}

// Switch-on resistance R_on = L / (mu * C_ox * W * (V_gs - V_th)), V_gs = V_dd.
inline double on_resistance(const TechnologyParams& p, Polarity pol, double wr) {
  const double overdrive = p.v_dd - p.v_th(pol);
  if (overdrive <= 0.0) throw InvariantError("transistor not conducting: v_dd <= v_th");
  const double w = wr * p.min_width(pol);
  return p.channel_length(pol) / (p.mobility(pol) * p.c_ox * w * overdrive);
}

// --- process variation -----------------------------------------------------

enum class DistributionKind : uint8_t { Gaussian, Uniform };

struct VariationEntry {
  double rel_sigma = 0.0;  // relative standard deviation, [0, 0.5]
  DistributionKind kind = DistributionKind::Gaussian;
};

// Per-parameter spread plus sampling controls. Parameters without an entry
// stay at nominal.
struct VariationSpec {
  std::map<std::string, VariationEntry> entries;
  int sample_count = 100;
  uint64_t seed = 1;

  void validate() const {
    if (sample_count < 1) throw InvariantError("sample_count must be >= 1");
    for (auto& [k, e] : entries) {
      if (e.rel_sigma < 0.0 || e.rel_sigma > 0.5)
        throw InvariantError("relative deviation for " + k + " outside [0, 0.5]");
    }
  }

  static VariationSpec default_5pct() {
    VariationSpec s;
    const char* varied[] = {"c_ox",  "mu_n",    "mu_p",   "v_thn",   "v_thp",
                            "w_nmin", "w_pmin", "l_n",    "l_p",     "c_gso",
                            "c_gdo",  "c_jbd",  "c_jbsdw", "c_nstack"};
    for (const char* k : varied) s.entries[k] = {0.05, DistributionKind::Gaussian};
    return s;
  }
};

inline std::string store_variation_spec(const VariationSpec& s) {
  std::string out = "# variation spec: param = rel_sigma kind\n";
  out += "samples = " + std::to_string(s.sample_count) + "\n";
  out += "seed = " + std::to_string(s.seed) + "\n";
  for (auto& [k, e] : s.entries)
    out += k + " = " + detail::format_double(e.rel_sigma) + " " +
           (e.kind == DistributionKind::Gaussian ? "GAUSSIAN" : "UNIFORM") + "\n";
  return out;
}

inline VariationSpec load_variation_spec(const std::string& text) {
  VariationSpec s;
  s.entries.clear();
  std::string key, value;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = (eol == std::string::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    if (!detail::split_kv(line, key, value, line_no)) continue;
    if (key == "samples") {
      s.sample_count = std::stoi(value);
      continue;
    }
    if (key == "seed") {
      s.seed = std::stoull(value);
      continue;
    }
    bool known = false;
    for (const auto& f : detail::param_fields())
      if (key == f.key) known = true;
    if (!known) throw ParseError("unknown parameter '" + key + "' in variation spec", line_no, 1);
    VariationEntry e;
    size_t sp = value.find_first_of(" \t");
    std::string num = value.substr(0, sp);
    try {
      e.rel_sigma = std::stod(num);
    } catch (const std::exception&) {
      throw ParseError("bad deviation for " + key, line_no, 1);
    }
    if (sp != std::string::npos) {
      std::string kind = value.substr(sp + 1);
      size_t b = kind.find_first_not_of(" \t");
      kind = (b == std::string::npos) ? "" : kind.substr(b);
      for (auto& ch : kind) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (kind == "GAUSSIAN" || kind.empty())
        e.kind = DistributionKind::Gaussian;
      else if (kind == "UNIFORM")
        e.kind = DistributionKind::Uniform;
      else
        throw ParseError("unknown distribution '" + kind + "'", line_no, 1);
    }
    s.entries[key] = e;
  }
  s.validate();
  return s;
}

namespace detail {

// One draw keyed by (seed, sample index, parameter index, attempt).
// Gaussian via Box-Muller on two counter-derived uniforms, truncated to
// +/- 3 sigma and to positive values by deterministic re-draw.
inline double sample_one(uint64_t seed, int sample_idx, int param_idx,
                         double nominal, const VariationEntry& e) {
  if (e.rel_sigma == 0.0) return nominal;
  const uint64_t stream = (static_cast<uint64_t>(sample_idx) << 20) ^
                          static_cast<uint64_t>(param_idx);
  for (uint64_t attempt = 0;; ++attempt) {
    uint64_t w1 = mix_key(seed, stream, 2 * attempt);
    uint64_t w2 = mix_key(seed, stream, 2 * attempt + 1);
    double u1 = to_unit_double(w1);
    double u2 = to_unit_double(w2);
    double value;
    if (e.kind == DistributionKind::Gaussian) {
      double r = std::sqrt(-2.0 * std::log(1.0 - u1));
      double z = r * std::cos(2.0 * M_PI * u2);
      if (std::abs(z) > 3.0) continue;
      value = nominal * (1.0 + e.rel_sigma * z);
    } else {
      // uniform with the requested standard deviation
      double half_width = std::sqrt(3.0) * e.rel_sigma;
      value = nominal * (1.0 + half_width * (2.0 * u1 - 1.0));
    }
    if (value > 0.0) return value;
  }
}

}  // namespace detail

// Draws spec.sample_count concrete parameter sets. Counter-based generator:
// the value of sample i is independent of evaluation order, so partitioning
// across workers cannot change the stream.
inline std::vector<TechnologyParams> sample_variations(const VariationSpec& spec,
                                                       const TechnologyParams& nominal) {
  spec.validate();
  nominal.validate();
  auto fields = detail::param_fields();
  std::vector<TechnologyParams> out(spec.sample_count, nominal);
  for (int s = 0; s < spec.sample_count; ++s) {
    int param_idx = 0;
    for (const auto& f : fields) {
      auto it = spec.entries.find(f.key);
      if (it != spec.entries.end()) {
        double nom = nominal.*(f.member);
        out[s].*(f.member) =
            detail::sample_one(spec.seed, s, param_idx, nom, it->second);
      }
      ++param_idx;
    }
    out[s].validate();
  }
  return out;
}

}  // namespace forasec
