/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <sys/resource.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "forasec/coverage.hpp"
#include "forasec/report.hpp"
#include "forasec/smv.hpp"

namespace forasec {

// Exit codes shared by all commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInvariantError = 2;
inline constexpr int kExitBudgetError = 3;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
}

// --- intrusion spec file ---------------------------------------------------
// One record per line: `target=net:NAME|class:CP mode=parallel|series size=N
// kind=NAND|NOR|NOT seed=S tie=1|2`; `#` comments.

inline std::optional<LocationClass> location_class_from(const std::string& s) {
  std::string up;
  for (char c : s) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "INPUT" || up == "I/P") return LocationClass::Input;
  if (up == "OUTPUT" || up == "O/P") return LocationClass::Output;
  if (up == "CP") return LocationClass::CriticalPath;
  if (up == "NCP") return LocationClass::NonCriticalPath;
  if (up == "FEEDBACK") return LocationClass::Feedback;
  return std::nullopt;
}

inline std::vector<IntrusionSpec> load_intrusion_specs(const std::string& text) {
  std::vector<IntrusionSpec> specs;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string tok;
    IntrusionSpec spec;
    bool any = false;
    while (ls >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw ParseError("expected key=value", line_no, 1);
      std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      any = true;
      if (key == "target") {
        if (val.rfind("net:", 0) == 0) {
          spec.target_net = val.substr(4);
        } else if (val.rfind("class:", 0) == 0) {
          auto cls = location_class_from(val.substr(6));
          if (!cls) throw ParseError("unknown location class '" + val + "'", line_no, 1);
          spec.target_class = cls;
        } else {
          throw ParseError("target must be net:NAME or class:CLASS", line_no, 1);
        }
      } else if (key == "mode") {
        if (val == "parallel") spec.mode = IntrusionMode::Parallel;
        else if (val == "series") spec.mode = IntrusionMode::Series;
        else throw ParseError("mode must be parallel or series", line_no, 1);
      } else if (key == "size") {
        spec.size = std::stoi(val);
      } else if (key == "kind") {
        auto k = gate_kind_from(val);
        if (!k) throw ParseError("unknown gate kind '" + val + "'", line_no, 1);
        spec.gate_kind = *k == GateKind::Nand ? GateKind::Nand2
                       : *k == GateKind::Nor ? GateKind::Nor2
                                             : *k;
      } else if (key == "seed") {
        spec.seed = std::stoull(val);
      } else if (key == "tie") {
        spec.tie_inputs = std::stoi(val);
      } else {
        throw ParseError("unknown intrusion key '" + key + "'", line_no, 1);
      }
    }
    if (any) {
      spec.validate();
      specs.push_back(std::move(spec));
    }
  }
  if (specs.empty()) throw InputError("intrusion file holds no records");
  return specs;
}

inline std::string store_intrusion_specs(std::span<const IntrusionSpec> specs) {
  std::string out;
  for (const IntrusionSpec& s : specs) {
    out += "target=";
    if (!s.target_net.empty())
      out += "net:" + s.target_net;
    else
      out += std::string("class:") + to_string(*s.target_class);
    out += std::string(" mode=") +
           (s.mode == IntrusionMode::Parallel ? "parallel" : "series");
    out += " size=" + std::to_string(s.size);
    out += std::string(" kind=") + to_string(s.gate_kind);
    out += " seed=" + std::to_string(s.seed);
    out += " tie=" + std::to_string(s.tie_inputs);
    out += "\n";
  }
  return out;
}

// --- run configuration -------------------------------------------------------

struct RunConfig {
  std::string netlist_path;
  std::string tech_path;       // empty: shipped 45 nm-class defaults
  std::string variation_path;  // empty: 5% Gaussian defaults
  std::string intrusion_path;  // optional
  int bound = 4;
  InputPolicy policy;
  std::vector<Metric> metrics;  // empty = all
  std::string out_dir = "forasec_out";
  uint64_t seed = 1;
  bool emit_smv = false;
  bool expand_dff_cells = false;
  int max_iterations = 10000;
  uint64_t budget = uint64_t{1} << 32;  // FORASEC_BUDGET
  size_t path_limit = 10000;
  int monitored_paths = 4;

  std::string canonical() const {
    std::string s = "netlist=" + netlist_path + ";tech=" + tech_path +
                    ";var=" + variation_path + ";intr=" + intrusion_path +
                    ";bound=" + std::to_string(bound) +
                    ";policy=" + (policy.kind == InputPolicy::Exhaustive
                                      ? "exhaustive"
                                      : "random:" + std::to_string(policy.sequences)) +
                    ";seed=" + std::to_string(seed) + ";metrics=";
    for (Metric m : metrics) s += std::string(to_string(m)) + ",";
    s += ";maxit=" + std::to_string(max_iterations);
    return s;
  }
};

// --- commands ----------------------------------------------------------------

inline int cmd_parse(const std::string& netlist_path, std::ostream& out) {
  try {
    Circuit c = parse_bench(read_file(netlist_path));
    Circuit d = decompose_universal(c);
    out << "inputs: " << c.primary_inputs().size() << "\n";
    out << "outputs: " << c.primary_outputs().size() << "\n";
    out << "flipflops: " << c.flipflops().size() << "\n";
    out << "gates:";
    const GateKind hist_kinds[] = {GateKind::And,  GateKind::Or,   GateKind::Nand,
                                   GateKind::Nand2, GateKind::Nor,  GateKind::Nor2,
                                   GateKind::Not,  GateKind::Xor,  GateKind::Xnor,
                                   GateKind::Buf};
    for (GateKind k : hist_kinds) {
      size_t n = c.gate_count(k);
      if (n) out << " " << to_string(k) << ":" << n;
    }
    out << "\n";
    out << "decomposed: NAND:" << d.gate_count(GateKind::Nand2)
        << " NOR:" << d.gate_count(GateKind::Nor2)
        << " NOT:" << d.gate_count(GateKind::Not)
        << " DFF:" << d.gate_count(GateKind::Dff) << "\n";
    TechnologyParams p;
    auto delays = nominal_gate_delays(d, p);
    auto paths = enumerate_paths(d, delays, 1);
    out << "critical path: "
        << (paths.empty() ? std::string("none")
                          : std::to_string(paths.front().gates.size()) + " gates, " +
                                sig9(paths.front().delay) + " s")
        << "\n";
    return kExitOk;
  } catch (const InputError& e) {
    out << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InvariantError& e) {
    out << "error: " << e.what() << "\n";
    return kExitInvariantError;
  }
}

inline int cmd_coverage(int inputs, int gates, int nodes, double rate,
                        std::ostream& out) {
  try {
    CoverageReport r = estimate_coverage(inputs, gates, nodes, rate);
    auto row = [&](const char* label, const CoverageCost& c) {
      out << label << ": 2^" << c.exponent << " = " << c.patterns << " patterns";
      if (std::isfinite(c.seconds)) {
        out << ", " << sig9(c.seconds) << " s, " << sig9(c.years) << " years\n";
      } else {
        out << ", ~1e" << sig9(c.log10_seconds) << " s, ~1e" << sig9(c.log10_years)
            << " years\n";
      }
    };
    row("inputs", r.inputs);
    row("gates", r.gates);
    row("nodes", r.nodes);
    return kExitOk;
  } catch (const InvariantError& e) {
    out << "error: " << e.what() << "\n";
    return kExitInvariantError;
  }
}

namespace detail {

struct LoadedRun {
  Circuit clean;
  std::optional<IntrudedCircuit> intruded;
  TechnologyParams params;
  VariationSpec variation;
  std::vector<TechnologyParams> samples;

  const Circuit& circuit() const { return intruded ? intruded->circuit : clean; }
  std::span<const double> c_int() const {
    return intruded ? std::span<const double>(intruded->c_int)
                    : std::span<const double>{};
  }
};

inline LoadedRun load_run(const RunConfig& cfg) {
  LoadedRun run;
  Circuit parsed = parse_bench(read_file(cfg.netlist_path));
  run.clean = decompose_universal(parsed);
  if (cfg.expand_dff_cells) run.clean = expand_dffs(run.clean);
  run.params = cfg.tech_path.empty() ? TechnologyParams{}
                                     : load_tech_params(read_file(cfg.tech_path));
  run.variation = cfg.variation_path.empty()
                      ? VariationSpec::default_5pct()
                      : load_variation_spec(read_file(cfg.variation_path));
  run.samples = sample_variations(run.variation, run.params);
  if (!cfg.intrusion_path.empty()) {
    auto specs = load_intrusion_specs(read_file(cfg.intrusion_path));
    run.intruded = apply_intrusions(run.clean, specs, run.params);
  }
  return run;
}

inline long max_rss_kb() {
  struct rusage ru {};
  getrusage(RUSAGE_SELF, &ru);
  return ru.ru_maxrss;
}

}  // namespace detail

// Full pipeline: envelope -> optional intrusion -> state space -> iterative
// property loops -> report files in cfg.out_dir.
inline int cmd_analyze(const RunConfig& cfg, std::ostream& log) {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    detail::LoadedRun run = detail::load_run(cfg);

    // envelope comes from the clean circuit; detection is always relative
    // to the uncompromised design
    auto clean_delays = nominal_gate_delays(run.clean, run.params);
    auto clean_paths = enumerate_paths(run.clean, clean_delays, cfg.path_limit);
    auto env = circuit_bounds(run.clean, run.samples, clean_paths);

    const Circuit& target = run.circuit();
    // monitored paths are re-enumerated on the analyzed circuit so series
    // insertions are represented
    auto delays = nominal_gate_delays(target, run.params, run.c_int());
    auto paths = enumerate_paths(target, delays, cfg.path_limit);
    if (paths.size() > static_cast<size_t>(cfg.monitored_paths))
      paths.resize(cfg.monitored_paths);

    TransitionSystem sys(target, run.params, paths, run.c_int());
    std::vector<uint8_t> reset(sys.state_bits(), 0);
    AnalysisReport report =
        vulnerability_analysis(sys, env, cfg.bound, cfg.policy, reset,
                               cfg.max_iterations, cfg.metrics,
                               LoopStrategy::ExceptionBundled, cfg.budget,
                               cfg.monitored_paths);
    const auto t1 = std::chrono::steady_clock::now();
    report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    report.max_rss_kb = detail::max_rss_kb();

    std::filesystem::create_directories(cfg.out_dir);
    const uint64_t hash = fnv1a64(cfg.canonical());
    char timestamp[64];
    std::time_t now = std::time(nullptr);
    std::strftime(timestamp, sizeof(timestamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    auto j = report_json(target, report, env, hash, cfg.seed, timestamp);
    write_file(cfg.out_dir + "/report.json", j.dump(2) + "\n");
    write_file(cfg.out_dir + "/profile.csv", profile_csv(target, run.params, run.c_int()));
    write_file(cfg.out_dir + "/envelope.txt", envelope_report(env));
    if (cfg.emit_smv)
      write_file(cfg.out_dir + "/model.smv",
                 export_smv(target, run.params, env, paths));

    size_t total_ces = 0;
    for (auto& r : report.runs) total_ces += r.counterexamples.size();
    log << "properties: " << report.runs.size() << ", counterexamples: " << total_ces
        << ", transitions: " << report.total_transitions_evaluated << "\n";
    log << "reports written to " << cfg.out_dir << "\n";
    return kExitOk;
  } catch (const BudgetError& e) {
    log << "error: " << e.what() << "\n";
    return kExitBudgetError;
  } catch (const ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InputError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InvariantError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvariantError;
  }
}

inline int cmd_sweep(const RunConfig& cfg, LocationClass where, IntrusionMode mode,
                     std::span<const int> sizes, std::ostream& log) {
  try {
    detail::LoadedRun run = detail::load_run(cfg);
    auto rows = sweep(run.clean, where, mode, sizes, run.params, run.samples, cfg.seed);
    std::filesystem::create_directories(cfg.out_dir);
    write_file(cfg.out_dir + "/sweep.csv", sweep_csv(rows));

    std::string thresholds = "metric,min_detectable_size\n";
    int max_size = sizes.empty() ? 16 : *std::max_element(sizes.begin(), sizes.end());
    for (Metric m : {Metric::DynamicPower, Metric::LeakagePower, Metric::Delay}) {
      auto sz = min_detectable_size(run.clean, where, m, run.params, run.samples,
                                    std::max(1, max_size), cfg.seed, mode);
      thresholds += std::string(to_string(m)) + "," +
                    (sz ? std::to_string(*sz) : std::string("NOT-FOUND")) + "\n";
    }
    write_file(cfg.out_dir + "/thresholds.csv", thresholds);
    log << "sweep written to " << cfg.out_dir << "\n";
    return kExitOk;
  } catch (const BudgetError& e) {
    log << "error: " << e.what() << "\n";
    return kExitBudgetError;
  } catch (const ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InputError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InvariantError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvariantError;
  }
}

}  // namespace forasec
