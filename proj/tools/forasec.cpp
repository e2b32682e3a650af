/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forasec/forasec.hpp"

namespace {

forasec::InputPolicy parse_policy(const std::string& s, uint64_t seed) {
  forasec::InputPolicy p;
  p.seed = seed;
  if (s == "exhaustive") {
    p.kind = forasec::InputPolicy::Exhaustive;
    return p;
  }
  if (s.rfind("random:", 0) == 0) {
    p.kind = forasec::InputPolicy::Random;
    p.sequences = std::stoull(s.substr(7));
    return p;
  }
  throw CLI::ValidationError("--policy", "expected 'exhaustive' or 'random:N'");
}

std::vector<forasec::Metric> parse_metrics(const std::string& s) {
  std::vector<forasec::Metric> ms;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t comma = s.find(',', pos);
    std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos
                                                               : comma - pos);
    if (tok == "dp") ms.push_back(forasec::Metric::DynamicPower);
    else if (tok == "lp") ms.push_back(forasec::Metric::LeakagePower);
    else if (tok == "delay") ms.push_back(forasec::Metric::Delay);
    else throw CLI::ValidationError("--metrics", "expected dp, lp or delay");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return ms;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forasec: side-channel vulnerability analysis of sequential circuits"};
  app.require_subcommand(1);

  std::string netlist, tech, variation, intrude, out_dir = "forasec_out";
  std::string policy_str = "exhaustive", metrics_str;
  uint64_t seed = 1;
  int bound = 4;
  bool emit_smv = false, expand_dff = false;
  int max_iterations = 10000;

  auto add_common = [&](CLI::App* cmd, bool needs_netlist) {
    if (needs_netlist)
      cmd->add_option("--netlist", netlist, "ISCAS89 .bench netlist")->required();
    cmd->add_option("--tech", tech, "technology parameter file");
    cmd->add_option("--variation", variation, "variation spec file");
    cmd->add_option("--seed", seed, "run seed");
    cmd->add_option("--out", out_dir, "output directory");
  };

  auto* c_parse = app.add_subcommand("parse", "structural summary of a netlist");
  c_parse->add_option("--netlist", netlist, "ISCAS89 .bench netlist")->required();

  auto* c_analyze = app.add_subcommand("analyze", "bounded vulnerability analysis");
  add_common(c_analyze, true);
  c_analyze->add_option("--intrude", intrude, "intrusion spec file");
  c_analyze->add_option("--bound", bound, "exploration depth");
  c_analyze->add_option("--policy", policy_str, "exhaustive | random:N");
  c_analyze->add_option("--metrics", metrics_str, "comma list of dp,lp,delay");
  c_analyze->add_option("--max-iterations", max_iterations, "per-property CE cap");
  c_analyze->add_flag("--emit-smv", emit_smv, "export SMV model");
  c_analyze->add_flag("--expand-dff", expand_dff, "analyze the DFF-internal cell view");

  int cov_inputs = 0, cov_gates = 0, cov_nodes = 0;
  double cov_rate = 10.0;
  auto* c_cov = app.add_subcommand("coverage", "exhaustive test-cost estimate");
  c_cov->add_option("--inputs", cov_inputs, "primary input count")->required();
  c_cov->add_option("--gates", cov_gates, "gate count");
  c_cov->add_option("--nodes", cov_nodes, "node count");
  c_cov->add_option("--rate", cov_rate, "tests per second");

  std::string sweep_class = "CP", sweep_mode = "parallel", sweep_sizes = "1,2,4,8";
  auto* c_sweep = app.add_subcommand("sweep", "intrusion-size effect table");
  add_common(c_sweep, true);
  c_sweep->add_option("--class", sweep_class, "INPUT|OUTPUT|CP|NCP|FEEDBACK");
  c_sweep->add_option("--mode", sweep_mode, "parallel | series");
  c_sweep->add_option("--sizes", sweep_sizes, "comma list of gate counts");

  CLI11_PARSE(app, argc, argv);

  forasec::RunConfig cfg;
  cfg.netlist_path = netlist;
  cfg.tech_path = tech;
  cfg.variation_path = variation;
  cfg.intrusion_path = intrude;
  cfg.bound = bound;
  cfg.seed = seed;
  cfg.out_dir = out_dir;
  cfg.emit_smv = emit_smv;
  cfg.expand_dff_cells = expand_dff;
  cfg.max_iterations = max_iterations;
  if (const char* b = std::getenv("FORASEC_BUDGET")) cfg.budget = std::strtoull(b, nullptr, 10);

  try {
    if (app.got_subcommand(c_parse)) return forasec::cmd_parse(netlist, std::cout);
    if (app.got_subcommand(c_cov))
      return forasec::cmd_coverage(cov_inputs, cov_gates, cov_nodes, cov_rate, std::cout);
    if (app.got_subcommand(c_analyze)) {
      cfg.policy = parse_policy(policy_str, seed);
      cfg.metrics = parse_metrics(metrics_str);
      return forasec::cmd_analyze(cfg, std::cout);
    }
    if (app.got_subcommand(c_sweep)) {
      auto cls = forasec::location_class_from(sweep_class);
      if (!cls) {
        std::cout << "error: unknown location class '" << sweep_class << "'\n";
        return forasec::kExitInputError;
      }
      forasec::IntrusionMode mode = sweep_mode == "series"
                                        ? forasec::IntrusionMode::Series
                                        : forasec::IntrusionMode::Parallel;
      std::vector<int> sizes;
      size_t pos = 0;
      while (pos < sweep_sizes.size()) {
        size_t comma = sweep_sizes.find(',', pos);
        sizes.push_back(std::stoi(sweep_sizes.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      return forasec::cmd_sweep(cfg, *cls, mode, sizes, std::cout);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cout << "error: " << e.what() << "\n";
    return forasec::kExitInputError;
  }
  return forasec::kExitOk;
}
