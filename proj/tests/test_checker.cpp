#include <catch_amalgamated.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "forasec/checker.hpp"
#include "support/oracles.hpp"

using namespace forasec;

namespace {

std::string data_file(const std::string& name) {
  std::ifstream in(std::string(FORASEC_DATA_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Circuit s27() { return decompose_universal(parse_bench(data_file("s27.bench"))); }

struct Fixture {
  TechnologyParams params;
  Circuit clean;
  std::vector<TechnologyParams> samples;
  BoundEnvelope env;
  std::vector<PathDescriptor> paths;

  Fixture() : clean(s27()) {
    VariationSpec vs = VariationSpec::default_5pct();
    vs.sample_count = 50;
    vs.seed = 12;
    samples = sample_variations(vs, params);
    auto delays = nominal_gate_delays(clean, params);
    paths = enumerate_paths(clean, delays, 4);
    env = circuit_bounds(clean, samples, paths);
  }
};

// an intruded s27 instance that provably violates the leakage property
struct IntrudedFixture : Fixture {
  IntrudedCircuit ic;
  int host_net = -1;

  IntrudedFixture() {
    IntrusionSpec spec;
    spec.target_net = "G11";  // toggling internal net
    for (int size = 4; size <= 96; size += 4) {
      spec.size = size;
      ic = inject(clean, spec, params);
      TransitionSystem sys(ic.circuit, params, paths, ic.c_int);
      auto prop = make_property(PropertyMetric::LpUpper, env);
      auto res = check(sys, prop, 2, {InputPolicy::Exhaustive});
      if (res.verdict == Verdict::Violated) break;
    }
    host_net = ic.circuit.find_net("G11");
  }
};

}  // namespace

TEST_CASE("clean circuit holds against its own envelope") {
  Fixture f;
  TransitionSystem sys(f.clean, f.params, f.paths);
  for (auto metric : {PropertyMetric::Dp, PropertyMetric::LpUpper, PropertyMetric::LpLower}) {
    auto prop = make_property(metric, f.env);
    auto res = check(sys, prop, 3, {InputPolicy::Exhaustive});
    CHECK(res.verdict == Verdict::HoldsWithinBound);
  }
  for (int k = 0; k < static_cast<int>(f.paths.size()); ++k) {
    auto prop = make_property(PropertyMetric::Delay, f.env, k);
    auto res = check(sys, prop, 3, {InputPolicy::Exhaustive});
    CHECK(res.verdict == Verdict::HoldsWithinBound);
  }
}

TEST_CASE("complement is an involution that swaps the quantifier") {
  BoundProperty p = make_property(PropertyMetric::Dp, BoundEnvelope{});
  CHECK(p.quantifier == Quantifier::Eventually);
  BoundProperty q = complement(p);
  CHECK(q.quantifier == Quantifier::Globally);
  CHECK(q.metric == p.metric);
  CHECK(q.bound == p.bound);
  BoundProperty r = complement(q);
  CHECK(r.quantifier == p.quantifier);

  // exceptions survive complementation
  p.exceptions.push_back({{0}, {1, 0}, {0, 1}});
  CHECK(complement(p).exceptions.size() == 1);
}

TEST_CASE("complement locates the same violating transition") {
  IntrudedFixture f;
  TransitionSystem sys(f.ic.circuit, f.params, f.paths, f.ic.c_int);
  auto prop = make_property(PropertyMetric::LpUpper, f.env);
  auto r1 = check(sys, prop, 2, {InputPolicy::Exhaustive});
  auto r2 = check(sys, complement(prop), 2, {InputPolicy::Exhaustive});
  REQUIRE(r1.verdict == Verdict::Violated);
  REQUIRE(r2.verdict == Verdict::Violated);
  CHECK(r1.counterexample->pattern == r2.counterexample->pattern);
}

TEST_CASE("intrusion above the detectable threshold is caught and located") {
  IntrudedFixture f;
  TransitionSystem sys(f.ic.circuit, f.params, f.paths, f.ic.c_int);
  auto prop = make_property(PropertyMetric::LpUpper, f.env);
  auto res = check(sys, prop, 2, {InputPolicy::Exhaustive});
  REQUIRE(res.verdict == Verdict::Violated);
  const auto& ce = *res.counterexample;
  REQUIRE_FALSE(ce.implicated_nets.empty());
  CHECK(ce.implicated_nets.front() == f.host_net);
  CHECK(ce.metric_value > ce.bound);
  // trace replays to the recorded violation
  REQUIRE_FALSE(ce.trace.empty());
  CHECK(ce.trace.back().step == ce.violating_step);
  CHECK(ce.trace.back().valuation.lp == Catch::Approx(ce.metric_value).epsilon(1e-12));
}

TEST_CASE("an exception masks exactly its transition") {
  IntrudedFixture f;
  TransitionSystem sys(f.ic.circuit, f.params, f.paths, f.ic.c_int);
  auto prop = make_property(PropertyMetric::LpUpper, f.env);
  auto first = check(sys, prop, 2, {InputPolicy::Exhaustive});
  REQUIRE(first.verdict == Verdict::Violated);

  prop.exceptions.push_back(first.counterexample->pattern);
  auto second = check(sys, prop, 2, {InputPolicy::Exhaustive});
  if (second.verdict == Verdict::Violated)
    CHECK_FALSE(second.counterexample->pattern == first.counterexample->pattern);
}

TEST_CASE("iterative loop: fixpoint, accounting and exhaustive-scan equality") {
  IntrudedFixture f;
  TransitionSystem sys(f.ic.circuit, f.params, f.paths, f.ic.c_int);
  BoundProperty prop = make_property(PropertyMetric::LpUpper, f.env);

  auto run = run_property_loop(sys, prop, 2, {InputPolicy::Exhaustive}, {}, 100000);
  CHECK(run.final_verdict == Verdict::HoldsWithinBound);
  CHECK_FALSE(run.truncated);
  REQUIRE_FALSE(run.counterexamples.empty());
  CHECK(run.iterations == static_cast<int>(run.counterexamples.size()) + 1);

  // the same counterexample never repeats
  std::set<std::tuple<std::string, std::string, std::string>> patterns;
  for (auto& ce : run.counterexamples) {
    auto key = std::make_tuple(std::string(ce.pattern.state.begin(), ce.pattern.state.end()),
                               std::string(ce.pattern.input.begin(), ce.pattern.input.end()),
                               std::string(ce.pattern.next_input.begin(), ce.pattern.next_input.end()));
    CHECK(patterns.insert(key).second);
  }

  // exhaustive transition scan finds the same violating set
  BoundProperty bare = make_property(PropertyMetric::LpUpper, f.env);
  std::set<std::tuple<std::string, std::string, std::string>> scan;
  explore(sys, 2, {InputPolicy::Exhaustive}, {}, [&](const Transition& t) {
    if (bare.violates(t))
      scan.insert(std::make_tuple(std::string(t.state.begin(), t.state.end()),
                                  std::string(t.input.begin(), t.input.end()),
                                  std::string(t.next_input.begin(), t.next_input.end())));
    return true;
  });
  CHECK(patterns == scan);

  // with every exception applied the property holds again
  auto recheck = check(sys, run.property, 2, {InputPolicy::Exhaustive});
  CHECK(recheck.verdict == Verdict::HoldsWithinBound);

  SECTION("naive restart finds the identical set at higher cost") {
    auto naive = run_property_loop(sys, make_property(PropertyMetric::LpUpper, f.env),
                                   2, {InputPolicy::Exhaustive}, {}, 100000,
                                   LoopStrategy::NaiveRestart);
    REQUIRE(naive.counterexamples.size() == run.counterexamples.size());
    for (size_t i = 0; i < naive.counterexamples.size(); ++i)
      CHECK(naive.counterexamples[i].pattern == run.counterexamples[i].pattern);
    CHECK(naive.transitions_evaluated > run.transitions_evaluated);
  }
}

TEST_CASE("clean analysis yields one iteration per property and no findings") {
  Fixture f;
  TransitionSystem sys(f.clean, f.params, f.paths);
  const Metric all[] = {Metric::DynamicPower, Metric::LeakagePower, Metric::Delay};
  auto report = vulnerability_analysis(sys, f.env, 2, {InputPolicy::Exhaustive}, {},
                                       1000, all);
  for (auto& run : report.runs) {
    CHECK(run.counterexamples.empty());
    CHECK(run.iterations == 1);
    CHECK(run.final_verdict == Verdict::HoldsWithinBound);
  }
  CHECK(report.ranked.empty());
  CHECK(rank_vulnerable(f.clean, report.runs).empty());
}

TEST_CASE("vulnerable-location ranking is deterministic and host-led") {
  IntrudedFixture f;
  TransitionSystem sys(f.ic.circuit, f.params, f.paths, f.ic.c_int);
  const Metric lp[] = {Metric::LeakagePower};
  auto report = vulnerability_analysis(sys, f.env, 2, {InputPolicy::Exhaustive}, {},
                                       100000, lp);
  REQUIRE_FALSE(report.ranked.empty());
  CHECK(report.ranked.front().net == f.host_net);
  for (size_t i = 1; i < report.ranked.size(); ++i) {
    const auto& a = report.ranked[i - 1];
    const auto& b = report.ranked[i];
    bool ordered = a.count > b.count ||
                   (a.count == b.count && a.max_excess > b.max_excess) ||
                   (a.count == b.count && a.max_excess == b.max_excess && a.net < b.net);
    CHECK(ordered);
  }
}

TEST_CASE("budget exhaustion is reported as UNKNOWN, never HOLDS") {
  Fixture f;
  TransitionSystem sys(f.clean, f.params, f.paths);
  auto prop = make_property(PropertyMetric::LpUpper, f.env);
  auto res = check(sys, prop, 8, {InputPolicy::Exhaustive}, {}, /*budget=*/100);
  CHECK(res.verdict == Verdict::UnknownBudget);
}
