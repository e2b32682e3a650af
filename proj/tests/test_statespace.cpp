#include <catch_amalgamated.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "forasec/coverage.hpp"
#include "forasec/statespace.hpp"
#include "support/bench_gen.hpp"
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

TransitionSystem make_system(const Circuit& c, const TechnologyParams& p,
                             size_t paths = 4) {
  auto delays = nominal_gate_delays(c, p);
  auto ps = enumerate_paths(c, delays, paths);
  return TransitionSystem(c, p, ps);
}

}  // namespace

TEST_CASE("combinational circuit is a single-state system") {
  TechnologyParams p;
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NAND(a, b)\n");
  auto sys = make_system(c, p);
  CHECK(sys.state_bits() == 0);
  int transitions = 0;
  explore(sys, 1, {InputPolicy::Exhaustive}, {}, [&](const Transition& t) {
    CHECK(t.state.empty());
    ++transitions;
    return true;
  });
  CHECK(transitions == 4);  // 2 input bits, bound 1
}

TEST_CASE("self-inverting flip-flop is a two-state toggle automaton") {
  TechnologyParams p;
  Circuit c = parse_bench("INPUT(en)\nOUTPUT(y)\nq = DFF(n)\nn = NOT(q)\ny = NOT(q)\n");
  auto sys = make_system(c, p);
  CHECK(sys.state_bits() == 1);
  // next state is always the inverse, whatever the input
  std::vector<uint8_t> vals(c.nets().size(), 0);
  for (uint8_t s : {uint8_t{0}, uint8_t{1}}) {
    for (uint8_t in : {uint8_t{0}, uint8_t{1}}) {
      std::vector<uint8_t> state{s}, input{in};
      sys.settle(state, input, vals);
      auto next = sys.next_state(vals);
      REQUIRE(next.size() == 1);
      CHECK(next[0] == (1 - s));
    }
  }
}

TEST_CASE("s27 reachable states match the BFS oracle") {
  TechnologyParams p;
  Circuit c = s27();
  auto sys = make_system(c, p);
  REQUIRE(sys.state_bits() == 3);

  auto bfs = [&](auto next_fn) {
    std::set<std::vector<uint8_t>> seen;
    std::vector<std::vector<uint8_t>> work{{0, 0, 0}};
    seen.insert(work[0]);
    while (!work.empty()) {
      auto s = work.back();
      work.pop_back();
      for (unsigned v = 0; v < 16; ++v) {
        std::vector<uint8_t> in(4);
        for (int i = 0; i < 4; ++i) in[i] = (v >> i) & 1;
        auto n = next_fn(s, in);
        if (seen.insert(n).second) work.push_back(n);
      }
    }
    return seen;
  };

  std::vector<uint8_t> vals(c.nets().size(), 0);
  auto via_system = bfs([&](const std::vector<uint8_t>& s, const std::vector<uint8_t>& in) {
    sys.settle(s, in, vals);
    return sys.next_state(vals);
  });
  oracle::SeqSim sim(c);
  auto via_oracle = bfs([&](const std::vector<uint8_t>& s, const std::vector<uint8_t>& in) {
    return sim.cycle(in, s).second;
  });
  CHECK(via_system == via_oracle);
  CHECK(via_system.size() <= 8);
}

TEST_CASE("simulation equivalence on random circuits") {
  TechnologyParams p;
  for (uint64_t seed : {3u, 4u, 5u}) {
    testgen::GenSpec gs;
    gs.seed = seed;
    gs.n_inputs = 4;
    gs.n_dffs = 3;
    gs.n_gates = 16;
    Circuit c = decompose_universal(parse_bench(testgen::generate_bench(gs)));
    auto sys = make_system(c, p);
    oracle::SeqSim sim(c);
    std::vector<uint8_t> vals(c.nets().size(), 0);
    for (unsigned s = 0; s < 8; ++s) {
      for (unsigned v = 0; v < 16; ++v) {
        std::vector<uint8_t> state{static_cast<uint8_t>(s & 1),
                                   static_cast<uint8_t>((s >> 1) & 1),
                                   static_cast<uint8_t>((s >> 2) & 1)};
        std::vector<uint8_t> in(4);
        for (int i = 0; i < 4; ++i) in[i] = (v >> i) & 1;
        sys.settle(state, in, vals);
        CHECK(sys.next_state(vals) == sim.cycle(in, state).second);
      }
    }
  }
}

TEST_CASE("exhaustive exploration visits the exact prefix count") {
  TechnologyParams p;
  Circuit c = parse_bench(
      "INPUT(a)\nINPUT(b)\nOUTPUT(y)\nq = DFF(m)\nm = NAND(a, b)\ny = NOR(m, q)\n");
  auto sys = make_system(c, p);
  for (int bound = 1; bound <= 3; ++bound) {
    uint64_t want = 0, level = 1;
    for (int t = 1; t <= bound; ++t) {
      level *= 4;  // 2 input bits
      want += level;
    }
    uint64_t seen = 0;
    auto stats = explore(sys, bound, {InputPolicy::Exhaustive}, {},
                         [&](const Transition&) {
                           ++seen;
                           return true;
                         });
    CHECK(seen == want);
    CHECK(stats.transitions_evaluated == want);
  }
}

TEST_CASE("random policy is reproducible and respects counts") {
  TechnologyParams p;
  Circuit c = s27();
  auto sys = make_system(c, p);
  InputPolicy pol;
  pol.kind = InputPolicy::Random;
  pol.seed = 99;
  pol.sequences = 17;
  std::vector<std::vector<uint8_t>> first, second;
  explore(sys, 5, pol, {}, [&](const Transition& t) {
    first.push_back(t.next_input);
    return true;
  });
  explore(sys, 5, pol, {}, [&](const Transition& t) {
    second.push_back(t.next_input);
    return true;
  });
  CHECK(first == second);
  CHECK(first.size() == 17u * 5u);
  pol.seed = 100;
  std::vector<std::vector<uint8_t>> third;
  explore(sys, 5, pol, {}, [&](const Transition& t) {
    third.push_back(t.next_input);
    return true;
  });
  CHECK(first != third);
}

TEST_CASE("visitor can stop exploration early") {
  TechnologyParams p;
  Circuit c = s27();
  auto sys = make_system(c, p);
  int seen = 0;
  explore(sys, 3, {InputPolicy::Exhaustive}, {}, [&](const Transition&) {
    return ++seen < 10;
  });
  CHECK(seen == 10);
}

TEST_CASE("exhaustive budget overflow raises") {
  TechnologyParams p;
  Circuit c = s27();
  auto sys = make_system(c, p);
  REQUIRE_THROWS_AS(explore(sys, 9, {InputPolicy::Exhaustive}, {},
                            [](const Transition&) { return true; },
                            /*budget=*/1000),
                    BudgetError);
}

TEST_CASE("transition valuations match an independent recomputation") {
  TechnologyParams p;
  Circuit c = s27();
  auto delays = nominal_gate_delays(c, p);
  auto paths = enumerate_paths(c, delays, 3);
  TransitionSystem sys(c, p, paths);
  oracle::SeqSim sim(c);

  int checked = 0;
  explore(sys, 2, {InputPolicy::Exhaustive}, {}, [&](const Transition& t) {
    // recompute settled values independently
    auto [v_old, s_next] = sim.cycle(t.input, t.state);
    auto [v_new, s_after] = sim.cycle(t.next_input, s_next);
    double dp = 0, lp = 0;
    for (const Gate& g : c.gates()) {
      if (v_old[g.output] != v_new[g.output])
        dp += dynamic_power(1.0, total_capacitance(c, g, p), p);
      lp += leakage_power(p, g.kind, gate_input_state(c, g, v_new), c.fanout(g));
    }
    CHECK(t.valuation.dp == Catch::Approx(dp).epsilon(1e-12).margin(1e-30));
    CHECK(t.valuation.lp == Catch::Approx(lp).epsilon(1e-12));
    for (size_t k = 0; k < paths.size(); ++k) {
      double d = 0;
      for (int gid : paths[k].gates) {
        const Gate& g = c.gate(gid);
        unsigned so = gate_input_state(c, g, v_old);
        unsigned sn = gate_input_state(c, g, v_new);
        if (so != sn)
          d += elmore_delay(p, g.kind, so, sn, total_capacitance(c, g, p), c.fanout(g));
      }
      CHECK(t.valuation.path_delay[k] == Catch::Approx(d).epsilon(1e-12).margin(1e-30));
    }
    return ++checked < 600;
  });
  CHECK(checked >= 272);  // 16 + 256 at bound 2
}

TEST_CASE("latch-loop circuits are rejected by the builder") {
  TechnologyParams p;
  Circuit c = expand_dffs(parse_bench("INPUT(d)\nOUTPUT(q)\nq = DFF(d)\n"));
  REQUIRE_THROWS_AS(TransitionSystem(c, p, {}), InvariantError);
}

TEST_CASE("partitioning") {
  TechnologyParams p;
  SECTION("one output cone holds every gate") {
    Circuit c = parse_bench(
        "INPUT(a)\nINPUT(b)\nOUTPUT(y)\nm = NAND(a, b)\nn = NOT(m)\ny = NOR(n, a)\n");
    auto parts = partition(c, Metric::LeakagePower);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].cone.size() == c.gates().size());
    CHECK(parts[0].owned.size() == c.gates().size());
  }
  SECTION("disconnected subcircuits split cleanly") {
    Circuit c = parse_bench(
        "INPUT(a)\nINPUT(b)\nOUTPUT(x)\nOUTPUT(y)\nx = NOT(a)\ny = NOT(b)\n");
    auto parts = partition(c, Metric::LeakagePower);
    REQUIRE(parts.size() == 2);
    std::set<int> seen;
    for (auto& part : parts)
      for (int g : part.cone) CHECK(seen.insert(g).second);
  }
  SECTION("owned sets tile the gate set and shares sum to the monolithic bound") {
    Circuit c = s27();
    VariationSpec vs = VariationSpec::default_5pct();
    vs.sample_count = 25;
    auto samples = sample_variations(vs, TechnologyParams{});
    auto parts = partition(c, Metric::LeakagePower);
    std::set<int> owned;
    size_t total = 0;
    for (auto& part : parts) {
      total += part.owned.size();
      for (int g : part.owned) CHECK(owned.insert(g).second);
    }
    CHECK(total == c.gates().size());

    double share_sum = 0;
    for (auto& part : parts)
      share_sum += partition_bound_share(c, samples, part, Metric::LeakagePower);
    auto delays = nominal_gate_delays(c, TechnologyParams{});
    auto paths = enumerate_paths(c, delays, 4);
    auto env = circuit_bounds(c, samples, paths);
    CHECK(share_sum == Catch::Approx(env.lp_max).epsilon(1e-12));
    double dp_sum = 0;
    auto parts_dp = partition(c, Metric::DynamicPower);
    for (auto& part : parts_dp)
      dp_sum += partition_bound_share(c, samples, part, Metric::DynamicPower);
    CHECK(dp_sum == Catch::Approx(env.dp_max).epsilon(1e-12));
  }
}

TEST_CASE("coverage estimator reproduces the motivating numbers") {
  auto r = estimate_coverage(9, 349, 369, 10.0);
  CHECK(r.inputs.patterns == "512");
  CHECK(r.inputs.seconds == Catch::Approx(51.2).epsilon(1e-12));

  auto c35 = coverage_cost(35, 10.0);
  CHECK(c35.patterns == "34359738368");
  CHECK(c35.years > 108.0);
  CHECK(c35.years < 110.0);

  // 2^349 / 10 / 3.156e7 is of order 1e96
  CHECK(std::floor(r.gates.log10_years) == 96.0);
  CHECK(r.gates.patterns.size() == 106);  // 2^349 has 106 decimal digits
  CHECK(std::floor(r.nodes.log10_years) == 102.0);

  auto c0 = coverage_cost(0, 10.0);
  CHECK(c0.patterns == "1");
  CHECK(c0.seconds == Catch::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("pow2 decimal rendering") {
  CHECK(pow2_decimal(0) == "1");
  CHECK(pow2_decimal(10) == "1024");
  CHECK(pow2_decimal(100) == "1267650600228229401496703205376");
  REQUIRE_THROWS_AS(pow2_decimal(-1), InvariantError);
}
