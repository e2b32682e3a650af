#include <catch_amalgamated.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "forasec/netlist.hpp"
#include "forasec/paths.hpp"
#include "forasec/sidechannel.hpp"
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

}  // namespace

TEST_CASE("parse rejects empty input") {
  REQUIRE_THROWS_WITH(parse_bench(""), Catch::Matchers::ContainsSubstring("no gates defined"));
  REQUIRE_THROWS_AS(parse_bench("# only a comment\n"), ParseError);
}

TEST_CASE("parse smallest valid circuit") {
  Circuit c = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n");
  CHECK(c.gates().size() == 1);
  CHECK(c.nets().size() == 2);
  CHECK(c.flipflops().empty());
  CHECK(c.primary_inputs().size() == 1);
  CHECK(c.primary_outputs().size() == 1);
}

TEST_CASE("parse is case-insensitive on gate names only") {
  Circuit c = parse_bench("INPUT(a)\ninput(B)\nOUTPUT(y)\ny = nAnD(a, B)\n");
  CHECK(c.gates().size() == 1);
  CHECK(c.gate(0).kind == GateKind::Nand2);
}

TEST_CASE("parse diagnostics carry line and column") {
  try {
    parse_bench("INPUT(a)\ny = FROB(a)\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("FROB") != std::string::npos);
  }
}

TEST_CASE("parse rejects structural corruption") {
  SECTION("multiply driven net") {
    REQUIRE_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\ny = NOT(a)\n"),
                      InvariantError);
  }
  SECTION("undriven referenced net") {
    REQUIRE_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = NAND(a, ghost)\n"),
                      InvariantError);
  }
  SECTION("combinational cycle") {
    REQUIRE_THROWS_AS(
        parse_bench("INPUT(a)\nOUTPUT(y)\nx = NAND(a, y)\ny = NOT(x)\n"),
        InvariantError);
  }
}

TEST_CASE("s27 structural counts") {
  Circuit c = parse_bench(data_file("s27.bench"));
  CHECK(c.primary_inputs().size() == 4);
  CHECK(c.primary_outputs().size() == 1);
  CHECK(c.flipflops().size() == 3);
  CHECK(c.gates().size() == 13);  // 10 combinational + 3 DFF
}

TEST_CASE("bench round-trip is isomorphic and canonical") {
  Circuit a = parse_bench(data_file("s27.bench"));
  std::string s1 = serialize_bench(a);
  Circuit b = parse_bench(s1);
  // names are preserved, so isomorphism reduces to identical declarations
  CHECK(serialize_bench(b) == s1);
  CHECK(a.gates().size() == b.gates().size());
  for (const Gate& g : a.gates()) {
    int bn = b.find_net(a.net(g.output).name);
    REQUIRE(bn >= 0);
    const Gate& bg = b.gate(b.net(bn).driver);
    CHECK(bg.kind == g.kind);
    REQUIRE(bg.inputs.size() == g.inputs.size());
    for (size_t i = 0; i < g.inputs.size(); ++i)
      CHECK(b.net(bg.inputs[i]).name == a.net(g.inputs[i]).name);
  }
}

TEST_CASE("decompose AND gate to NAND plus NOT") {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n");
  Circuit d = decompose_universal(c);
  CHECK(d.gate_count(GateKind::Nand2) == 1);
  CHECK(d.gate_count(GateKind::Not) == 1);
  CHECK(d.gates().size() == 2);
  CHECK(oracle::truth_table(c) == oracle::truth_table(d));
}

TEST_CASE("decompose 3-input NAND against exhaustive truth table") {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\ny = NAND(a, b, c)\n");
  Circuit d = decompose_universal(c);
  for (const Gate& g : d.gates()) CHECK(is_universal(g.kind));
  CHECK(oracle::truth_table(c) == oracle::truth_table(d));
}

TEST_CASE("decompose XOR uses the 4-NAND pattern") {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = XOR(a, b)\n");
  Circuit d = decompose_universal(c);
  CHECK(d.gate_count(GateKind::Nand2) == 4);
  CHECK(d.gates().size() == 4);
  CHECK(oracle::truth_table(c) == oracle::truth_table(d));
}

TEST_CASE("decomposition preserves sequential behaviour") {
  // randomized circuits, exhaustive held-vector simulation plus random traces
  for (uint64_t seed : {11u, 12u, 13u, 14u, 15u, 16u}) {
    testgen::GenSpec spec;
    spec.seed = seed;
    spec.n_inputs = 5;
    spec.n_dffs = 3;
    spec.n_gates = 18;
    Circuit c = parse_bench(testgen::generate_bench(spec));
    Circuit d = decompose_universal(c);
    for (const Gate& g : d.gates()) CHECK(is_universal(g.kind));
    CHECK(oracle::io_equivalent(c, d));
  }
}

TEST_CASE("s27 decomposition stays functionally equal") {
  Circuit c = parse_bench(data_file("s27.bench"));
  Circuit d = decompose_universal(c);
  CHECK(oracle::io_equivalent(c, d));
}

TEST_CASE("single NOT yields exactly one path") {
  Circuit c = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n");
  std::vector<double> delays{1.0};
  auto paths = enumerate_paths(c, delays);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].gates.size() == 1);
  CHECK(paths[0].critical);
}

TEST_CASE("diamond has two paths") {
  Circuit c = parse_bench(
      "INPUT(a)\nOUTPUT(y)\n"
      "l = NOT(a)\nr = NOT(a)\ny = NAND(l, r)\n");
  std::vector<double> delays(c.gates().size(), 1.0);
  auto paths = enumerate_paths(c, delays);
  CHECK(paths.size() == 2);
}

TEST_CASE("path enumeration matches DFS oracle on s27") {
  Circuit c = decompose_universal(parse_bench(data_file("s27.bench")));
  TechnologyParams p;
  auto delays = nominal_gate_delays(c, p);
  auto got = enumerate_paths(c, delays, 100000);
  auto want = oracle::all_paths_dfs(c, delays);
  REQUIRE(got.size() == want.size());
  // sorted by delay descending with deterministic ties
  for (size_t i = 1; i < got.size(); ++i) {
    bool ok = got[i - 1].delay > got[i].delay ||
              (got[i - 1].delay == got[i].delay && got[i - 1].gates < got[i].gates);
    CHECK(ok);
  }
  std::set<std::vector<int>> want_set, got_set;
  for (auto& p2 : want) want_set.insert(p2.gates);
  for (auto& p2 : got) got_set.insert(p2.gates);
  CHECK(got_set == want_set);
  // truncation keeps the longest prefix
  auto top = enumerate_paths(c, delays, 3);
  REQUIRE(top.size() == 3);
  for (size_t i = 0; i < top.size(); ++i) CHECK(top[i].gates == got[i].gates);
}

TEST_CASE("path enumeration is stable across runs") {
  Circuit c = decompose_universal(parse_bench(data_file("s27.bench")));
  TechnologyParams p;
  auto delays = nominal_gate_delays(c, p);
  auto a = enumerate_paths(c, delays, 50);
  auto b = enumerate_paths(c, delays, 50);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].gates == b[i].gates);
}

TEST_CASE("three-NOT chain puts internal nets on the critical path") {
  Circuit c = parse_bench(
      "INPUT(a)\nOUTPUT(y)\n"
      "b = NOT(a)\nmid = NOT(b)\ny = NOT(mid)\n");
  std::vector<double> delays(c.gates().size(), 1.0);
  auto cls = classify_locations(c, delays);
  CHECK(cls[c.find_net("a")] == LocationClass::Input);
  CHECK(cls[c.find_net("y")] == LocationClass::Output);
  CHECK(cls[c.find_net("b")] == LocationClass::CriticalPath);
  CHECK(cls[c.find_net("mid")] == LocationClass::CriticalPath);
}

TEST_CASE("s27 critical-path nets match brute force") {
  Circuit c = decompose_universal(parse_bench(data_file("s27.bench")));
  TechnologyParams p;
  auto delays = nominal_gate_delays(c, p);
  auto cls = classify_locations(c, delays);

  auto all = oracle::all_paths_dfs(c, delays);
  double dmax = 0;
  for (auto& path : all) dmax = std::max(dmax, path.delay);
  std::set<int> cp_nets;
  for (auto& path : all)
    if (path.delay >= dmax * (1 - 1e-12))
      for (int g : path.gates) cp_nets.insert(c.gate(g).output);

  for (const Net& n : c.nets()) {
    if (n.is_input || n.is_output) continue;
    bool fb = cls[n.id] == LocationClass::Feedback;
    if (fb) continue;  // feedback wins over CP by precedence
    bool want_cp = cp_nets.count(n.id) > 0;
    CHECK((cls[n.id] == LocationClass::CriticalPath) == want_cp);
  }
}

TEST_CASE("classification is total and single-valued") {
  testgen::GenSpec spec;
  spec.seed = 77;
  spec.n_gates = 30;
  spec.n_dffs = 4;
  Circuit c = decompose_universal(parse_bench(testgen::generate_bench(spec)));
  TechnologyParams p;
  auto delays = nominal_gate_delays(c, p);
  auto cls = classify_locations(c, delays);
  REQUIRE(cls.size() == c.nets().size());
  // every net got exactly one class by construction of the vector
}

TEST_CASE("DFF expansion flags cross-coupled nets as feedback") {
  Circuit c = parse_bench("INPUT(d)\nOUTPUT(q)\nq = DFF(d)\n");
  Circuit e = expand_dffs(c);
  CHECK(e.has_latch_loops());
  TechnologyParams p;
  auto delays = nominal_gate_delays(e, p);
  auto cls = classify_locations(e, delays);
  // q is a primary output; the cross-coupled companion is internal
  CHECK(cls[e.find_net("q_qb")] == LocationClass::Feedback);
  CHECK(e.net(e.find_net("q")).feedback_hint);
}

TEST_CASE("expanded DFF cell agrees with the atomic element") {
  Circuit c = parse_bench("INPUT(d)\nOUTPUT(q)\nq = DFF(d)\n");
  Circuit e = expand_dffs(c);
  // two-phase clocking: CLK=1 samples, CLK=0 holds; Q after the cycle must
  // equal the atomic next-state
  const int d_in = e.find_net("d");
  const int clk = e.find_net("CLK");
  const int q = e.find_net("q");
  std::vector<uint8_t> vals(e.nets().size(), 0);
  // settle a defined initial latch state with d=0, clk=1
  vals[d_in] = 0;
  vals[clk] = 1;
  e.eval_combinational(vals);
  uint8_t q_atomic = 0;
  for (uint64_t s = 0; s < 64; ++s) {
    uint8_t d = mix_key(5, s, 0) & 1;
    vals[d_in] = d;
    vals[clk] = 1;
    e.eval_combinational(vals);
    vals[clk] = 0;
    e.eval_combinational(vals);
    q_atomic = d;  // atomic DFF: Q := D each cycle
    CHECK(vals[q] == q_atomic);
  }
}

TEST_CASE("DFF feedback through logic is classified FEEDBACK") {
  // ff output feeds logic that returns to the same ff's data input
  Circuit c = parse_bench(
      "INPUT(a)\nOUTPUT(y)\n"
      "q = DFF(n)\n"
      "n = NOR(a, q)\n"
      "y = NOT(q)\n");
  TechnologyParams p;
  Circuit d = decompose_universal(c);
  auto delays = nominal_gate_delays(d, p);
  auto cls = classify_locations(d, delays);
  CHECK(cls[d.find_net("n")] == LocationClass::Feedback);
  CHECK(cls[d.find_net("q")] == LocationClass::Feedback);
}
