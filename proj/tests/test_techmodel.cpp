#include <catch_amalgamated.hpp>

#include <cmath>

#include "forasec/techmodel.hpp"
#include "support/oracles.hpp"

using namespace forasec;

TEST_CASE("gate capacitance formula") {
  TechnologyParams p;
  SECTION("overlap terms vanish") {
    p.c_gso = 0.0;
    p.c_gdo = 0.0;
    double c = gate_capacitance(p, Polarity::Nmos, 1, 1.0);
    CHECK(c == Catch::Approx(p.w_nmin * p.l_n * p.c_ox).epsilon(1e-15));
  }
  SECTION("linear in FO and WR") {
    double c1 = gate_capacitance(p, Polarity::Pmos, 1, 1.0);
    CHECK(gate_capacitance(p, Polarity::Pmos, 2, 1.0) == Catch::Approx(2 * c1).epsilon(1e-15));
    CHECK(gate_capacitance(p, Polarity::Pmos, 1, 3.0) == Catch::Approx(3 * c1).epsilon(1e-15));
  }
  SECTION("hand-evaluated nominal value to 1e-9 relative") {
    // FO*WR*(C_GSO + C_GDO + Wmin*L*Cox) with the shipped defaults
    long double expect = 2.0L * 1.0L *
                         (2.7e-17L + 2.7e-17L + 90e-9L * 45e-9L * 2.9e-2L);
    double got = gate_capacitance(p, Polarity::Nmos, 2, 1.0);
    CHECK(std::abs(got - static_cast<double>(expect)) <= 1e-9 * std::abs(got));
  }
}

TEST_CASE("diffusion capacitance") {
  TechnologyParams p;
  SECTION("zero junction geometry gives zero") {
    p.as_diff = 0.0;
    p.ps_diff = 0.0;
    CHECK(diffusion_capacitance(p, GateKind::Nand2) == 0.0);
  }
  SECTION("NAND2 formula at FO=1, WR=1") {
    p.wr_p = 1.0;
    p.wr_n = 1.0;
    double cdmin = min_diffusion_capacitance(p);
    double want = 2.0 * p.w_pmin * (cdmin / p.w_pmin) + p.w_nmin * (cdmin / p.w_nmin);
    CHECK(diffusion_capacitance(p, GateKind::Nand2) == Catch::Approx(want).epsilon(1e-12));
  }
  SECTION("NOR2 is the transistor-topology dual") {
    // count drain diffusions at the output node: NOR2 has two nMOS drains
    // and one pMOS stack drain
    double cp = p.wr_p * p.w_pmin * diffusion_cap_per_width(p, Polarity::Pmos);
    double cn = p.wr_n * p.w_nmin * diffusion_cap_per_width(p, Polarity::Nmos);
    CHECK(diffusion_capacitance(p, GateKind::Nor2) == Catch::Approx(cp + 2 * cn).epsilon(1e-12));
    CHECK(diffusion_capacitance(p, GateKind::Not) == Catch::Approx(cp + cn).epsilon(1e-12));
  }
}

TEST_CASE("on resistance") {
  TechnologyParams p;
  SECTION("halves when width doubles") {
    double r1 = on_resistance(p, Polarity::Nmos, 1.0);
    double r2 = on_resistance(p, Polarity::Nmos, 2.0);
    CHECK(r2 == Catch::Approx(r1 / 2).epsilon(1e-12));
  }
  SECTION("non-conducting transistor is an error") {
    p.v_thn = p.v_dd;
    REQUIRE_THROWS_AS(on_resistance(p, Polarity::Nmos, 1.0), InvariantError);
  }
  SECTION("hand evaluation to 1e-9 relative") {
    long double expect = 45e-9L / (4.5e-2L * 2.9e-2L * 90e-9L * (1.0L - 0.3L));
    double got = on_resistance(p, Polarity::Nmos, 1.0);
    CHECK(std::abs(got - static_cast<double>(expect)) <= 1e-9 * got);
  }
}

TEST_CASE("dimensional guard rails for the 45nm-class defaults") {
  TechnologyParams p;
  double cg = gate_capacitance(p, Polarity::Nmos, 1, 1.0);
  CHECK(cg > 0.01e-15);
  CHECK(cg < 100e-15);
  double r = on_resistance(p, Polarity::Nmos, 1.0);
  CHECK(r > 100.0);
  CHECK(r < 1e6);
}

TEST_CASE("technology file round-trips bit-for-bit") {
  TechnologyParams p = oracle::random_params(321);
  std::string text = store_tech_params(p);
  TechnologyParams q = load_tech_params(text);
  CHECK(store_tech_params(q) == text);
  CHECK(q.v_dd == p.v_dd);
  CHECK(q.c_ox == p.c_ox);
  CHECK(q.c_nstack == p.c_nstack);
}

TEST_CASE("technology file rejects bad input") {
  REQUIRE_THROWS_AS(load_tech_params("v_dd = banana\n"), ParseError);
  REQUIRE_THROWS_AS(load_tech_params("w_qmax = 3\n"), ParseError);
  REQUIRE_THROWS_AS(load_tech_params("v_dd = -1\n"), InvariantError);
}

TEST_CASE("variation spec round-trips") {
  VariationSpec s = VariationSpec::default_5pct();
  s.sample_count = 42;
  s.seed = 77;
  s.entries["v_dd"] = {0.01, DistributionKind::Uniform};
  std::string text = store_variation_spec(s);
  VariationSpec t = load_variation_spec(text);
  CHECK(store_variation_spec(t) == text);
  CHECK(t.sample_count == 42);
  CHECK(t.seed == 77);
  CHECK(t.entries.at("v_dd").kind == DistributionKind::Uniform);
}

TEST_CASE("sampling determinism and degenerate spread") {
  TechnologyParams nominal;
  VariationSpec spec = VariationSpec::default_5pct();
  spec.sample_count = 50;
  spec.seed = 42;

  SECTION("zero deviation keeps the nominal") {
    for (auto& [k, e] : spec.entries) e.rel_sigma = 0.0;
    auto samples = sample_variations(spec, nominal);
    for (auto& s : samples) CHECK(s.c_ox == nominal.c_ox);
  }
  SECTION("identical seed, identical stream") {
    auto a = sample_variations(spec, nominal);
    auto b = sample_variations(spec, nominal);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].c_ox == b[i].c_ox);
      CHECK(a[i].mu_n == b[i].mu_n);
      CHECK(a[i].v_thn == b[i].v_thn);
    }
  }
  SECTION("different seed, different stream") {
    auto a = sample_variations(spec, nominal);
    spec.seed = 43;
    auto b = sample_variations(spec, nominal);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i) any_diff |= a[i].c_ox != b[i].c_ox;
    CHECK(any_diff);
  }
}

TEST_CASE("gaussian sampling statistics") {
  TechnologyParams nominal;
  VariationSpec spec;
  spec.entries["c_ox"] = {0.05, DistributionKind::Gaussian};
  spec.sample_count = 10000;
  spec.seed = 7;
  auto samples = sample_variations(spec, nominal);

  double mean = 0, m2 = 0;
  for (auto& s : samples) mean += s.c_ox;
  mean /= samples.size();
  for (auto& s : samples) m2 += (s.c_ox - mean) * (s.c_ox - mean);
  double sd = std::sqrt(m2 / (samples.size() - 1));

  // empirical sd within 10% of requested; mean within 3 sigma / sqrt(N)
  CHECK(std::abs(sd - 0.05 * nominal.c_ox) < 0.1 * 0.05 * nominal.c_ox);
  CHECK(std::abs(mean - nominal.c_ox) < 3.0 * 0.05 * nominal.c_ox / std::sqrt(10000.0));

  SECTION("draws stay inside 3 sigma and positive") {
    for (auto& s : samples) {
      CHECK(s.c_ox > 0.0);
      CHECK(std::abs(s.c_ox - nominal.c_ox) <= 3.0 * 0.05 * nominal.c_ox * (1 + 1e-12));
    }
  }
}

TEST_CASE("truncated sampling never yields non-positive values") {
  TechnologyParams nominal;
  nominal.c_gso = 1e-18;  // tiny nominal, large spread
  VariationSpec spec;
  spec.entries["c_gso"] = {0.5, DistributionKind::Gaussian};
  spec.sample_count = 5000;
  spec.seed = 9;
  for (auto& s : sample_variations(spec, nominal)) CHECK(s.c_gso > 0.0);
}

TEST_CASE("uniform sampling hits the requested deviation") {
  TechnologyParams nominal;
  VariationSpec spec;
  spec.entries["mu_n"] = {0.05, DistributionKind::Uniform};
  spec.sample_count = 20000;
  spec.seed = 11;
  auto samples = sample_variations(spec, nominal);
  double mean = 0, m2 = 0;
  for (auto& s : samples) mean += s.mu_n;
  mean /= samples.size();
  for (auto& s : samples) m2 += (s.mu_n - mean) * (s.mu_n - mean);
  double sd = std::sqrt(m2 / (samples.size() - 1));
  CHECK(std::abs(sd - 0.05 * nominal.mu_n) < 0.1 * 0.05 * nominal.mu_n);
}
