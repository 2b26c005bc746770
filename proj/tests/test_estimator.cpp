#include <doctest.h>

#include <cmath>

#include "wormqmc/errors.hpp"
#include "wormqmc/estimator.hpp"
#include "wormqmc/oracle.hpp"

using namespace wormqmc;

namespace {

XYHamiltonian field(double d) {
  XYHamiltonian h;
  h.n = 1;
  h.fields = {{0, d}};
  return h;
}

XYHamiltonian xy2() {
  XYHamiltonian h;
  h.n = 2;
  h.pairs = {{0, 1, 0.5, 0.25}};
  h.fields = {{0, 0.3}, {1, -0.7}};
  return h;
}

EstimatorParams fixed(int L, std::uint64_t S, std::uint64_t seed = 1) {
  EstimatorParams p;
  p.L = L;
  p.S = S;
  p.seed = seed;
  p.allow_small_beta = true;
  return p;
}

}  // namespace

TEST_CASE("ratio observable examples") {
  auto lay = WorldlineLayout::make(OperatorSchedule(field(1.0), 0.2, 10));
  const auto zeros = WorldlineConfig::canonical_initial(lay);
  CHECK(ratio_observable(zeros, 0.0, 0.2, 10) == doctest::Approx(0.8179069).epsilon(1e-7));
  CHECK(ratio_observable(WorldlineConfig::constant(lay, 1), 0.0, 0.2, 10) ==
        doctest::Approx(std::pow(1.01, 20)).epsilon(1e-13));
  CHECK(ratio_observable(zeros, 0.7, 0.7, 10) == 1.0);
  CHECK_THROWS_AS(ratio_observable(zeros, 0.0, 0.2, 9), ValidationError);

  // d = 0: every kink contributes beta_hi / beta_lo, diagonal elements 1
  XYHamiltonian xx;
  xx.n = 2;
  xx.pairs = {{0, 1, 0.5, 0.0}};
  auto lay2 = WorldlineLayout::make(OperatorSchedule(xx, 1.0, 1));
  const auto kinks = WorldlineConfig::from_leg_bits(lay2, {0b1100, 0b11, 0b11, 0b11, 0b11, 0b0011});
  REQUIRE(kinks.kink_count() == 2);
  CHECK(ratio_observable(kinks, 1.0, 1.5, 1) == doctest::Approx(1.5 * 1.5).epsilon(1e-14));
  CHECK(ratio_observable(WorldlineConfig::canonical_initial(lay2), 1.0, 1.5, 1) == 1.0);
  CHECK_THROWS_AS(ratio_observable(kinks, 0.0, 1.5, 1), EstimatorError);
}

TEST_CASE("sample budget") {
  const auto b = sample_budget(1.0, 0.1, 0.75, 0.1);
  CHECK(b.k == 1);
  CHECK(b.S == 2397);
  CHECK(sample_budget(0.0, 0.1, 0.75, 0.1).k == 1);
  CHECK(sample_budget(3.0, 0.1, 0.0, 0.1).k == 1);
  CHECK(sample_budget(2.0, 0.1, 1.5, 0.1).k == 3);
  CHECK(sample_budget(2.0, 0.1, 1.0, 0.1).k == 2);
  // S scales as eps^-2
  const auto s1 = sample_budget(2.0, 0.2, 1.5, 0.1, 1000.0).S;
  const auto s2 = sample_budget(2.0, 0.1, 1.5, 0.1, 1000.0).S;
  CHECK(static_cast<double>(s2) / static_cast<double>(s1) == doctest::Approx(4.0).epsilon(1e-4));
  CHECK_THROWS_AS(sample_budget(1.0, 0.0, 1.0, 0.1), ValidationError);
  CHECK_THROWS_AS(sample_budget(1.0, 0.1, 1.0, 1.0), ValidationError);
}

TEST_CASE("beta grid") {
  const auto g = beta_grid(2.0, 1.5);
  REQUIRE(g.size() == 4);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(1.0 / 1.5));
  CHECK(g[3] == 2.0);
  const auto z = beta_grid(3.0, 0.0);
  REQUIRE(z.size() == 2);
  CHECK(z[1] == 3.0);
  const auto exact = beta_grid(2.0, 1.0);
  CHECK(exact.size() == 3);
}

TEST_CASE("direct step matches the constant-line average") {
  const auto h = field(1.0);
  const auto p = fixed(10, 200000, 3);
  const auto sched = plan(h, 0.2, 0.1, p);
  const auto r = estimate_ratio(h, 0.0, 0.2, sched, p, 0);
  CHECK(r.method == StepMethod::Direct);
  const double expected = (std::pow(0.99, 20) + std::pow(1.01, 20)) / 2.0;
  CHECK(expected == doctest::Approx(oracle::exact_trotterized_Z(h, 0.2, 10) / 2.0).epsilon(1e-13));
  CHECK(std::abs(r.mean - expected) <= 3.0 * r.se);
  CHECK(r.se > 0.0);
}

TEST_CASE("zero Hamiltonian gives exact ratios and Z = 2^n") {
  XYHamiltonian h;
  h.n = 3;
  const auto res = estimate_partition_function(h, 2.0, 0.1, fixed(2, 100));
  CHECK(res.log_Z == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(res.log_Z_se == 0.0);
  for (const auto& s : res.steps) CHECK(s.mean == 1.0);
}

TEST_CASE("chain steps agree with the exact ratio") {
  const auto h = xy2();
  const int L = 4;
  SUBCASE("forward") {
    const auto p = fixed(L, 10000, 11);
    const auto sched = plan(h, 1.6, 0.1, p);
    const auto r = estimate_ratio(h, 1.0, 1.6, sched, p, 1);
    CHECK(r.method == StepMethod::Forward);
    const double exact = oracle::exact_trotterized_Z(h, 1.6, L) / oracle::exact_trotterized_Z(h, 1.0, L);
    INFO("mean " << r.mean << " se " << r.se << " exact " << exact);
    CHECK(r.samples == 10000);
    CHECK(std::abs(r.mean - exact) <= 3.0 * r.se);
  }
  SUBCASE("reverse") {
    const auto p = fixed(L, 10000, 12);
    const auto sched = plan(h, 0.5, 0.1, p);
    const auto r = estimate_ratio(h, 0.0, 0.5, sched, p, 0);
    CHECK(r.method == StepMethod::Reverse);
    const double exact = oracle::exact_trotterized_Z(h, 0.5, L) / 4.0;
    INFO("mean " << r.mean << " se " << r.se << " exact " << exact);
    CHECK(std::abs(r.mean - exact) <= 3.0 * r.se);
  }
}

TEST_CASE("estimates are reproducible for a fixed seed") {
  const auto h = xy2();
  auto p = fixed(2, 500, 99);
  p.chains = 2;
  const auto a = estimate_partition_function(h, 1.0, 0.2, p);
  const auto b = estimate_partition_function(h, 1.0, 0.2, p);
  CHECK(a.log_Z == b.log_Z);
  CHECK(a.log_Z_se == b.log_Z_se);
  p.seed = 100;
  const auto c = estimate_partition_function(h, 1.0, 0.2, p);
  CHECK(a.log_Z != c.log_Z);
}

TEST_CASE("estimator argument checks") {
  const auto h = xy2();
  EstimatorParams p;
  CHECK_THROWS_AS(estimate_partition_function(h, 0.5, 0.1, p), ValidationError);
  CHECK_THROWS_AS(estimate_partition_function(h, 1.0, 0.0, p), ValidationError);
  p.chains = 0;
  CHECK_THROWS_AS(plan(h, 1.0, 0.1, p), ValidationError);
}

TEST_CASE("patience exhaustion is an estimator error") {
  const auto h = xy2();
  auto p = fixed(2, 100, 5);
  p.patience = 1;
  p.laziness = 0.0;
  p.thinning = 1;
  p.burnin = 0;
  const auto sched = plan(h, 2.0, 0.1, p);
  CHECK_THROWS_AS(estimate_ratio(h, 1.0, 2.0, sched, p, 1), EstimatorError);
}

TEST_CASE("plan defaults") {
  const auto h = xy2();
  EstimatorParams p;
  const auto s = plan(h, 1.0, 0.1, p);
  CHECK(s.L == choose_trotter_number(h, 1.0, 0.1, p.c_L));
  CHECK(s.M == 2 * s.L * 3);
  CHECK(s.thinning == static_cast<std::uint64_t>(s.M));
  CHECK(s.burnin == 20 * static_cast<std::uint64_t>(s.M));
  CHECK(s.k == 2);
  CHECK(s.S == sample_budget(1.0, 0.075, 1.75, 0.1).S);
}
