#include <doctest.h>

#include <cmath>

#include "wormqmc/diagnostics.hpp"
#include "wormqmc/errors.hpp"
#include "wormqmc/oracle.hpp"
#include "wormqmc/rng.hpp"

using namespace wormqmc;
using namespace wormqmc::oracle;

namespace {

XYHamiltonian random_pair(Rng& rng) {
  XYHamiltonian h;
  h.n = 2;
  const double a = 0.5 * rng.uniform();
  h.pairs = {{0, 1, a, a * (2.0 * rng.uniform() - 1.0)}};
  h.fields = {{0, 2.0 * rng.uniform() - 1.0}, {1, 2.0 * rng.uniform() - 1.0}};
  return h;
}

}  // namespace

TEST_CASE("exact Z examples") {
  XYHamiltonian zero;
  zero.n = 3;
  CHECK(exact_Z(zero, 2.7) == doctest::Approx(8.0));

  XYHamiltonian z1;
  z1.n = 1;
  z1.fields = {{0, 1.0}};
  CHECK(exact_Z(z1, 1.0) == doctest::Approx(2.0 * std::cosh(1.0)).epsilon(1e-13));
  CHECK(exact_Z(z1, 1.0) == doctest::Approx(3.0861613).epsilon(1e-7));

  XYHamiltonian xy;
  xy.n = 2;
  xy.pairs = {{0, 1, 0.5, 0.25}};
  for (double beta : {0.5, 1.0, 3.0}) {
    const double e = exact_Z(xy, beta);
    CHECK(std::abs(e - exact_Z_series(xy, beta)) <= 1e-10 * e);
  }

  XYHamiltonian xx;
  xx.n = 2;
  xx.pairs = {{0, 1, 0.5, 0.0}};
  CHECK(exact_Z(xx, 1.0) == doctest::Approx(4.0 * std::cosh(0.5)).epsilon(1e-13));
}

TEST_CASE("dense Hamiltonian is real symmetric with off-diagonal entries <= 0") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto h = random_pair(rng);
    const auto m = dense_hamiltonian(h);
    CHECK((m - m.transpose()).norm() == doctest::Approx(0.0));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) CHECK(m(i, j) <= 1e-15);
  }
}

TEST_CASE("Trotterized Z") {
  XYHamiltonian xy;
  xy.n = 2;
  xy.pairs = {{0, 1, 0.5, 0.25}};
  xy.fields = {{1, 0.4}};
  CHECK(exact_trotterized_Z(xy, 0.0, 3) == doctest::Approx(4.0));

  XYHamiltonian z1;
  z1.n = 1;
  z1.fields = {{0, 1.0}};
  CHECK(exact_trotterized_Z(z1, 0.2, 10) == doctest::Approx(2.0380970).epsilon(1e-7));
  CHECK(exact_trotterized_Z(z1, 0.2, 10) ==
        doctest::Approx(std::pow(0.99, 20) + std::pow(1.01, 20)).epsilon(1e-13));

  // converges to the exact value as L grows
  const double exact = exact_Z(xy, 1.0);
  const double e8 = std::abs(exact_trotterized_Z(xy, 1.0, 8) / exact - 1.0);
  const double e64 = std::abs(exact_trotterized_Z(xy, 1.0, 64) / exact - 1.0);
  CHECK(e64 < e8 / 4.0);
}

TEST_CASE("enumeration of a two-operator string") {
  XYHamiltonian h;
  h.n = 1;
  auto lay = WorldlineLayout::make(OperatorSchedule(h, 1.0, 1));
  const auto space = enumerate_space(lay);
  CHECK(space.c0_count() == 2);
  CHECK(space.sum_c0() == doctest::Approx(2.0));
  // C2: heads on both segments, for either line value and leg choice
  CHECK(space.size() > space.c0_count());
  double total = 0.0;
  for (double p : space.pi()) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("C0 weights sum to the Trotterized partition function") {
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    const auto h = random_pair(rng);
    const double beta = 0.5 + 1.5 * rng.uniform();
    for (int L : {1, 2}) {
      auto lay = WorldlineLayout::make(OperatorSchedule(h, beta, L));
      const auto space = enumerate_space(lay);
      const double z = exact_trotterized_Z(h, beta, L);
      CHECK(std::abs(space.sum_c0() - z) <= 1e-12 * z);
      CHECK(std::isfinite(space.sector_ratio()));
      CHECK(space.sector_ratio() <= 100.0 * lay->op_count());
      for (std::size_t k = 0; k < space.size(); ++k) {
        CHECK(space.weights()[k] > 0.0);
        CHECK(space.find(space.state(k)) == static_cast<int>(k));
      }
    }
  }
}

TEST_CASE("exact kernel residuals") {
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto h = random_pair(rng);
    auto lay = WorldlineLayout::make(OperatorSchedule(h, 1.0, 2));
    const auto space = enumerate_space(lay);
    const auto p = build_transition_matrix(space, 0.5);
    CHECK(row_sum_residual(p) <= 1e-12);
    CHECK(stationarity_residual(p, space.pi()) <= 1e-12);
    CHECK(detailed_balance_residual(p, space.pi()) <= 1e-12);
    const auto classes = communicating_classes(p);
    if (*h.c_min() > 0.0) CHECK(classes.class_count == 1);
  }
}

TEST_CASE("perturbing the C2 factor breaks detailed balance") {
  XYHamiltonian h;
  h.n = 2;
  h.pairs = {{0, 1, 0.4, 0.1}};
  h.fields = {{0, 0.2}};
  auto lay = WorldlineLayout::make(OperatorSchedule(h, 1.0, 1));
  const auto space = enumerate_space(lay);
  const auto p = build_transition_matrix(space, 0.5);
  const auto off = space.with_c2_factor(1.1 * space.c2_factor());
  CHECK(detailed_balance_residual(p, space.pi()) <= 1e-12);
  CHECK(detailed_balance_residual(p, off.pi()) > 1e-3);
  CHECK(stationarity_residual(p, off.pi()) > 1e-6);
  CHECK_THROWS_AS(spectral_gap(p, off.pi()), ValidationError);
}

TEST_CASE("spectral gap of small chains") {
  const auto flip = TransitionMatrix::from_dense({{0.5, 0.5}, {0.5, 0.5}});
  const std::vector<double> uniform = {0.5, 0.5};
  const auto g = spectral_gap(flip, uniform);
  CHECK(g.irreducible);
  CHECK(g.gap == doctest::Approx(1.0));

  const auto lazy = TransitionMatrix::from_dense({{0.75, 0.25}, {0.25, 0.75}});
  CHECK(spectral_gap(lazy, uniform).gap == doctest::Approx(0.5));

  const auto id = TransitionMatrix::from_dense({{1.0, 0.0}, {0.0, 1.0}});
  const auto r = spectral_gap(id, uniform);
  CHECK_FALSE(r.irreducible);
  CHECK(r.gap == 0.0);
  CHECK(r.classes.class_count == 2);
}

TEST_CASE("gap matches the asymptotic TV decay rate") {
  XYHamiltonian h;
  h.n = 1;
  h.fields = {{0, 0.6}};
  auto lay = WorldlineLayout::make(OperatorSchedule(h, 1.0, 1));
  const auto space = enumerate_space(lay);
  const auto p = build_transition_matrix(space, 0.5);
  const auto g = spectral_gap(p, space.pi());
  REQUIRE(g.irreducible);
  CHECK(g.gap > 0.0);
  const std::size_t horizon = 400;
  const auto tv = empirical_tv_decay(space, p, static_cast<std::size_t>(space.find(WorldlineConfig::canonical_initial(lay))), horizon);
  // fit log TV over a late window, well above round-off
  std::size_t t1 = 0;
  while (t1 + 1 < tv.size() && tv[t1 + 1] > 1e-11) ++t1;
  const std::size_t t0 = t1 / 2;
  REQUIRE(t1 > t0 + 5);
  const double rate = std::exp((std::log(tv[t1]) - std::log(tv[t0])) / static_cast<double>(t1 - t0));
  CHECK(rate == doctest::Approx(1.0 - g.gap).epsilon(0.02));
}

TEST_CASE("enumeration cap") {
  XYHamiltonian h;
  h.n = 8;
  for (int q = 0; q + 1 < 8; ++q) h.pairs.push_back({q, q + 1, 0.5, 0.1});
  auto lay = WorldlineLayout::make(OperatorSchedule(h, 1.0, 50));
  CHECK(estimate_state_count(*lay) > kDefaultStateCap);
  CHECK_THROWS_AS(enumerate_space(lay), CapExceeded);

  XYHamiltonian small;
  small.n = 2;
  small.pairs = {{0, 1, 0.5, 0.25}};
  auto lay2 = WorldlineLayout::make(OperatorSchedule(small, 1.0, 2));
  CHECK_THROWS_AS(enumerate_space(lay2, 10.0), CapExceeded);
}
