#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "zsg/games.hpp"
#include "zsg/rng.hpp"
#include "zsg/schedule.hpp"
#include "zsg/simplex.hpp"
#include "support/grid_oracle.hpp"

using namespace zsg;
using Catch::Approx;

namespace {

std::vector<double> random_interior_point(std::mt19937_64& gen, int n, double min_mass = 1e-3) {
  std::uniform_real_distribution<double> U(min_mass, 1.0);
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& v : p) {
    v = U(gen);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

TEST_CASE("game validation") {
  CHECK_THROWS_AS(MatrixGame(Matrix::from_rows({{1.5, 0.0}})), std::invalid_argument);
  CHECK_THROWS_AS(MatrixGame(Matrix::from_rows({{-0.1}})), std::invalid_argument);
  CHECK_NOTHROW(MatrixGame(Matrix::from_rows({{0.0, 1.0}, {0.5, 0.25}})));

  Matrix mp = Matrix::from_rows({{1, 0}, {0, 1}});
  CHECK_NOTHROW(MarkovGame::single_state(mp, 0.5));
  CHECK_THROWS_AS(MarkovGame::single_state(mp, 0.3), std::invalid_argument);   // gamma < 1/2
  CHECK_THROWS_AS(MarkovGame::single_state(mp, 1.0), std::invalid_argument);

  // mismatching transition sums
  std::vector<std::vector<std::vector<double>>> bad_p(
      1, std::vector<std::vector<double>>(4, std::vector<double>{0.9}));
  CHECK_THROWS_AS(MarkovGame(1, 2, {mp}, bad_p, 0.5), std::invalid_argument);
}

TEST_CASE("mixed strategy validation") {
  CHECK_THROWS_AS(MixedStrategy::of({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(MixedStrategy::of({1.2, -0.2}), std::invalid_argument);
  CHECK(MixedStrategy::uniform(4)[2] == Approx(0.25));
  CHECK(MixedStrategy::pure(3, 1)[1] == 1.0);
  CHECK_THROWS_AS(ClippedSimplex(2, 0.6), std::invalid_argument);  // empty set
  CHECK_NOTHROW(ClippedSimplex(2, 0.5));
}

TEST_CASE("kl divergence") {
  MixedStrategy u2 = MixedStrategy::uniform(2);
  CHECK(kl_divergence(u2, u2) == 0.0);
  CHECK(kl_divergence(MixedStrategy::of({1.0, 0.0}), u2) == Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(kl_divergence(MixedStrategy::of({0.25, 0.75}), MixedStrategy::of({0.75, 0.25})) ==
        Approx(0.5493061443340548).epsilon(1e-12));
  // q zero where p positive is a domain error; p zero contributes nothing
  CHECK_THROWS_AS(kl_divergence(u2, MixedStrategy::of({1.0, 0.0})), std::domain_error);
  CHECK(kl_divergence(MixedStrategy::of({0.0, 1.0}), MixedStrategy::of({0.0, 1.0})) == 0.0);
}

TEST_CASE("schedule values") {
  ScheduleParams hp(5.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0, 0.9);
  SECTION("t=1 gives all ones") {
    ScheduleValues v = schedule_at(hp, 1);
    CHECK(v.eta == 1.0);
    CHECK(v.beta == 1.0);
    CHECK(v.epsilon == 1.0);
    CHECK(v.alpha == 1.0);
  }
  SECTION("t=256 powers of two") {
    ScheduleValues v = schedule_at(hp, 256);
    CHECK(v.eta == Approx(1.0 / 32.0).epsilon(1e-14));
    CHECK(v.beta == Approx(1.0 / 8.0).epsilon(1e-14));
    CHECK(v.epsilon == Approx(0.5).epsilon(1e-14));
  }
  SECTION("markov scaling") {
    ScheduleParams p(0.5, 0.3, 0.1, 0.9, ScheduleScaling::Markov);
    // 1024^-0.1 = 2^-1 exactly, so epsilon = 2 * 0.5 = 1
    CHECK(schedule_at(p, 1024, 0.5).epsilon == Approx(1.0).epsilon(1e-12));
    CHECK(schedule_at(p, 1000, 0.5).epsilon == Approx(1.0023744672545446).epsilon(1e-12));
    CHECK(schedule_at(p, 1024, 0.5).eta == Approx(0.5 * std::pow(1024.0, -0.5)).epsilon(1e-14));
    CHECK(schedule_at(p, 7, 0.5).beta == Approx(std::pow(7.0, -0.3)).epsilon(1e-14));
  }
  SECTION("strict monotone decrease and positivity") {
    ScheduleParams p(0.7, 0.2, 0.05, 0.99, ScheduleScaling::Markov);
    ScheduleValues prev = schedule_at(p, 1, 0.75);
    for (long t = 2; t < 2000; t += 7) {
      ScheduleValues v = schedule_at(p, t, 0.75);
      CHECK(v.eta > 0.0);
      CHECK(v.eta < prev.eta);
      CHECK(v.beta < prev.beta);
      CHECK(v.epsilon < prev.epsilon);
      CHECK(v.alpha < prev.alpha);
      prev = v;
    }
  }
  CHECK_THROWS_AS(schedule_at(hp, 0), std::invalid_argument);
  CHECK_THROWS_AS(ScheduleParams(0.0, 0.5, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("ix loss estimator") {
  MixedStrategy x = MixedStrategy::uniform(2);
  SECTION("plain importance weight") {
    auto g = ix_loss_estimator(0, 1.0, x, 0.5, 0.0);
    CHECK(g[0] == Approx(1.0));
    CHECK(g[1] == 0.0);
  }
  SECTION("with entropy term") {
    auto g = ix_loss_estimator(0, 1.0, x, 0.5, 1.0);
    CHECK(g[0] == Approx(0.3068528194400547).epsilon(1e-12));
    CHECK(g[1] == Approx(-0.6931471805599453).epsilon(1e-12));
  }
  SECTION("zero loss, zero entropy gives zeros") {
    auto g = ix_loss_estimator(1, 0.0, x, 0.25, 0.0);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
  }
}

TEST_CASE("ix estimator downward bias (monte carlo)") {
  // E[g_a] = x_a l_a / (x_a + beta) <= l_a; check the empirical mean against
  // the true loss vector with a 3-sigma allowance.
  MixedStrategy x = MixedStrategy::of({0.5, 0.3, 0.2});
  const std::vector<double> true_loss = {0.2, 0.5, 0.8};
  const double beta = 0.1;
  const int draws = 1'000'000;
  Rng rng(20240817);
  std::vector<double> sum(3, 0.0), sumsq(3, 0.0);
  for (int i = 0; i < draws; ++i) {
    const int a = sample(x, rng);
    const double sigma = rng.bernoulli(true_loss[a]) ? 1.0 : 0.0;
    const auto g = ix_loss_estimator(a, sigma, x, beta, 0.0);
    for (int k = 0; k < 3; ++k) {
      sum[k] += g[k];
      sumsq[k] += g[k] * g[k];
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double mean = sum[k] / draws;
    const double var = sumsq[k] / draws - mean * mean;
    const double se = std::sqrt(var / draws);
    CHECK(mean <= true_loss[k] + 3.0 * se);
  }
}

TEST_CASE("omd step closed forms") {
  SECTION("zero gradient is the identity") {
    MixedStrategy x = MixedStrategy::uniform(2);
    auto out = omd_step(x, {0.0, 0.0}, 1.0, ClippedSimplex(2, 0.1));
    CHECK(out[0] == Approx(0.5).margin(1e-15));
    CHECK(out[1] == Approx(0.5).margin(1e-15));
  }
  SECTION("clip binds: weights (0.9, 0.1) onto floor 0.25") {
    MixedStrategy x = MixedStrategy::of({0.9, 0.1});
    auto out = omd_step(x, {0.0, 0.0}, 1.0, ClippedSimplex(2, 0.25));
    CHECK(out[0] == Approx(0.75).margin(1e-12));
    CHECK(out[1] == Approx(0.25).margin(1e-12));
  }
  SECTION("three-action example matches a full 1e-4 grid sweep") {
    MixedStrategy x = MixedStrategy::uniform(3);
    std::vector<double> g = {1.0, 0.0, 0.0};
    const double l = 1.0 / 30.0;
    auto out = omd_step(x, g, 1.0, ClippedSimplex(3, l));
    auto grid = zsg::testing::grid_minimize(x.p, g, 1.0, l, 1e-4);
    for (int a = 0; a < 3; ++a) CHECK(std::abs(out[a] - grid.point[a]) < 1e-4);
  }
  SECTION("extreme gradients stay finite in log space") {
    MixedStrategy x = MixedStrategy::uniform(3);
    auto out = omd_step(x, {1000.0, 0.0, -500.0}, 1.0, ClippedSimplex(3, 1e-6));
    CHECK(out[0] == Approx(1e-6));  // crushed coordinate pinned at the floor
    CHECK(out[2] > 0.999);
    CHECK(out[0] + out[1] + out[2] == Approx(1.0).margin(1e-12));
  }
  SECTION("precondition failures") {
    MixedStrategy x = MixedStrategy::uniform(2);
    CHECK_THROWS_AS(omd_step(x, {0.0, 0.0}, -1.0, ClippedSimplex(2, 0.1)), std::invalid_argument);
    CHECK_THROWS_AS(omd_step(MixedStrategy{{1.0, 0.0}}, {0.0, 0.0}, 1.0, ClippedSimplex(2, 0.1)),
                    std::domain_error);
    CHECK_THROWS_AS(omd_step(x, {std::nan(""), 0.0}, 1.0, ClippedSimplex(2, 0.1)), std::domain_error);
  }
}

TEST_CASE("omd step randomized: containment, optimality, first-order condition") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> G(-8.0, 8.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 3);  // 2..4
    const auto x0 = random_interior_point(gen, n);
    std::vector<double> g(n);
    for (double& v : g) v = G(gen);
    double eta = std::exp(std::log(1e-2) + U(gen) * std::log(2.0 / 1e-2));
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    if (eta * gmax > 50.0) eta = 50.0 / gmax;
    const double floor = (0.05 + 0.9 * U(gen)) / n;
    ClippedSimplex dom(n, floor);

    MixedStrategy out = omd_step(MixedStrategy{x0}, g, eta, dom);

    // containment
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
      CHECK(out[a] >= floor - 1e-12);
      sum += out[a];
    }
    CHECK(sum == Approx(1.0).margin(1e-12));

    // exact first-order condition: ln(out_a / w_a) equal on non-clipped coords
    std::vector<double> ratio;
    for (int a = 0; a < n; ++a) {
      const double w = x0[a] * std::exp(-eta * g[a]);
      if (out[a] > floor * (1.0 + 1e-9)) ratio.push_back(std::log(out[a] / w));
    }
    for (std::size_t i = 1; i < ratio.size(); ++i) CHECK(std::abs(ratio[i] - ratio[0]) <= 1e-9);
  }
}

TEST_CASE("omd step objective never worse than a grid oracle") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> G(-4.0, 4.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto run_case = [&](int n, double coarse, double fine) {
    const auto x0 = random_interior_point(gen, n);
    std::vector<double> g(n);
    for (double& v : g) v = G(gen);
    const double eta = 0.05 + U(gen);
    const double floor = (0.05 + 0.8 * U(gen)) / n;
    MixedStrategy out = omd_step(MixedStrategy{x0}, g, eta, ClippedSimplex(n, floor));
    auto grid = zsg::testing::grid_minimize_refined(x0, g, eta, floor, coarse, fine);
    const double ours = zsg::testing::omd_objective(out.p, x0, g, eta);
    CHECK(ours <= grid.objective + 1e-6);
  };
  for (int i = 0; i < 40; ++i) run_case(2, 1e-3, 1e-6);
  for (int i = 0; i < 10; ++i) run_case(3, 1e-3, 1e-5);
  for (int i = 0; i < 2; ++i) run_case(4, 2.5e-3, 1e-3);
}

TEST_CASE("clip_normalize agrees with bisection, including ties") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 5);
    std::vector<double> w(n);
    for (double& v : w) v = U(gen) < 0.15 ? 0.0 : U(gen);
    if (trial % 3 == 0 && n >= 2) w[1] = w[0];  // force ties
    double wmax = 0.0;
    for (double v : w) wmax = std::max(wmax, v);
    if (wmax == 0.0) w[0] = 0.5;
    const double floor = (0.02 + 0.9 * U(gen)) / n;
    ClippedSimplex dom(n, floor);
    auto exact = clip_normalize(w, dom);
    auto bisect = detail::clip_normalize_bisect(w, dom);
    for (int a = 0; a < n; ++a) CHECK(std::abs(exact[a] - bisect[a]) <= 1e-9);
    double sum = 0.0;
    for (int a = 0; a < n; ++a) sum += exact[a];
    CHECK(sum == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("duality gap primitive") {
  Matrix mp = Matrix::from_rows({{1, 0}, {0, 1}});
  MixedStrategy u = MixedStrategy::uniform(2);
  CHECK(duality_gap(mp, u, u) == 0.0);
  CHECK(duality_gap(mp, MixedStrategy::pure(2, 0), MixedStrategy::pure(2, 0)) == 1.0);
}

TEST_CASE("rng determinism and categorical sampling") {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform01() == b.uniform01());
  Rng c(1234);
  std::vector<int> counts(3, 0);
  MixedStrategy x = MixedStrategy::of({0.2, 0.5, 0.3});
  for (int i = 0; i < 100000; ++i) ++counts[sample(x, c)];
  CHECK(std::abs(counts[0] / 1e5 - 0.2) < 0.005);
  CHECK(std::abs(counts[1] / 1e5 - 0.5) < 0.005);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
}
