#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "zsg/games.hpp"
#include "zsg/metrics.hpp"
#include "zsg/oracles.hpp"

using namespace zsg;
using Catch::Approx;

namespace {

Matrix random_loss(std::mt19937_64& gen, int rows, int cols) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = U(gen);
  return m;
}

}  // namespace

TEST_CASE("matrix minimax closed forms") {
  SECTION("matching pennies") {
    auto sol = solve_matrix_minimax(Matrix::from_rows({{1, 0}, {0, 1}}), 1e-6);
    CHECK(sol.certified);
    CHECK(sol.certified_gap <= 1e-6);
    CHECK(sol.value == Approx(0.5).margin(1e-3));
    CHECK(sol.x_star[0] == Approx(0.5).margin(1e-3));
    CHECK(sol.y_star[0] == Approx(0.5).margin(1e-3));
  }
  SECTION("dominant row") {
    auto sol = solve_matrix_minimax(Matrix::from_rows({{0, 0}, {1, 1}}), 1e-6);
    CHECK(sol.certified);
    CHECK(sol.value == Approx(0.0).margin(1e-6));
    CHECK(sol.x_star[0] == Approx(1.0).margin(1e-6));
  }
  SECTION("rock paper scissors in [0,1] losses") {
    Matrix rps = Matrix::from_rows({{0.5, 1, 0}, {0, 0.5, 1}, {1, 0, 0.5}});
    auto sol = solve_matrix_minimax(rps, 1e-6);
    CHECK(sol.certified);
    CHECK(sol.value == Approx(0.5).margin(1e-3));
    for (int a = 0; a < 3; ++a) {
      CHECK(sol.x_star[a] == Approx(1.0 / 3).margin(1e-3));
      CHECK(sol.y_star[a] == Approx(1.0 / 3).margin(1e-3));
    }
    // the uniform pair has exactly zero gap by symmetry
    CHECK(duality_gap(rps, MixedStrategy::uniform(3), MixedStrategy::uniform(3)) == 0.0);
  }
  SECTION("rectangular game") {
    std::mt19937_64 gen(3);
    auto sol = solve_matrix_minimax(random_loss(gen, 2, 5), 1e-8);
    CHECK(sol.certified);
    CHECK(sol.certified_gap <= 1e-8);
  }
  SECTION("large matrix through the regret-minimization path") {
    std::mt19937_64 gen(17);
    auto sol = solve_matrix_minimax(random_loss(gen, 9, 12), 1e-6);
    CHECK(sol.certified);
    CHECK(sol.certified_gap <= 1e-6);
  }
}

TEST_CASE("pure saddle games are solved exactly") {
  std::mt19937_64 gen(101);
  int found = 0;
  while (found < 30) {
    Matrix g = random_loss(gen, 3, 3);
    // exhaustive scan for a pure saddle: min of its column, max of its row
    double saddle = -1.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        bool ok = true;
        for (int a2 = 0; a2 < 3; ++a2)
          if (g(a2, b) < g(a, b)) ok = false;
        for (int b2 = 0; b2 < 3; ++b2)
          if (g(a, b2) > g(a, b)) ok = false;
        if (ok) saddle = g(a, b);
      }
    }
    if (saddle < 0.0) continue;
    ++found;
    auto sol = solve_matrix_minimax(g, 1e-9);
    CHECK(sol.certified);
    CHECK(sol.value == Approx(saddle).margin(1e-9));
  }
}

TEST_CASE("minimax budget exhaustion is flagged, best pair returned") {
  std::mt19937_64 gen(19);
  Matrix g = random_loss(gen, 9, 9);  // too big for support enumeration
  auto sol = solve_matrix_minimax(g, 1e-16, 256);
  CHECK_FALSE(sol.certified);
  CHECK(sol.certified_gap >= 0.0);
  CHECK(sol.certified_gap == Approx(duality_gap(g, sol.x_star, sol.y_star)).margin(1e-15));
}

TEST_CASE("shapley fixed point") {
  Matrix mp = Matrix::from_rows({{1, 0}, {0, 1}});
  SECTION("single state: V* = val(G)/(1-gamma)") {
    auto star = shapley_q_star(MarkovGame::single_state(mp, 0.5), 1e-5);
    CHECK(star.v_star[0] == Approx(1.0).margin(1e-5));
    CHECK(star.q_star[0](0, 0) == Approx(1.5).margin(1e-5));
    CHECK(star.q_star[0](0, 1) == Approx(0.5).margin(1e-5));
  }
  SECTION("zero losses give zero tables") {
    auto star = shapley_q_star(MarkovGame::single_state(Matrix(2, 2, 0.0), 0.9), 1e-6);
    CHECK(star.v_star[0] == Approx(0.0).margin(1e-6));
    CHECK(star.q_star[0](1, 1) == Approx(0.0).margin(1e-6));
  }
  SECTION("absorbing loss-1 state is the geometric series") {
    const double gamma = 0.8;
    std::vector<Matrix> loss = {Matrix(2, 2, 0.0), Matrix(2, 2, 1.0)};
    std::vector<std::vector<std::vector<double>>> p(
        2, std::vector<std::vector<double>>(4, std::vector<double>{0.0, 1.0}));
    MarkovGame game(2, 2, loss, p, gamma);
    auto star = shapley_q_star(game, 1e-5);
    CHECK(star.v_star[1] == Approx(1.0 / (1.0 - gamma)).margin(1e-4));
    CHECK(star.v_star[0] == Approx(gamma / (1.0 - gamma)).margin(1e-4));
  }
  SECTION("V* is the minimax value of Q* at every state") {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Matrix> loss = {random_loss(gen, 2, 2), random_loss(gen, 2, 2)};
    std::vector<std::vector<std::vector<double>>> p(2);
    for (int s = 0; s < 2; ++s)
      for (int ab = 0; ab < 4; ++ab) {
        const double q = 0.1 + 0.8 * U(gen);
        p[s].push_back({q, 1.0 - q});
      }
    MarkovGame game(2, 2, loss, p, 0.75);
    auto star = shapley_q_star(game, 1e-6);
    for (int s = 0; s < 2; ++s) {
      CHECK(star.v_star[s] == Approx(solve_matrix_minimax(star.q_star[s], 1e-9).value).margin(1e-6));
      CHECK(star.v_star[s] >= 0.0);
      CHECK(star.v_star[s] <= 1.0 / (1.0 - game.discount));
    }
  }
}

TEST_CASE("shapley contraction certificate: tol vs tol/10") {
  std::mt19937_64 gen(43);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Matrix> loss = {random_loss(gen, 2, 2), random_loss(gen, 2, 2)};
  std::vector<std::vector<std::vector<double>>> p(2);
  for (int s = 0; s < 2; ++s)
    for (int ab = 0; ab < 4; ++ab) {
      const double q = 0.1 + 0.8 * U(gen);
      p[s].push_back({q, 1.0 - q});
    }
  MarkovGame game(2, 2, loss, p, 0.9);
  const double tol = 1e-3;
  auto coarse = shapley_q_star(game, tol);
  auto fine = shapley_q_star(game, tol / 10.0);
  double diff = 0.0;
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        diff = std::max(diff, std::abs(coarse.q_star[s](a, b) - fine.q_star[s](a, b)));
  CHECK(diff <= 1.1 * tol);
}

TEST_CASE("best response value") {
  Matrix mp = Matrix::from_rows({{1, 0}, {0, 1}});
  MarkovGame game = MarkovGame::single_state(mp, 0.5);
  SECTION("uniform opponent in matching pennies pins the value at 1") {
    StationaryPolicy uni = StationaryPolicy::uniform(1, 2);
    auto v = best_response_value(game, uni, BestResponseSide::MinimizeX, 1e-6);
    CHECK(v[0] == Approx(1.0).margin(1e-5));
    auto w = best_response_value(game, uni, BestResponseSide::MaximizeY, 1e-6);
    CHECK(w[0] == Approx(1.0).margin(1e-5));
  }
  SECTION("zero-loss game") {
    MarkovGame zero = MarkovGame::single_state(Matrix(3, 3, 0.0), 0.75);
    auto v = best_response_value(zero, StationaryPolicy::uniform(1, 3), BestResponseSide::MinimizeX, 1e-8);
    CHECK(v[0] == Approx(0.0).margin(1e-7));
  }
  SECTION("the solved equilibrium is unexploitable") {
    auto star = shapley_q_star(game, 1e-7);
    auto ne = solve_matrix_minimax(star.q_star[0], 1e-9);
    StationaryPolicy ystar;
    ystar.per_state.push_back(ne.y_star);
    auto v = best_response_value(game, ystar, BestResponseSide::MinimizeX, 1e-6);
    CHECK(v[0] == Approx(star.v_star[0]).margin(1e-4));
  }
}

TEST_CASE("policy pair evaluation") {
  Matrix mp = Matrix::from_rows({{1, 0}, {0, 1}});
  MarkovGame game = MarkovGame::single_state(mp, 0.5);
  StationaryPolicy uni = StationaryPolicy::uniform(1, 2);
  auto v = policy_value(game, uni, uni, 1e-8);
  CHECK(v[0] == Approx(1.0).margin(1e-7));  // 0.5 per step, horizon 2
}

TEST_CASE("regularized equilibrium solver") {
  Matrix mp = Matrix::from_rows({{1, 0}, {0, 1}});
  ClippedSimplex tiny(2, 1e-9);
  SECTION("zero matrix: pure entropy saddle is uniform") {
    auto sol = solve_regularized_ne(Matrix(3, 3, 0.0), 0.7, ClippedSimplex(3, 1e-6), 1e-8);
    CHECK(sol.converged);
    for (int a = 0; a < 3; ++a) {
      CHECK(sol.x[a] == Approx(1.0 / 3).margin(1e-8));
      CHECK(sol.y[a] == Approx(1.0 / 3).margin(1e-8));
    }
  }
  SECTION("matching pennies is symmetric at any epsilon") {
    auto sol = solve_regularized_ne(mp, 1.0, tiny, 1e-7);
    CHECK(sol.converged);
    CHECK(sol.x[0] == Approx(0.5).margin(1e-6));
    CHECK(sol.y[0] == Approx(0.5).margin(1e-6));
  }
  SECTION("small epsilon approaches the unregularized equilibrium") {
    auto sol = solve_regularized_ne(mp, 1e-3, tiny, 1e-4);
    CHECK(sol.converged);
    CHECK(sol.x[0] == Approx(0.5).margin(1e-2));
    CHECK(sol.y[0] == Approx(0.5).margin(1e-2));
  }
  SECTION("clipped-softmax fixed-point residual on a random game") {
    std::mt19937_64 gen(29);
    Matrix g = random_loss(gen, 3, 3);
    const double eps = 0.05;
    ClippedSimplex dom(3, 1e-4);
    auto sol = solve_regularized_ne(g, eps, dom, 1e-7);
    REQUIRE(sol.converged);
    // recompute the clipped-softmax best response independently
    std::vector<double> score(3, 0.0);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) score[a] -= g(a, b) * sol.y[b] / eps;
    const double m = *std::max_element(score.begin(), score.end());
    std::vector<double> w(3);
    for (int a = 0; a < 3; ++a) w[a] = std::exp(score[a] - m);
    auto br = clip_normalize(w, dom);
    for (int a = 0; a < 3; ++a)
      if (sol.x[a] > dom.floor * 1.000001) CHECK(std::abs(sol.x[a] - br[a]) <= 1e-6);
  }
  SECTION("nonsymmetric random games converge across epsilon scales") {
    std::mt19937_64 gen(123);
    for (double eps : {1.0, 0.1, 0.01}) {
      Matrix g = random_loss(gen, 3, 3);
      auto sol = solve_regularized_ne(g, eps, ClippedSimplex(3, 1e-8), 1e-5);
      CHECK(sol.converged);
      CHECK(sol.f_gap <= eps * 1e-10 / 4.0);
    }
  }
}
