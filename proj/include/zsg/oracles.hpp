#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "zsg/games.hpp"
#include "zsg/simplex.hpp"

namespace zsg {

// Certified matrix-game solution. `certified_gap` is the exact duality gap of
// (x_star, y_star); `certified` is false only on budget exhaustion.
struct OracleSolution {
  double value = 0.0;
  MixedStrategy x_star;
  MixedStrategy y_star;
  double certified_gap = 0.0;
  bool certified = false;
};

// Minimax value and Q-function tables of a Markov game.
struct StarTables {
  std::vector<double> v_star;
  std::vector<Matrix> q_star;
};

enum class BestResponseSide { MinimizeX, MaximizeY };

namespace detail {

// Gaussian elimination with partial pivoting; empty optional on (near-)singular systems.
inline std::optional<std::vector<double>> solve_linear(Matrix a, std::vector<double> b) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n)
    throw std::invalid_argument("solve_linear: system must be square");
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (std::abs(a(piv, col)) < 1e-12) return std::nullopt;
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
      std::swap(b[piv], b[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < n; ++c) acc -= a(r, c) * x[c];
    x[r] = acc / a(r, r);
  }
  return x;
}

// Pure saddle point: entry minimal in its column (x cannot improve) and
// maximal in its row (y cannot improve).
inline std::optional<std::pair<int, int>> find_pure_saddle(const Matrix& g) {
  for (int a = 0; a < g.rows(); ++a) {
    for (int b = 0; b < g.cols(); ++b) {
      bool ok = true;
      for (int a2 = 0; a2 < g.rows() && ok; ++a2)
        if (g(a2, b) < g(a, b)) ok = false;
      for (int b2 = 0; b2 < g.cols() && ok; ++b2)
        if (g(a, b2) > g(a, b)) ok = false;
      if (ok) return std::make_pair(a, b);
    }
  }
  return std::nullopt;
}

// Equalizing strategies on a fixed support pair: x makes every column of Sy
// indifferent, y makes every row of Sx indifferent. Returns the candidate
// with its exact full-game duality gap, or nothing if the system is singular
// or leaves the simplex.
inline std::optional<OracleSolution> support_candidate(const Matrix& g,
                                                       const std::vector<int>& sx,
                                                       const std::vector<int>& sy) {
  const int m = static_cast<int>(sx.size());
  if (static_cast<int>(sy.size()) != m) return std::nullopt;
  auto solve_side = [&](bool x_side) -> std::optional<std::vector<double>> {
    Matrix sys(m + 1, m + 1, 0.0);
    std::vector<double> rhs(m + 1, 0.0);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j)
        sys(i, j) = x_side ? g(sx[j], sy[i]) : g(sx[i], sy[j]);
      sys(i, m) = -1.0;
    }
    for (int j = 0; j < m; ++j) sys(m, j) = 1.0;
    rhs[m] = 1.0;
    return solve_linear(sys, rhs);
  };
  auto xs = solve_side(true);
  auto ys = solve_side(false);
  if (!xs || !ys) return std::nullopt;
  auto expand = [](const std::vector<double>& probs, const std::vector<int>& support, int n)
      -> std::optional<std::vector<double>> {
    std::vector<double> full(n, 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      double v = probs[i];
      if (v < -1e-9) return std::nullopt;
      v = std::max(v, 0.0);
      full[support[i]] = v;
      sum += v;
    }
    if (sum <= 0.0) return std::nullopt;
    for (double& v : full) v /= sum;
    return full;
  };
  auto xf = expand(*xs, sx, g.rows());
  auto yf = expand(*ys, sy, g.cols());
  if (!xf || !yf) return std::nullopt;
  OracleSolution sol;
  sol.x_star = MixedStrategy{*xf};
  sol.y_star = MixedStrategy{*yf};
  sol.value = bilinear_value(g, sol.x_star, sol.y_star);
  sol.certified_gap = duality_gap(g, sol.x_star, sol.y_star);
  return sol;
}

inline void track_best(std::optional<OracleSolution>& best, const OracleSolution& cand) {
  if (!best || cand.certified_gap < best->certified_gap) best = cand;
}

inline std::vector<int> top_indices(const std::vector<double>& v, int m) {
  std::vector<int> idx(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] > v[b]; });
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

// Certified minimax solve of a loss matrix: the row player minimizes, the
// column player maximizes. Strategy: pure-saddle scan, then support
// enumeration on small matrices, then regret minimization (optimistic
// multiplicative weights, averaged iterates) with periodic exact-gap
// certificates and support polishing. The returned gap is always the exact
// duality gap of the returned pair, so the inner method never affects
// soundness. On budget exhaustion the best pair found is returned with
// certified = false.
inline OracleSolution solve_matrix_minimax(const Matrix& g, double tol, long budget = 4'000'000) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_matrix_minimax: tol must be positive");
  const int a1 = g.rows(), a2 = g.cols();

  if (auto saddle = detail::find_pure_saddle(g)) {
    OracleSolution sol;
    sol.x_star = MixedStrategy::pure(a1, saddle->first);
    sol.y_star = MixedStrategy::pure(a2, saddle->second);
    sol.value = g(saddle->first, saddle->second);
    sol.certified_gap = 0.0;
    sol.certified = true;
    return sol;
  }

  std::optional<OracleSolution> best;

  // Exhaustive support enumeration is exact and instant at tabular scale.
  if (a1 <= 7 && a2 <= 7) {
    for (int m = 2; m <= std::min(a1, a2); ++m) {
      for (unsigned mx = 1; mx < (1u << a1); ++mx) {
        if (std::popcount(mx) != m) continue;
        std::vector<int> sx;
        for (int i = 0; i < a1; ++i)
          if (mx & (1u << i)) sx.push_back(i);
        for (unsigned my = 1; my < (1u << a2); ++my) {
          if (std::popcount(my) != m) continue;
          std::vector<int> sy;
          for (int i = 0; i < a2; ++i)
            if (my & (1u << i)) sy.push_back(i);
          if (auto cand = detail::support_candidate(g, sx, sy)) detail::track_best(best, *cand);
          if (best && best->certified_gap <= std::min(tol, 1e-11)) {
            best->certified = true;
            return *best;
          }
        }
      }
    }
    if (best && best->certified_gap <= tol) {
      best->certified = true;
      return *best;
    }
  }

  // Optimistic multiplicative weights on both players, uniform-averaged.
  const double scale = std::max(g.max_abs(), 1e-300);
  const double eta = 0.25;
  std::vector<double> lwx(a1, 0.0), lwy(a2, 0.0);
  std::vector<double> cum_lx(a1, 0.0), last_lx(a1, 0.0);
  std::vector<double> cum_ly(a2, 0.0), last_ly(a2, 0.0);
  std::vector<double> sum_x(a1, 0.0), sum_y(a2, 0.0);
  auto softmax = [](const std::vector<double>& lw) {
    double m = *std::max_element(lw.begin(), lw.end());
    std::vector<double> p(lw.size());
    double z = 0.0;
    for (std::size_t i = 0; i < lw.size(); ++i) {
      p[i] = std::exp(lw[i] - m);
      z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
  };
  long next_check = 32;
  for (long k = 1; k <= budget; ++k) {
    for (int i = 0; i < a1; ++i) lwx[i] = -eta * (cum_lx[i] + last_lx[i]);
    for (int i = 0; i < a2; ++i) lwy[i] = -eta * (cum_ly[i] + last_ly[i]);
    std::vector<double> x = softmax(lwx);
    std::vector<double> y = softmax(lwy);
    for (int i = 0; i < a1; ++i) sum_x[i] += x[i];
    for (int i = 0; i < a2; ++i) sum_y[i] += y[i];
    for (int a = 0; a < a1; ++a) {
      double v = 0.0;
      for (int b = 0; b < a2; ++b) v += g(a, b) * y[b];
      last_lx[a] = v / scale;
      cum_lx[a] += last_lx[a];
    }
    for (int b = 0; b < a2; ++b) {
      double v = 0.0;
      for (int a = 0; a < a1; ++a) v += g(a, b) * x[a];
      last_ly[b] = -v / scale;
      cum_ly[b] += last_ly[b];
    }
    if (k == next_check || k == budget) {
      next_check = std::min(budget, next_check * 2);
      std::vector<double> xb(a1), yb(a2);
      for (int i = 0; i < a1; ++i) xb[i] = sum_x[i] / static_cast<double>(k);
      for (int i = 0; i < a2; ++i) yb[i] = sum_y[i] / static_cast<double>(k);
      OracleSolution avg;
      avg.x_star = MixedStrategy{xb};
      avg.y_star = MixedStrategy{yb};
      avg.value = bilinear_value(g, avg.x_star, avg.y_star);
      avg.certified_gap = duality_gap(g, avg.x_star, avg.y_star);
      detail::track_best(best, avg);
      for (int m = 1; m <= std::min(a1, a2); ++m) {
        auto cand = detail::support_candidate(g, detail::top_indices(xb, m), detail::top_indices(yb, m));
        if (cand) detail::track_best(best, *cand);
      }
      if (best && best->certified_gap <= tol) {
        best->certified = true;
        return *best;
      }
    }
  }
  OracleSolution out = best ? *best
                            : OracleSolution{0.0, MixedStrategy::uniform(a1), MixedStrategy::uniform(a2),
                                             duality_gap(g, MixedStrategy::uniform(a1), MixedStrategy::uniform(a2)),
                                             false};
  out.certified = out.certified_gap <= tol;
  return out;
}

inline OracleSolution solve_matrix_minimax(const MatrixGame& g, double tol, long budget = 4'000'000) {
  return solve_matrix_minimax(g.loss, tol, budget);
}

// Shapley fixed-point iteration for Q*. Each sweep replaces
// Q(s,a,b) <- G(s,a,b) + gamma * E_{s'}[val(Q(s'))] and stops once the sweep
// change is at most tol*(1-gamma)/gamma, which bounds ||Q - Q*|| by tol via
// the gamma-contraction of the Shapley operator.
inline StarTables shapley_q_star(const MarkovGame& game, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("shapley_q_star: tol must be positive");
  const int S = game.num_states, A = game.num_actions;
  const double gamma = game.discount;
  const double threshold = tol * (1.0 - gamma) / gamma;
  const double inner_tol = std::max(tol * (1.0 - gamma) / 10.0, 1e-12);

  std::vector<Matrix> q = game.loss;
  std::vector<double> val(S, 0.0);
  const long max_sweeps = 100000;
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int s = 0; s < S; ++s) {
      OracleSolution sol = solve_matrix_minimax(q[s], inner_tol);
      if (!sol.certified) throw std::runtime_error("shapley_q_star: inner matrix solver exhausted its budget");
      val[s] = sol.value;
    }
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        for (int b = 0; b < A; ++b) {
          const auto& dist = game.next_state_dist(s, a, b);
          double ev = 0.0;
          for (int sp = 0; sp < S; ++sp) ev += dist[sp] * val[sp];
          const double next = game.loss[s](a, b) + gamma * ev;
          delta = std::max(delta, std::abs(next - q[s](a, b)));
          q[s](a, b) = next;
        }
      }
    }
    if (delta <= threshold) {
      StarTables tables;
      tables.q_star = q;
      tables.v_star.resize(S);
      for (int s = 0; s < S; ++s) {
        OracleSolution sol = solve_matrix_minimax(q[s], inner_tol);
        if (!sol.certified) throw std::runtime_error("shapley_q_star: inner matrix solver exhausted its budget");
        tables.v_star[s] = sol.value;
      }
      return tables;
    }
  }
  throw std::runtime_error("shapley_q_star: did not converge within the sweep budget");
}

// Optimal value against a frozen opponent: value iteration on the induced
// MDP (the opponent's strategy is averaged into rewards and transitions).
inline std::vector<double> best_response_value(const MarkovGame& game, const StationaryPolicy& opponent,
                                               BestResponseSide side, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("best_response_value: tol must be positive");
  if (opponent.num_states() != game.num_states)
    throw std::invalid_argument("best_response_value: opponent has wrong number of states");
  const int S = game.num_states, A = game.num_actions;
  const double gamma = game.discount;
  const double threshold = tol * (1.0 - gamma) / gamma;

  // r[s][own action], p[s][own action] -> dist over s'
  std::vector<std::vector<double>> reward(S, std::vector<double>(A, 0.0));
  std::vector<std::vector<std::vector<double>>> trans(
      S, std::vector<std::vector<double>>(A, std::vector<double>(S, 0.0)));
  for (int s = 0; s < S; ++s) {
    const MixedStrategy& opp = opponent[s];
    if (opp.size() != A) throw std::invalid_argument("best_response_value: opponent action count mismatch");
    for (int own = 0; own < A; ++own) {
      for (int other = 0; other < A; ++other) {
        const double w = opp[other];
        if (w == 0.0) continue;
        const int a = side == BestResponseSide::MinimizeX ? own : other;
        const int b = side == BestResponseSide::MinimizeX ? other : own;
        reward[s][own] += w * game.loss[s](a, b);
        const auto& dist = game.next_state_dist(s, a, b);
        for (int sp = 0; sp < S; ++sp) trans[s][own][sp] += w * dist[sp];
      }
    }
  }

  std::vector<double> v(S, 0.0), vn(S, 0.0);
  const long max_sweeps = 1000000;
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      double best = side == BestResponseSide::MinimizeX ? std::numeric_limits<double>::infinity()
                                                        : -std::numeric_limits<double>::infinity();
      for (int own = 0; own < A; ++own) {
        double ev = 0.0;
        for (int sp = 0; sp < S; ++sp) ev += trans[s][own][sp] * v[sp];
        const double q = reward[s][own] + gamma * ev;
        best = side == BestResponseSide::MinimizeX ? std::min(best, q) : std::max(best, q);
      }
      vn[s] = best;
      delta = std::max(delta, std::abs(vn[s] - v[s]));
    }
    v.swap(vn);
    if (delta <= threshold) return v;
  }
  throw std::runtime_error("best_response_value: did not converge within the sweep budget");
}

// Expected discounted loss of a fixed stationary policy pair, per state.
inline std::vector<double> policy_value(const MarkovGame& game, const StationaryPolicy& x,
                                        const StationaryPolicy& y, double tol) {
  const int S = game.num_states, A = game.num_actions;
  const double gamma = game.discount;
  const double threshold = tol * (1.0 - gamma) / gamma;
  std::vector<double> reward(S, 0.0);
  std::vector<std::vector<double>> trans(S, std::vector<double>(S, 0.0));
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int b = 0; b < A; ++b) {
        const double w = x[s][a] * y[s][b];
        if (w == 0.0) continue;
        reward[s] += w * game.loss[s](a, b);
        const auto& dist = game.next_state_dist(s, a, b);
        for (int sp = 0; sp < S; ++sp) trans[s][sp] += w * dist[sp];
      }
    }
  }
  std::vector<double> v(S, 0.0), vn(S, 0.0);
  for (long sweep = 0; sweep < 1000000; ++sweep) {
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      double ev = 0.0;
      for (int sp = 0; sp < S; ++sp) ev += trans[s][sp] * v[sp];
      vn[s] = reward[s] + gamma * ev;
      delta = std::max(delta, std::abs(vn[s] - v[s]));
    }
    v.swap(vn);
    if (delta <= threshold) return v;
  }
  throw std::runtime_error("policy_value: did not converge within the sweep budget");
}

// Saddle point of the entropy-regularized game
//   f(x, y) = x' G y - eps*phi(x) + eps*phi(y)
// over dom x dom, where phi is the entropy. Termination is decided by the
// exact f-gap certificate max_y f(x,.) - min_x f(.,y); best responses under
// entropy are clipped softmaxes, so the certificate is computable in closed
// form. f-gap <= eps*tol^2/4 implies l-infinity accuracy tol by strong
// convexity.
struct RegularizedSolution {
  MixedStrategy x;
  MixedStrategy y;
  double f_gap = 0.0;
  bool converged = false;
  long iterations = 0;
};

inline RegularizedSolution solve_regularized_ne(const Matrix& g, double epsilon,
                                                const ClippedSimplex& dom, double tol,
                                                long budget = 1'000'000) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("solve_regularized_ne: epsilon must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("solve_regularized_ne: tol must be positive");
  if (g.rows() != g.cols() || g.rows() != dom.num_actions)
    throw std::invalid_argument("solve_regularized_ne: square matrix matching the domain required");
  const int A = g.rows();

  auto col_loss = [&](const MixedStrategy& y) {
    std::vector<double> v(A, 0.0);
    for (int a = 0; a < A; ++a)
      for (int b = 0; b < A; ++b) v[a] += g(a, b) * y[b];
    return v;
  };
  auto row_payoff = [&](const MixedStrategy& x) {
    std::vector<double> v(A, 0.0);
    for (int b = 0; b < A; ++b)
      for (int a = 0; a < A; ++a) v[b] += g(a, b) * x[a];
    return v;
  };
  auto clipped_softmax = [&](const std::vector<double>& score) {
    double m = *std::max_element(score.begin(), score.end());
    std::vector<double> w(A);
    for (int a = 0; a < A; ++a) w[a] = std::exp(score[a] - m);
    return MixedStrategy{clip_normalize(w, dom)};
  };
  auto best_response_x = [&](const MixedStrategy& y) {
    std::vector<double> s = col_loss(y);
    for (double& v : s) v = -v / epsilon;
    return clipped_softmax(s);
  };
  auto best_response_y = [&](const MixedStrategy& x) {
    std::vector<double> s = row_payoff(x);
    for (double& v : s) v = v / epsilon;
    return clipped_softmax(s);
  };
  auto neg_entropy = [&](const MixedStrategy& z) {
    double acc = 0.0;
    for (int a = 0; a < A; ++a)
      if (z[a] > 0.0) acc += z[a] * std::log(z[a]);
    return acc;
  };
  auto f_value = [&](const MixedStrategy& x, const MixedStrategy& y) {
    return bilinear_value(g, x, y) + epsilon * neg_entropy(x) - epsilon * neg_entropy(y);
  };
  auto certificate = [&](const MixedStrategy& x, const MixedStrategy& y) {
    return f_value(x, best_response_y(x)) - f_value(best_response_x(y), y);
  };

  const double target = epsilon * tol * tol / 4.0;
  RegularizedSolution best;
  best.x = MixedStrategy::uniform(A);
  best.y = MixedStrategy::uniform(A);
  best.f_gap = certificate(best.x, best.y);

  MixedStrategy x = best.x, y = best.y;
  long iters = 0;
  auto consider = [&](const MixedStrategy& cx, const MixedStrategy& cy) {
    const double c = std::max(certificate(cx, cy), 0.0);
    if (c < best.f_gap) {
      best.x = cx;
      best.y = cy;
      best.f_gap = c;
    }
    return c;
  };
  best.f_gap = std::max(best.f_gap, 0.0);

  // Damped best-response phase: fast when eps is not small relative to G.
  for (int it = 0; it < 300 && best.f_gap > target && iters < budget; ++it, ++iters) {
    MixedStrategy bx = best_response_x(y), by = best_response_y(x);
    for (int a = 0; a < A; ++a) {
      x.p[a] = 0.5 * (x.p[a] + bx.p[a]);
      y.p[a] = 0.5 * (y.p[a] + by.p[a]);
    }
    if (it % 10 == 9) consider(x, y);
  }

  // Simultaneous entropic mirror descent with a small constant step, in the
  // extragradient (mirror-prox) form: the full step uses the gradient taken
  // at a half-step point, which keeps the bilinear part from cycling.
  auto gradients = [&](const MixedStrategy& cx, const MixedStrategy& cy) {
    std::vector<double> gx = col_loss(cy), gy = row_payoff(cx);
    for (int a = 0; a < A; ++a) {
      gx[a] += epsilon * std::log(cx[a]);
      gy[a] = -gy[a] + epsilon * std::log(cy[a]);
    }
    return std::make_pair(std::move(gx), std::move(gy));
  };
  const double step0 = std::min(0.5, 1.0 / (2.0 * (g.max_abs() + epsilon)));
  double step = step0;
  double stale_best = best.f_gap;
  long stale_since = iters;
  while (best.f_gap > target && iters < budget) {
    ++iters;
    auto [gx1, gy1] = gradients(x, y);
    const MixedStrategy xh = omd_step(x, gx1, step, dom);
    const MixedStrategy yh = omd_step(y, gy1, step, dom);
    auto [gx2, gy2] = gradients(xh, yh);
    x = omd_step(x, gx2, step, dom);
    y = omd_step(y, gy2, step, dom);
    if (iters % 50 == 0) {
      consider(xh, yh);
      consider(x, y);
      if (best.f_gap < stale_best * 0.99) {
        stale_best = best.f_gap;
        stale_since = iters;
      } else if (iters - stale_since > 20000 && step > step0 * 1e-3) {
        step *= 0.5;
        stale_since = iters;
      }
    }
  }
  consider(x, y);
  best.converged = best.f_gap <= target;
  best.iterations = iters;
  return best;
}

}  // namespace zsg
