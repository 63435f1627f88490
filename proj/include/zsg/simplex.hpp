#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "zsg/games.hpp"
#include "zsg/rng.hpp"

namespace zsg {

// Probability vector over an action set.
struct MixedStrategy {
  std::vector<double> p;

  static MixedStrategy uniform(int n) {
    if (n < 1) throw std::invalid_argument("MixedStrategy: empty action set");
    return MixedStrategy{std::vector<double>(n, 1.0 / n)};
  }

  static MixedStrategy pure(int n, int a) {
    if (a < 0 || a >= n) throw std::invalid_argument("MixedStrategy: action out of range");
    std::vector<double> v(n, 0.0);
    v[a] = 1.0;
    return MixedStrategy{std::move(v)};
  }

  // Validating constructor for externally supplied vectors.
  static MixedStrategy of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("MixedStrategy: empty vector");
    double sum = 0.0;
    for (double x : v) {
      if (!(x >= 0.0)) throw std::invalid_argument("MixedStrategy: negative probability");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("MixedStrategy: probabilities must sum to 1");
    return MixedStrategy{std::move(v)};
  }

  int size() const { return static_cast<int>(p.size()); }
  double operator[](int a) const { return p[a]; }
};

// Per-state strategies of one player.
struct StationaryPolicy {
  std::vector<MixedStrategy> per_state;

  static StationaryPolicy uniform(int num_states, int num_actions) {
    StationaryPolicy pi;
    pi.per_state.assign(num_states, MixedStrategy::uniform(num_actions));
    return pi;
  }

  int num_states() const { return static_cast<int>(per_state.size()); }
  const MixedStrategy& operator[](int s) const { return per_state[s]; }
};

// Simplex with every coordinate bounded below by `floor`. Nonempty iff
// floor <= 1/num_actions.
struct ClippedSimplex {
  int num_actions;
  double floor;

  ClippedSimplex(int a, double l) : num_actions(a), floor(l) {
    if (a < 1) throw std::invalid_argument("ClippedSimplex: empty action set");
    if (!(l > 0.0) || l > 1.0 / a + 1e-15)
      throw std::invalid_argument("ClippedSimplex: floor must lie in (0, 1/A]");
  }

  bool contains(const MixedStrategy& x, double slack = 1e-12) const {
    if (x.size() != num_actions) return false;
    double sum = 0.0;
    for (double v : x.p) {
      if (v < floor - slack) return false;
      sum += v;
    }
    return std::abs(sum - 1.0) <= slack;
  }
};

inline int sample(const MixedStrategy& x, Rng& rng) { return rng.categorical(x.p); }

// KL(p, q) = sum_a p_a ln(p_a / q_a), with the 0 ln 0 = 0 convention.
inline double kl_divergence(const MixedStrategy& p, const MixedStrategy& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: dimension mismatch");
  double acc = 0.0;
  for (int a = 0; a < p.size(); ++a) {
    if (p[a] <= 0.0) continue;
    if (q[a] <= 0.0) throw std::domain_error("kl_divergence: q has zero mass where p is positive");
    acc += p[a] * std::log(p[a] / q[a]);
  }
  return std::max(acc, 0.0);
}

namespace detail {

// Solves sum_a max(l, w_a / Z) = 1 by bisection on Z. Fallback route for the
// exact waterfill below; also used as an independent check in tests.
inline std::vector<double> clip_normalize_bisect(const std::vector<double>& w,
                                                 const ClippedSimplex& dom) {
  const int n = static_cast<int>(w.size());
  const double l = dom.floor;
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  double lo = total;  // sum(w/Z) alone reaches 1 at Z = total, so Z* >= total
  double hi = total / (1.0 - (n - 1) * l);
  auto mass = [&](double z) {
    double s = 0.0;
    for (double v : w) s += std::max(l, v / z);
    return s;
  };
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mass(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  double z = 0.5 * (lo + hi);
  std::vector<double> out(n);
  for (int a = 0; a < n; ++a) out[a] = std::max(l, w[a] / z);
  return out;
}

}  // namespace detail

// KL projection of a nonnegative weight vector onto a clipped simplex. The
// solution has the closed form x_a = max(l, w_a / Z) where Z solves the
// piecewise-linear normalization equation; Z is found exactly by sorting w
// descending and testing each clip count (ties broken by index ascending).
inline std::vector<double> clip_normalize(const std::vector<double>& w, const ClippedSimplex& dom) {
  const int n = static_cast<int>(w.size());
  if (n != dom.num_actions) throw std::invalid_argument("clip_normalize: dimension mismatch");
  const double l = dom.floor;
  double wmax = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::domain_error("clip_normalize: weights must be finite and nonnegative");
    wmax = std::max(wmax, v);
  }
  if (wmax <= 0.0) throw std::domain_error("clip_normalize: all weights are zero");
  if (n == 1) return {1.0};
  if (l >= 1.0 / n) return std::vector<double>(n, 1.0 / n);  // floor pins every coordinate

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return w[a] > w[b]; });

  // k = number of unclipped coordinates (the k largest weights).
  double prefix = 0.0;
  std::vector<double> prefix_sums(n);
  for (int i = 0; i < n; ++i) {
    prefix += w[order[i]];
    prefix_sums[i] = prefix;
  }
  for (int k = n; k >= 1; --k) {
    const double denom = 1.0 - (n - k) * l;
    const double sk = prefix_sums[k - 1];
    if (sk <= 0.0) continue;
    const double z = sk / denom;
    if (w[order[k - 1]] >= l * z) {
      std::vector<double> out(n);
      for (int a = 0; a < n; ++a) out[a] = std::max(l, w[a] / z);
      return out;
    }
  }
  return detail::clip_normalize_bisect(w, dom);
}

// One step of entropic mirror descent constrained to a clipped simplex:
//   argmin_{x in dom} { x.g + KL(x, x0) / eta }.
// The multiplicative update is done in log space (subtract the max before
// exponentiating) so large eta*g cannot overflow.
inline MixedStrategy omd_step(const MixedStrategy& x, const std::vector<double>& g, double eta,
                              const ClippedSimplex& dom) {
  const int n = x.size();
  if (static_cast<int>(g.size()) != n || dom.num_actions != n)
    throw std::invalid_argument("omd_step: dimension mismatch");
  if (!(eta > 0.0)) throw std::invalid_argument("omd_step: eta must be positive");
  std::vector<double> lw(n);
  double m = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a) {
    if (!(x[a] > 0.0)) throw std::domain_error("omd_step: x must be strictly positive");
    if (!std::isfinite(g[a])) throw std::domain_error("omd_step: non-finite gradient entry");
    lw[a] = std::log(x[a]) - eta * g[a];
    m = std::max(m, lw[a]);
  }
  std::vector<double> w(n);
  for (int a = 0; a < n; ++a) w[a] = std::exp(lw[a] - m);
  return MixedStrategy{clip_normalize(w, dom)};
}

// Implicit-exploration loss estimate with entropy gradient:
//   g_a = 1[a = action] * sigma / (x_a + beta) + epsilon * ln x_a.
inline std::vector<double> ix_loss_estimator(int action_taken, double observed_loss,
                                             const MixedStrategy& x, double beta, double epsilon) {
  const int n = x.size();
  if (action_taken < 0 || action_taken >= n)
    throw std::invalid_argument("ix_loss_estimator: action out of range");
  if (!(beta >= 0.0) || !(epsilon >= 0.0))
    throw std::invalid_argument("ix_loss_estimator: beta and epsilon must be nonnegative");
  if (!std::isfinite(observed_loss) || observed_loss < 0.0)
    throw std::invalid_argument("ix_loss_estimator: loss must be finite and nonnegative");
  std::vector<double> g(n, 0.0);
  for (int a = 0; a < n; ++a) {
    if (!(x[a] > 0.0)) throw std::domain_error("ix_loss_estimator: x must be strictly positive");
    if (epsilon > 0.0) g[a] = epsilon * std::log(x[a]);
  }
  g[action_taken] += observed_loss / (x[action_taken] + beta);
  return g;
}

// Exact duality gap of (x, y) on a loss matrix: best pure responses suffice
// because the objective is bilinear.
inline double duality_gap(const Matrix& g, const MixedStrategy& x, const MixedStrategy& y) {
  if (x.size() != g.rows() || y.size() != g.cols())
    throw std::invalid_argument("duality_gap: dimension mismatch");
  double best_col = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < g.cols(); ++b) {
    double v = 0.0;
    for (int a = 0; a < g.rows(); ++a) v += x[a] * g(a, b);
    best_col = std::max(best_col, v);
  }
  double best_row = std::numeric_limits<double>::infinity();
  for (int a = 0; a < g.rows(); ++a) {
    double v = 0.0;
    for (int b = 0; b < g.cols(); ++b) v += g(a, b) * y[b];
    best_row = std::min(best_row, v);
  }
  return best_col - best_row;
}

inline double bilinear_value(const Matrix& g, const MixedStrategy& x, const MixedStrategy& y) {
  double v = 0.0;
  for (int a = 0; a < g.rows(); ++a)
    for (int b = 0; b < g.cols(); ++b) v += x[a] * g(a, b) * y[b];
  return v;
}

}  // namespace zsg
