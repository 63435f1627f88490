#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zsg/env.hpp"
#include "zsg/games.hpp"
#include "zsg/oracles.hpp"
#include "zsg/simplex.hpp"

namespace zsg {

// One emitted convergence measurement.
struct GapReport {
  long t = 0;
  std::string metric;
  double value = 0.0;
  int state = -1;  // -1 when the metric is not state-indexed
};

// Gap(G, x, y) = max_y' x'Gy' - min_x' x''Gy; exact, pure best responses.
inline double matrix_duality_gap(const MatrixGame& game, const MixedStrategy& x,
                                 const MixedStrategy& y) {
  return duality_gap(game.loss, x, y);
}

// max_s ( max_y V^s_{x,y} - min_x' V^s_{x',y} ), each side via best-response
// value iteration at accuracy tol, so the result is within 2*tol of exact.
inline double markov_lastiterate_gap(const MarkovGame& game, const StationaryPolicy& x,
                                     const StationaryPolicy& y, double tol) {
  const std::vector<double> vmax = best_response_value(game, x, BestResponseSide::MaximizeY, tol);
  const std::vector<double> vmin = best_response_value(game, y, BestResponseSide::MinimizeX, tol);
  double gap = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < game.num_states; ++s) gap = std::max(gap, vmax[s] - vmin[s]);
  return gap;
}

// Per-step summand of the path convergence measure: the duality gap of the
// strategies used at state s measured against the optimal Q-matrix. The
// harness averages these over visited states.
inline double path_gap(const StarTables& star, int s, const MixedStrategy& x_s,
                       const MixedStrategy& y_s) {
  if (s < 0 || s >= static_cast<int>(star.q_star.size()))
    throw std::invalid_argument("path_gap: state out of range");
  return duality_gap(star.q_star[s], x_s, y_s);
}

// max_s |V^s - V*^s|.
inline double value_error(const std::vector<double>& v_table, const StarTables& star) {
  if (v_table.size() != star.v_star.size())
    throw std::invalid_argument("value_error: shape mismatch");
  double err = 0.0;
  for (std::size_t s = 0; s < v_table.size(); ++s)
    err = std::max(err, std::abs(v_table[s] - star.v_star[s]));
  return err;
}

// |empirical mean per-step loss - (1-gamma) E_rho[V*]| for an episodic run.
inline double episodic_payoff_check(const Trace& trace, const MixedStrategy& rho,
                                    const StarTables& star, double gamma) {
  if (!trace.episodic) throw std::invalid_argument("episodic_payoff_check: trace is not episodic");
  if (rho.size() != static_cast<int>(star.v_star.size()))
    throw std::invalid_argument("episodic_payoff_check: rho does not match the star tables");
  double expected = 0.0;
  for (int s = 0; s < rho.size(); ++s) expected += rho[s] * star.v_star[s];
  expected *= 1.0 - gamma;
  return std::abs(trace.mean_sigma() - expected);
}

// Exploitability of the x policy against a frozen opponent:
// x'G y_fixed - min_x'' x''G y_fixed.
inline double rationality_gap_matrix(const MatrixGame& game, const MixedStrategy& x,
                                     const MixedStrategy& y_fixed) {
  double played = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < game.num_actions_x(); ++a) {
    double row = 0.0;
    for (int b = 0; b < game.num_actions_y(); ++b) row += game.loss(a, b) * y_fixed[b];
    played += x[a] * row;
    best = std::min(best, row);
  }
  return played - best;
}

// Markov analogue: max_s ( V^s_{x,y_fixed} - min_x' V^s_{x',y_fixed} ).
inline double rationality_gap_markov(const MarkovGame& game, const StationaryPolicy& x,
                                     const StationaryPolicy& y_fixed, double tol) {
  const std::vector<double> pair_value = policy_value(game, x, y_fixed, tol);
  const std::vector<double> br = best_response_value(game, y_fixed, BestResponseSide::MinimizeX, tol);
  double gap = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < game.num_states; ++s) gap = std::max(gap, pair_value[s] - br[s]);
  return gap;
}

}  // namespace zsg
