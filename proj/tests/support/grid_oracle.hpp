#pragma once

// Test-only brute-force minimizer for the mirror-descent objective
//   obj(p) = p.g + KL(p, x) / eta
// over the clipped simplex { p : p_a >= l, sum p = 1 }. Enumerates a grid on
// the simplex; entirely independent of the waterfill projection it checks.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace zsg::testing {

inline double omd_objective(const std::vector<double>& p, const std::vector<double>& x,
                            const std::vector<double>& g, double eta) {
  double acc = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    acc += p[a] * g[a];
    if (p[a] > 0.0) acc += p[a] * std::log(p[a] / x[a]) / eta;
  }
  return acc;
}

struct GridResult {
  std::vector<double> point;
  double objective = std::numeric_limits<double>::infinity();
};

namespace detail {

struct Box {
  std::vector<double> lo, hi;  // per free coordinate (all but the last)
};

// Sweeps coordinates p_1..p_{A-1} over [lo_i, hi_i] at the given step; the
// last coordinate takes the remainder and must clear the floor.
inline GridResult sweep(const std::vector<double>& x, const std::vector<double>& g, double eta,
                        double floor, double step, const Box& box) {
  const int n = static_cast<int>(x.size());
  GridResult best;
  std::vector<double> p(n, 0.0);
  auto recurse = [&](auto&& self, int coord, double used) -> void {
    if (coord == n - 1) {
      const double rest = 1.0 - used;
      if (rest < floor - 1e-15) return;
      p[coord] = rest;
      const double obj = omd_objective(p, x, g, eta);
      if (obj < best.objective) {
        best.objective = obj;
        best.point = p;
      }
      return;
    }
    const long lo_i = static_cast<long>(std::ceil((box.lo[coord] - 1e-15) / step));
    const long hi_i = static_cast<long>(std::floor((box.hi[coord] + 1e-15) / step));
    if (static_cast<double>(lo_i) * step > box.lo[coord] + 1e-15 &&
        used + box.lo[coord] <= 1.0 - floor * (n - 1 - coord) + 1e-15) {
      p[coord] = box.lo[coord];  // exact lower boundary (clip floor) between grid points
      self(self, coord + 1, used + box.lo[coord]);
    }
    for (long i = lo_i; i <= hi_i; ++i) {
      const double v = static_cast<double>(i) * step;
      if (used + v > 1.0 - floor * (n - 1 - coord) + 1e-15) break;
      p[coord] = v;
      self(self, coord + 1, used + v);
    }
  };
  recurse(recurse, 0, 0.0);
  if (best.point.empty()) throw std::runtime_error("grid_oracle: empty feasible grid");
  return best;
}

}  // namespace detail

// Single full sweep of the clipped simplex at the given step.
inline GridResult grid_minimize(const std::vector<double>& x, const std::vector<double>& g,
                                double eta, double floor, double step) {
  const int n = static_cast<int>(x.size());
  detail::Box box;
  box.lo.assign(n - 1, floor);
  box.hi.assign(n - 1, 1.0 - floor * (n - 1));
  return detail::sweep(x, g, eta, floor, step, box);
}

// Coarse full sweep followed by a fine sweep of a window around the coarse
// minimizer. The objective is strictly convex, so the window localization is
// sound once the window spans a couple of coarse cells.
inline GridResult grid_minimize_refined(const std::vector<double>& x, const std::vector<double>& g,
                                        double eta, double floor, double coarse_step,
                                        double fine_step) {
  const int n = static_cast<int>(x.size());
  GridResult coarse = grid_minimize(x, g, eta, floor, coarse_step);
  detail::Box box;
  box.lo.resize(n - 1);
  box.hi.resize(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    box.lo[i] = std::max(floor, coarse.point[i] - 2.0 * coarse_step);
    box.hi[i] = std::min(1.0 - floor * (n - 1), coarse.point[i] + 2.0 * coarse_step);
  }
  GridResult fine = detail::sweep(x, g, eta, floor, fine_step, box);
  return fine.objective < coarse.objective ? fine : coarse;
}

}  // namespace zsg::testing
