#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace zsg {

// Small dense row-major matrix. Enough for tabular games; no linear algebra
// library needed at this scale.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("Matrix: dimensions must be >= 1");
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows[0].empty())
      throw std::invalid_argument("Matrix: empty row data");
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size())
        throw std::invalid_argument("Matrix: ragged row data");
      for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    }
    return m;
  }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Zero-sum matrix game with loss matrix in [0,1]. Entry (a,b) is the loss of
// the row player when the row player picks a and the column player picks b;
// the column player's own loss is 1 - entry. Action counts may differ.
struct MatrixGame {
  Matrix loss;

  explicit MatrixGame(Matrix l) : loss(std::move(l)) { validate(); }

  int num_actions_x() const { return loss.rows(); }
  int num_actions_y() const { return loss.cols(); }

  void validate() const {
    for (double v : loss.data()) {
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("MatrixGame: loss entries must lie in [0,1]");
    }
  }
};

// Discounted two-player zero-sum Markov game. One shared action count for
// both players, per-state loss matrices in [0,1], per-(s,a,b) transition
// distributions over states, discount in [1/2, 1).
struct MarkovGame {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Matrix> loss;                          // [s] -> A x A
  std::vector<std::vector<std::vector<double>>> transition;  // [s][a*A+b] -> dist over s'
  double discount = 0.0;

  MarkovGame(int s, int a, std::vector<Matrix> l,
             std::vector<std::vector<std::vector<double>>> p, double gamma)
      : num_states(s), num_actions(a), loss(std::move(l)), transition(std::move(p)), discount(gamma) {
    validate();
  }

  const std::vector<double>& next_state_dist(int s, int a, int b) const {
    return transition[s][static_cast<std::size_t>(a) * num_actions + b];
  }

  double horizon_scale() const { return 1.0 / (1.0 - discount); }

  // Wraps a square loss matrix as a single-state game with a self loop.
  static MarkovGame single_state(const Matrix& g, double gamma) {
    if (g.rows() != g.cols())
      throw std::invalid_argument("MarkovGame::single_state: loss matrix must be square");
    std::vector<std::vector<std::vector<double>>> p(
        1, std::vector<std::vector<double>>(static_cast<std::size_t>(g.rows()) * g.cols(),
                                            std::vector<double>{1.0}));
    return MarkovGame(1, g.rows(), {g}, std::move(p), gamma);
  }

  void validate() const {
    if (num_states < 1) throw std::invalid_argument("MarkovGame: num_states must be >= 1");
    if (num_actions < 1) throw std::invalid_argument("MarkovGame: num_actions must be >= 1");
    if (!(discount >= 0.5 && discount < 1.0))
      throw std::invalid_argument("MarkovGame: discount must lie in [1/2, 1)");
    if (static_cast<int>(loss.size()) != num_states)
      throw std::invalid_argument("MarkovGame: loss table size mismatch");
    if (static_cast<int>(transition.size()) != num_states)
      throw std::invalid_argument("MarkovGame: transition table size mismatch");
    for (int s = 0; s < num_states; ++s) {
      if (loss[s].rows() != num_actions || loss[s].cols() != num_actions)
        throw std::invalid_argument("MarkovGame: loss matrix dimension mismatch at state " + std::to_string(s));
      for (double v : loss[s].data()) {
        if (!(v >= 0.0 && v <= 1.0))
          throw std::invalid_argument("MarkovGame: loss entries must lie in [0,1]");
      }
      if (transition[s].size() != static_cast<std::size_t>(num_actions) * num_actions)
        throw std::invalid_argument("MarkovGame: transition row count mismatch at state " + std::to_string(s));
      for (const auto& dist : transition[s]) {
        if (static_cast<int>(dist.size()) != num_states)
          throw std::invalid_argument("MarkovGame: transition vector length mismatch");
        double sum = 0.0;
        for (double v : dist) {
          if (v < 0.0) throw std::invalid_argument("MarkovGame: negative transition probability");
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
          throw std::invalid_argument("MarkovGame: transition probabilities must sum to 1");
      }
    }
  }
};

}  // namespace zsg
