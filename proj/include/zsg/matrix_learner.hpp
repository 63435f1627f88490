#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "zsg/rng.hpp"
#include "zsg/schedule.hpp"
#include "zsg/simplex.hpp"

namespace zsg {

// HighProbability runs the schedule k_eta=5/8, k_beta=3/8, k_eps=1/8 with
// implicit exploration; Expected drops beta from the estimator and uses
// k_eta=1/2, k_eps=1/6 (better rate in expectation, no high-probability
// guarantee).
enum class MatrixVariant { HighProbability, Expected };

enum class PlayerRole { X, Y };

inline ScheduleParams matrix_hp_exponents() {
  return ScheduleParams(5.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0, 1.0, ScheduleScaling::Matrix);
}

inline ScheduleParams matrix_expected_exponents() {
  return ScheduleParams(1.0 / 2.0, 3.0 / 8.0, 1.0 / 6.0, 1.0, ScheduleScaling::Matrix);
}

// Bandit matrix-game learner: one player's full state. Uncoupled by
// construction; an update consumes only the player's own action and own
// observed loss. The policy lives in the shrinking clipped simplex
// Omega_t = { x : x_a >= 1/(A t^2) }.
class MatrixLearner {
 public:
  MatrixLearner(int num_actions, MatrixVariant variant, PlayerRole role, ScheduleParams params)
      : variant_(variant),
        role_(role),
        params_(params),
        x_(MixedStrategy::uniform(num_actions)),
        log_x_(num_actions, -std::log(static_cast<double>(num_actions))) {}

  static MatrixLearner make(int num_actions, MatrixVariant variant, PlayerRole role = PlayerRole::X) {
    return MatrixLearner(num_actions, variant, role,
                         variant == MatrixVariant::HighProbability ? matrix_hp_exponents()
                                                                   : matrix_expected_exponents());
  }

  static MatrixLearner restore(MatrixVariant variant, PlayerRole role, ScheduleParams params, long t,
                               MixedStrategy x) {
    MatrixLearner l(x.size(), variant, role, params);
    if (t < 1) throw std::invalid_argument("MatrixLearner::restore: bad step counter");
    l.t_ = t;
    l.x_ = std::move(x);
    for (int a = 0; a < l.num_actions(); ++a) {
      if (!(l.x_[a] > 0.0)) throw std::invalid_argument("MatrixLearner::restore: policy must be strictly positive");
      l.log_x_[a] = std::log(l.x_[a]);
    }
    return l;
  }

  int num_actions() const { return x_.size(); }
  long step_count() const { return t_; }
  const MixedStrategy& policy() const { return x_; }
  const std::vector<double>& log_policy() const { return log_x_; }
  MatrixVariant variant() const { return variant_; }
  PlayerRole role() const { return role_; }
  const ScheduleParams& params() const { return params_; }

  double domain_floor(long t) const {
    return 1.0 / (static_cast<double>(num_actions()) * static_cast<double>(t) * static_cast<double>(t));
  }

  // Sampling does not mutate the learner; the caller owns the stream.
  int act(Rng& rng) const { return sample(x_, rng); }
  int act(int /*state*/, Rng& rng) const { return act(rng); }

  void update(int action_taken, double observed_loss) {
    if (!(observed_loss >= 0.0 && observed_loss <= 1.0))
      throw std::invalid_argument("MatrixLearner::update: loss must lie in [0,1]");
    if (action_taken < 0 || action_taken >= num_actions())
      throw std::invalid_argument("MatrixLearner::update: action out of range");
    const ScheduleValues sched = schedule_at(params_, t_);
    const double beta = variant_ == MatrixVariant::Expected ? 0.0 : sched.beta;
    const std::vector<double> g = ix_loss_estimator(action_taken, observed_loss, x_, beta, sched.epsilon);
    const ClippedSimplex domain(num_actions(), domain_floor(t_ + 1));
    x_ = omd_step(x_, g, sched.eta, domain);
    for (int a = 0; a < num_actions(); ++a) log_x_[a] = std::log(x_[a]);
    ++t_;
  }

  void observe(int /*state*/, int own_action, double own_loss, int /*next_state*/) {
    update(own_action, own_loss);
  }

 private:
  MatrixVariant variant_;
  PlayerRole role_;
  ScheduleParams params_;
  long t_ = 1;
  MixedStrategy x_;
  std::vector<double> log_x_;
};

}  // namespace zsg
