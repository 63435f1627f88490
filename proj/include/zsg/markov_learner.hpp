#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "zsg/rng.hpp"
#include "zsg/schedule.hpp"
#include "zsg/simplex.hpp"

namespace zsg {

// Exponent family of the irreducible-game convergence guarantee:
// k_alpha = 9/(9+e), k_eps = 1/(9+e), k_beta = 3/(9+e), k_eta = 5/(9+e).
inline ScheduleParams default_exponents_irreducible(double varepsilon) {
  if (!(varepsilon > 0.0))
    throw std::invalid_argument("default_exponents_irreducible: varepsilon must be positive");
  const double d = 9.0 + varepsilon;
  return ScheduleParams(5.0 / d, 3.0 / d, 1.0 / d, 9.0 / d, ScheduleScaling::Markov);
}

// Per-state bandit learner for irreducible Markov games. Keeps a policy,
// visit count and value estimate for every state; a step touches exactly one
// state. Schedules are indexed by the per-state visit count, not the global
// clock. V starts at 1/(2(1-gamma)) and stays in [0, 1/(1-gamma)].
class IrreducibleLearner {
 public:
  IrreducibleLearner(int num_states, int num_actions, double gamma, ScheduleParams params)
      : S_(num_states), A_(num_actions), gamma_(gamma), params_(params) {
    if (num_states < 1 || num_actions < 1)
      throw std::invalid_argument("IrreducibleLearner: invalid dimensions");
    if (!(gamma >= 0.5 && gamma < 1.0))
      throw std::invalid_argument("IrreducibleLearner: discount must lie in [1/2, 1)");
    if (params.scaling != ScheduleScaling::Markov)
      throw std::invalid_argument("IrreducibleLearner: Markov schedule scaling required");
    policy_.assign(S_, MixedStrategy::uniform(A_));
    visits_.assign(S_, 0);
    value_.assign(S_, 0.5 / (1.0 - gamma_));
  }

  static IrreducibleLearner make(int num_states, int num_actions, double gamma,
                                 double varepsilon = 1.0) {
    return IrreducibleLearner(num_states, num_actions, gamma, default_exponents_irreducible(varepsilon));
  }

  static IrreducibleLearner restore(int num_states, int num_actions, double gamma,
                                    ScheduleParams params, std::vector<MixedStrategy> policy,
                                    std::vector<long> visits, std::vector<double> value) {
    IrreducibleLearner l(num_states, num_actions, gamma, params);
    if (static_cast<int>(policy.size()) != num_states || static_cast<int>(visits.size()) != num_states ||
        static_cast<int>(value.size()) != num_states)
      throw std::invalid_argument("IrreducibleLearner::restore: table size mismatch");
    l.policy_ = std::move(policy);
    l.visits_ = std::move(visits);
    l.value_ = std::move(value);
    return l;
  }

  int num_states() const { return S_; }
  int num_actions() const { return A_; }
  double discount() const { return gamma_; }
  const ScheduleParams& params() const { return params_; }
  const MixedStrategy& policy(int s) const { return policy_[s]; }
  long visits(int s) const { return visits_[s]; }
  double value(int s) const { return value_[s]; }
  const std::vector<double>& values() const { return value_; }

  StationaryPolicy stationary_policy() const {
    StationaryPolicy pi;
    pi.per_state = policy_;
    return pi;
  }

  int act(int s, Rng& rng) const {
    check_state(s);
    return sample(policy_[s], rng);
  }

  void observe(int s, int own_action, double own_loss, int s_next) {
    check_state(s);
    check_state(s_next);
    if (!(own_loss >= 0.0 && own_loss <= 1.0))
      throw std::invalid_argument("IrreducibleLearner: loss must lie in [0,1]");
    const long tau = visits_[s] + 1;
    const ScheduleValues sched = schedule_at(params_, tau, gamma_);
    const double composite = own_loss + gamma_ * value_[s_next];  // value table before this update
    const std::vector<double> g =
        ix_loss_estimator(own_action, composite, policy_[s], sched.beta, sched.epsilon);
    const double floor = 1.0 / (static_cast<double>(A_) * static_cast<double>(tau + 1) *
                                static_cast<double>(tau + 1));
    policy_[s] = omd_step(policy_[s], g, sched.eta, ClippedSimplex(A_, floor));
    value_[s] = (1.0 - sched.alpha) * value_[s] + sched.alpha * composite;
    visits_[s] = tau;
  }

 private:
  void check_state(int s) const {
    if (s < 0 || s >= S_) throw std::invalid_argument("IrreducibleLearner: state out of range");
  }

  int S_;
  int A_;
  double gamma_;
  ScheduleParams params_;
  std::vector<MixedStrategy> policy_;
  std::vector<long> visits_;
  std::vector<double> value_;
};

// Fixed constants of the general-game learner. The bonus is
//   bns_tau = kappa * A * ln^2(S*A*T/delta) * (beta + alpha_tau/eta) / (1-gamma)^2
// with alpha_tau = (H+1)/(H+tau), H = ln(T)/(1-gamma).
struct GeneralConstants {
  double eta;
  double beta;
  double epsilon;
  double kappa = 0.01;
  double delta = 0.05;
};

inline GeneralConstants general_practical_constants(double kappa = 0.01, double delta = 0.05) {
  return GeneralConstants{0.01, 0.05, 0.05, kappa, delta};
}

// Constants shaped like the theoretical tuning, with all Theta-constants set
// to 1; u is the target gap level.
inline GeneralConstants general_theoretical_constants(int num_states, int num_actions, double gamma,
                                                      long horizon, double u, double delta = 0.05,
                                                      double kappa = 0.01) {
  if (!(u > 0.0)) throw std::invalid_argument("general_theoretical_constants: u must be positive");
  const double logterm =
      std::log(static_cast<double>(num_states) * num_actions * static_cast<double>(horizon) / delta);
  const double g1 = 1.0 - gamma;
  GeneralConstants c;
  c.epsilon = u * g1 / logterm;
  c.beta = std::pow(u, 3) * std::pow(g1, 6) / (num_actions * std::pow(logterm, 6));
  c.eta = std::pow(u, 5) * std::pow(g1, 9) /
          (static_cast<double>(num_actions) * num_actions * std::pow(logterm, 11));
  c.kappa = kappa;
  c.delta = delta;
  return c;
}

// Horizon-T learner for general Markov games: optimism bonus, pessimistic
// value pair (v_tilde unclamped, v_low = max(v_tilde, 0)), fixed constants,
// and policy domain floored at 1/(A*T). Both self-play players run this same
// code on their own losses; for the mirror player the optimistic view of the
// primal value is the affine image 1/(1-gamma) - v_low, which equals
// min(Ṽ, 1/(1-gamma)) for the mirrored running value.
class GeneralLearner {
 public:
  GeneralLearner(int num_states, int num_actions, double gamma, long horizon, GeneralConstants c)
      : S_(num_states), A_(num_actions), gamma_(gamma), horizon_(horizon), c_(c) {
    if (num_states < 1 || num_actions < 1)
      throw std::invalid_argument("GeneralLearner: invalid dimensions");
    if (!(gamma >= 0.5 && gamma < 1.0))
      throw std::invalid_argument("GeneralLearner: discount must lie in [1/2, 1)");
    if (horizon < 1) throw std::invalid_argument("GeneralLearner: horizon must be >= 1");
    if (!(c.eta > 0.0) || !(c.beta >= 0.0) || !(c.epsilon >= 0.0) || !(c.kappa >= 0.0))
      throw std::invalid_argument("GeneralLearner: invalid constants");
    if (!(c.delta > 0.0 && c.delta < 1.0))
      throw std::invalid_argument("GeneralLearner: delta must lie in (0,1)");
    H_ = std::log(static_cast<double>(horizon)) / (1.0 - gamma_);
    const double logterm = std::log(static_cast<double>(S_) * A_ * static_cast<double>(horizon_) / c_.delta);
    bonus_scale_ = c_.kappa * A_ * logterm * logterm / ((1.0 - gamma_) * (1.0 - gamma_));
    policy_.assign(S_, MixedStrategy::uniform(A_));
    visits_.assign(S_, 0);
    v_tilde_.assign(S_, 0.0);
    v_low_.assign(S_, 0.0);
  }

  int num_states() const { return S_; }
  int num_actions() const { return A_; }
  double discount() const { return gamma_; }
  long horizon() const { return horizon_; }
  long steps_taken() const { return steps_; }
  const GeneralConstants& constants() const { return c_; }
  const MixedStrategy& policy(int s) const { return policy_[s]; }
  long visits(int s) const { return visits_[s]; }
  double tilde_value(int s) const { return v_tilde_[s]; }
  double lower_value(int s) const { return v_low_[s]; }

  // Optimistic primal view when this learner plays the mirrored side.
  double mirror_upper_value(int s) const { return 1.0 / (1.0 - gamma_) - v_low_[s]; }

  double alpha_weight(long tau) const { return (H_ + 1.0) / (H_ + static_cast<double>(tau)); }
  double bonus(long tau) const { return bonus_scale_ * (c_.beta + alpha_weight(tau) / c_.eta); }
  double domain_floor() const { return 1.0 / (static_cast<double>(A_) * static_cast<double>(horizon_)); }

  StationaryPolicy stationary_policy() const {
    StationaryPolicy pi;
    pi.per_state = policy_;
    return pi;
  }

  static GeneralLearner restore(int num_states, int num_actions, double gamma, long horizon,
                                GeneralConstants c, std::vector<MixedStrategy> policy,
                                std::vector<long> visits, std::vector<double> v_tilde, long steps) {
    GeneralLearner l(num_states, num_actions, gamma, horizon, c);
    if (static_cast<int>(policy.size()) != num_states || static_cast<int>(visits.size()) != num_states ||
        static_cast<int>(v_tilde.size()) != num_states)
      throw std::invalid_argument("GeneralLearner::restore: table size mismatch");
    l.policy_ = std::move(policy);
    l.visits_ = std::move(visits);
    l.v_tilde_ = std::move(v_tilde);
    for (int s = 0; s < num_states; ++s) l.v_low_[s] = std::max(l.v_tilde_[s], 0.0);
    l.steps_ = steps;
    return l;
  }

  int act(int s, Rng& rng) const {
    check_state(s);
    return sample(policy_[s], rng);
  }

  void observe(int s, int own_action, double own_loss, int s_next) {
    check_state(s);
    check_state(s_next);
    if (steps_ >= horizon_)
      throw std::out_of_range("GeneralLearner: step beyond the configured horizon");
    if (!(own_loss >= 0.0 && own_loss <= 1.0))
      throw std::invalid_argument("GeneralLearner: loss must lie in [0,1]");
    const long tau = visits_[s] + 1;
    const double composite = own_loss + gamma_ * v_low_[s_next];
    const std::vector<double> g =
        ix_loss_estimator(own_action, composite, policy_[s], c_.beta, c_.epsilon);
    policy_[s] = omd_step(policy_[s], g, c_.eta, ClippedSimplex(A_, domain_floor()));
    const double alpha = alpha_weight(tau);
    v_tilde_[s] = (1.0 - alpha) * v_tilde_[s] + alpha * (composite - bonus(tau));
    v_low_[s] = std::max(v_tilde_[s], 0.0);
    visits_[s] = tau;
    ++steps_;
  }

 private:
  void check_state(int s) const {
    if (s < 0 || s >= S_) throw std::invalid_argument("GeneralLearner: state out of range");
  }

  int S_;
  int A_;
  double gamma_;
  long horizon_;
  GeneralConstants c_;
  double H_ = 0.0;
  double bonus_scale_ = 0.0;
  long steps_ = 0;
  std::vector<MixedStrategy> policy_;
  std::vector<long> visits_;
  std::vector<double> v_tilde_;
  std::vector<double> v_low_;
};

}  // namespace zsg
