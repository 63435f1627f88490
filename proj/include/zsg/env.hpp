#pragma once

#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "zsg/games.hpp"
#include "zsg/rng.hpp"
#include "zsg/simplex.hpp"

namespace zsg {

enum class NoiseModel { Bernoulli, Noiseless };

// One protocol round. Each player is handed only its own side of this:
// x sees (s, a, sigma, s_next), y sees (s, b, 1 - sigma, s_next).
struct StepOutcome {
  int s = 0;
  int a = 0;
  int b = 0;
  double sigma = 0.0;
  double x_observation = 0.0;
  double y_observation = 0.0;
  int s_next = 0;
  bool reset = false;
};

// Mediator of the uncoupled interaction protocol. Draws the stochastic loss
// and the state transition; in episodic mode each step redraws the state
// from rho with probability reset_prob instead of following the kernel.
class Env {
 public:
  Env(MatrixGame game, NoiseModel noise, std::uint64_t seed)
      : game_(std::move(game)), noise_(noise), rng_(seed), rho_(MixedStrategy::uniform(1)) {}

  Env(MarkovGame game, NoiseModel noise, std::uint64_t seed, double reset_prob = 0.0,
      MixedStrategy rho = MixedStrategy::uniform(1))
      : game_(std::move(game)), noise_(noise), rng_(seed), reset_prob_(reset_prob), rho_(std::move(rho)) {
    const MarkovGame& g = std::get<MarkovGame>(game_);
    if (rho_.size() == 1 && g.num_states > 1) rho_ = MixedStrategy::uniform(g.num_states);
    if (rho_.size() != g.num_states) throw std::invalid_argument("Env: rho must cover all states");
    if (!(reset_prob_ >= 0.0 && reset_prob_ < 1.0))
      throw std::invalid_argument("Env: reset probability must lie in [0,1)");
    state_ = rng_.categorical(rho_.p);
  }

  static Env episodic(MarkovGame game, NoiseModel noise, std::uint64_t seed,
                      MixedStrategy rho = MixedStrategy::uniform(1)) {
    const double p = 1.0 - game.discount;
    return Env(std::move(game), noise, seed, p, std::move(rho));
  }

  bool is_markov() const { return std::holds_alternative<MarkovGame>(game_); }
  const MarkovGame& markov() const { return std::get<MarkovGame>(game_); }
  const MatrixGame& matrix() const { return std::get<MatrixGame>(game_); }
  int state() const { return state_; }
  long t() const { return t_; }
  double reset_prob() const { return reset_prob_; }
  const MixedStrategy& rho() const { return rho_; }
  double discount() const { return is_markov() ? markov().discount : 0.0; }
  int num_states() const { return is_markov() ? markov().num_states : 1; }
  int num_actions_x() const { return is_markov() ? markov().num_actions : matrix().num_actions_x(); }
  int num_actions_y() const { return is_markov() ? markov().num_actions : matrix().num_actions_y(); }

  StepOutcome step(int a, int b) {
    if (a < 0 || a >= num_actions_x() || b < 0 || b >= num_actions_y())
      throw std::invalid_argument("Env::step: action out of range");
    StepOutcome out;
    out.s = state_;
    out.a = a;
    out.b = b;
    const double mean_loss = is_markov() ? markov().loss[state_](a, b) : matrix().loss(a, b);
    out.sigma = noise_ == NoiseModel::Bernoulli ? (rng_.bernoulli(mean_loss) ? 1.0 : 0.0) : mean_loss;
    out.x_observation = out.sigma;
    out.y_observation = 1.0 - out.sigma;
    if (is_markov()) {
      if (reset_prob_ > 0.0 && rng_.uniform01() < reset_prob_) {
        out.reset = true;
        out.s_next = rng_.categorical(rho_.p);
      } else {
        out.s_next = rng_.categorical(markov().next_state_dist(state_, a, b));
      }
    } else {
      out.s_next = 0;
    }
    state_ = out.s_next;
    ++t_;
    return out;
  }

 private:
  std::variant<MatrixGame, MarkovGame> game_;
  NoiseModel noise_;
  Rng rng_;
  double reset_prob_ = 0.0;
  MixedStrategy rho_;
  int state_ = 0;
  long t_ = 0;
};

// Full step record of one run.
struct Trace {
  bool episodic = false;
  double discount = 0.0;
  std::vector<int> states;
  std::vector<int> actions_x;
  std::vector<int> actions_y;
  std::vector<double> sigmas;
  std::vector<std::uint8_t> resets;

  long size() const { return static_cast<long>(sigmas.size()); }

  double mean_sigma() const {
    if (sigmas.empty()) return 0.0;
    double acc = 0.0;
    for (double v : sigmas) acc += v;
    return acc / static_cast<double>(sigmas.size());
  }

  bool operator==(const Trace& other) const = default;
};

// Plays a frozen stationary policy; used for rationality experiments.
struct FixedAgent {
  StationaryPolicy pi;
  int act(int s, Rng& rng) const { return sample(pi[s], rng); }
  void observe(int, int, double, int) {}
};

// Drives T rounds of the protocol. The hook fires after the environment step
// and before the learners update, so at step t it observes the policies that
// actually acted at round t. Agents never see each other's actions or
// observations.
template <class AgentX, class AgentY, class StepHook>
Trace run_selfplay(Env& env, AgentX& agent_x, Rng& rng_x, AgentY& agent_y, Rng& rng_y, long T,
                   StepHook&& hook) {
  if (T < 0) throw std::invalid_argument("run_selfplay: T must be nonnegative");
  Trace trace;
  trace.episodic = env.reset_prob() > 0.0;
  trace.discount = env.discount();
  trace.states.reserve(T);
  trace.actions_x.reserve(T);
  trace.actions_y.reserve(T);
  trace.sigmas.reserve(T);
  trace.resets.reserve(T);
  for (long t = 1; t <= T; ++t) {
    const int s = env.state();
    const int a = agent_x.act(s, rng_x);
    const int b = agent_y.act(s, rng_y);
    const StepOutcome out = env.step(a, b);
    hook(t, out);
    agent_x.observe(s, a, out.x_observation, out.s_next);
    agent_y.observe(s, b, out.y_observation, out.s_next);
    trace.states.push_back(out.s);
    trace.actions_x.push_back(out.a);
    trace.actions_y.push_back(out.b);
    trace.sigmas.push_back(out.sigma);
    trace.resets.push_back(out.reset ? 1 : 0);
  }
  return trace;
}

template <class AgentX, class AgentY>
Trace run_selfplay(Env& env, AgentX& agent_x, Rng& rng_x, AgentY& agent_y, Rng& rng_y, long T) {
  return run_selfplay(env, agent_x, rng_x, agent_y, rng_y, T, [](long, const StepOutcome&) {});
}

}  // namespace zsg
