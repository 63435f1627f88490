#pragma once

#include <cmath>
#include <stdexcept>

namespace zsg {

enum class ScheduleScaling { Matrix, Markov };

// Polynomial decay exponents for the learning rate eta, the implicit
// exploration amount beta, the entropy regularization epsilon and the value
// averaging weight alpha. Matrix scaling uses eta_t = t^-k_eta; Markov
// scaling is eta_t = (1-gamma) t^-k_eta and epsilon_t = t^-k_eps / (1-gamma).
struct ScheduleParams {
  double k_eta;
  double k_beta;
  double k_epsilon;
  double k_alpha;
  ScheduleScaling scaling = ScheduleScaling::Matrix;

  ScheduleParams(double keta, double kbeta, double keps, double kalpha,
                 ScheduleScaling s = ScheduleScaling::Matrix)
      : k_eta(keta), k_beta(kbeta), k_epsilon(keps), k_alpha(kalpha), scaling(s) {
    auto check = [](double k, const char* name) {
      if (!(k > 0.0 && k <= 1.0)) throw std::invalid_argument(std::string("ScheduleParams: ") + name + " must lie in (0,1]");
    };
    check(k_eta, "k_eta");
    check(k_beta, "k_beta");
    check(k_epsilon, "k_epsilon");
    check(k_alpha, "k_alpha");
  }
};

struct ScheduleValues {
  double eta;
  double beta;
  double epsilon;
  double alpha;
};

inline ScheduleValues schedule_at(const ScheduleParams& params, long t, double gamma = 0.0) {
  if (t < 1) throw std::invalid_argument("schedule_at: t must be >= 1");
  const double td = static_cast<double>(t);
  ScheduleValues v;
  v.beta = std::pow(td, -params.k_beta);
  v.alpha = std::pow(td, -params.k_alpha);
  if (params.scaling == ScheduleScaling::Matrix) {
    v.eta = std::pow(td, -params.k_eta);
    v.epsilon = std::pow(td, -params.k_epsilon);
  } else {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("schedule_at: invalid discount");
    v.eta = (1.0 - gamma) * std::pow(td, -params.k_eta);
    v.epsilon = std::pow(td, -params.k_epsilon) / (1.0 - gamma);
  }
  return v;
}

}  // namespace zsg
