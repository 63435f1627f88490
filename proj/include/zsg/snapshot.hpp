#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "zsg/markov_learner.hpp"
#include "zsg/matrix_learner.hpp"

// Learner state snapshots for persistence and restart. By construction a
// snapshot carries only what one player may legally hold: its own policy,
// counters and value estimates. Nothing here derives from the opponent.

namespace zsg {

inline nlohmann::json schedule_to_json(const ScheduleParams& p) {
  return {{"k_eta", p.k_eta},
          {"k_beta", p.k_beta},
          {"k_epsilon", p.k_epsilon},
          {"k_alpha", p.k_alpha},
          {"scaling", p.scaling == ScheduleScaling::Matrix ? "matrix" : "markov"}};
}

inline ScheduleParams schedule_from_json(const nlohmann::json& j) {
  const std::string scaling = j.at("scaling").get<std::string>();
  if (scaling != "matrix" && scaling != "markov")
    throw std::invalid_argument("schedule: unknown scaling '" + scaling + "'");
  return ScheduleParams(j.at("k_eta").get<double>(), j.at("k_beta").get<double>(),
                        j.at("k_epsilon").get<double>(), j.at("k_alpha").get<double>(),
                        scaling == "matrix" ? ScheduleScaling::Matrix : ScheduleScaling::Markov);
}

inline nlohmann::json snapshot(const MatrixLearner& l) {
  return {{"kind", "matrix"},
          {"variant", l.variant() == MatrixVariant::HighProbability ? "hp" : "expected"},
          {"role", l.role() == PlayerRole::X ? "x" : "y"},
          {"t", l.step_count()},
          {"policy", l.policy().p},
          {"schedule", schedule_to_json(l.params())}};
}

inline MatrixLearner restore_matrix_learner(const nlohmann::json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  const std::string role = j.at("role").get<std::string>();
  return MatrixLearner::restore(
      variant == "hp" ? MatrixVariant::HighProbability : MatrixVariant::Expected,
      role == "x" ? PlayerRole::X : PlayerRole::Y, schedule_from_json(j.at("schedule")),
      j.at("t").get<long>(), MixedStrategy::of(j.at("policy").get<std::vector<double>>()));
}

inline nlohmann::json snapshot(const IrreducibleLearner& l) {
  nlohmann::json policies = nlohmann::json::array();
  nlohmann::json visits = nlohmann::json::array();
  for (int s = 0; s < l.num_states(); ++s) {
    policies.push_back(l.policy(s).p);
    visits.push_back(l.visits(s));
  }
  return {{"kind", "markov-irreducible"}, {"discount", l.discount()},
          {"policy", policies},           {"visits", visits},
          {"value", l.values()},          {"schedule", schedule_to_json(l.params())}};
}

inline IrreducibleLearner restore_irreducible_learner(const nlohmann::json& j) {
  std::vector<MixedStrategy> policy;
  for (const auto& row : j.at("policy")) policy.push_back(MixedStrategy::of(row.get<std::vector<double>>()));
  const int S = static_cast<int>(policy.size());
  const int A = S > 0 ? policy[0].size() : 0;
  return IrreducibleLearner::restore(S, A, j.at("discount").get<double>(),
                                     schedule_from_json(j.at("schedule")), std::move(policy),
                                     j.at("visits").get<std::vector<long>>(),
                                     j.at("value").get<std::vector<double>>());
}

inline nlohmann::json snapshot(const GeneralLearner& l) {
  nlohmann::json policies = nlohmann::json::array();
  nlohmann::json visits = nlohmann::json::array();
  nlohmann::json v_tilde = nlohmann::json::array();
  for (int s = 0; s < l.num_states(); ++s) {
    policies.push_back(l.policy(s).p);
    visits.push_back(l.visits(s));
    v_tilde.push_back(l.tilde_value(s));
  }
  const GeneralConstants& c = l.constants();
  return {{"kind", "markov-general"},
          {"discount", l.discount()},
          {"horizon", l.horizon()},
          {"steps", l.steps_taken()},
          {"policy", policies},
          {"visits", visits},
          {"v_tilde", v_tilde},
          {"constants",
           {{"eta", c.eta}, {"beta", c.beta}, {"epsilon", c.epsilon}, {"kappa", c.kappa}, {"delta", c.delta}}}};
}

inline GeneralLearner restore_general_learner(const nlohmann::json& j) {
  std::vector<MixedStrategy> policy;
  for (const auto& row : j.at("policy")) policy.push_back(MixedStrategy::of(row.get<std::vector<double>>()));
  const int S = static_cast<int>(policy.size());
  const int A = S > 0 ? policy[0].size() : 0;
  const auto& cj = j.at("constants");
  GeneralConstants c{cj.at("eta").get<double>(), cj.at("beta").get<double>(),
                     cj.at("epsilon").get<double>(), cj.at("kappa").get<double>(),
                     cj.at("delta").get<double>()};
  return GeneralLearner::restore(S, A, j.at("discount").get<double>(), j.at("horizon").get<long>(), c,
                                 std::move(policy), j.at("visits").get<std::vector<long>>(),
                                 j.at("v_tilde").get<std::vector<double>>(), j.at("steps").get<long>());
}

}  // namespace zsg
