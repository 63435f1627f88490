#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zsg/env.hpp"
#include "zsg/games.hpp"
#include "zsg/markov_learner.hpp"
#include "zsg/matrix_learner.hpp"
#include "zsg/schedule.hpp"
#include "zsg/snapshot.hpp"
#include "zsg/trace.hpp"

namespace zsg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Algorithm { MatrixHP, MatrixExpected, MarkovIrreducible, MarkovGeneral };

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::MatrixHP: return "matrix-hp";
    case Algorithm::MatrixExpected: return "matrix-expected";
    case Algorithm::MarkovIrreducible: return "markov-irreducible";
    case Algorithm::MarkovGeneral: return "markov-general";
  }
  return "?";
}

inline Algorithm algorithm_from_name(const std::string& name) {
  if (name == "matrix-hp") return Algorithm::MatrixHP;
  if (name == "matrix-expected") return Algorithm::MatrixExpected;
  if (name == "markov-irreducible") return Algorithm::MarkovIrreducible;
  if (name == "markov-general") return Algorithm::MarkovGeneral;
  throw ConfigError("config: unknown algorithm '" + name + "'");
}

// Every metric name the harness may emit.
inline const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = {
      "duality_gap",   "reg_kl",           "exploit_gap", "value_error",
      "markov_gap",    "markov_gap_cesaro", "path_gap_avg", "pessimism_margin",
      "mean_loss",     "doubling_u",        "failed_seeds"};
  return names;
}

struct GeneralSettings {
  std::string preset = "practical";  // "practical" | "theoretical"
  double eta = 0.01;
  double beta = 0.05;
  double epsilon = 0.05;
  double kappa = 0.01;
  double u = 1.0;
  bool doubling = false;
  int doubling_epochs = 3;
};

struct RunConfig {
  Algorithm algorithm = Algorithm::MatrixHP;
  nlohmann::json game_json;
  long horizon = 1;
  std::vector<std::uint64_t> seeds;
  double delta = 0.05;
  double varepsilon = 1.0;
  std::optional<ScheduleParams> schedule_override;
  GeneralSettings general;
  NoiseModel noise = NoiseModel::Bernoulli;
  bool episodic = false;
  double tol = 0.0;  // 0 means "default for the algorithm" until resolved
  double cadence_start = 1.0;
  double cadence_ratio = 1.25;
  std::vector<long> checkpoints;  // empty -> geometric cadence
  std::optional<std::vector<std::vector<double>>> fixed_opponent;
  std::vector<std::string> metrics;

  std::uint64_t config_hash = 0;
  std::string run_id;

  bool is_matrix_algorithm() const {
    return algorithm == Algorithm::MatrixHP || algorithm == Algorithm::MatrixExpected;
  }

  ScheduleParams resolved_schedule() const {
    if (schedule_override) return *schedule_override;
    switch (algorithm) {
      case Algorithm::MatrixHP: return matrix_hp_exponents();
      case Algorithm::MatrixExpected: return matrix_expected_exponents();
      case Algorithm::MarkovIrreducible: return default_exponents_irreducible(varepsilon);
      case Algorithm::MarkovGeneral: return matrix_hp_exponents();  // unused by the general-game learner
    }
    return matrix_hp_exponents();
  }
};

inline MatrixGame matrix_game_from_json(const nlohmann::json& j) {
  try {
    if (j.at("type").get<std::string>() != "matrix") throw ConfigError("game: type must be 'matrix'");
    return MatrixGame(Matrix::from_rows(j.at("loss").get<std::vector<std::vector<double>>>()));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("game: malformed matrix game: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("game: ") + e.what());
  }
}

inline MarkovGame markov_game_from_json(const nlohmann::json& j) {
  try {
    if (j.at("type").get<std::string>() != "markov") throw ConfigError("game: type must be 'markov'");
    const int S = j.at("num_states").get<int>();
    const int A = j.at("num_actions").get<int>();
    const double gamma = j.at("discount").get<double>();
    std::vector<Matrix> loss;
    for (const auto& rows : j.at("loss"))
      loss.push_back(Matrix::from_rows(rows.get<std::vector<std::vector<double>>>()));
    // transition[s][a][b] -> distribution over next states
    std::vector<std::vector<std::vector<double>>> trans(S);
    const auto& tj = j.at("transition");
    if (static_cast<int>(tj.size()) != S) throw ConfigError("game: transition state count mismatch");
    for (int s = 0; s < S; ++s) {
      const auto& per_a = tj[s];
      if (static_cast<int>(per_a.size()) != A) throw ConfigError("game: transition row count mismatch");
      trans[s].resize(static_cast<std::size_t>(A) * A);
      for (int a = 0; a < A; ++a) {
        const auto& per_b = per_a[a];
        if (static_cast<int>(per_b.size()) != A) throw ConfigError("game: transition column count mismatch");
        for (int b = 0; b < A; ++b)
          trans[s][static_cast<std::size_t>(a) * A + b] = per_b[b].get<std::vector<double>>();
      }
    }
    return MarkovGame(S, A, std::move(loss), std::move(trans), gamma);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("game: malformed markov game: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("game: ") + e.what());
  }
}

inline nlohmann::json game_file_to_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("game file not found: " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("game file " + path + ": " + e.what());
  }
}

inline std::vector<std::string> default_metrics(const RunConfig& cfg) {
  if (cfg.fixed_opponent) return {"exploit_gap"};
  std::vector<std::string> m;
  switch (cfg.algorithm) {
    case Algorithm::MatrixHP:
    case Algorithm::MatrixExpected: {
      m = {"duality_gap"};
      // the regularized-NE diagnostic needs a square game
      const auto& loss = cfg.game_json.at("loss");
      if (loss.size() == loss.at(0).size()) m.push_back("reg_kl");
      break;
    }
    case Algorithm::MarkovIrreducible:
      m = {"value_error", "markov_gap", "markov_gap_cesaro"};
      break;
    case Algorithm::MarkovGeneral:
      m = {"path_gap_avg", "pessimism_margin"};
      break;
  }
  if (cfg.episodic) m.push_back("mean_loss");
  if (cfg.algorithm == Algorithm::MarkovGeneral && cfg.general.doubling) m.push_back("doubling_u");
  return m;
}

// Canonical serialization with every default materialized; the config hash is
// the FNV-1a of this dump, so load -> serialize -> load is hash-stable.
inline nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["algorithm"] = algorithm_name(cfg.algorithm);
  j["game"] = cfg.game_json;
  j["horizon"] = cfg.horizon;
  j["seeds"] = cfg.seeds;
  j["delta"] = cfg.delta;
  j["varepsilon"] = cfg.varepsilon;
  j["schedule"] = schedule_to_json(cfg.resolved_schedule());
  j["noise"] = cfg.noise == NoiseModel::Bernoulli ? "bernoulli" : "noiseless";
  j["episodic"] = cfg.episodic;
  j["tol"] = cfg.tol;
  j["cadence"] = {{"start", cfg.cadence_start}, {"ratio", cfg.cadence_ratio}};
  if (!cfg.checkpoints.empty()) j["checkpoints"] = cfg.checkpoints;
  if (cfg.fixed_opponent) j["opponent"] = {{"fixed", *cfg.fixed_opponent}};
  if (cfg.algorithm == Algorithm::MarkovGeneral) {
    j["general"] = {{"preset", cfg.general.preset},
                    {"eta", cfg.general.eta},
                    {"beta", cfg.general.beta},
                    {"epsilon", cfg.general.epsilon},
                    {"kappa", cfg.general.kappa},
                    {"u", cfg.general.u},
                    {"doubling", cfg.general.doubling},
                    {"doubling_epochs", cfg.general.doubling_epochs}};
  }
  j["metrics"] = cfg.metrics;
  return j;
}

inline void finalize_hash(RunConfig& cfg) {
  cfg.config_hash = fnv1a_hash(to_json(cfg).dump());
  cfg.run_id = hash_hex(cfg.config_hash).substr(0, 12);
}

inline RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = "") {
  RunConfig cfg;
  try {
    cfg.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
    if (j.contains("game") == j.contains("game_file"))
      throw ConfigError("config: exactly one of 'game' or 'game_file' is required");
    if (j.contains("game")) {
      cfg.game_json = j.at("game");
    } else {
      std::filesystem::path p = j.at("game_file").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
      cfg.game_json = game_file_to_json(p.string());
    }
    cfg.horizon = j.at("horizon").get<long>();
    if (cfg.horizon < 1) throw ConfigError("config: horizon must be >= 1");
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    cfg.delta = j.value("delta", 0.05);
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("config: delta must lie in (0,1)");
    cfg.varepsilon = j.value("varepsilon", 1.0);
    if (!(cfg.varepsilon > 0.0)) throw ConfigError("config: varepsilon must be positive");
    if (j.contains("schedule")) {
      try {
        cfg.schedule_override = schedule_from_json(j.at("schedule"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: schedule: ") + e.what());
      }
    }
    const std::string noise = j.value("noise", std::string("bernoulli"));
    if (noise == "bernoulli")
      cfg.noise = NoiseModel::Bernoulli;
    else if (noise == "noiseless")
      cfg.noise = NoiseModel::Noiseless;
    else
      throw ConfigError("config: noise must be 'bernoulli' or 'noiseless'");
    cfg.episodic = j.value("episodic", false);
    cfg.tol = j.value("tol", 0.0);
    if (cfg.tol == 0.0) cfg.tol = cfg.is_matrix_algorithm() ? 1e-6 : 1e-4;
    if (!(cfg.tol > 0.0)) throw ConfigError("config: tol must be positive");
    if (j.contains("cadence")) {
      cfg.cadence_start = j.at("cadence").value("start", 1.0);
      cfg.cadence_ratio = j.at("cadence").value("ratio", 1.25);
      if (!(cfg.cadence_start >= 1.0) || !(cfg.cadence_ratio > 1.0))
        throw ConfigError("config: cadence.start must be >= 1 and cadence.ratio > 1");
    }
    if (j.contains("checkpoints")) {
      cfg.checkpoints = j.at("checkpoints").get<std::vector<long>>();
      for (long t : cfg.checkpoints)
        if (t < 1 || t > cfg.horizon) throw ConfigError("config: checkpoints must lie in [1, horizon]");
    }
    if (j.contains("opponent")) {
      cfg.fixed_opponent = j.at("opponent").at("fixed").get<std::vector<std::vector<double>>>();
    }
    if (j.contains("general")) {
      const auto& gj = j.at("general");
      cfg.general.preset = gj.value("preset", std::string("practical"));
      if (cfg.general.preset != "practical" && cfg.general.preset != "theoretical")
        throw ConfigError("config: general.preset must be 'practical' or 'theoretical'");
      cfg.general.eta = gj.value("eta", cfg.general.eta);
      cfg.general.beta = gj.value("beta", cfg.general.beta);
      cfg.general.epsilon = gj.value("epsilon", cfg.general.epsilon);
      cfg.general.kappa = gj.value("kappa", cfg.general.kappa);
      cfg.general.u = gj.value("u", cfg.general.u);
      cfg.general.doubling = gj.value("doubling", false);
      cfg.general.doubling_epochs = gj.value("doubling_epochs", 3);
      if (cfg.general.doubling_epochs < 1) throw ConfigError("config: general.doubling_epochs must be >= 1");
    }
    if (j.contains("metrics")) {
      cfg.metrics = j.at("metrics").get<std::vector<std::string>>();
      for (const std::string& m : cfg.metrics) {
        const auto& known = known_metrics();
        if (std::find(known.begin(), known.end(), m) == known.end())
          throw ConfigError("config: unknown metric '" + m + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  // Validate the game description against the selected algorithm.
  const std::string game_type = cfg.game_json.value("type", std::string());
  if (cfg.is_matrix_algorithm()) {
    if (game_type != "matrix") throw ConfigError("config: " + algorithm_name(cfg.algorithm) + " requires a matrix game");
    MatrixGame g = matrix_game_from_json(cfg.game_json);
    if (g.num_actions_x() != g.num_actions_y() &&
        std::find(cfg.metrics.begin(), cfg.metrics.end(), "reg_kl") != cfg.metrics.end())
      throw ConfigError("config: metric reg_kl needs equal action counts for both players");
    if (cfg.fixed_opponent) {
      if (cfg.fixed_opponent->size() != 1 ||
          static_cast<int>((*cfg.fixed_opponent)[0].size()) != g.num_actions_y())
        throw ConfigError("config: opponent.fixed must be one strategy over the column actions");
      MixedStrategy::of((*cfg.fixed_opponent)[0]);
    }
    if (cfg.episodic) throw ConfigError("config: episodic mode requires a markov game");
  } else {
    if (game_type != "markov") throw ConfigError("config: " + algorithm_name(cfg.algorithm) + " requires a markov game");
    MarkovGame g = markov_game_from_json(cfg.game_json);
    if (cfg.fixed_opponent) {
      if (static_cast<int>(cfg.fixed_opponent->size()) != g.num_states)
        throw ConfigError("config: opponent.fixed must give one strategy per state");
      for (const auto& row : *cfg.fixed_opponent) {
        if (static_cast<int>(row.size()) != g.num_actions)
          throw ConfigError("config: opponent.fixed strategy length mismatch");
        MixedStrategy::of(row);
      }
    }
  }

  if (cfg.algorithm == Algorithm::MarkovGeneral) {
    const GeneralSettings& gs = cfg.general;
    if (gs.preset == "practical") {
      if (!(gs.eta <= gs.beta && gs.beta <= gs.epsilon)) {
        std::ostringstream msg;
        msg << "config: general constants must satisfy eta <= beta <= epsilon; offending keys:";
        if (gs.eta > gs.beta) msg << " general.eta (" << gs.eta << ") > general.beta (" << gs.beta << ")";
        if (gs.beta > gs.epsilon) msg << " general.beta (" << gs.beta << ") > general.epsilon (" << gs.epsilon << ")";
        throw ConfigError(msg.str());
      }
      if (!(gs.eta > 0.0)) throw ConfigError("config: general.eta must be positive");
    }
    if (!(gs.kappa >= 0.0)) throw ConfigError("config: general.kappa must be nonnegative");
    if (!(gs.u > 0.0)) throw ConfigError("config: general.u must be positive");
    if (gs.doubling && gs.preset != "theoretical")
      throw ConfigError("config: general.doubling tunes u and requires preset 'theoretical'");
  }

  if (cfg.metrics.empty()) cfg.metrics = default_metrics(cfg);
  finalize_hash(cfg);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config file not found: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path().string());
}

}  // namespace zsg
