#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "zsg/config.hpp"
#include "zsg/env.hpp"
#include "zsg/markov_learner.hpp"
#include "zsg/matrix_learner.hpp"
#include "zsg/metrics.hpp"
#include "zsg/oracles.hpp"
#include "zsg/trace.hpp"

namespace zsg {

struct RunOptions {
  std::string out_dir = "out";
  int jobs = 1;
  bool write_files = true;
};

inline std::vector<long> geometric_checkpoints(double start, double ratio, long horizon) {
  std::vector<long> cps;
  double v = std::max(start, 1.0);
  long prev = 0;
  while (true) {
    const long t = static_cast<long>(std::ceil(v));
    if (t > horizon) break;
    if (t != prev) {
      cps.push_back(t);
      prev = t;
    }
    v *= ratio;
  }
  if (cps.empty() || cps.back() != horizon) cps.push_back(horizon);
  return cps;
}

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<TraceRecord> records;
};

struct ExperimentResult {
  std::string run_id;
  std::uint64_t config_hash = 0;
  std::vector<SeedResult> seeds;
  std::vector<SummaryRow> summary;
  std::vector<std::string> trace_files;
  std::string summary_file;
  int exit_code = 0;
};

namespace detail_runner {

// Q*/V* tables cached per (game, tol) for the lifetime of the process, so
// repeated experiments on the same game do not redo Shapley iteration.
inline const StarTables& cached_star_tables(const nlohmann::json& game_json, const MarkovGame& game,
                                            double tol) {
  static std::map<std::pair<std::uint64_t, double>, StarTables> cache;
  static std::mutex mutex;
  const std::uint64_t key = fnv1a_hash(game_json.dump());
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({key, tol});
  if (it == cache.end()) it = cache.emplace(std::make_pair(key, tol), shapley_q_star(game, tol)).first;
  return it->second;
}

// Seed-independent material shared by all workers: parsed game, checkpoint
// grid, star tables and per-checkpoint regularized equilibria (these depend
// only on the config, so they are computed once per process run).
struct Shared {
  RunConfig cfg;
  std::vector<long> checkpoints;
  std::optional<MatrixGame> matrix;
  std::optional<MarkovGame> markov;
  std::optional<StarTables> star;
  std::map<long, RegularizedSolution> regularized;  // checkpoint t -> z*_t
  std::optional<std::vector<double>> br_vs_fixed;   // min-side value against the fixed opponent
  std::optional<StationaryPolicy> fixed_policy;
  long total_steps = 0;
  std::vector<std::pair<long, double>> doubling_schedule;  // (epoch start step, u_k)

  bool want(const std::string& name) const {
    return std::find(cfg.metrics.begin(), cfg.metrics.end(), name) != cfg.metrics.end();
  }
  bool is_checkpoint(long t) const {
    return std::binary_search(checkpoints.begin(), checkpoints.end(), t);
  }
};

inline Shared prepare(const RunConfig& cfg) {
  Shared sh;
  sh.cfg = cfg;
  sh.total_steps = cfg.horizon;
  if (cfg.algorithm == Algorithm::MarkovGeneral && cfg.general.doubling) {
    long start = 1;
    sh.total_steps = 0;
    for (int k = 0; k < cfg.general.doubling_epochs; ++k) {
      const long len = cfg.horizon << k;
      const double u_k = cfg.general.u * std::pow(static_cast<double>(len), -0.1);
      sh.doubling_schedule.emplace_back(start, u_k);
      start += len;
      sh.total_steps += len;
    }
  }
  sh.checkpoints = cfg.checkpoints.empty()
                       ? geometric_checkpoints(cfg.cadence_start, cfg.cadence_ratio, sh.total_steps)
                       : cfg.checkpoints;
  std::sort(sh.checkpoints.begin(), sh.checkpoints.end());

  if (cfg.is_matrix_algorithm()) {
    sh.matrix = matrix_game_from_json(cfg.game_json);
    if (cfg.fixed_opponent) {
      StationaryPolicy pi;
      pi.per_state.push_back(MixedStrategy::of((*cfg.fixed_opponent)[0]));
      sh.fixed_policy = pi;
    }
    if (sh.want("reg_kl")) {
      const ScheduleParams sched = cfg.resolved_schedule();
      const int a1 = sh.matrix->num_actions_x();
      const int a2 = sh.matrix->num_actions_y();
      if (a1 != a2)
        throw ConfigError("config: the reg_kl diagnostic needs equal action counts");
      for (long t : sh.checkpoints) {
        const double eps_t = schedule_at(sched, t).epsilon;
        const double floor = 1.0 / (static_cast<double>(a1) * t * t);
        sh.regularized.emplace(t, solve_regularized_ne(sh.matrix->loss, eps_t,
                                                       ClippedSimplex(a1, floor), 1e-5));
      }
    }
  } else {
    sh.markov = markov_game_from_json(cfg.game_json);
    if (cfg.fixed_opponent) {
      StationaryPolicy pi;
      for (const auto& row : *cfg.fixed_opponent) pi.per_state.push_back(MixedStrategy::of(row));
      sh.fixed_policy = pi;
      if (sh.want("exploit_gap"))
        sh.br_vs_fixed = best_response_value(*sh.markov, pi, BestResponseSide::MinimizeX, cfg.tol);
    }
    if (sh.want("value_error") || sh.want("path_gap_avg"))
      sh.star = cached_star_tables(cfg.game_json, *sh.markov, cfg.tol);
  }
  return sh;
}

inline void emit(std::vector<TraceRecord>& out, const Shared& sh, std::uint64_t seed, long t,
                 const std::string& metric, double value, int state = -1) {
  const GapReport report{t, metric, value, state};
  if (report.value < -1e-9)
    throw std::runtime_error("metric " + metric + " produced a negative gap: " + format_double(value));
  out.push_back(
      TraceRecord{sh.cfg.run_id, seed, report.t, report.metric, report.value, report.state, sh.cfg.config_hash});
}

inline std::vector<TraceRecord> run_matrix_seed(const Shared& sh, std::uint64_t seed) {
  const RunConfig& cfg = sh.cfg;
  const MatrixGame& game = *sh.matrix;
  const MatrixVariant variant =
      cfg.algorithm == Algorithm::MatrixHP ? MatrixVariant::HighProbability : MatrixVariant::Expected;
  const ScheduleParams sched = cfg.resolved_schedule();

  Env env(game, cfg.noise, derive_seed(seed, 0));
  Rng rng_x(derive_seed(seed, 1)), rng_y(derive_seed(seed, 2));
  MatrixLearner lx(game.num_actions_x(), variant, PlayerRole::X, sched);
  MatrixLearner ly(game.num_actions_y(), variant, PlayerRole::Y, sched);

  std::vector<TraceRecord> records;
  auto hook = [&](long t, const StepOutcome&) {
    if (!sh.is_checkpoint(t)) return;
    if (sh.want("duality_gap") && !cfg.fixed_opponent)
      emit(records, sh, seed, t, "duality_gap", matrix_duality_gap(game, lx.policy(), ly.policy()));
    if (sh.want("reg_kl") && !cfg.fixed_opponent) {
      const RegularizedSolution& z = sh.regularized.at(t);
      emit(records, sh, seed, t, "reg_kl",
           kl_divergence(z.x, lx.policy()) + kl_divergence(z.y, ly.policy()));
    }
    if (sh.want("exploit_gap") && cfg.fixed_opponent)
      emit(records, sh, seed, t, "exploit_gap",
           rationality_gap_matrix(game, lx.policy(), (*sh.fixed_policy)[0]));
  };
  if (cfg.fixed_opponent) {
    FixedAgent opp{*sh.fixed_policy};
    run_selfplay(env, lx, rng_x, opp, rng_y, cfg.horizon, hook);
  } else {
    run_selfplay(env, lx, rng_x, ly, rng_y, cfg.horizon, hook);
  }
  return records;
}

inline std::vector<TraceRecord> run_irreducible_seed(const Shared& sh, std::uint64_t seed) {
  const RunConfig& cfg = sh.cfg;
  const MarkovGame& game = *sh.markov;
  const ScheduleParams sched = cfg.resolved_schedule();

  Env env = cfg.episodic ? Env::episodic(game, cfg.noise, derive_seed(seed, 0))
                         : Env(game, cfg.noise, derive_seed(seed, 0));
  Rng rng_x(derive_seed(seed, 1)), rng_y(derive_seed(seed, 2));
  IrreducibleLearner lx(game.num_states, game.num_actions, game.discount, sched);
  IrreducibleLearner ly(game.num_states, game.num_actions, game.discount, sched);

  std::vector<TraceRecord> records;
  double sigma_sum = 0.0;
  double gap_cesaro_sum = 0.0;
  long gap_cesaro_count = 0;
  auto hook = [&](long t, const StepOutcome& out) {
    sigma_sum += out.sigma;
    if (!sh.is_checkpoint(t)) return;
    if (sh.want("value_error")) emit(records, sh, seed, t, "value_error", value_error(lx.values(), *sh.star));
    if ((sh.want("markov_gap") || sh.want("markov_gap_cesaro")) && !cfg.fixed_opponent) {
      const double gap = markov_lastiterate_gap(game, lx.stationary_policy(), ly.stationary_policy(), cfg.tol);
      if (sh.want("markov_gap")) emit(records, sh, seed, t, "markov_gap", gap);
      if (sh.want("markov_gap_cesaro")) {
        gap_cesaro_sum += gap;
        ++gap_cesaro_count;
        emit(records, sh, seed, t, "markov_gap_cesaro", gap_cesaro_sum / gap_cesaro_count);
      }
    }
    if (sh.want("exploit_gap") && cfg.fixed_opponent) {
      const std::vector<double> pv = policy_value(game, lx.stationary_policy(), *sh.fixed_policy, cfg.tol);
      double gap = -std::numeric_limits<double>::infinity();
      for (int s = 0; s < game.num_states; ++s) gap = std::max(gap, pv[s] - (*sh.br_vs_fixed)[s]);
      emit(records, sh, seed, t, "exploit_gap", std::max(gap, 0.0));
    }
    if (sh.want("mean_loss")) emit(records, sh, seed, t, "mean_loss", sigma_sum / static_cast<double>(t));
  };
  if (cfg.fixed_opponent) {
    FixedAgent opp{*sh.fixed_policy};
    run_selfplay(env, lx, rng_x, opp, rng_y, cfg.horizon, hook);
  } else {
    run_selfplay(env, lx, rng_x, ly, rng_y, cfg.horizon, hook);
  }
  return records;
}

inline GeneralConstants resolve_general_constants(const RunConfig& cfg, const MarkovGame& game,
                                                  long horizon, double u) {
  if (cfg.general.preset == "theoretical")
    return general_theoretical_constants(game.num_states, game.num_actions, game.discount, horizon, u,
                                         cfg.delta, cfg.general.kappa);
  GeneralConstants c{cfg.general.eta, cfg.general.beta, cfg.general.epsilon, cfg.general.kappa, cfg.delta};
  return c;
}

inline std::vector<TraceRecord> run_general_seed(const Shared& sh, std::uint64_t seed) {
  const RunConfig& cfg = sh.cfg;
  const MarkovGame& game = *sh.markov;

  Env env = cfg.episodic ? Env::episodic(game, cfg.noise, derive_seed(seed, 0))
                         : Env(game, cfg.noise, derive_seed(seed, 0));
  Rng rng_x(derive_seed(seed, 1)), rng_y(derive_seed(seed, 2));

  std::vector<TraceRecord> records;
  double sigma_sum = 0.0;
  double path_gap_sum = 0.0;
  long global_t = 0;

  std::vector<std::pair<long, double>> epochs = sh.doubling_schedule;
  if (epochs.empty()) epochs.emplace_back(1, cfg.general.u);

  for (std::size_t k = 0; k < epochs.size(); ++k) {
    const long epoch_len = cfg.general.doubling ? (cfg.horizon << k) : cfg.horizon;
    const double u_k = epochs[k].second;
    const GeneralConstants constants = resolve_general_constants(cfg, game, epoch_len, u_k);
    GeneralLearner lx(game.num_states, game.num_actions, game.discount, epoch_len, constants);
    GeneralLearner ly(game.num_states, game.num_actions, game.discount, epoch_len, constants);
    if (sh.want("doubling_u"))
      emit(records, sh, seed, epochs[k].first, "doubling_u", u_k);

    auto hook = [&](long t_epoch, const StepOutcome& out) {
      const long t = global_t + t_epoch;
      sigma_sum += out.sigma;
      if (sh.star) path_gap_sum += path_gap(*sh.star, out.s, lx.policy(out.s), ly.policy(out.s));
      if (!sh.is_checkpoint(t)) return;
      if (sh.want("path_gap_avg"))
        emit(records, sh, seed, t, "path_gap_avg", path_gap_sum / static_cast<double>(t));
      if (sh.want("pessimism_margin") && !cfg.fixed_opponent) {
        double margin = std::numeric_limits<double>::infinity();
        for (int s = 0; s < game.num_states; ++s)
          margin = std::min(margin, ly.mirror_upper_value(s) - lx.lower_value(s));
        records.push_back(TraceRecord{cfg.run_id, seed, t, "pessimism_margin", margin, -1, cfg.config_hash});
      }
      if (sh.want("exploit_gap") && cfg.fixed_opponent) {
        const std::vector<double> pv = policy_value(game, lx.stationary_policy(), *sh.fixed_policy, cfg.tol);
        double gap = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < game.num_states; ++s) gap = std::max(gap, pv[s] - (*sh.br_vs_fixed)[s]);
        emit(records, sh, seed, t, "exploit_gap", std::max(gap, 0.0));
      }
      if (sh.want("mean_loss")) emit(records, sh, seed, t, "mean_loss", sigma_sum / static_cast<double>(t));
    };
    if (cfg.fixed_opponent) {
      FixedAgent opp{*sh.fixed_policy};
      run_selfplay(env, lx, rng_x, opp, rng_y, epoch_len, hook);
    } else {
      run_selfplay(env, lx, rng_x, ly, rng_y, epoch_len, hook);
    }
    global_t += epoch_len;
  }
  return records;
}

inline std::vector<TraceRecord> run_seed(const Shared& sh, std::uint64_t seed) {
  switch (sh.cfg.algorithm) {
    case Algorithm::MatrixHP:
    case Algorithm::MatrixExpected:
      return run_matrix_seed(sh, seed);
    case Algorithm::MarkovIrreducible:
      return run_irreducible_seed(sh, seed);
    case Algorithm::MarkovGeneral:
      return run_general_seed(sh, seed);
  }
  throw std::logic_error("run_seed: unreachable");
}

}  // namespace detail_runner

inline std::vector<SummaryRow> summarize(const std::vector<SeedResult>& seeds) {
  std::map<std::tuple<std::string, long, int>, std::vector<double>> buckets;
  int failed = 0;
  for (const SeedResult& sr : seeds) {
    if (!sr.ok) {
      ++failed;
      continue;
    }
    for (const TraceRecord& r : sr.records)
      buckets[{r.metric, r.t, r.state}].push_back(r.value);
  }
  std::vector<SummaryRow> rows;
  rows.push_back(SummaryRow{"failed_seeds", 0, -1, failed, static_cast<double>(failed),
                            static_cast<double>(failed), static_cast<double>(failed)});
  for (auto& [key, values] : buckets) {
    std::sort(values.begin(), values.end());
    SummaryRow row;
    row.metric = std::get<0>(key);
    row.t = std::get<1>(key);
    row.state = std::get<2>(key);
    row.count = static_cast<int>(values.size());
    row.median = quantile_sorted(values, 0.5);
    row.q25 = quantile_sorted(values, 0.25);
    row.q75 = quantile_sorted(values, 0.75);
    rows.push_back(row);
  }
  return rows;
}

inline ExperimentResult run_experiment(const RunConfig& cfg, const RunOptions& opts = RunOptions{}) {
  detail_runner::Shared shared = detail_runner::prepare(cfg);
  ExperimentResult result;
  result.run_id = cfg.run_id;
  result.config_hash = cfg.config_hash;
  result.seeds.resize(cfg.seeds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.seeds.size()) break;
      SeedResult& sr = result.seeds[i];
      sr.seed = cfg.seeds[i];
      try {
        sr.records = detail_runner::run_seed(shared, sr.seed);
        sr.ok = true;
      } catch (const std::exception& e) {
        sr.ok = false;
        sr.error = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(cfg.seeds.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  result.summary = summarize(result.seeds);
  const bool all_failed =
      std::none_of(result.seeds.begin(), result.seeds.end(), [](const SeedResult& s) { return s.ok; });
  result.exit_code = all_failed ? 2 : 0;

  if (opts.write_files) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(opts.out_dir) / cfg.run_id;
    fs::create_directories(dir);
    for (const SeedResult& sr : result.seeds) {
      if (!sr.ok) continue;
      const fs::path p = dir / ("trace_seed" + std::to_string(sr.seed) + ".csv");
      write_trace_csv(p.string(), sr.records);
      result.trace_files.push_back(p.string());
    }
    const fs::path sp = dir / "summary.csv";
    write_summary_csv(sp.string(), result.summary);
    result.summary_file = sp.string();
  }
  return result;
}

}  // namespace zsg
