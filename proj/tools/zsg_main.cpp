#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zsg/config.hpp"
#include "zsg/metrics.hpp"
#include "zsg/oracles.hpp"
#include "zsg/runner.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t comma = csv.find(',', pos);
    if (comma == std::string::npos) comma = csv.size();
    seeds.push_back(std::stoull(csv.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  if (seeds.empty()) throw zsg::ConfigError("--seeds: empty seed list");
  return seeds;
}

void print_matrix(const zsg::Matrix& m) {
  for (int r = 0; r < m.rows(); ++r) {
    std::printf("   ");
    for (int c = 0; c < m.cols(); ++c) std::printf(" %10.6f", m(r, c));
    std::printf("\n");
  }
}

void print_strategy(const char* name, const zsg::MixedStrategy& s) {
  std::printf("%s = [", name);
  for (int a = 0; a < s.size(); ++a) std::printf("%s%.6f", a ? ", " : "", s[a]);
  std::printf("]\n");
}

int cmd_solve(const std::string& game_path, double tol) {
  const nlohmann::json gj = zsg::game_file_to_json(game_path);
  const std::string type = gj.value("type", std::string());
  if (type == "matrix") {
    zsg::MatrixGame game = zsg::matrix_game_from_json(gj);
    zsg::OracleSolution sol = zsg::solve_matrix_minimax(game, tol > 0 ? tol : 1e-6);
    std::printf("minimax value = %.12f\n", sol.value);
    print_strategy("x*", sol.x_star);
    print_strategy("y*", sol.y_star);
    std::printf("certified_gap = %.3e (%s)\n", sol.certified_gap,
                sol.certified ? "certified" : "NOT certified: budget exhausted");
    return sol.certified ? 0 : 2;
  }
  if (type == "markov") {
    zsg::MarkovGame game = zsg::markov_game_from_json(gj);
    zsg::StarTables star = zsg::shapley_q_star(game, tol > 0 ? tol : 1e-4);
    for (int s = 0; s < game.num_states; ++s) std::printf("V*[%d] = %.8f\n", s, star.v_star[s]);
    for (int s = 0; s < game.num_states; ++s) {
      std::printf("Q*[%d] =\n", s);
      print_matrix(star.q_star[s]);
    }
    return 0;
  }
  throw zsg::ConfigError("game file: unknown type '" + type + "'");
}

int cmd_gap(const std::string& game_path, const std::string& policy_path, double tol) {
  const nlohmann::json gj = zsg::game_file_to_json(game_path);
  const nlohmann::json pj = zsg::game_file_to_json(policy_path);
  const auto x_rows = pj.at("x").get<std::vector<std::vector<double>>>();
  const auto y_rows = pj.at("y").get<std::vector<std::vector<double>>>();
  const std::string type = gj.value("type", std::string());
  if (type == "matrix") {
    zsg::MatrixGame game = zsg::matrix_game_from_json(gj);
    if (x_rows.size() != 1 || y_rows.size() != 1)
      throw zsg::ConfigError("policy file: matrix games take one strategy per player");
    const double gap = zsg::matrix_duality_gap(game, zsg::MixedStrategy::of(x_rows[0]),
                                               zsg::MixedStrategy::of(y_rows[0]));
    std::printf("duality_gap = %.12f\n", gap);
    return 0;
  }
  if (type == "markov") {
    zsg::MarkovGame game = zsg::markov_game_from_json(gj);
    zsg::StationaryPolicy x, y;
    for (const auto& row : x_rows) x.per_state.push_back(zsg::MixedStrategy::of(row));
    for (const auto& row : y_rows) y.per_state.push_back(zsg::MixedStrategy::of(row));
    if (x.num_states() != game.num_states || y.num_states() != game.num_states)
      throw zsg::ConfigError("policy file: one strategy per state required");
    const double t = tol > 0 ? tol : 1e-4;
    std::printf("markov_lastiterate_gap = %.8f (within 2*tol, tol=%.1e)\n",
                zsg::markov_lastiterate_gap(game, x, y, t), t);
    zsg::StarTables star = zsg::shapley_q_star(game, t);
    for (int s = 0; s < game.num_states; ++s)
      std::printf("path_gap[state %d] = %.8f\n", s, zsg::path_gap(star, s, x.per_state[s], y.per_state[s]));
    return 0;
  }
  throw zsg::ConfigError("game file: unknown type '" + type + "'");
}

int cmd_run(const std::string& config_path, const std::string& seeds_csv, const std::string& out_dir,
            double tol, int jobs) {
  zsg::RunConfig cfg = zsg::load_config(config_path);
  if (!seeds_csv.empty()) cfg.seeds = parse_seed_list(seeds_csv);
  if (tol > 0.0) cfg.tol = tol;
  zsg::finalize_hash(cfg);

  zsg::RunOptions opts;
  opts.out_dir = out_dir;
  opts.jobs = jobs;
  zsg::ExperimentResult result = zsg::run_experiment(cfg, opts);

  std::printf("run %s: %zu seed(s), %zu trace file(s)\n", result.run_id.c_str(), result.seeds.size(),
              result.trace_files.size());
  for (const zsg::SeedResult& sr : result.seeds)
    if (!sr.ok) std::printf("  seed %llu FAILED: %s\n", (unsigned long long)sr.seed, sr.error.c_str());
  // final-checkpoint medians, one line per metric
  long t_last = 0;
  for (const zsg::SummaryRow& row : result.summary) t_last = std::max(t_last, row.t);
  for (const zsg::SummaryRow& row : result.summary)
    if (row.t == t_last && row.metric != "failed_seeds")
      std::printf("  %s @ t=%ld: median=%.6g (q25=%.6g q75=%.6g, n=%d)\n", row.metric.c_str(), row.t,
                  row.median, row.q25, row.q75, row.count);
  std::printf("summary: %s\n", result.summary_file.c_str());
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zsg: tabular zero-sum game learning toolkit"};
  app.require_subcommand(1);

  const char* env_out = std::getenv("ZSG_OUT_DIR");
  std::string out_dir = env_out ? env_out : "out";
  std::string config_path, game_path, policy_path, seeds_csv;
  double tol = 0.0;
  int jobs = 1;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "config file (JSON)")->required();
  run->add_option("--seeds", seeds_csv, "comma-separated seed override");
  run->add_option("--out-dir", out_dir, "output directory (default $ZSG_OUT_DIR or ./out)");
  run->add_option("--tol", tol, "oracle tolerance override");
  run->add_option("--jobs", jobs, "worker threads across seeds");

  CLI::App* solve = app.add_subcommand("solve", "solve a game file exactly");
  solve->add_option("game", game_path, "game file (JSON)")->required();
  solve->add_option("--tol", tol, "solver tolerance");

  CLI::App* gap = app.add_subcommand("gap", "audit a policy pair against a game");
  gap->add_option("game", game_path, "game file (JSON)")->required();
  gap->add_option("policies", policy_path, "policy file (JSON with x/y)")->required();
  gap->add_option("--tol", tol, "oracle tolerance");

  CLI::App* validate = app.add_subcommand("validate", "validate a config file");
  validate->add_option("config", config_path, "config file (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seeds_csv, out_dir, tol, jobs);
    if (solve->parsed()) return cmd_solve(game_path, tol);
    if (gap->parsed()) return cmd_gap(game_path, policy_path, tol);
    if (validate->parsed()) {
      zsg::RunConfig cfg = zsg::load_config(config_path);
      std::printf("OK %s (hash %s)\n", config_path.c_str(), zsg::hash_hex(cfg.config_hash).c_str());
      return 0;
    }
  } catch (const zsg::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 2;
  }
  return 1;
}
