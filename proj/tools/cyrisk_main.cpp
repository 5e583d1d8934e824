#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "cyrisk/config.hpp"
#include "cyrisk/errors.hpp"

namespace {

cyrisk::RunConfig load_base_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cyrisk::ParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return cyrisk::run_config_from_json(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cyrisk - cyber-risk QUBO modeling and solving for layered infrastructures"};
  app.require_subcommand(1);

  // shared flags; flags override config-file values
  std::string config_path;
  std::string out_dir;
  std::string graph_file;
  std::uint64_t seed = 0;
  std::string solver;
  std::uint64_t solver_seed = 0;
  std::uint64_t iterations = 0;
  double seconds = 0.0;
  std::uint64_t rounds = 0;
  std::string budget_preset;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run config file");
    cmd->add_option("--out", out_dir, "output directory for artifacts");
    cmd->add_option("--seed", seed, "global seed");
  };
  auto add_solver_opts = [&](CLI::App* cmd) {
    cmd->add_option("--graph", graph_file, "graph JSON file to load");
    cmd->add_option("--solver", solver, "exhaustive|tabu|anneal|hybrid");
    cmd->add_option("--solver-seed", solver_seed, "solver seed (defaults to --seed)");
    cmd->add_option("--iterations", iterations, "iteration budget");
    cmd->add_option("--seconds", seconds, "wall-clock budget in seconds");
    cmd->add_option("--rounds", rounds, "hybrid subproblem-round budget");
    cmd->add_option("--budget-preset", budget_preset, "min|30s|180s");
  };

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a layered infrastructure graph");
  int gen_preset_nodes = 0;
  int gen_exception_score = -1;
  bool gen_no_exception = false;
  double gen_amplify = 0.0;
  bool gen_dot = false;
  std::string gen_spec_file;
  add_common(gen);
  gen->add_option("--preset", gen_preset_nodes, "preset layered topology with N nodes");
  gen->add_option("--spec", gen_spec_file, "generator spec JSON file");
  gen->add_option("--exception-score", gen_exception_score,
                  "initial score of the injected high-risk exception");
  gen->add_flag("--no-exception", gen_no_exception, "generate without an exception node");
  gen->add_option("--amplify", gen_amplify,
                  "strength multiplier on the exception's edges");
  gen->add_flag("--dot", gen_dot, "also write a DOT rendering");

  // solve
  auto* solve = app.add_subcommand("solve", "Assemble the QUBO and minimize it");
  bool solve_timing = false;
  add_common(solve);
  add_solver_opts(solve);
  solve->add_flag("--timing", solve_timing, "include wall times in JSON artifacts");

  // recurse
  auto* recurse = app.add_subcommand("recurse", "Recursive re-minimization diagnostic");
  int recurse_iters = -1;
  bool recurse_frozen = false;
  add_common(recurse);
  add_solver_opts(recurse);
  recurse->add_option("--recurse-iterations", recurse_iters, "number of recursion steps");
  recurse->add_flag("--h5-frozen", recurse_frozen,
                    "keep the critical set fixed to the original scores");

  // bench
  auto* bench = app.add_subcommand("bench", "Scaling benchmark across sizes and solvers");
  std::vector<int> bench_sizes;
  std::vector<std::string> bench_solvers;
  std::vector<std::uint64_t> bench_seeds;
  unsigned bench_threads = 0;
  std::string bench_reference;
  double bench_hybrid_seconds = 0.0;
  add_common(bench);
  bench->add_option("--sizes", bench_sizes, "instance sizes")->delimiter(',');
  bench->add_option("--solvers", bench_solvers, "solvers to compare")->delimiter(',');
  bench->add_option("--seeds", bench_seeds, "instance seeds")->delimiter(',');
  bench->add_option("--threads", bench_threads, "parallel instance workers");
  bench->add_option("--reference", bench_reference, "reference solver for deviation");
  bench->add_option("--hybrid-seconds", bench_hybrid_seconds,
                    "wall budget for the hybrid solver");

  // export-dot / export-qubo
  auto* exdot = app.add_subcommand("export-dot", "Render a graph to Graphviz DOT");
  std::string exdot_out = "graph.dot";
  add_common(exdot);
  exdot->add_option("--graph", graph_file, "graph JSON file to load");
  exdot->add_option("--output", exdot_out, "output DOT file");

  auto* exqubo = app.add_subcommand("export-qubo", "Assemble and write the QUBO text file");
  std::string exqubo_out = "model.qubo";
  add_common(exqubo);
  exqubo->add_option("--graph", graph_file, "graph JSON file to load");
  exqubo->add_option("--output", exqubo_out, "output QUBO file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    cyrisk::RunConfig cfg = load_base_config(config_path);

    CLI::App* cmd = app.get_subcommands().front();
    if (cmd->count("--out")) cfg.out_dir = out_dir;
    if (cmd->count("--seed")) cfg.seed = seed;
    if (cmd->count("--graph")) {
      cfg.graph_file = graph_file;
      cfg.preset.reset();
      cfg.generator.reset();
    }
    if (cmd->count("--solver")) cfg.solver = solver;
    if (cmd->count("--solver-seed")) cfg.solver_seed = solver_seed;
    if (cmd->count("--iterations")) cfg.budget.max_iterations = iterations;
    if (cmd->count("--seconds")) cfg.budget.wall_seconds = seconds;
    if (cmd->count("--rounds")) cfg.budget.max_rounds = rounds;
    if (!budget_preset.empty()) {
      if (budget_preset == "min")
        cfg.budget.max_rounds = 1;
      else if (budget_preset == "30s")
        cfg.budget.wall_seconds = 30.0;
      else if (budget_preset == "180s")
        cfg.budget.wall_seconds = 180.0;
      else
        throw cyrisk::ValidationError("budget preset must be min|30s|180s");
    }

    if (cmd == gen) {
      if (!gen_spec_file.empty()) {
        std::ifstream in(gen_spec_file, std::ios::binary);
        if (!in) throw cyrisk::ParseError("cannot open spec file: " + gen_spec_file);
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string wrapped = "{\"graph\":{\"generate\":" + ss.str() + "}}";
        cyrisk::RunConfig spec_cfg = cyrisk::run_config_from_json(wrapped);
        cfg.generator = spec_cfg.generator;
        cfg.preset.reset();
        cfg.graph_file.reset();
      }
      if (gen_preset_nodes > 0) {
        cyrisk::RunConfig::Preset p;
        if (cfg.preset) p = *cfg.preset;
        p.nodes = gen_preset_nodes;
        cfg.preset = p;
        cfg.generator.reset();
        cfg.graph_file.reset();
      }
      if (!cfg.graph_file && !cfg.generator && !cfg.preset)
        cfg.preset = cyrisk::RunConfig::Preset{};
      if (cfg.preset) {
        if (gen_exception_score >= 0) cfg.preset->exception_score = gen_exception_score;
        if (gen_no_exception) cfg.preset->exception_score.reset();
        if (cmd->count("--amplify")) cfg.preset->amplify = gen_amplify;
      }
      if (gen_dot) cfg.write_dot = true;
      return cyrisk::cmd_generate(cfg);
    }
    if (cmd == solve) {
      if (solve_timing) cfg.include_timing = true;
      return cyrisk::cmd_solve(cfg);
    }
    if (cmd == recurse) {
      if (recurse_iters >= 0) cfg.recurse_iterations = recurse_iters;
      if (recurse_frozen) cfg.h5_frozen = true;
      return cyrisk::cmd_recurse(cfg);
    }
    if (cmd == bench) {
      if (!bench_sizes.empty()) cfg.bench_sizes = bench_sizes;
      if (!bench_solvers.empty()) cfg.bench_solvers = bench_solvers;
      if (!bench_seeds.empty()) cfg.bench_seeds = bench_seeds;
      if (bench_threads > 0) cfg.bench_threads = bench_threads;
      if (!bench_reference.empty()) cfg.bench_reference = bench_reference;
      if (bench_hybrid_seconds > 0.0)
        cfg.bench_budgets["hybrid"].wall_seconds = bench_hybrid_seconds;
      return cyrisk::cmd_bench(cfg);
    }
    if (cmd == exdot) return cyrisk::cmd_export_dot(cfg, exdot_out);
    if (cmd == exqubo) return cyrisk::cmd_export_qubo(cfg, exqubo_out);

    std::cerr << "error: no command selected\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cyrisk::exit_code_for(e);
  }
}
