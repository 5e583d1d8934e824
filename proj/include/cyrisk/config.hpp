#pragma once

#include <optional>
#include <string>

#include "cyrisk/analysis.hpp"
#include "cyrisk/netmodel.hpp"
#include "cyrisk/qubo.hpp"
#include "cyrisk/solvers.hpp"

namespace cyrisk {

// Declarative run description: a JSON config file drives every CLI command;
// flags override file values. The effective config is written next to the
// artifacts for provenance.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_dir = ".";

  // graph source: exactly one of file / preset / generator
  std::optional<std::string> graph_file;
  struct Preset {
    int nodes = 255;
    std::optional<int> exception_score = 8;
    double amplify = 1.0;  // extra strength on the exception's edges
    bool exception_internet = false;
    bool exception_no_update = false;
  };
  std::optional<Preset> preset;
  std::optional<LayeredGenSpec> generator;

  AssembleOptions assemble;

  std::string solver = "tabu";
  std::optional<std::uint64_t> solver_seed;  // defaults to `seed`
  SolverBudget budget;
  TabuParams tabu;
  AnnealParams anneal;
  HybridParams hybrid;

  int recurse_iterations = 20;
  bool h5_frozen = false;

  std::vector<int> bench_sizes;
  std::vector<std::string> bench_solvers;
  std::vector<std::uint64_t> bench_seeds;
  std::string bench_reference = "tabu";
  std::map<std::string, SolverBudget> bench_budgets;
  unsigned bench_threads = 1;

  bool include_timing = false;  // wall times in JSON artifacts break byte-identity
  bool write_dot = false;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& c);

// Environment variable consulted for the hybrid solver's remote sampler.
constexpr const char* kSamplerEndpointEnv = "CYRISK_SAMPLER_ENDPOINT";

// Load or generate the configured graph (throws on missing/ambiguous source).
InfrastructureGraph resolve_graph(const RunConfig& c);

// Command implementations; they write artifacts under c.out_dir and return
// the process exit code (0 on success). Failures throw.
int cmd_generate(const RunConfig& c);
int cmd_solve(const RunConfig& c);
int cmd_recurse(const RunConfig& c);
int cmd_bench(const RunConfig& c);
int cmd_export_dot(const RunConfig& c, const std::string& out_file);
int cmd_export_qubo(const RunConfig& c, const std::string& out_file);

// Map an exception to the documented exit codes: 2 for usage/config/input
// errors, 1 for runtime failures.
int exit_code_for(const std::exception& e);

}  // namespace cyrisk
