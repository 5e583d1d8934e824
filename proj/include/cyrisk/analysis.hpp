#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyrisk/netmodel.hpp"
#include "cyrisk/qubo.hpp"
#include "cyrisk/solvers.hpp"

namespace cyrisk {

// K x K grid of score transitions within one layer: counts[initial-1][final-1].
struct TransitionMatrix {
  std::string layer;
  int levels = kDefaultLevels;
  std::vector<std::vector<long long>> counts;

  long long total() const;
  long long diagonal() const;  // nodes whose score did not change
};

struct ScoreStats {
  double mean = 0.0;
  double stddev = 0.0;  // population (divide by N)
};

ScoreStats score_stats(std::span<const int> scores);

struct LayerStats {
  std::string layer;
  std::size_t n_nodes = 0;
  ScoreStats initial;
  ScoreStats final_;
};

struct RiskReport {
  int levels = kDefaultLevels;
  std::vector<TransitionMatrix> per_layer;  // graph layer order
  std::vector<LayerStats> layer_stats;
  ScoreStats global_initial;
  ScoreStats global_final;
  struct NodeRow {
    int id;
    std::string layer;
    int initial_score;
    int final_score;
  };
  std::vector<NodeRow> nodes;  // ascending id
  std::map<std::string, std::string> solver_meta;
};

RiskReport transition_report(const InfrastructureGraph& g, const Solution& sol,
                             int levels = kDefaultLevels);

std::string report_to_json(const RiskReport& r);
RiskReport report_from_json(const std::string& bytes);
std::string transitions_csv(const RiskReport& r);
std::string summary_csv(const RiskReport& r);

enum class StabilityClass { stable, divergent, oscillating, max_iters };
const char* to_string(StabilityClass c);

struct RecursionStep {
  int iteration;  // 0 = initial scores
  double mean;
  double stddev;
  std::vector<int> scores;
};

struct RecursionTrace {
  std::vector<RecursionStep> steps;
  StabilityClass classification = StabilityClass::max_iters;
  std::optional<int> fixed_point_iteration;
  int requested_iterations = 0;
};

// Solve callback; recursive_minimize passes the same seed every iteration so
// the iteration map is a deterministic function of the score vector.
using SolveFn = std::function<Solution(const QuboModel&, std::uint64_t seed)>;

// Repeatedly re-minimize with each iteration's decoded scores fed back as the
// next iteration's initial scores (edges and flags unchanged). Stops early on
// a fixed point (stable) or when a non-adjacent earlier score vector recurs
// (oscillating); otherwise classifies the full run as divergent when the mean
// trend is non-decreasing and grew overall, else max_iters. H5's critical set
// follows the current scores unless h5_frozen pins it to the original ones.
RecursionTrace recursive_minimize(const InfrastructureGraph& g, const SolveFn& solve,
                                  int n_iters, const AssembleOptions& opt,
                                  std::uint64_t seed, bool h5_frozen = false);

std::string recursion_to_json(const RecursionTrace& t);
// Fig-style per-iteration series, always requested_iterations rows (stable and
// oscillating runs are continued exactly: constant tail / replayed cycle).
std::string recursion_means_csv(const RecursionTrace& t);

struct BenchRecord {
  int n_nodes = 0;
  std::string solver;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  double mean_final_risk = 0.0;
  // vs the reference solver on the same instance; unset when the reference
  // was not part of the run
  std::optional<double> deviation_pct;
};

struct BenchOptions {
  std::vector<int> sizes;
  std::vector<std::string> solvers;
  std::vector<std::uint64_t> seeds;
  std::string reference = "tabu";
  AssembleOptions assemble;
  std::map<std::string, SolverBudget> budgets;  // per-solver overrides
  TabuParams tabu;
  AnnealParams anneal;
  HybridParams hybrid;
  int exception_score = 8;
  unsigned threads = 1;  // instances fan out across workers
};

// One preset instance per (size, seed), each listed solver run on it.
// Records are returned sorted by (n_nodes, solver, seed).
std::vector<BenchRecord> scaling_bench(const BenchOptions& opt);
std::string bench_csv(const std::vector<BenchRecord>& records);

}  // namespace cyrisk
