#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cyrisk/qubo.hpp"

namespace cyrisk {

struct TracePoint {
  std::uint64_t iteration;
  double best_energy;
  double wall_ms;
};

// At least one limit must be set (solvers fall back to a documented default
// otherwise). max_rounds applies to the hybrid solver's subproblem rounds.
struct SolverBudget {
  std::optional<std::uint64_t> max_iterations;
  std::optional<double> wall_seconds;
  std::optional<std::uint64_t> max_rounds;
};

struct TabuParams {
  int tenure = 10;
};

struct AnnealParams {
  double t0 = 0.0;  // 0 = auto: max |Q| coefficient
  double t1 = 1e-3;
  int restarts = 20;
  int sweeps = 100;
};

struct HybridParams {
  int subproblem_vars = 20;         // clamped subproblem size (<= 24)
  int outer_iters_per_round = 100;  // tabu steps between subproblem rounds
  std::string sampler_endpoint;     // empty = exact local subproblem solve
};

struct SolverRequest {
  const QuboModel* qubo = nullptr;
  std::uint64_t seed = 0;
  SolverBudget budget;
  TabuParams tabu;
  AnnealParams anneal;
  HybridParams hybrid;
  std::size_t exhaustive_cap = 24;
  bool record_trace = true;
};

struct Solution {
  Assignment assignment;
  double energy = 0.0;
  std::vector<int> decoded_scores;  // repaired; empty when no encoding attached
  int repairs = 0;
  double wall_time_s = 0.0;
  std::uint64_t iterations = 0;
  std::string solver_name;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> metadata;
  std::vector<TracePoint> trace;  // best-energy improvements, non-increasing
};

// Exact minimum by Gray-code enumeration of all 2^n assignments.
// Refuses instances above exhaustive_cap variables.
Solution solve_exhaustive(const SolverRequest& req);

// Single-bit-flip tabu search with recency memory and best-solution
// aspiration; deterministic for a fixed seed.
Solution solve_tabu(const SolverRequest& req);

// Multi-restart simulated annealing with a geometric temperature schedule;
// the best restart wins, ties resolved by lowest restart index.
// Deterministic for a fixed seed.
Solution solve_anneal(const SolverRequest& req);

// Decomposition solver under a wall-clock (or round-count) budget: a tabu
// outer loop periodically clamps all but the highest-impact variables and
// solves that subproblem exactly, or through the remote sampler when an
// endpoint is configured (falling back to the exact solve on any sampler
// error). Deterministic for a fixed seed and round budget when the sampler
// is disabled.
Solution solve_hybrid(const SolverRequest& req);

const std::vector<std::string>& solver_names();
Solution solve_with(const std::string& name, const SolverRequest& req);

// Serialize a solver trace as "iteration,best_energy,wall_ms" CSV.
std::string trace_csv(const std::vector<TracePoint>& trace);

}  // namespace cyrisk
