#include "cyrisk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>

#include "cyrisk/errors.hpp"
#include "cyrisk/rng.hpp"
#include "json.hpp"

namespace cyrisk {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

long long TransitionMatrix::total() const {
  long long t = 0;
  for (const auto& row : counts)
    for (long long c : row) t += c;
  return t;
}

long long TransitionMatrix::diagonal() const {
  long long t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

ScoreStats score_stats(std::span<const int> scores) {
  ScoreStats s;
  if (scores.empty()) return s;
  double sum = 0.0;
  for (int v : scores) sum += v;
  s.mean = sum / static_cast<double>(scores.size());
  double sq = 0.0;
  for (int v : scores) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(scores.size()));
  return s;
}

RiskReport transition_report(const InfrastructureGraph& g_in, const Solution& sol,
                             int levels) {
  InfrastructureGraph g = g_in;
  g.canonicalize();
  if (sol.decoded_scores.size() != g.nodes.size())
    throw ValidationError("transition_report: solution has " +
                          std::to_string(sol.decoded_scores.size()) +
                          " scores for a " + std::to_string(g.nodes.size()) +
                          "-node graph");
  for (int s : sol.decoded_scores)
    if (s < 1 || s > levels)
      throw ValidationError("transition_report: decoded score " +
                            std::to_string(s) + " outside [1," +
                            std::to_string(levels) + "]");

  RiskReport r;
  r.levels = levels;

  std::vector<int> all_initial;
  std::vector<int> all_final;
  all_initial.reserve(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    all_initial.push_back(g.nodes[i].initial_score);
    all_final.push_back(sol.decoded_scores[i]);
    r.nodes.push_back({g.nodes[i].id, g.nodes[i].layer, g.nodes[i].initial_score,
                       sol.decoded_scores[i]});
  }
  r.global_initial = score_stats(all_initial);
  r.global_final = score_stats(all_final);

  for (const std::string& layer : g.layers) {
    TransitionMatrix m;
    m.layer = layer;
    m.levels = levels;
    m.counts.assign(levels, std::vector<long long>(levels, 0));
    std::vector<int> init, fin;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (g.nodes[i].layer != layer) continue;
      init.push_back(g.nodes[i].initial_score);
      fin.push_back(sol.decoded_scores[i]);
      ++m.counts[g.nodes[i].initial_score - 1][sol.decoded_scores[i] - 1];
    }
    LayerStats ls;
    ls.layer = layer;
    ls.n_nodes = init.size();
    ls.initial = score_stats(init);
    ls.final_ = score_stats(fin);
    r.per_layer.push_back(std::move(m));
    r.layer_stats.push_back(std::move(ls));
  }

  r.solver_meta["name"] = sol.solver_name;
  r.solver_meta["seed"] = std::to_string(sol.seed);
  r.solver_meta["energy"] = fmt17(sol.energy);
  r.solver_meta["iterations"] = std::to_string(sol.iterations);
  r.solver_meta["repairs"] = std::to_string(sol.repairs);
  for (const auto& [k, v] : sol.metadata) r.solver_meta[k] = v;
  return r;
}

std::string report_to_json(const RiskReport& r) {
  nlohmann::json doc;
  doc["schema"] = "cyrisk-report-v1";
  doc["levels"] = r.levels;
  doc["global"] = {{"initial", {{"mean", r.global_initial.mean},
                                {"stddev", r.global_initial.stddev}}},
                   {"final", {{"mean", r.global_final.mean},
                              {"stddev", r.global_final.stddev}}}};
  doc["layers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.per_layer.size(); ++i) {
    const TransitionMatrix& m = r.per_layer[i];
    const LayerStats& ls = r.layer_stats[i];
    nlohmann::json jl;
    jl["layer"] = m.layer;
    jl["n_nodes"] = ls.n_nodes;
    jl["initial"] = {{"mean", ls.initial.mean}, {"stddev", ls.initial.stddev}};
    jl["final"] = {{"mean", ls.final_.mean}, {"stddev", ls.final_.stddev}};
    jl["transitions"] = m.counts;
    doc["layers"].push_back(std::move(jl));
  }
  doc["nodes"] = nlohmann::json::array();
  for (const RiskReport::NodeRow& n : r.nodes)
    doc["nodes"].push_back(
        {{"id", n.id}, {"layer", n.layer}, {"is", n.initial_score}, {"fs", n.final_score}});
  doc["solver"] = r.solver_meta;
  return doc.dump(2) + "\n";
}

RiskReport report_from_json(const std::string& bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("report document: ") + e.what());
  }
  try {
    RiskReport r;
    r.levels = doc.at("levels").get<int>();
    r.global_initial = {doc.at("global").at("initial").at("mean").get<double>(),
                        doc.at("global").at("initial").at("stddev").get<double>()};
    r.global_final = {doc.at("global").at("final").at("mean").get<double>(),
                      doc.at("global").at("final").at("stddev").get<double>()};
    for (const auto& jl : doc.at("layers")) {
      TransitionMatrix m;
      m.layer = jl.at("layer").get<std::string>();
      m.levels = r.levels;
      m.counts = jl.at("transitions").get<std::vector<std::vector<long long>>>();
      LayerStats ls;
      ls.layer = m.layer;
      ls.n_nodes = jl.at("n_nodes").get<std::size_t>();
      ls.initial = {jl.at("initial").at("mean").get<double>(),
                    jl.at("initial").at("stddev").get<double>()};
      ls.final_ = {jl.at("final").at("mean").get<double>(),
                   jl.at("final").at("stddev").get<double>()};
      r.per_layer.push_back(std::move(m));
      r.layer_stats.push_back(std::move(ls));
    }
    for (const auto& jn : doc.at("nodes"))
      r.nodes.push_back({jn.at("id").get<int>(), jn.at("layer").get<std::string>(),
                         jn.at("is").get<int>(), jn.at("fs").get<int>()});
    if (doc.contains("solver"))
      for (auto it = doc["solver"].begin(); it != doc["solver"].end(); ++it)
        r.solver_meta[it.key()] = it.value().get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report document: ") + e.what());
  }
}

std::string transitions_csv(const RiskReport& r) {
  std::ostringstream out;
  for (const TransitionMatrix& m : r.per_layer) {
    out << "layer," << m.layer << "\n";
    out << "initial\\final";
    for (int f = 1; f <= m.levels; ++f) out << "," << f;
    out << "\n";
    for (int i = 1; i <= m.levels; ++i) {
      out << i;
      for (int f = 1; f <= m.levels; ++f) out << "," << m.counts[i - 1][f - 1];
      out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

std::string summary_csv(const RiskReport& r) {
  std::ostringstream out;
  out << "scope,n_nodes,initial_mean,initial_stddev,final_mean,final_stddev\n";
  out << "global," << r.nodes.size() << "," << fmt17(r.global_initial.mean) << ","
      << fmt17(r.global_initial.stddev) << "," << fmt17(r.global_final.mean) << ","
      << fmt17(r.global_final.stddev) << "\n";
  for (const LayerStats& ls : r.layer_stats)
    out << ls.layer << "," << ls.n_nodes << "," << fmt17(ls.initial.mean) << ","
        << fmt17(ls.initial.stddev) << "," << fmt17(ls.final_.mean) << ","
        << fmt17(ls.final_.stddev) << "\n";
  return out.str();
}

const char* to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::stable:
      return "stable";
    case StabilityClass::divergent:
      return "divergent";
    case StabilityClass::oscillating:
      return "oscillating";
    case StabilityClass::max_iters:
      return "max-iters";
  }
  return "unknown";
}

RecursionTrace recursive_minimize(const InfrastructureGraph& g_in,
                                  const SolveFn& solve, int n_iters,
                                  const AssembleOptions& opt, std::uint64_t seed,
                                  bool h5_frozen) {
  if (n_iters < 1) throw ValidationError("recursive_minimize needs n_iters >= 1");
  InfrastructureGraph cur = g_in;
  cur.canonicalize();
  cur.validate(opt.levels);

  std::optional<std::vector<int>> frozen_ids;
  if (h5_frozen) {
    frozen_ids.emplace();
    for (const NodeSpec& n : cur.nodes)
      if (n.initial_score >= opt.h5_critical_threshold)
        frozen_ids->push_back(n.id);
  }

  RecursionTrace trace;
  trace.requested_iterations = n_iters;

  std::vector<int> scores;
  for (const NodeSpec& n : cur.nodes) scores.push_back(n.initial_score);
  ScoreStats st0 = score_stats(scores);
  trace.steps.push_back({0, st0.mean, st0.stddev, scores});

  std::map<std::vector<int>, int> seen;
  seen.emplace(scores, 0);

  bool ended_early = false;
  for (int t = 1; t <= n_iters; ++t) {
    AssembleOptions o = opt;
    if (frozen_ids) o.h5_critical_ids = frozen_ids;
    QuboModel q = assemble(cur, o);
    Solution sol;
    try {
      sol = solve(q, seed);
    } catch (const Error& e) {
      throw Error("recursion iteration " + std::to_string(t) + ": " + e.what());
    }
    if (sol.decoded_scores.size() != cur.nodes.size())
      throw Error("recursion iteration " + std::to_string(t) +
                  ": solver returned no decoded scores");
    std::vector<int> next = sol.decoded_scores;
    ScoreStats st = score_stats(next);
    trace.steps.push_back({t, st.mean, st.stddev, next});

    if (next == scores) {
      trace.classification = StabilityClass::stable;
      trace.fixed_point_iteration = t;
      ended_early = true;
      break;
    }
    if (seen.count(next)) {
      trace.classification = StabilityClass::oscillating;
      ended_early = true;
      break;
    }
    seen.emplace(next, t);
    scores = std::move(next);
    for (std::size_t i = 0; i < cur.nodes.size(); ++i)
      cur.nodes[i].initial_score = scores[i];
  }

  if (!ended_early) {
    bool non_decreasing = true;
    for (std::size_t i = 1; i < trace.steps.size(); ++i)
      non_decreasing &= trace.steps[i].mean >= trace.steps[i - 1].mean - 1e-12;
    bool grew = trace.steps.back().mean > trace.steps.front().mean + 1e-12;
    trace.classification = (non_decreasing && grew) ? StabilityClass::divergent
                                                    : StabilityClass::max_iters;
  }
  return trace;
}

std::string recursion_to_json(const RecursionTrace& t) {
  nlohmann::json doc;
  doc["schema"] = "cyrisk-recursion-v1";
  doc["classification"] = to_string(t.classification);
  doc["requested_iterations"] = t.requested_iterations;
  if (t.fixed_point_iteration)
    doc["fixed_point_iteration"] = *t.fixed_point_iteration;
  else
    doc["fixed_point_iteration"] = nullptr;
  doc["steps"] = nlohmann::json::array();
  for (const RecursionStep& s : t.steps)
    doc["steps"].push_back({{"iteration", s.iteration},
                            {"mean", s.mean},
                            {"stddev", s.stddev},
                            {"scores", s.scores}});
  return doc.dump(2) + "\n";
}

std::string recursion_means_csv(const RecursionTrace& t) {
  std::string out = "iteration,mean_score,stddev_score\n";
  auto row = [&](int it, const RecursionStep& s) {
    out += std::to_string(it);
    out += ",";
    out += fmt17(s.mean);
    out += ",";
    out += fmt17(s.stddev);
    out += "\n";
  };
  const int last = t.steps.empty() ? 0 : t.steps.back().iteration;
  for (int it = 1; it <= t.requested_iterations; ++it) {
    if (it <= last) {
      row(it, t.steps[static_cast<std::size_t>(it)]);
      continue;
    }
    // continue the trajectory exactly: constant after a fixed point, cycle
    // replay after a recurrence
    if (t.classification == StabilityClass::oscillating) {
      const std::vector<int>& back = t.steps.back().scores;
      int cycle_start = 0;
      for (int i = 0; i < last; ++i)
        if (t.steps[static_cast<std::size_t>(i)].scores == back) {
          cycle_start = i;
          break;
        }
      int period = last - cycle_start;
      int idx = cycle_start + (it - cycle_start) % period;
      row(it, t.steps[static_cast<std::size_t>(idx)]);
    } else {
      row(it, t.steps.back());
    }
  }
  return out;
}

namespace {

BenchRecord run_bench_task(const BenchOptions& opt, int size, std::uint64_t seed,
                           const std::string& solver, const QuboModel& q) {
  SolverRequest req;
  req.qubo = &q;
  req.seed = seed;
  req.tabu = opt.tabu;
  req.anneal = opt.anneal;
  req.hybrid = opt.hybrid;
  auto it = opt.budgets.find(solver);
  if (it != opt.budgets.end()) req.budget = it->second;
  req.record_trace = false;
  Solution sol = solve_with(solver, req);
  ScoreStats st = score_stats(sol.decoded_scores);
  BenchRecord rec;
  rec.n_nodes = size;
  rec.solver = solver;
  rec.seed = seed;
  rec.wall_time_s = sol.wall_time_s;
  rec.mean_final_risk = st.mean;
  return rec;
}

}  // namespace

std::vector<BenchRecord> scaling_bench(const BenchOptions& opt) {
  if (opt.sizes.empty() || opt.solvers.empty() || opt.seeds.empty())
    throw ValidationError("scaling_bench needs sizes, solvers, and seeds");
  for (const std::string& s : opt.solvers)
    if (std::find(solver_names().begin(), solver_names().end(), s) ==
        solver_names().end())
      throw LookupError("unknown solver '" + s + "' in bench");

  struct Instance {
    int size;
    std::uint64_t seed;
  };
  std::vector<Instance> instances;
  for (int size : opt.sizes)
    for (std::uint64_t seed : opt.seeds) instances.push_back({size, seed});

  std::vector<std::vector<BenchRecord>> per_instance(instances.size());
  auto work = [&](std::size_t idx) {
    const Instance& inst = instances[idx];
    ExceptionSpec ex;
    ex.score = opt.exception_score;
    InfrastructureGraph g =
        generate_layered(preset_layered_spec(inst.size, inst.seed, ex));
    QuboModel q = assemble(g, opt.assemble);
    for (const std::string& solver : opt.solvers)
      per_instance[idx].push_back(
          run_bench_task(opt, inst.size, inst.seed, solver, q));
  };

  const unsigned threads = std::max(1u, opt.threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < instances.size(); ++i) work(i);
  } else {
    std::size_t next = 0;
    while (next < instances.size()) {
      std::vector<std::future<void>> batch;
      for (unsigned t = 0; t < threads && next < instances.size(); ++t, ++next)
        batch.push_back(std::async(std::launch::async, work, next));
      for (auto& f : batch) f.get();
    }
  }

  std::vector<BenchRecord> records;
  for (auto& group : per_instance)
    for (BenchRecord& r : group) records.push_back(std::move(r));

  // deviation vs the reference run on the same instance
  for (BenchRecord& r : records) {
    if (r.deviation_pct) continue;
    for (const BenchRecord& ref : records) {
      if (ref.solver == opt.reference && ref.n_nodes == r.n_nodes &&
          ref.seed == r.seed) {
        r.deviation_pct = (r.mean_final_risk - ref.mean_final_risk) /
                          ref.mean_final_risk * 100.0;
        break;
      }
    }
  }

  std::sort(records.begin(), records.end(),
            [](const BenchRecord& a, const BenchRecord& b) {
              if (a.n_nodes != b.n_nodes) return a.n_nodes < b.n_nodes;
              if (a.solver != b.solver) return a.solver < b.solver;
              return a.seed < b.seed;
            });
  return records;
}

std::string bench_csv(const std::vector<BenchRecord>& records) {
  std::string out = "n_nodes,solver,seed,wall_time_s,mean_final_risk,deviation_pct\n";
  char buf[64];
  for (const BenchRecord& r : records) {
    out += std::to_string(r.n_nodes);
    out += ",";
    out += r.solver;
    out += ",";
    out += std::to_string(r.seed);
    std::snprintf(buf, sizeof buf, ",%.6f,", r.wall_time_s);
    out += buf;
    out += fmt17(r.mean_final_risk);
    out += ",";
    if (r.deviation_pct) out += fmt17(*r.deviation_pct);
    out += "\n";
  }
  return out;
}

}  // namespace cyrisk
