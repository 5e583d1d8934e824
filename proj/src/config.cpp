#include "cyrisk/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cyrisk/errors.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace cyrisk {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << content;
}

IntraRule intra_from_string(const std::string& s) {
  if (s == "none") return IntraRule::none;
  if (s == "full") return IntraRule::full;
  if (s == "subnetworks") return IntraRule::subnetworks;
  throw ParseError("intra rule must be none|full|subnetworks (got '" + s + "')");
}

const char* intra_to_string(IntraRule r) {
  switch (r) {
    case IntraRule::none:
      return "none";
    case IntraRule::full:
      return "full";
    case IntraRule::subnetworks:
      return "subnetworks";
  }
  return "none";
}

SolverBudget budget_from_json(const nlohmann::json& j) {
  SolverBudget b;
  if (j.contains("iterations") && !j["iterations"].is_null())
    b.max_iterations = j["iterations"].get<std::uint64_t>();
  if (j.contains("seconds") && !j["seconds"].is_null())
    b.wall_seconds = j["seconds"].get<double>();
  if (j.contains("rounds") && !j["rounds"].is_null())
    b.max_rounds = j["rounds"].get<std::uint64_t>();
  if (j.contains("preset") && !j["preset"].is_null()) {
    std::string p = j["preset"].get<std::string>();
    if (p == "min")
      b.max_rounds = 1;
    else if (p == "30s")
      b.wall_seconds = 30.0;
    else if (p == "180s")
      b.wall_seconds = 180.0;
    else
      throw ParseError("budget preset must be min|30s|180s (got '" + p + "')");
  }
  return b;
}

nlohmann::json budget_to_json(const SolverBudget& b) {
  nlohmann::json j = nlohmann::json::object();
  if (b.max_iterations) j["iterations"] = *b.max_iterations;
  if (b.wall_seconds) j["seconds"] = *b.wall_seconds;
  if (b.max_rounds) j["rounds"] = *b.max_rounds;
  return j;
}

LayeredGenSpec generator_from_json(const nlohmann::json& j) {
  LayeredGenSpec spec;
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty())
    throw ParseError("generate: needs a non-empty 'layers' array");
  for (const auto& jl : j["layers"]) {
    LayerGenSpec l;
    l.name = jl.at("name").get<std::string>();
    l.count = jl.at("count").get<int>();
    if (jl.contains("intra")) l.intra = intra_from_string(jl["intra"].get<std::string>());
    if (jl.contains("subnet_size")) l.subnet_size = jl["subnet_size"].get<int>();
    if (jl.contains("score_range")) {
      auto r = jl["score_range"].get<std::vector<int>>();
      if (r.size() != 2) throw ParseError("layer score_range must be [lo, hi]");
      l.score_range = {{r[0], r[1]}};
    }
    spec.layers.push_back(std::move(l));
  }
  if (j.contains("inter_layer_edge_prob"))
    spec.inter_layer_edge_prob = j["inter_layer_edge_prob"].get<double>();
  if (j.contains("score_range")) {
    auto r = j["score_range"].get<std::vector<int>>();
    if (r.size() != 2) throw ParseError("score_range must be [lo, hi]");
    spec.score_range = {r[0], r[1]};
  }
  if (j.contains("levels")) spec.levels = j["levels"].get<int>();
  if (j.contains("seed")) spec.rng_seed = j["seed"].get<std::uint64_t>();
  if (j.contains("scenario")) spec.scenario_name = j["scenario"].get<std::string>();
  if (j.contains("exception") && !j["exception"].is_null()) {
    const auto& je = j["exception"];
    ExceptionSpec ex;
    if (je.contains("node_id") && !je["node_id"].is_null())
      ex.node_id = je["node_id"].get<int>();
    if (je.contains("layers")) ex.layers = je["layers"].get<std::vector<std::string>>();
    if (je.contains("score")) ex.score = je["score"].get<int>();
    if (je.contains("strength_multiplier"))
      ex.strength_multiplier = je["strength_multiplier"].get<double>();
    if (je.contains("set_no_update")) ex.set_no_update = je["set_no_update"].get<bool>();
    if (je.contains("set_internet")) ex.set_internet = je["set_internet"].get<bool>();
    spec.exception = std::move(ex);
  }
  return spec;
}

nlohmann::json generator_to_json(const LayeredGenSpec& spec) {
  nlohmann::json j;
  j["layers"] = nlohmann::json::array();
  for (const LayerGenSpec& l : spec.layers) {
    nlohmann::json jl;
    jl["name"] = l.name;
    jl["count"] = l.count;
    jl["intra"] = intra_to_string(l.intra);
    if (l.subnet_size > 0) jl["subnet_size"] = l.subnet_size;
    if (l.score_range)
      jl["score_range"] = {l.score_range->first, l.score_range->second};
    j["layers"].push_back(std::move(jl));
  }
  j["inter_layer_edge_prob"] = spec.inter_layer_edge_prob;
  j["score_range"] = {spec.score_range.first, spec.score_range.second};
  j["levels"] = spec.levels;
  j["seed"] = spec.rng_seed;
  if (!spec.scenario_name.empty()) j["scenario"] = spec.scenario_name;
  if (spec.exception) {
    nlohmann::json je;
    if (spec.exception->node_id) je["node_id"] = *spec.exception->node_id;
    if (!spec.exception->layers.empty()) je["layers"] = spec.exception->layers;
    je["score"] = spec.exception->score;
    je["strength_multiplier"] = spec.exception->strength_multiplier;
    je["set_no_update"] = spec.exception->set_no_update;
    je["set_internet"] = spec.exception->set_internet;
    j["exception"] = std::move(je);
  }
  return j;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config: expected a JSON object");

  RunConfig c;
  try {
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("out")) c.out_dir = doc["out"].get<std::string>();

    if (doc.contains("graph")) {
      const auto& jg = doc["graph"];
      int sources = 0;
      if (jg.contains("file")) {
        c.graph_file = jg["file"].get<std::string>();
        ++sources;
      }
      if (jg.contains("preset")) {
        RunConfig::Preset p;
        const auto& jp = jg["preset"];
        if (jp.contains("nodes")) p.nodes = jp["nodes"].get<int>();
        if (jp.contains("exception_score")) {
          if (jp["exception_score"].is_null())
            p.exception_score.reset();
          else
            p.exception_score = jp["exception_score"].get<int>();
        }
        if (jp.contains("amplify")) p.amplify = jp["amplify"].get<double>();
        if (jp.contains("exception_internet"))
          p.exception_internet = jp["exception_internet"].get<bool>();
        if (jp.contains("exception_no_update"))
          p.exception_no_update = jp["exception_no_update"].get<bool>();
        c.preset = p;
        ++sources;
      }
      if (jg.contains("generate")) {
        c.generator = generator_from_json(jg["generate"]);
        ++sources;
      }
      if (sources > 1)
        throw ParseError("config: graph source must be exactly one of file|preset|generate");
    }

    if (doc.contains("weights")) {
      const auto& jw = doc["weights"];
      if (jw.contains("l1")) c.assemble.weights.l1 = jw["l1"].get<double>();
      if (jw.contains("l2")) c.assemble.weights.l2 = jw["l2"].get<double>();
      if (jw.contains("l3")) c.assemble.weights.l3 = jw["l3"].get<double>();
      if (jw.contains("l4")) c.assemble.weights.l4 = jw["l4"].get<double>();
      if (jw.contains("l5")) c.assemble.weights.l5 = jw["l5"].get<double>();
    }
    if (doc.contains("encoding")) {
      const auto& je = doc["encoding"];
      if (je.contains("levels")) c.assemble.levels = je["levels"].get<int>();
      if (je.contains("penalty_scale"))
        c.assemble.penalty_scale = je["penalty_scale"].get<double>();
      if (je.contains("penalty") && !je["penalty"].is_null())
        c.assemble.penalty_override = je["penalty"].get<double>();
    }
    if (doc.contains("qubo")) {
      const auto& jq = doc["qubo"];
      if (jq.contains("h4_all_pairs"))
        c.assemble.h4_all_pairs = jq["h4_all_pairs"].get<bool>();
      if (jq.contains("h5_critical_threshold"))
        c.assemble.h5_critical_threshold = jq["h5_critical_threshold"].get<int>();
    }

    if (doc.contains("solver")) {
      const auto& js = doc["solver"];
      if (js.contains("name")) c.solver = js["name"].get<std::string>();
      if (js.contains("seed") && !js["seed"].is_null())
        c.solver_seed = js["seed"].get<std::uint64_t>();
      c.budget = budget_from_json(js);
      if (js.contains("tabu") && js["tabu"].contains("tenure"))
        c.tabu.tenure = js["tabu"]["tenure"].get<int>();
      if (js.contains("anneal")) {
        const auto& ja = js["anneal"];
        if (ja.contains("t0")) c.anneal.t0 = ja["t0"].get<double>();
        if (ja.contains("t1")) c.anneal.t1 = ja["t1"].get<double>();
        if (ja.contains("restarts")) c.anneal.restarts = ja["restarts"].get<int>();
        if (ja.contains("sweeps")) c.anneal.sweeps = ja["sweeps"].get<int>();
      }
      if (js.contains("hybrid")) {
        const auto& jh = js["hybrid"];
        if (jh.contains("subproblem_vars"))
          c.hybrid.subproblem_vars = jh["subproblem_vars"].get<int>();
        if (jh.contains("outer_iters_per_round"))
          c.hybrid.outer_iters_per_round = jh["outer_iters_per_round"].get<int>();
        if (jh.contains("endpoint"))
          c.hybrid.sampler_endpoint = jh["endpoint"].get<std::string>();
      }
    }

    if (doc.contains("recurse")) {
      const auto& jr = doc["recurse"];
      if (jr.contains("iterations"))
        c.recurse_iterations = jr["iterations"].get<int>();
      if (jr.contains("h5_frozen")) c.h5_frozen = jr["h5_frozen"].get<bool>();
    }

    if (doc.contains("bench")) {
      const auto& jb = doc["bench"];
      if (jb.contains("sizes")) c.bench_sizes = jb["sizes"].get<std::vector<int>>();
      if (jb.contains("solvers"))
        c.bench_solvers = jb["solvers"].get<std::vector<std::string>>();
      if (jb.contains("seeds"))
        c.bench_seeds = jb["seeds"].get<std::vector<std::uint64_t>>();
      if (jb.contains("reference"))
        c.bench_reference = jb["reference"].get<std::string>();
      if (jb.contains("threads")) c.bench_threads = jb["threads"].get<unsigned>();
      if (jb.contains("budgets"))
        for (auto it = jb["budgets"].begin(); it != jb["budgets"].end(); ++it)
          c.bench_budgets[it.key()] = budget_from_json(it.value());
    }

    if (doc.contains("include_timing"))
      c.include_timing = doc["include_timing"].get<bool>();
    if (doc.contains("dot")) c.write_dot = doc["dot"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  nlohmann::json doc;
  doc["seed"] = c.seed;
  doc["out"] = c.out_dir;

  nlohmann::json jg = nlohmann::json::object();
  if (c.graph_file) jg["file"] = *c.graph_file;
  if (c.preset) {
    nlohmann::json jp;
    jp["nodes"] = c.preset->nodes;
    if (c.preset->exception_score)
      jp["exception_score"] = *c.preset->exception_score;
    else
      jp["exception_score"] = nullptr;
    jp["amplify"] = c.preset->amplify;
    jp["exception_internet"] = c.preset->exception_internet;
    jp["exception_no_update"] = c.preset->exception_no_update;
    jg["preset"] = std::move(jp);
  }
  if (c.generator) jg["generate"] = generator_to_json(*c.generator);
  doc["graph"] = std::move(jg);

  doc["weights"] = {{"l1", c.assemble.weights.l1},
                    {"l2", c.assemble.weights.l2},
                    {"l3", c.assemble.weights.l3},
                    {"l4", c.assemble.weights.l4},
                    {"l5", c.assemble.weights.l5}};
  nlohmann::json jenc;
  jenc["levels"] = c.assemble.levels;
  jenc["penalty_scale"] = c.assemble.penalty_scale;
  if (c.assemble.penalty_override)
    jenc["penalty"] = *c.assemble.penalty_override;
  else
    jenc["penalty"] = nullptr;
  doc["encoding"] = std::move(jenc);
  doc["qubo"] = {{"h4_all_pairs", c.assemble.h4_all_pairs},
                 {"h5_critical_threshold", c.assemble.h5_critical_threshold}};

  nlohmann::json js;
  js["name"] = c.solver;
  if (c.solver_seed) js["seed"] = *c.solver_seed;
  nlohmann::json jb = budget_to_json(c.budget);
  for (auto it = jb.begin(); it != jb.end(); ++it) js[it.key()] = it.value();
  js["tabu"] = {{"tenure", c.tabu.tenure}};
  js["anneal"] = {{"t0", c.anneal.t0},
                  {"t1", c.anneal.t1},
                  {"restarts", c.anneal.restarts},
                  {"sweeps", c.anneal.sweeps}};
  nlohmann::json jh;
  jh["subproblem_vars"] = c.hybrid.subproblem_vars;
  jh["outer_iters_per_round"] = c.hybrid.outer_iters_per_round;
  if (!c.hybrid.sampler_endpoint.empty())
    jh["endpoint"] = c.hybrid.sampler_endpoint;
  js["hybrid"] = std::move(jh);
  doc["solver"] = std::move(js);

  doc["recurse"] = {{"iterations", c.recurse_iterations},
                    {"h5_frozen", c.h5_frozen}};

  nlohmann::json jbench;
  jbench["sizes"] = c.bench_sizes;
  jbench["solvers"] = c.bench_solvers;
  jbench["seeds"] = c.bench_seeds;
  jbench["reference"] = c.bench_reference;
  jbench["threads"] = c.bench_threads;
  nlohmann::json jbudgets = nlohmann::json::object();
  for (const auto& [name, budget] : c.bench_budgets)
    jbudgets[name] = budget_to_json(budget);
  jbench["budgets"] = std::move(jbudgets);
  doc["bench"] = std::move(jbench);

  doc["include_timing"] = c.include_timing;
  doc["dot"] = c.write_dot;
  return doc.dump(2) + "\n";
}

InfrastructureGraph resolve_graph(const RunConfig& c) {
  int sources = (c.graph_file ? 1 : 0) + (c.preset ? 1 : 0) + (c.generator ? 1 : 0);
  if (sources != 1)
    throw ValidationError("config: exactly one graph source (file|preset|generate) required");

  if (c.graph_file) return load_graph(read_file(*c.graph_file), c.assemble.levels);
  if (c.generator) return generate_layered(*c.generator);

  std::optional<ExceptionSpec> ex;
  if (c.preset->exception_score) {
    ExceptionSpec e;
    e.score = *c.preset->exception_score;
    e.strength_multiplier = std::max(1.0, c.preset->amplify);
    e.set_internet = c.preset->exception_internet;
    e.set_no_update = c.preset->exception_no_update;
    ex = std::move(e);
  }
  return generate_layered(preset_layered_spec(c.preset->nodes, c.seed, ex));
}

namespace {

SolverRequest make_request(const RunConfig& c, const QuboModel& q) {
  SolverRequest req;
  req.qubo = &q;
  req.seed = c.solver_seed.value_or(c.seed);
  req.budget = c.budget;
  req.tabu = c.tabu;
  req.anneal = c.anneal;
  req.hybrid = c.hybrid;
  if (req.hybrid.sampler_endpoint.empty()) {
    if (const char* env = std::getenv(kSamplerEndpointEnv))
      req.hybrid.sampler_endpoint = env;
  }
  return req;
}

nlohmann::json solution_to_json(const Solution& s, bool include_timing) {
  nlohmann::json doc;
  doc["schema"] = "cyrisk-solution-v1";
  doc["solver"] = s.solver_name;
  doc["seed"] = s.seed;
  doc["energy"] = s.energy;
  doc["iterations"] = s.iterations;
  doc["repairs"] = s.repairs;
  doc["decoded_scores"] = s.decoded_scores;
  std::string bits;
  bits.reserve(s.assignment.size());
  for (std::uint8_t b : s.assignment.bits) bits += b ? '1' : '0';
  doc["assignment"] = bits;
  doc["metadata"] = s.metadata;
  if (include_timing) doc["wall_time_s"] = s.wall_time_s;
  return doc;
}

}  // namespace

int cmd_generate(const RunConfig& c) {
  InfrastructureGraph g = resolve_graph(c);
  fs::path out(c.out_dir);
  write_file(out / "graph.json", save_graph(g));
  if (c.write_dot) write_file(out / "graph.dot", to_dot(g, c.assemble.levels));
  write_file(out / "run_config.json", run_config_to_json(c));
  std::cout << "generated graph with " << g.nodes.size() << " nodes, "
            << g.edges.size() << " edges -> " << (out / "graph.json").string()
            << "\n";
  return 0;
}

int cmd_solve(const RunConfig& c) {
  InfrastructureGraph g = resolve_graph(c);
  QuboModel q = assemble(g, c.assemble);
  SolverRequest req = make_request(c, q);
  Solution sol = solve_with(c.solver, req);
  RiskReport report = transition_report(g, sol, c.assemble.levels);

  fs::path out(c.out_dir);
  write_file(out / "solution.json",
             solution_to_json(sol, c.include_timing).dump(2) + "\n");
  write_file(out / "report.json", report_to_json(report));
  write_file(out / "report_transitions.csv", transitions_csv(report));
  write_file(out / "report_summary.csv", summary_csv(report));
  write_file(out / "trace.csv", trace_csv(sol.trace));
  write_file(out / "run_config.json", run_config_to_json(c));
  std::cout << "solver " << sol.solver_name << " energy " << fmt17(sol.energy)
            << " mean risk " << fmt17(score_stats(sol.decoded_scores).mean)
            << " -> " << (out / "solution.json").string() << "\n";
  return 0;
}

int cmd_recurse(const RunConfig& c) {
  if (c.recurse_iterations < 1)
    throw ValidationError("recurse: iterations must be >= 1");
  InfrastructureGraph g = resolve_graph(c);
  RunConfig solver_cfg = c;
  SolveFn fn = [&solver_cfg](const QuboModel& q, std::uint64_t seed) {
    SolverRequest req = make_request(solver_cfg, q);
    req.seed = seed;
    req.record_trace = false;
    return solve_with(solver_cfg.solver, req);
  };
  RecursionTrace trace =
      recursive_minimize(g, fn, c.recurse_iterations, c.assemble,
                         c.solver_seed.value_or(c.seed), c.h5_frozen);

  fs::path out(c.out_dir);
  write_file(out / "recursion.json", recursion_to_json(trace));
  write_file(out / "recursion_means.csv", recursion_means_csv(trace));
  write_file(out / "run_config.json", run_config_to_json(c));
  std::cout << "recursion classified " << to_string(trace.classification);
  if (trace.fixed_point_iteration)
    std::cout << " (fixed point at iteration " << *trace.fixed_point_iteration << ")";
  std::cout << " -> " << (out / "recursion.json").string() << "\n";
  return 0;
}

int cmd_bench(const RunConfig& c) {
  BenchOptions opt;
  opt.sizes = c.bench_sizes;
  opt.solvers = c.bench_solvers;
  opt.seeds = c.bench_seeds;
  opt.reference = c.bench_reference;
  opt.assemble = c.assemble;
  opt.budgets = c.bench_budgets;
  opt.tabu = c.tabu;
  opt.anneal = c.anneal;
  opt.hybrid = c.hybrid;
  opt.threads = c.bench_threads;
  if (opt.solvers.empty()) opt.solvers = {"tabu"};
  if (opt.seeds.empty()) opt.seeds = {c.seed};
  std::vector<BenchRecord> records = scaling_bench(opt);

  fs::path out(c.out_dir);
  write_file(out / "bench.csv", bench_csv(records));
  write_file(out / "run_config.json", run_config_to_json(c));
  std::cout << "bench wrote " << records.size() << " records -> "
            << (out / "bench.csv").string() << "\n";
  return 0;
}

int cmd_export_dot(const RunConfig& c, const std::string& out_file) {
  InfrastructureGraph g = resolve_graph(c);
  write_file(out_file, to_dot(g, c.assemble.levels));
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

int cmd_export_qubo(const RunConfig& c, const std::string& out_file) {
  InfrastructureGraph g = resolve_graph(c);
  QuboModel q = assemble(g, c.assemble);
  write_file(out_file, export_qubo(q));
  std::cout << "wrote " << out_file << " (" << q.n_vars() << " vars, "
            << q.n_quadratic() << " couplings)\n";
  return 0;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  if (dynamic_cast<const ParseError*>(&e)) return 2;
  if (dynamic_cast<const LookupError*>(&e)) return 2;
  if (dynamic_cast<const CapacityError*>(&e)) return 2;
  return 1;
}

}  // namespace cyrisk
