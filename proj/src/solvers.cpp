#include "cyrisk/solvers.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cyrisk/errors.hpp"
#include "cyrisk/remote_sampler.hpp"
#include "cyrisk/rng.hpp"

namespace cyrisk {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Incumbent assignment with cached single-flip deltas, maintained in
// O(row degree) per flip.
struct FlipState {
  const QuboModel* q = nullptr;
  Assignment x;
  double energy = 0.0;
  std::vector<double> delta;

  void reset(const QuboModel& model, Assignment a) {
    q = &model;
    x = std::move(a);
    energy = q->energy(x);
    delta.resize(q->n_vars());
    for (std::size_t v = 0; v < q->n_vars(); ++v)
      delta[v] = q->delta_energy(x, v);
  }

  void flip(std::size_t v) {
    energy += delta[v];
    x.bits[v] ^= 1;
    delta[v] = -delta[v];
    const double dxv = x.bits[v] ? 1.0 : -1.0;
    auto cols = q->row_cols(v);
    auto vals = q->row_vals(v);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::size_t w = cols[k];
      delta[w] += (x.bits[w] ? -1.0 : 1.0) * vals[k] * dxv;
    }
  }
};

Assignment initial_assignment(const QuboModel& q) {
  if (q.encoding() && q.seed_scores().size() == q.encoding()->n_nodes()) {
    bool ok = true;
    for (int s : q.seed_scores())
      ok = ok && s >= 1 && s <= q.encoding()->levels();
    if (ok) return q.encoding()->encode(q.seed_scores());
  }
  return Assignment(q.n_vars());
}

Assignment random_assignment(const QuboModel& q, Rng& rng) {
  if (q.encoding()) {
    const ScoreEncoding& enc = *q.encoding();
    Assignment a(q.n_vars());
    for (std::size_t i = 0; i < enc.n_nodes(); ++i)
      a.bits[enc.var_index(i, rng.int_in(1, enc.levels()))] = 1;
    return a;
  }
  Assignment a(q.n_vars());
  for (auto& b : a.bits) b = static_cast<std::uint8_t>(rng.below(2));
  return a;
}

Solution finalize(const QuboModel& q, Assignment best, std::string name,
                  std::uint64_t seed, std::uint64_t iterations,
                  std::vector<TracePoint> trace, Clock::time_point t0) {
  Solution s;
  s.assignment = std::move(best);
  s.energy = q.energy(s.assignment);  // exact re-evaluation, not the running sum
  if (q.encoding()) {
    std::vector<int> fallback = q.seed_scores();
    if (fallback.size() != q.encoding()->n_nodes())
      fallback.assign(q.encoding()->n_nodes(), 1);
    auto dec = q.encoding()->decode_repaired(s.assignment, fallback);
    s.decoded_scores = std::move(dec.scores);
    s.repairs = dec.repairs;
  }
  s.iterations = iterations;
  s.solver_name = std::move(name);
  s.seed = seed;
  s.trace = std::move(trace);
  s.wall_time_s = elapsed_s(t0);
  return s;
}

struct BestTracker {
  Assignment x;
  double e = std::numeric_limits<double>::infinity();
  std::vector<TracePoint> trace;
  bool record = true;
  Clock::time_point t0;

  void offer(const Assignment& cand, double energy, std::uint64_t iteration) {
    if (energy < e) {
      e = energy;
      x = cand;
      if (record)
        trace.push_back({iteration, e, 1000.0 * elapsed_s(t0)});
    }
  }
};

// One tabu move: flip the best admissible variable (non-tabu, or tabu but
// improving on the best known energy), even when it worsens the incumbent.
struct TabuEngine {
  FlipState st;
  std::vector<std::uint64_t> tabu_until;
  std::uint64_t iter = 0;
  int tenure = 10;
  BestTracker best;

  void init(const QuboModel& q, Assignment start, const TabuParams& p,
            bool record, Clock::time_point t0) {
    st.reset(q, std::move(start));
    tabu_until.assign(q.n_vars(), 0);
    tenure = std::max(1, p.tenure);
    best.record = record;
    best.t0 = t0;
    best.offer(st.x, st.energy, 0);
  }

  void step() {
    const std::size_t n = st.delta.size();
    std::size_t pick = n;
    double pick_d = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < n; ++v) {
      if (tabu_until[v] > iter && !(st.energy + st.delta[v] < best.e)) continue;
      if (st.delta[v] < pick_d) {
        pick_d = st.delta[v];
        pick = v;
      }
    }
    if (pick == n) {
      // everything tabu with no aspiration; take the least-bad move anyway
      pick_d = std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < n; ++v) {
        if (st.delta[v] < pick_d) {
          pick_d = st.delta[v];
          pick = v;
        }
      }
    }
    st.flip(pick);
    tabu_until[pick] = iter + static_cast<std::uint64_t>(tenure);
    ++iter;
    best.offer(st.x, st.energy, iter);
  }
};

std::uint64_t default_iterations(const QuboModel& q) {
  return 100 * static_cast<std::uint64_t>(std::max<std::size_t>(1, q.n_vars()));
}

const QuboModel& need_qubo(const SolverRequest& req) {
  if (!req.qubo) throw ValidationError("solver request has no qubo");
  return *req.qubo;
}

// Gray-code scan over all 2^n assignments; returns the first-found minimum.
std::pair<Assignment, double> exhaustive_min(const QuboModel& q) {
  FlipState st;
  st.reset(q, Assignment(q.n_vars()));
  Assignment best_x = st.x;
  double best_e = st.energy;
  const std::uint64_t total = std::uint64_t{1} << q.n_vars();
  for (std::uint64_t i = 1; i < total; ++i) {
    st.flip(static_cast<std::size_t>(std::countr_zero(i)));
    if (st.energy < best_e) {
      best_e = st.energy;
      best_x = st.x;
    }
  }
  return {std::move(best_x), best_e};
}

}  // namespace

Solution solve_exhaustive(const SolverRequest& req) {
  const QuboModel& q = need_qubo(req);
  const auto t0 = Clock::now();
  const std::size_t cap = std::min<std::size_t>(req.exhaustive_cap, 62);
  if (q.n_vars() > cap)
    throw CapacityError("exhaustive solver capped at " + std::to_string(cap) +
                        " variables; instance has " + std::to_string(q.n_vars()));

  FlipState st;
  st.reset(q, Assignment(q.n_vars()));
  BestTracker best;
  best.record = req.record_trace;
  best.t0 = t0;
  best.offer(st.x, st.energy, 0);
  const std::uint64_t total = std::uint64_t{1} << q.n_vars();
  for (std::uint64_t i = 1; i < total; ++i) {
    st.flip(static_cast<std::size_t>(std::countr_zero(i)));
    best.offer(st.x, st.energy, i);
  }
  return finalize(q, std::move(best.x), "exhaustive", req.seed, total,
                  std::move(best.trace), t0);
}

Solution solve_tabu(const SolverRequest& req) {
  const QuboModel& q = need_qubo(req);
  const auto t0 = Clock::now();
  const std::uint64_t max_iter =
      req.budget.max_iterations.value_or(req.budget.wall_seconds
                                             ? std::numeric_limits<std::uint64_t>::max()
                                             : default_iterations(q));
  TabuEngine engine;
  engine.init(q, initial_assignment(q), req.tabu, req.record_trace, t0);
  while (engine.iter < max_iter) {
    if (req.budget.wall_seconds && elapsed_s(t0) >= *req.budget.wall_seconds) break;
    engine.step();
  }
  return finalize(q, std::move(engine.best.x), "tabu", req.seed, engine.iter,
                  std::move(engine.best.trace), t0);
}

Solution solve_anneal(const SolverRequest& req) {
  const QuboModel& q = need_qubo(req);
  const auto t0 = Clock::now();
  const std::size_t n = q.n_vars();
  if (n == 0) return finalize(q, Assignment(0), "anneal", req.seed, 0, {}, t0);

  const AnnealParams& p = req.anneal;
  const int restarts = std::max(1, p.restarts);
  const int sweeps = std::max(1, p.sweeps);
  const double t_hot = p.t0 > 0.0 ? p.t0 : q.max_abs_coefficient();
  const double t_cold = std::max(0.0, p.t1);
  const std::uint64_t max_props = req.budget.max_iterations.value_or(
      static_cast<std::uint64_t>(restarts) * sweeps * n);

  BestTracker best;
  best.record = req.record_trace;
  best.t0 = t0;
  FlipState st;
  std::uint64_t proposals = 0;
  bool out_of_budget = false;

  for (int r = 0; r < restarts && !out_of_budget; ++r) {
    Rng rng(Rng::derive(req.seed, static_cast<std::uint64_t>(r)));
    st.reset(q, r == 0 ? initial_assignment(q) : random_assignment(q, rng));
    best.offer(st.x, st.energy, proposals);
    for (int sweep = 0; sweep < sweeps && !out_of_budget; ++sweep) {
      double temp;
      if (t_hot <= 0.0) {
        temp = 0.0;  // degenerate schedule: greedy descent
      } else if (sweeps == 1 || t_cold <= 0.0) {
        temp = sweeps == 1 ? t_hot : t_hot * (1.0 - double(sweep) / (sweeps - 1));
      } else {
        temp = t_hot * std::pow(t_cold / t_hot, double(sweep) / (sweeps - 1));
      }
      for (std::size_t s = 0; s < n; ++s) {
        if (proposals >= max_props) {
          out_of_budget = true;
          break;
        }
        const std::size_t v = rng.below(n);
        const double d = st.delta[v];
        ++proposals;
        const bool accept =
            d <= 0.0 || (temp > 0.0 && rng.real01() < std::exp(-d / temp));
        if (accept) {
          st.flip(v);
          best.offer(st.x, st.energy, proposals);
        }
      }
      if (req.budget.wall_seconds && elapsed_s(t0) >= *req.budget.wall_seconds)
        out_of_budget = true;
    }
  }
  return finalize(q, std::move(best.x), "anneal", req.seed, proposals,
                  std::move(best.trace), t0);
}

namespace {

// Highest-impact variables at the incumbent, grouped by node when an
// encoding is attached so the subproblem can move whole score levels.
std::vector<std::uint32_t> select_subproblem_vars(const QuboModel& q,
                                                  const FlipState& st,
                                                  int max_vars) {
  std::vector<std::uint32_t> chosen;
  if (q.encoding()) {
    const ScoreEncoding& enc = *q.encoding();
    const int k = enc.levels();
    const std::size_t n_nodes = enc.n_nodes();
    const std::size_t take =
        std::max<std::size_t>(1, static_cast<std::size_t>(max_vars) / k);
    std::vector<std::pair<double, std::size_t>> impact(n_nodes);
    for (std::size_t node = 0; node < n_nodes; ++node) {
      double m = 0.0;
      for (int lv = 1; lv <= k; ++lv)
        m = std::max(m, std::fabs(st.delta[enc.var_index(node, lv)]));
      impact[node] = {m, node};
    }
    std::sort(impact.begin(), impact.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t i = 0; i < std::min(take, n_nodes); ++i)
      for (int lv = 1; lv <= k; ++lv)
        chosen.push_back(
            static_cast<std::uint32_t>(impact[i].second * k + (lv - 1)));
  } else {
    std::vector<std::pair<double, std::size_t>> impact(q.n_vars());
    for (std::size_t v = 0; v < q.n_vars(); ++v)
      impact[v] = {std::fabs(st.delta[v]), v};
    std::sort(impact.begin(), impact.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t i = 0;
         i < std::min<std::size_t>(static_cast<std::size_t>(max_vars), q.n_vars());
         ++i)
      chosen.push_back(static_cast<std::uint32_t>(impact[i].second));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

// Clamp everything outside `vars` at the incumbent and build the induced
// subproblem; its energy on the restricted bits equals the full energy.
struct Subproblem {
  QuboModel model;
  Assignment current;  // incumbent restricted to the subproblem vars
};

Subproblem extract_subproblem(const QuboModel& q, const Assignment& x,
                              const std::vector<std::uint32_t>& vars) {
  const std::size_t m = vars.size();
  std::vector<int> local(q.n_vars(), -1);
  for (std::size_t i = 0; i < m; ++i) local[vars[i]] = static_cast<int>(i);

  std::vector<double> lin(m, 0.0);
  std::vector<QuadTerm> upper;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t v = vars[i];
    double l = q.linear()[v];
    auto cols = q.row_cols(v);
    auto vals = q.row_vals(v);
    for (std::size_t kk = 0; kk < cols.size(); ++kk) {
      const std::size_t w = cols[kk];
      if (local[w] >= 0) {
        if (w > v)
          upper.push_back({static_cast<std::uint32_t>(i),
                           static_cast<std::uint32_t>(local[w]), vals[kk]});
      } else if (x.bits[w]) {
        l += vals[kk];  // clamped context folds into the linear term
      }
    }
    lin[i] = l;
  }

  Subproblem sub;
  sub.model = QuboModel::from_terms(m, 0.0, std::move(lin), std::move(upper), 0.0);
  sub.current = Assignment(m);
  for (std::size_t i = 0; i < m; ++i) sub.current.bits[i] = x.bits[vars[i]];
  return sub;
}

}  // namespace

Solution solve_hybrid(const SolverRequest& req) {
  const QuboModel& q = need_qubo(req);
  const auto t0 = Clock::now();
  const HybridParams& hp = req.hybrid;
  if (hp.subproblem_vars < 1 || hp.subproblem_vars > 24)
    throw ValidationError("hybrid subproblem size must be in [1,24]");
  const int segment = std::max(1, hp.outer_iters_per_round);

  SolverBudget budget = req.budget;
  if (!budget.wall_seconds && !budget.max_rounds && !budget.max_iterations)
    budget.wall_seconds = 5.0;

  TabuEngine engine;
  engine.init(q, initial_assignment(q), req.tabu, req.record_trace, t0);

  std::uint64_t rounds = 0, subcalls = 0, fallbacks = 0;
  std::uint64_t discarded = 0;
  auto out_of_budget = [&]() {
    if (budget.wall_seconds && elapsed_s(t0) >= *budget.wall_seconds) return true;
    if (budget.max_iterations && engine.iter >= *budget.max_iterations) return true;
    return false;
  };

  bool done = budget.max_rounds && *budget.max_rounds == 0 && !budget.wall_seconds &&
              !budget.max_iterations;
  while (!done) {
    for (int i = 0; i < segment; ++i) {
      if (out_of_budget()) {
        done = true;
        break;
      }
      engine.step();
    }
    if (done) break;
    if (budget.max_rounds && rounds >= *budget.max_rounds) break;
    if (out_of_budget()) break;

    auto vars = select_subproblem_vars(q, engine.st, hp.subproblem_vars);
    Subproblem sub = extract_subproblem(q, engine.st.x, vars);
    ++subcalls;

    Assignment sub_best;
    double sub_best_e = 0.0;
    bool have_sub = false;
    if (!hp.sampler_endpoint.empty()) {
      try {
        RemoteSampleResult rs = remote_sample(sub.model, hp.sampler_endpoint);
        discarded += rs.discarded;
        if (!rs.samples.empty()) {
          sub_best = rs.samples.front();
          sub_best_e = rs.energies.front();
          have_sub = true;
        } else {
          ++fallbacks;
        }
      } catch (const RemoteError&) {
        ++fallbacks;
      }
    }
    if (!have_sub) std::tie(sub_best, sub_best_e) = exhaustive_min(sub.model);

    const double current_restricted = sub.model.energy(sub.current);
    if (sub_best_e < current_restricted - 1e-12) {
      for (std::size_t i = 0; i < vars.size(); ++i)
        if (sub_best.bits[i] != engine.st.x.bits[vars[i]]) engine.st.flip(vars[i]);
      engine.best.offer(engine.st.x, engine.st.energy, engine.iter);
    }
    ++rounds;
    if (budget.max_rounds && rounds >= *budget.max_rounds) break;
  }

  Solution s = finalize(q, std::move(engine.best.x), "hybrid", req.seed,
                        engine.iter, std::move(engine.best.trace), t0);
  s.metadata["rounds"] = std::to_string(rounds);
  s.metadata["subproblem_calls"] = std::to_string(subcalls);
  s.metadata["sampler_fallbacks"] = std::to_string(fallbacks);
  s.metadata["sampler_discarded"] = std::to_string(discarded);
  s.metadata["subproblem_mode"] =
      hp.sampler_endpoint.empty() ? "exact" : "remote";
  return s;
}

const std::vector<std::string>& solver_names() {
  static const std::vector<std::string> names = {"exhaustive", "tabu", "anneal",
                                                 "hybrid"};
  return names;
}

Solution solve_with(const std::string& name, const SolverRequest& req) {
  if (name == "exhaustive") return solve_exhaustive(req);
  if (name == "tabu") return solve_tabu(req);
  if (name == "anneal") return solve_anneal(req);
  if (name == "hybrid") return solve_hybrid(req);
  throw LookupError("unknown solver '" + name +
                    "' (expected exhaustive|tabu|anneal|hybrid)");
}

std::string trace_csv(const std::vector<TracePoint>& trace) {
  std::string out = "iteration,best_energy,wall_ms\n";
  char buf[96];
  for (const TracePoint& t : trace) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.3f\n",
                  static_cast<unsigned long long>(t.iteration), t.best_energy,
                  t.wall_ms);
    out += buf;
  }
  return out;
}

}  // namespace cyrisk
