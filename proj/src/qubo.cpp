#include "cyrisk/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "cyrisk/errors.hpp"

namespace cyrisk {

namespace {

constexpr std::uint64_t pack(std::size_t u, std::size_t v) {
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

void format_value(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

ScorePolynomial::ScorePolynomial(std::size_t n_nodes) : linear_(n_nodes, 0.0) {}

void ScorePolynomial::add_quadratic(std::size_t u, std::size_t v, double c) {
  if (u > v) std::swap(u, v);
  quad_[pack(u, v)] += c;
}

void ScorePolynomial::add_scaled(const ScorePolynomial& other, double scale) {
  if (scale == 0.0) return;
  constant_ += scale * other.constant_;
  for (std::size_t i = 0; i < linear_.size(); ++i)
    linear_[i] += scale * other.linear_[i];
  for (const auto& [key, c] : other.quad_) quad_[key] += scale * c;
}

double ScorePolynomial::evaluate(std::span<const int> scores) const {
  double e = constant_;
  for (std::size_t i = 0; i < linear_.size(); ++i)
    e += linear_[i] * scores[i];
  for (const auto& [key, c] : quad_) {
    std::size_t u = key >> 32;
    std::size_t v = key & 0xffffffffULL;
    e += c * scores[u] * scores[v];
  }
  return e;
}

ScorePolynomial build_h1(const InfrastructureGraph& g) {
  ScorePolynomial p(g.nodes.size());
  for (std::size_t u = 0; u < g.nodes.size(); ++u) {
    double is = g.nodes[u].initial_score;
    // IS * (IS - FS)^2 = IS^3 - 2 IS^2 FS + IS FS^2
    p.add_constant(is * is * is);
    p.add_linear(u, -2.0 * is * is);
    p.add_quadratic(u, u, is);
  }
  return p;
}

ScorePolynomial build_h2(const InfrastructureGraph& g) {
  ScorePolynomial p(g.nodes.size());
  for (const EdgeSpec& e : g.edges) {
    std::size_t u = g.node_index(e.a);
    std::size_t v = g.node_index(e.b);
    p.add_quadratic(u, v, -e.strength);
  }
  return p;
}

ScorePolynomial build_h3(const InfrastructureGraph& g) {
  ScorePolynomial p(g.nodes.size());
  auto adj = g.adjacency();
  for (std::size_t u = 0; u < adj.size(); ++u) {
    const auto& nb = adj[u];
    if (nb.empty()) continue;  // isolated nodes have no neighbor mean
    double inv = 1.0 / static_cast<double>(nb.size());
    // (FS_u - inv * sum_j FS_j)^2
    p.add_quadratic(u, u, 1.0);
    for (std::size_t j : nb) p.add_quadratic(u, j, -2.0 * inv);
    for (std::size_t a = 0; a < nb.size(); ++a) {
      p.add_quadratic(nb[a], nb[a], inv * inv);
      for (std::size_t b = a + 1; b < nb.size(); ++b)
        p.add_quadratic(nb[a], nb[b], 2.0 * inv * inv);
    }
  }
  return p;
}

ScorePolynomial build_h4(const InfrastructureGraph& g, bool all_pairs) {
  ScorePolynomial p(g.nodes.size());
  auto flags = [&](std::size_t u) {
    return static_cast<double>(g.nodes[u].no_update_flag) +
           static_cast<double>(g.nodes[u].internet_flag);
  };
  if (all_pairs) {
    for (std::size_t u = 0; u < g.nodes.size(); ++u)
      for (std::size_t v = u + 1; v < g.nodes.size(); ++v) {
        double w = flags(u) + flags(v);
        if (w == 0.0) continue;
        p.add_linear(u, -w);
        p.add_linear(v, -w);
      }
  } else {
    for (const EdgeSpec& e : g.edges) {
      std::size_t u = g.node_index(e.a);
      std::size_t v = g.node_index(e.b);
      double w = flags(u) + flags(v);
      if (w == 0.0) continue;
      p.add_linear(u, -w);
      p.add_linear(v, -w);
    }
  }
  return p;
}

ScorePolynomial build_h5(const InfrastructureGraph& g, int critical_threshold) {
  ScorePolynomial p(g.nodes.size());
  for (std::size_t u = 0; u < g.nodes.size(); ++u)
    if (g.nodes[u].initial_score >= critical_threshold) p.add_linear(u, -1.0);
  return p;
}

QuboModel QuboModel::from_terms(std::size_t n_vars, double offset,
                                std::vector<double> linear,
                                std::vector<QuadTerm> upper, double prune_eps) {
  if (linear.size() != n_vars)
    throw ValidationError("from_terms: linear size != n_vars");
  for (const QuadTerm& t : upper)
    if (t.i >= t.j || t.j >= n_vars)
      throw ValidationError("from_terms: quadratic term not strictly upper-triangular");

  std::sort(upper.begin(), upper.end(), [](const QuadTerm& a, const QuadTerm& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  // merge duplicates, prune negligible coefficients
  std::size_t w = 0;
  for (std::size_t r = 0; r < upper.size();) {
    QuadTerm t = upper[r++];
    while (r < upper.size() && upper[r].i == t.i && upper[r].j == t.j)
      t.value += upper[r++].value;
    if (std::fabs(t.value) > prune_eps) upper[w++] = t;
  }
  upper.resize(w);
  for (double& v : linear)
    if (v != 0.0 && std::fabs(v) <= prune_eps) v = 0.0;

  QuboModel q;
  q.offset_ = offset;
  q.linear_ = std::move(linear);
  q.row_start_.assign(n_vars + 1, 0);
  for (const QuadTerm& t : upper) {
    ++q.row_start_[t.i + 1];
    ++q.row_start_[t.j + 1];
  }
  for (std::size_t i = 0; i < n_vars; ++i) q.row_start_[i + 1] += q.row_start_[i];
  q.cols_.resize(2 * upper.size());
  q.vals_.resize(2 * upper.size());
  std::vector<std::size_t> fill(q.row_start_.begin(), q.row_start_.end() - 1);
  // terms arrive sorted by (i, j); each row receives mirrored columns first
  // (ascending), then direct ones (ascending), so rows end up sorted
  for (const QuadTerm& t : upper) {
    q.cols_[fill[t.i]] = t.j;
    q.vals_[fill[t.i]++] = t.value;
    q.cols_[fill[t.j]] = t.i;
    q.vals_[fill[t.j]++] = t.value;
  }
  return q;
}

std::vector<QuadTerm> QuboModel::quadratic_terms() const {
  std::vector<QuadTerm> out;
  out.reserve(n_quadratic());
  for_each_quadratic([&](std::uint32_t i, std::uint32_t j, double v) {
    out.push_back({i, j, v});
  });
  return out;
}

double QuboModel::energy(const Assignment& a) const {
  if (a.size() != n_vars())
    throw ValidationError("energy: assignment length mismatch");
  double e = offset_;
  for (std::size_t i = 0; i < n_vars(); ++i) {
    if (!a.bits[i]) continue;
    e += linear_[i];
    for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
      if (cols_[k] > i && a.bits[cols_[k]]) e += vals_[k];
  }
  return e;
}

double QuboModel::delta_energy(const Assignment& a, std::size_t v) const {
  double s = linear_[v];
  for (std::size_t k = row_start_[v]; k < row_start_[v + 1]; ++k)
    if (a.bits[cols_[k]]) s += vals_[k];
  return a.bits[v] ? -s : s;
}

double QuboModel::max_abs_coefficient() const {
  double m = 0.0;
  for (double v : linear_) m = std::max(m, std::fabs(v));
  for (double v : vals_) m = std::max(m, std::fabs(v));
  return m;
}

void QuboModel::attach_encoding(ScoreEncoding enc, std::vector<int> node_ids,
                                std::vector<int> seed_scores) {
  if (enc.num_vars() != n_vars())
    throw ValidationError("attach_encoding: variable count mismatch");
  encoding_ = std::move(enc);
  node_ids_ = std::move(node_ids);
  seed_scores_ = std::move(seed_scores);
}

namespace {

ComponentStats stats_of(const ScorePolynomial& p, double scale) {
  ComponentStats s;
  if (scale == 0.0) return s;
  s.offset = scale * p.constant();
  for (double c : p.linear()) {
    if (c == 0.0) continue;
    s.linear_sum += scale * c;
    ++s.n_linear;
  }
  for (const auto& [key, c] : p.quadratic()) {
    (void)key;
    s.quadratic_sum += scale * c;
    ++s.n_quadratic;
  }
  return s;
}

}  // namespace

QuboModel assemble(const InfrastructureGraph& g_in, const AssembleOptions& opt) {
  InfrastructureGraph g = g_in;
  g.canonicalize();
  g.validate(opt.levels);

  const std::size_t n = g.nodes.size();
  const int K = opt.levels;
  const Weights& w = opt.weights;

  ScorePolynomial h5(n);
  if (opt.h5_critical_ids) {
    for (int id : *opt.h5_critical_ids) h5.add_linear(g.node_index(id), -1.0);
  } else {
    h5 = build_h5(g, opt.h5_critical_threshold);
  }

  const ScorePolynomial h1 = build_h1(g);
  const ScorePolynomial h2 = build_h2(g);
  const ScorePolynomial h3 = build_h3(g);
  const ScorePolynomial h4 = build_h4(g, opt.h4_all_pairs);

  ScorePolynomial obj(n);
  obj.add_scaled(h1, w.l1);
  obj.add_scaled(h2, w.l2);
  obj.add_scaled(h3, w.l3);
  obj.add_scaled(h4, w.l4);
  obj.add_scaled(h5, w.l5);

  std::map<std::string, ComponentStats> provenance;
  provenance["h1"] = stats_of(h1, w.l1);
  provenance["h2"] = stats_of(h2, w.l2);
  provenance["h3"] = stats_of(h3, w.l3);
  provenance["h4"] = stats_of(h4, w.l4);
  provenance["h5"] = stats_of(h5, w.l5);

  // Split node-level terms into per-node diagonal / linear / cross-pair views.
  std::vector<double> diag(n, 0.0);
  std::vector<double> lin(n, 0.0);
  std::vector<std::pair<std::uint64_t, double>> pairs;
  pairs.reserve(obj.quadratic().size());
  for (std::size_t u = 0; u < n; ++u) lin[u] = obj.linear()[u];
  for (const auto& [key, c] : obj.quadratic()) {
    if (std::fabs(c) <= opt.prune_eps) continue;
    std::size_t u = key >> 32;
    std::size_t v = key & 0xffffffffULL;
    if (u == v)
      diag[u] += c;
    else
      pairs.push_back({key, c});
  }
  std::sort(pairs.begin(), pairs.end());  // deterministic expansion order

  // One-hot penalty from the flip-impact bound of the objective-only QUBO:
  // for variable (u,k) the bound is |lin_bit| + sum over its couplings.
  const double sum_levels = 0.5 * K * (K + 1);
  std::vector<double> cross_abs(n, 0.0);
  for (const auto& [key, c] : pairs) {
    cross_abs[key >> 32] += std::fabs(c);
    cross_abs[key & 0xffffffffULL] += std::fabs(c);
  }
  double flip_bound = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    for (int k = 1; k <= K; ++k) {
      double lin_bit = lin[u] * k + diag[u] * static_cast<double>(k) * k;
      double b = std::fabs(lin_bit) +
                 2.0 * std::fabs(diag[u]) * k * (sum_levels - k) +
                 k * sum_levels * cross_abs[u];
      flip_bound = std::max(flip_bound, b);
    }
  }
  const double penalty = opt.penalty_override.value_or(
      std::max(opt.penalty_floor, opt.penalty_scale * flip_bound));

  ScoreEncoding enc(n, K, penalty);

  // Expand FS_u = sum_k k * x_{u,k} into bit-level terms.
  std::vector<double> bit_linear(n * static_cast<std::size_t>(K), 0.0);
  double offset = obj.constant();
  std::vector<QuadTerm> upper;
  std::size_t reserve = pairs.size() * static_cast<std::size_t>(K) * K +
                        2 * n * static_cast<std::size_t>(K) * (K - 1) / 2;
  upper.reserve(reserve);

  for (std::size_t u = 0; u < n; ++u) {
    std::size_t base = u * static_cast<std::size_t>(K);
    for (int k = 1; k <= K; ++k) {
      double c = lin[u] * k + diag[u] * static_cast<double>(k) * k;
      bit_linear[base + k - 1] += c;
    }
    if (diag[u] != 0.0) {
      for (int k = 1; k <= K; ++k)
        for (int l = k + 1; l <= K; ++l)
          upper.push_back({static_cast<std::uint32_t>(base + k - 1),
                           static_cast<std::uint32_t>(base + l - 1),
                           2.0 * diag[u] * k * l});
    }
  }
  for (const auto& [key, c] : pairs) {
    std::size_t u = key >> 32;
    std::size_t v = key & 0xffffffffULL;
    std::size_t ubase = u * static_cast<std::size_t>(K);
    std::size_t vbase = v * static_cast<std::size_t>(K);
    for (int k = 1; k <= K; ++k)
      for (int l = 1; l <= K; ++l)
        upper.push_back({static_cast<std::uint32_t>(ubase + k - 1),
                         static_cast<std::uint32_t>(vbase + l - 1),
                         c * static_cast<double>(k) * l});
  }

  SparseTerms pen = onehot_penalty_terms(enc);
  offset += pen.offset;
  for (const auto& [v, c] : pen.linear) bit_linear[v] += c;
  for (const auto& [i, j, c] : pen.quadratic)
    upper.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), c});
  ComponentStats pen_stats;
  pen_stats.offset = pen.offset;
  for (const auto& [v, c] : pen.linear) {
    (void)v;
    pen_stats.linear_sum += c;
    ++pen_stats.n_linear;
  }
  for (const auto& [i, j, c] : pen.quadratic) {
    (void)i;
    (void)j;
    pen_stats.quadratic_sum += c;
    ++pen_stats.n_quadratic;
  }
  provenance["penalty"] = pen_stats;

  QuboModel q = QuboModel::from_terms(n * static_cast<std::size_t>(K), offset,
                                      std::move(bit_linear), std::move(upper),
                                      opt.prune_eps);
  std::vector<int> ids;
  std::vector<int> seeds;
  ids.reserve(n);
  seeds.reserve(n);
  for (const NodeSpec& node : g.nodes) {
    ids.push_back(node.id);
    seeds.push_back(node.initial_score);
  }
  q.attach_encoding(std::move(enc), std::move(ids), std::move(seeds));
  q.set_provenance(std::move(provenance));
  return q;
}

std::string export_qubo(const QuboModel& q) {
  std::string out;
  std::size_t n_linear = 0;
  for (double v : q.linear())
    if (v != 0.0) ++n_linear;

  char head[128];
  std::snprintf(head, sizeof head, "p qubo %zu %zu %zu ", q.n_vars(), n_linear,
                q.n_quadratic());
  out += head;
  format_value(out, q.offset());
  out += '\n';

  if (q.encoding() && q.n_vars() > 0) {
    const ScoreEncoding& enc = *q.encoding();
    char meta[96];
    std::snprintf(meta, sizeof meta, "# k %d\n", enc.levels());
    out += meta;
    out += "# penalty ";
    format_value(out, enc.penalty());
    out += '\n';
    for (std::size_t i = 0; i < enc.n_nodes(); ++i) {
      int id = i < q.node_ids().size() ? q.node_ids()[i] : static_cast<int>(i);
      int seed = i < q.seed_scores().size() ? q.seed_scores()[i] : 1;
      std::snprintf(meta, sizeof meta, "# node %zu %d %d\n", i, id, seed);
      out += meta;
    }
  }

  char idx[64];
  for (std::size_t i = 0; i < q.n_vars(); ++i) {
    if (q.linear()[i] == 0.0) continue;
    std::snprintf(idx, sizeof idx, "%zu %zu ", i, i);
    out += idx;
    format_value(out, q.linear()[i]);
    out += '\n';
  }
  q.for_each_quadratic([&](std::uint32_t i, std::uint32_t j, double v) {
    std::snprintf(idx, sizeof idx, "%u %u ", i, j);
    out += idx;
    format_value(out, v);
    out += '\n';
  });
  return out;
}

QuboModel import_qubo(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t n_vars = 0, n_linear = 0, n_quadratic = 0;
  double offset = 0.0;
  int meta_k = 0;
  double meta_penalty = 0.0;
  bool have_penalty = false;
  std::vector<int> node_ids;
  std::vector<int> seed_scores;
  std::vector<double> linear;
  std::vector<QuadTerm> upper;
  std::size_t seen_linear = 0, seen_quadratic = 0;
  std::size_t line_no = 0;

  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("qubo line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "k") {
        if (!(ls >> meta_k) || meta_k < 1) throw fail("bad '# k' metadata");
      } else if (key == "penalty") {
        if (!(ls >> meta_penalty)) throw fail("bad '# penalty' metadata");
        have_penalty = true;
      } else if (key == "node") {
        std::size_t idx;
        int id, seed;
        if (!(ls >> idx >> id >> seed)) throw fail("bad '# node' metadata");
        if (node_ids.size() != idx) throw fail("'# node' lines out of order");
        node_ids.push_back(id);
        seed_scores.push_back(seed);
      }
      continue;  // unrecognized comments are allowed
    }
    if (!have_header) {
      std::istringstream ls(line);
      std::string p, kind;
      if (!(ls >> p >> kind >> n_vars >> n_linear >> n_quadratic >> offset) ||
          p != "p" || kind != "qubo")
        throw fail("expected 'p qubo <n_vars> <n_linear> <n_quadratic> <offset>'");
      linear.assign(n_vars, 0.0);
      upper.reserve(n_quadratic);
      have_header = true;
      continue;
    }
    std::istringstream ls(line);
    std::size_t i, j;
    double v;
    if (!(ls >> i >> j >> v)) throw fail("expected '<i> <j> <value>'");
    if (i >= n_vars || j >= n_vars) throw fail("variable index out of range");
    if (i == j) {
      linear[i] += v;
      ++seen_linear;
    } else if (i < j) {
      upper.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), v});
      ++seen_quadratic;
    } else {
      throw fail("quadratic term must have i < j");
    }
  }
  if (!have_header) throw ParseError("qubo: missing 'p qubo' header line");
  if (seen_linear != n_linear)
    throw ParseError("qubo: header declares " + std::to_string(n_linear) +
                     " linear terms, found " + std::to_string(seen_linear));
  if (seen_quadratic != n_quadratic)
    throw ParseError("qubo: header declares " + std::to_string(n_quadratic) +
                     " quadratic terms, found " + std::to_string(seen_quadratic));

  QuboModel q = QuboModel::from_terms(n_vars, offset, std::move(linear),
                                      std::move(upper), 0.0);
  if (meta_k > 0 && n_vars % static_cast<std::size_t>(meta_k) == 0) {
    std::size_t n_nodes = n_vars / static_cast<std::size_t>(meta_k);
    ScoreEncoding enc(n_nodes, meta_k, have_penalty ? meta_penalty : 0.0);
    if (node_ids.size() != n_nodes) {
      node_ids.resize(n_nodes);
      seed_scores.assign(n_nodes, 1);
      for (std::size_t i = 0; i < n_nodes; ++i) node_ids[i] = static_cast<int>(i);
    }
    q.attach_encoding(std::move(enc), std::move(node_ids), std::move(seed_scores));
  }
  return q;
}

}  // namespace cyrisk
