#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cyrisk/encoding.hpp"
#include "cyrisk/netmodel.hpp"

namespace cyrisk {

// Weighted sum of the five risk Hamiltonians.
struct Weights {
  double l1 = 1.0;   // anchoring to the initial score
  double l2 = 0.05;  // connectivity reward (riskier hubs)
  double l3 = 1.5;   // neighbor-mean influence
  double l4 = 0.5;   // exposure-flag connectivity
  double l5 = 1.0;   // keep critical nodes risky
};

// Polynomial of degree <= 2 over the per-node final scores. The risk
// Hamiltonians are all expressible in this form; assembling a QUBO expands
// each score FS_u into its one-hot linear form over bits.
class ScorePolynomial {
 public:
  explicit ScorePolynomial(std::size_t n_nodes);

  std::size_t n_nodes() const { return linear_.size(); }
  double constant() const { return constant_; }
  const std::vector<double>& linear() const { return linear_; }
  // Packed key (u << 32 | v) with u <= v; u == v means FS_u^2.
  const std::unordered_map<std::uint64_t, double>& quadratic() const { return quad_; }

  void add_constant(double c) { constant_ += c; }
  void add_linear(std::size_t u, double c) { linear_[u] += c; }
  void add_quadratic(std::size_t u, std::size_t v, double c);
  void add_scaled(const ScorePolynomial& other, double scale);

  double evaluate(std::span<const int> scores) const;

 private:
  double constant_ = 0.0;
  std::vector<double> linear_;
  std::unordered_map<std::uint64_t, double> quad_;
};

// The five Hamiltonian builders. Node index = position in the graph's node
// list; callers should canonicalize first (assemble() does).
//
// H1 = sum_i IS_i * (IS_i - FS_i)^2            anchor final to initial scores
// H2 = -sum_{(i,j) in E} S_ij * FS_i * FS_j    well-connected nodes get riskier
// H3 = sum_i (FS_i - mean_{j in N(i)} FS_j)^2  neighbor influence (isolated: 0)
// H4 = -sum_{(i,j) in E} (f_i^nu + f_i^int + f_j^nu + f_j^int) * (FS_i + FS_j)
// H5 = -sum_{i: IS_i >= threshold} FS_i        critical nodes stay risky
ScorePolynomial build_h1(const InfrastructureGraph& g);
ScorePolynomial build_h2(const InfrastructureGraph& g);
ScorePolynomial build_h3(const InfrastructureGraph& g);
// all_pairs extends the flag penalty to every node pair instead of edges.
ScorePolynomial build_h4(const InfrastructureGraph& g, bool all_pairs = false);
ScorePolynomial build_h5(const InfrastructureGraph& g, int critical_threshold = 7);

struct ComponentStats {
  double offset = 0.0;
  double linear_sum = 0.0;
  double quadratic_sum = 0.0;
  std::size_t n_linear = 0;
  std::size_t n_quadratic = 0;
};

struct AssembleOptions {
  Weights weights;
  int levels = kDefaultLevels;  // K
  // One-hot penalty P = max(penalty_floor, penalty_scale * B) where B bounds
  // the unconstrained energy change of any single bit flip (max row norm of
  // the objective-only QUBO). penalty_override pins P directly.
  double penalty_scale = 2.0;
  double penalty_floor = 1.0;
  std::optional<double> penalty_override;
  bool h4_all_pairs = false;
  int h5_critical_threshold = 7;
  // When set, H5's critical set is this list of node ids instead of being
  // derived from the current initial scores (used by frozen-set recursion).
  std::optional<std::vector<int>> h5_critical_ids;
  double prune_eps = 1e-12;
};

struct QuadTerm {
  std::uint32_t i;
  std::uint32_t j;  // i < j
  double value;
};

// Sparse upper-triangular quadratic form over binary variables:
//   energy(x) = offset + sum_i Q_ii x_i + sum_{i<j} Q_ij x_i x_j.
// Couplings are stored once per unordered pair in a symmetric CSR so both
// full evaluation and O(row degree) flip deltas are cheap. Immutable after
// construction; safe for concurrent reads.
class QuboModel {
 public:
  QuboModel() = default;

  // `upper` must be strictly upper-triangular; duplicates are merged and
  // entries below prune_eps dropped.
  static QuboModel from_terms(std::size_t n_vars, double offset,
                              std::vector<double> linear,
                              std::vector<QuadTerm> upper,
                              double prune_eps = 1e-12);

  std::size_t n_vars() const { return linear_.size(); }
  double offset() const { return offset_; }
  const std::vector<double>& linear() const { return linear_; }
  std::size_t n_quadratic() const { return cols_.size() / 2; }

  // Upper-triangular iteration in (i, j) order.
  template <typename F>
  void for_each_quadratic(F&& f) const {
    for (std::size_t i = 0; i < n_vars(); ++i) {
      for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) {
        if (cols_[k] > i) f(static_cast<std::uint32_t>(i), cols_[k], vals_[k]);
      }
    }
  }
  std::vector<QuadTerm> quadratic_terms() const;

  // Symmetric row view for solvers.
  std::span<const std::uint32_t> row_cols(std::size_t v) const {
    return {cols_.data() + row_start_[v], row_start_[v + 1] - row_start_[v]};
  }
  std::span<const double> row_vals(std::size_t v) const {
    return {vals_.data() + row_start_[v], row_start_[v + 1] - row_start_[v]};
  }

  double energy(const Assignment& a) const;
  // Energy change of flipping variable v, in O(row degree).
  double delta_energy(const Assignment& a, std::size_t v) const;

  double max_abs_coefficient() const;

  // Optional attachments carried from assembly (or a self-describing file).
  const std::optional<ScoreEncoding>& encoding() const { return encoding_; }
  const std::vector<int>& node_ids() const { return node_ids_; }
  const std::vector<int>& seed_scores() const { return seed_scores_; }
  const std::map<std::string, ComponentStats>& provenance() const {
    return provenance_;
  }

  void attach_encoding(ScoreEncoding enc, std::vector<int> node_ids,
                       std::vector<int> seed_scores);
  void set_provenance(std::map<std::string, ComponentStats> p) {
    provenance_ = std::move(p);
  }

 private:
  double offset_ = 0.0;
  std::vector<double> linear_;
  std::vector<std::size_t> row_start_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> vals_;

  std::optional<ScoreEncoding> encoding_;
  std::vector<int> node_ids_;      // graph node id by node index
  std::vector<int> seed_scores_;   // initial scores at assembly (repair fallback)
  std::map<std::string, ComponentStats> provenance_;
};

// Expand the weighted Hamiltonians plus one-hot penalties into a QUBO. On any
// valid one-hot assignment the energy equals the lambda-weighted sum of the
// five Hamiltonians evaluated on the decoded scores (penalty contributes 0).
QuboModel assemble(const InfrastructureGraph& g, const AssembleOptions& opt);

// Text format, bit-exact round-trip:
//   p qubo <n_vars> <n_linear> <n_quadratic> <offset>
//   # k <levels>                (encoding metadata, when attached)
//   # penalty <P>
//   # node <index> <graph_id> <seed_score>
//   <i> <i> <value>             linear terms, ascending i
//   <i> <j> <value>             quadratic terms, i < j, ascending (i, j)
// Values print with up to 17 significant digits.
std::string export_qubo(const QuboModel& q);
QuboModel import_qubo(const std::string& text);

}  // namespace cyrisk
