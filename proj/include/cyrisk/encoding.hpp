#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

namespace cyrisk {

// Flat binary assignment over all (node, level) variables.
struct Assignment {
  std::vector<std::uint8_t> bits;

  Assignment() = default;
  explicit Assignment(std::size_t n) : bits(n, 0) {}

  std::size_t size() const { return bits.size(); }
  bool operator==(const Assignment&) const = default;
};

// Generic bit-space terms (offset + linear + strictly upper-triangular
// quadratic), used to hand penalty contributions to the QUBO assembler.
struct SparseTerms {
  double offset = 0.0;
  std::vector<std::pair<std::size_t, double>> linear;
  std::vector<std::tuple<std::size_t, std::size_t, double>> quadratic;  // i < j
};

// One-hot map between per-node scores in [1, K] and K binary variables per
// node: variable (node, level) is var_index = node * K + (level - 1).
// Exactly one level bit per node is set on a valid assignment.
class ScoreEncoding {
 public:
  ScoreEncoding(std::size_t n_nodes, int levels, double onehot_penalty);

  std::size_t n_nodes() const { return n_nodes_; }
  int levels() const { return levels_; }
  double penalty() const { return penalty_; }
  std::size_t num_vars() const { return n_nodes_ * static_cast<std::size_t>(levels_); }

  std::size_t var_index(std::size_t node, int level) const;
  std::pair<std::size_t, int> node_level(std::size_t var) const;

  // One-hot encode; throws ValidationError on out-of-range scores.
  Assignment encode(std::span<const int> scores) const;

  struct DecodeIssue {
    std::size_t node;
    int set_bits;  // 0 or >= 2
  };
  struct DecodeResult {
    std::vector<int> scores;  // 0 for nodes flagged in issues (unrepaired decode)
    std::vector<DecodeIssue> issues;
    int repairs = 0;
    bool valid() const { return issues.empty(); }
  };

  // Invalidity is data, not an exception: nodes with zero or multiple set
  // bits are listed in issues and left at score 0.
  DecodeResult decode(const Assignment& a) const;

  // Deterministic repair: a node with several set bits keeps the lowest set
  // level; a node with none keeps fallback[node]. Repairs are counted.
  DecodeResult decode_repaired(const Assignment& a,
                               std::span<const int> fallback) const;

 private:
  std::size_t n_nodes_;
  int levels_;
  double penalty_;
};

// Penalty P * (sum_k x_{node,k} - 1)^2 per node, expanded to bit terms with
// the constant folded into offset. Contributes exactly 0 on valid one-hot
// assignments and at least P otherwise.
SparseTerms onehot_penalty_terms(const ScoreEncoding& enc);

}  // namespace cyrisk
