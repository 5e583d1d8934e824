#include "cyrisk/encoding.hpp"

#include <string>

#include "cyrisk/errors.hpp"

namespace cyrisk {

ScoreEncoding::ScoreEncoding(std::size_t n_nodes, int levels, double onehot_penalty)
    : n_nodes_(n_nodes), levels_(levels), penalty_(onehot_penalty) {
  if (levels < 1) throw ValidationError("encoding needs at least one level");
  if (penalty_ < 0.0) throw ValidationError("one-hot penalty must be >= 0");
}

std::size_t ScoreEncoding::var_index(std::size_t node, int level) const {
  if (node >= n_nodes_ || level < 1 || level > levels_)
    throw LookupError("var_index out of range: node " + std::to_string(node) +
                      " level " + std::to_string(level));
  return node * static_cast<std::size_t>(levels_) +
         static_cast<std::size_t>(level - 1);
}

std::pair<std::size_t, int> ScoreEncoding::node_level(std::size_t var) const {
  if (var >= num_vars())
    throw LookupError("variable index " + std::to_string(var) + " out of range");
  return {var / levels_, static_cast<int>(var % levels_) + 1};
}

Assignment ScoreEncoding::encode(std::span<const int> scores) const {
  if (scores.size() != n_nodes_)
    throw ValidationError("encode: expected " + std::to_string(n_nodes_) +
                          " scores, got " + std::to_string(scores.size()));
  Assignment a(num_vars());
  for (std::size_t i = 0; i < n_nodes_; ++i) {
    if (scores[i] < 1 || scores[i] > levels_)
      throw ValidationError("encode: score " + std::to_string(scores[i]) +
                            " for node " + std::to_string(i) +
                            " outside [1," + std::to_string(levels_) + "]");
    a.bits[var_index(i, scores[i])] = 1;
  }
  return a;
}

ScoreEncoding::DecodeResult ScoreEncoding::decode(const Assignment& a) const {
  if (a.size() != num_vars())
    throw ValidationError("decode: assignment length " + std::to_string(a.size()) +
                          " != " + std::to_string(num_vars()));
  DecodeResult res;
  res.scores.assign(n_nodes_, 0);
  for (std::size_t i = 0; i < n_nodes_; ++i) {
    int set = 0;
    int level = 0;
    for (int k = 1; k <= levels_; ++k) {
      if (a.bits[i * levels_ + (k - 1)]) {
        ++set;
        if (level == 0) level = k;
      }
    }
    if (set == 1)
      res.scores[i] = level;
    else
      res.issues.push_back({i, set});
  }
  return res;
}

ScoreEncoding::DecodeResult ScoreEncoding::decode_repaired(
    const Assignment& a, std::span<const int> fallback) const {
  if (fallback.size() != n_nodes_)
    throw ValidationError("decode_repaired: fallback length mismatch");
  DecodeResult res = decode(a);
  for (const DecodeIssue& issue : res.issues) {
    if (issue.set_bits == 0) {
      res.scores[issue.node] = fallback[issue.node];
    } else {
      // lowest set level; decode() already records it for multi-set nodes
      for (int k = 1; k <= levels_; ++k) {
        if (a.bits[issue.node * levels_ + (k - 1)]) {
          res.scores[issue.node] = k;
          break;
        }
      }
    }
    ++res.repairs;
  }
  return res;
}

SparseTerms onehot_penalty_terms(const ScoreEncoding& enc) {
  if (!(enc.penalty() > 0.0))
    throw ValidationError("one-hot penalty must be > 0");
  const double p = enc.penalty();
  const int k = enc.levels();
  SparseTerms t;
  // P * (sum_k x - 1)^2 = P * (1 - sum_k x + 2 * sum_{k<l} x_k x_l)
  t.offset = p * static_cast<double>(enc.n_nodes());
  t.linear.reserve(enc.num_vars());
  for (std::size_t node = 0; node < enc.n_nodes(); ++node) {
    std::size_t base = node * static_cast<std::size_t>(k);
    for (int a = 0; a < k; ++a) {
      t.linear.push_back({base + a, -p});
      for (int b = a + 1; b < k; ++b)
        t.quadratic.push_back({base + a, base + b, 2.0 * p});
    }
  }
  return t;
}

}  // namespace cyrisk
