#pragma once

// Independent brute-force evaluation of the risk terms, written straight from
// their definitions over decoded scores. Deliberately shares no code with the
// ScorePolynomial/QuboModel assembly path it is used to cross-check.

#include <cmath>
#include <cstddef>
#include <vector>

#include "cyrisk/netmodel.hpp"
#include "cyrisk/qubo.hpp"

namespace oracle {

inline std::size_t index_of(const cyrisk::InfrastructureGraph& g, int id) {
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i].id == id) return i;
  return g.nodes.size();
}

inline double h1(const cyrisk::InfrastructureGraph& g,
                 const std::vector<int>& fs) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    double is = g.nodes[i].initial_score;
    double d = is - fs[i];
    total += is * d * d;
  }
  return total;
}

inline double h2(const cyrisk::InfrastructureGraph& g,
                 const std::vector<int>& fs) {
  double total = 0.0;
  for (const cyrisk::EdgeSpec& e : g.edges)
    total -= e.strength * fs[index_of(g, e.a)] * fs[index_of(g, e.b)];
  return total;
}

inline double h3(const cyrisk::InfrastructureGraph& g,
                 const std::vector<int>& fs) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    double sum = 0.0;
    int deg = 0;
    for (const cyrisk::EdgeSpec& e : g.edges) {
      if (e.a == g.nodes[i].id) {
        sum += fs[index_of(g, e.b)];
        ++deg;
      } else if (e.b == g.nodes[i].id) {
        sum += fs[index_of(g, e.a)];
        ++deg;
      }
    }
    if (deg == 0) continue;
    double d = fs[i] - sum / deg;
    total += d * d;
  }
  return total;
}

inline double h4(const cyrisk::InfrastructureGraph& g,
                 const std::vector<int>& fs, bool all_pairs = false) {
  auto flags = [&](std::size_t i) {
    return (g.nodes[i].no_update_flag ? 1.0 : 0.0) +
           (g.nodes[i].internet_flag ? 1.0 : 0.0);
  };
  double total = 0.0;
  if (all_pairs) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      for (std::size_t j = i + 1; j < g.nodes.size(); ++j)
        total -= (flags(i) + flags(j)) * (fs[i] + fs[j]);
  } else {
    for (const cyrisk::EdgeSpec& e : g.edges) {
      std::size_t i = index_of(g, e.a);
      std::size_t j = index_of(g, e.b);
      total -= (flags(i) + flags(j)) * (fs[i] + fs[j]);
    }
  }
  return total;
}

inline double h5(const cyrisk::InfrastructureGraph& g,
                 const std::vector<int>& fs, int threshold = 7) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i].initial_score >= threshold) total -= fs[i];
  return total;
}

inline double total(const cyrisk::InfrastructureGraph& g,
                    const cyrisk::Weights& w, const std::vector<int>& fs,
                    bool h4_all_pairs = false, int h5_threshold = 7) {
  return w.l1 * h1(g, fs) + w.l2 * h2(g, fs) + w.l3 * h3(g, fs) +
         w.l4 * h4(g, fs, h4_all_pairs) + w.l5 * h5(g, fs, h5_threshold);
}

// Enumerate every score vector in [1,K]^n.
template <typename F>
void for_each_scores(std::size_t n, int levels, F&& f) {
  std::vector<int> fs(n, 1);
  for (;;) {
    f(fs);
    std::size_t i = 0;
    while (i < n) {
      if (fs[i] < levels) {
        ++fs[i];
        break;
      }
      fs[i] = 1;
      ++i;
    }
    if (i == n) return;
  }
}

}  // namespace oracle
