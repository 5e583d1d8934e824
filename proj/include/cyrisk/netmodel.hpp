#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cyrisk {

// Number of discrete risk levels (scores run 1..K).
constexpr int kDefaultLevels = 10;

struct NodeSpec {
  int id = 0;
  std::string layer;
  int initial_score = 1;        // in [1, K]
  bool no_update_flag = false;  // not receiving regular security updates
  bool internet_flag = false;   // exposed to the internet
};

struct EdgeSpec {
  int a = 0;
  int b = 0;
  double strength = 1.0;  // coupling weight, > 0
};

// Attributed undirected graph of infrastructure components. Edges are stored
// once per unordered pair; `layers` is ordered and defines which layers count
// as adjacent for generation purposes.
struct InfrastructureGraph {
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  std::vector<std::string> layers;
  std::map<std::string, std::string> metadata;

  // Throws ValidationError if any structural invariant is broken: duplicate
  // or dangling ids, self-loops, duplicate edges, scores outside [1, levels],
  // non-positive strengths, or a node layer missing from `layers`.
  void validate(int levels = kDefaultLevels) const;

  // Sort nodes by id and edges by (min, max) endpoint pair with a < b.
  void canonicalize();

  std::size_t node_index(int id) const;  // LookupError on unknown id
  int layer_index(const std::string& name) const;  // -1 if unknown

  // Neighbor lists by node position (after canonicalize, position == rank of id).
  std::vector<std::vector<std::size_t>> adjacency() const;
};

enum class IntraRule { none, full, subnetworks };

struct LayerGenSpec {
  std::string name;
  int count = 0;
  IntraRule intra = IntraRule::none;
  int subnet_size = 0;  // required when intra == subnetworks
  std::optional<std::pair<int, int>> score_range;  // overrides the spec-wide range
};

// Optional high-risk exception injected into a generated graph.
struct ExceptionSpec {
  std::optional<int> node_id;        // fixed placement; random when unset
  std::vector<std::string> layers;   // eligible layers for random placement (empty = any)
  int score = 8;
  double strength_multiplier = 1.0;  // >= 1; applied to every incident edge
  bool set_no_update = false;
  bool set_internet = false;
};

struct LayeredGenSpec {
  std::vector<LayerGenSpec> layers;  // consecutive entries are adjacent
  double inter_layer_edge_prob = 0.1;
  std::pair<int, int> score_range{1, 4};
  int levels = kDefaultLevels;
  std::optional<ExceptionSpec> exception;
  std::uint64_t rng_seed = 0;
  std::string scenario_name;
};

// Deterministic layered-topology generator. Same-layer nodes are wired per
// the layer's IntraRule (subnetworks are mutually isolated chunks of
// subnet_size); inter-layer edges are sampled independently with
// inter_layer_edge_prob and only between adjacent layers. All strengths are
// 1.0 except edges incident to the exception node, which get its multiplier.
// Bit-for-bit reproducible for a fixed seed.
InfrastructureGraph generate_layered(const LayeredGenSpec& spec);

// Layered benchmark spec scaled to `total_nodes`. At 255 this produces the
// reference seven-layer build: 100 workstations in ten isolated subnetworks,
// 30 network nodes, 20 servers, 15 databases, and a 30-node security layer
// between each pair of functional layers (initialized at score 1). Other
// sizes keep the same proportions via largest-remainder rounding.
LayeredGenSpec preset_layered_spec(int total_nodes, std::uint64_t seed,
                                   std::optional<ExceptionSpec> exception);

// Multiply the strength of every edge incident to node_id by factor (>= 1).
// All other edges are untouched.
InfrastructureGraph amplify_node_influence(const InfrastructureGraph& g,
                                           int node_id, double factor);

// JSON serialization. Keys:
//   {"layers":[str], "nodes":[{"id","layer","is","no_update","internet"}],
//    "edges":[{"a","b","s"}], "metadata":{...}}
// save_graph emits the canonical ordering; load_graph accepts any order,
// validates, and canonicalizes, so load(save(g)) == canonicalized g.
std::string save_graph(const InfrastructureGraph& g);
InfrastructureGraph load_graph(const std::string& bytes, int levels = kDefaultLevels);

// Graphviz export: node label = id, fill color green->red over score 1..K,
// node size proportional to score.
std::string to_dot(const InfrastructureGraph& g, int levels = kDefaultLevels);

}  // namespace cyrisk
