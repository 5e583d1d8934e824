#include "cyrisk/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cyrisk/errors.hpp"
#include "cyrisk/rng.hpp"
#include "json.hpp"

namespace cyrisk {

namespace {

std::uint64_t edge_key(int a, int b) {
  int lo = std::min(a, b);
  int hi = std::max(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(lo)) << 32) |
         static_cast<std::uint32_t>(hi);
}

}  // namespace

void InfrastructureGraph::validate(int levels) const {
  std::unordered_map<int, std::size_t> by_id;
  std::unordered_set<std::string> layer_set(layers.begin(), layers.end());
  if (layer_set.size() != layers.size())
    throw ValidationError("duplicate layer label in layers list");

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const NodeSpec& n = nodes[i];
    if (n.id < 0)
      throw ValidationError("nodes[" + std::to_string(i) + "]: negative id " +
                            std::to_string(n.id));
    if (!by_id.emplace(n.id, i).second)
      throw ValidationError("nodes[" + std::to_string(i) + "]: duplicate id " +
                            std::to_string(n.id));
    if (n.initial_score < 1 || n.initial_score > levels)
      throw ValidationError("nodes[" + std::to_string(i) +
                            "]: score out of range [1," + std::to_string(levels) +
                            "] (got " + std::to_string(n.initial_score) + ")");
    if (!layer_set.count(n.layer))
      throw ValidationError("nodes[" + std::to_string(i) + "]: layer '" +
                            n.layer + "' not listed in layers");
  }

  std::unordered_set<std::uint64_t> seen;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const EdgeSpec& e = edges[i];
    if (e.a == e.b)
      throw ValidationError("edges[" + std::to_string(i) + "]: self-loop on node " +
                            std::to_string(e.a));
    if (!by_id.count(e.a))
      throw ValidationError("edges[" + std::to_string(i) +
                            "]: references missing node " + std::to_string(e.a));
    if (!by_id.count(e.b))
      throw ValidationError("edges[" + std::to_string(i) +
                            "]: references missing node " + std::to_string(e.b));
    if (!(e.strength > 0.0))
      throw ValidationError("edges[" + std::to_string(i) +
                            "]: strength must be > 0");
    if (!seen.insert(edge_key(e.a, e.b)).second)
      throw ValidationError("edges[" + std::to_string(i) + "]: duplicate edge (" +
                            std::to_string(e.a) + "," + std::to_string(e.b) + ")");
  }
}

void InfrastructureGraph::canonicalize() {
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
  for (EdgeSpec& e : edges)
    if (e.a > e.b) std::swap(e.a, e.b);
  std::sort(edges.begin(), edges.end(), [](const EdgeSpec& x, const EdgeSpec& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
}

std::size_t InfrastructureGraph::node_index(int id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return i;
  throw LookupError("unknown node id " + std::to_string(id));
}

int InfrastructureGraph::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::vector<std::size_t>> InfrastructureGraph::adjacency() const {
  std::unordered_map<int, std::size_t> by_id;
  by_id.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) by_id.emplace(nodes[i].id, i);
  std::vector<std::vector<std::size_t>> adj(nodes.size());
  for (const EdgeSpec& e : edges) {
    std::size_t ia = by_id.at(e.a);
    std::size_t ib = by_id.at(e.b);
    adj[ia].push_back(ib);
    adj[ib].push_back(ia);
  }
  return adj;
}

InfrastructureGraph generate_layered(const LayeredGenSpec& spec) {
  if (spec.layers.empty()) throw ValidationError("layered spec has zero layers");
  if (spec.inter_layer_edge_prob < 0.0 || spec.inter_layer_edge_prob > 1.0)
    throw ValidationError("inter_layer_edge_prob outside [0,1]");
  if (spec.levels < 1) throw ValidationError("levels must be >= 1");
  for (const LayerGenSpec& l : spec.layers) {
    if (l.count <= 0)
      throw ValidationError("layer '" + l.name + "': count must be > 0");
    if (l.intra == IntraRule::subnetworks && l.subnet_size <= 0)
      throw ValidationError("layer '" + l.name + "': subnet_size must be > 0");
    auto range = l.score_range.value_or(spec.score_range);
    if (range.first < 1 || range.second > spec.levels || range.first > range.second)
      throw ValidationError("layer '" + l.name + "': score range invalid");
  }
  if (spec.exception) {
    if (spec.exception->score < 1 || spec.exception->score > spec.levels)
      throw ValidationError("exception score out of range [1," +
                            std::to_string(spec.levels) + "]");
    if (spec.exception->strength_multiplier < 1.0)
      throw ValidationError("exception strength multiplier must be >= 1");
  }

  Rng rng(spec.rng_seed);
  InfrastructureGraph g;
  for (const LayerGenSpec& l : spec.layers) g.layers.push_back(l.name);

  // Nodes, sequential ids in layer order; scores sampled per layer range.
  std::vector<std::pair<int, int>> layer_span;  // [first_id, count]
  int next_id = 0;
  for (const LayerGenSpec& l : spec.layers) {
    auto range = l.score_range.value_or(spec.score_range);
    layer_span.push_back({next_id, l.count});
    for (int k = 0; k < l.count; ++k) {
      NodeSpec n;
      n.id = next_id++;
      n.layer = l.name;
      n.initial_score = rng.int_in(range.first, range.second);
      g.nodes.push_back(n);
    }
  }

  // Intra-layer edges.
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerGenSpec& l = spec.layers[li];
    int base = layer_span[li].first;
    if (l.intra == IntraRule::full) {
      for (int i = 0; i < l.count; ++i)
        for (int j = i + 1; j < l.count; ++j)
          g.edges.push_back({base + i, base + j, 1.0});
    } else if (l.intra == IntraRule::subnetworks) {
      for (int start = 0; start < l.count; start += l.subnet_size) {
        int end = std::min(start + l.subnet_size, l.count);
        for (int i = start; i < end; ++i)
          for (int j = i + 1; j < end; ++j)
            g.edges.push_back({base + i, base + j, 1.0});
      }
    }
  }

  // Inter-layer edges, adjacent layers only.
  for (std::size_t li = 0; li + 1 < spec.layers.size(); ++li) {
    auto [abase, acount] = layer_span[li];
    auto [bbase, bcount] = layer_span[li + 1];
    for (int i = 0; i < acount; ++i)
      for (int j = 0; j < bcount; ++j)
        if (rng.chance(spec.inter_layer_edge_prob))
          g.edges.push_back({abase + i, bbase + j, 1.0});
  }

  // High-risk exception: placement, score/flag overrides, edge amplification.
  if (spec.exception) {
    const ExceptionSpec& ex = *spec.exception;
    int chosen;
    if (ex.node_id) {
      chosen = *ex.node_id;
      bool found = false;
      for (const NodeSpec& n : g.nodes) found |= (n.id == chosen);
      if (!found)
        throw ValidationError("exception node id " + std::to_string(chosen) +
                              " not generated");
    } else {
      std::vector<int> eligible;
      for (const NodeSpec& n : g.nodes)
        if (ex.layers.empty() ||
            std::find(ex.layers.begin(), ex.layers.end(), n.layer) != ex.layers.end())
          eligible.push_back(n.id);
      if (eligible.empty())
        throw ValidationError("exception placement: no eligible nodes");
      chosen = eligible[rng.below(eligible.size())];
    }
    for (NodeSpec& n : g.nodes) {
      if (n.id != chosen) continue;
      n.initial_score = ex.score;
      if (ex.set_no_update) n.no_update_flag = true;
      if (ex.set_internet) n.internet_flag = true;
    }
    if (ex.strength_multiplier > 1.0)
      for (EdgeSpec& e : g.edges)
        if (e.a == chosen || e.b == chosen) e.strength *= ex.strength_multiplier;
    g.metadata["exception_node"] = std::to_string(chosen);
    g.metadata["exception_score"] = std::to_string(ex.score);
    if (ex.strength_multiplier > 1.0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", ex.strength_multiplier);
      g.metadata["exception_amplification"] = buf;
    }
  }

  g.metadata["seed"] = std::to_string(spec.rng_seed);
  if (!spec.scenario_name.empty()) g.metadata["scenario"] = spec.scenario_name;

  g.canonicalize();
  g.validate(spec.levels);
  return g;
}

LayeredGenSpec preset_layered_spec(int total_nodes, std::uint64_t seed,
                                   std::optional<ExceptionSpec> exception) {
  if (total_nodes < 7)
    throw ValidationError("preset needs at least 7 nodes (one per layer)");

  // Reference proportions: 100/30/30/30/20/30/15 out of 255.
  struct Part {
    const char* name;
    double frac;
    IntraRule intra;
    bool security;
  };
  const Part parts[7] = {
      {"workstations", 100.0 / 255.0, IntraRule::subnetworks, false},
      {"security-1", 30.0 / 255.0, IntraRule::none, true},
      {"network", 30.0 / 255.0, IntraRule::full, false},
      {"security-2", 30.0 / 255.0, IntraRule::none, true},
      {"servers", 20.0 / 255.0, IntraRule::full, false},
      {"security-3", 30.0 / 255.0, IntraRule::none, true},
      {"databases", 15.0 / 255.0, IntraRule::full, false},
  };

  // Largest-remainder rounding to hit total_nodes exactly, each layer >= 1.
  int counts[7];
  double rem[7];
  int assigned = 0;
  for (int i = 0; i < 7; ++i) {
    double ideal = parts[i].frac * total_nodes;
    counts[i] = std::max(1, static_cast<int>(ideal));
    rem[i] = ideal - counts[i];
    assigned += counts[i];
  }
  while (assigned != total_nodes) {
    int pick = 0;
    for (int i = 1; i < 7; ++i) {
      if (assigned < total_nodes ? rem[i] > rem[pick]
                                 : (rem[i] < rem[pick] && counts[i] > 1))
        pick = i;
    }
    if (assigned < total_nodes) {
      ++counts[pick];
      rem[pick] -= 1.0;
      ++assigned;
    } else {
      --counts[pick];
      rem[pick] += 1.0;
      --assigned;
    }
  }

  LayeredGenSpec spec;
  spec.rng_seed = seed;
  spec.score_range = {1, 4};
  spec.inter_layer_edge_prob = 0.1;
  spec.scenario_name = "layered-" + std::to_string(total_nodes);
  for (int i = 0; i < 7; ++i) {
    LayerGenSpec l;
    l.name = parts[i].name;
    l.count = counts[i];
    l.intra = parts[i].intra;
    if (l.intra == IntraRule::subnetworks) l.subnet_size = 10;
    if (parts[i].security) l.score_range = {{1, 1}};
    spec.layers.push_back(l);
  }
  spec.exception = std::move(exception);
  return spec;
}

InfrastructureGraph amplify_node_influence(const InfrastructureGraph& g,
                                           int node_id, double factor) {
  if (factor < 1.0) throw ValidationError("amplification factor must be >= 1");
  g.node_index(node_id);  // throws LookupError if unknown
  InfrastructureGraph out = g;
  for (EdgeSpec& e : out.edges)
    if (e.a == node_id || e.b == node_id) e.strength *= factor;
  return out;
}

std::string save_graph(const InfrastructureGraph& g) {
  InfrastructureGraph c = g;
  c.canonicalize();

  nlohmann::json doc;
  doc["layers"] = c.layers;
  doc["nodes"] = nlohmann::json::array();
  for (const NodeSpec& n : c.nodes) {
    doc["nodes"].push_back({{"id", n.id},
                            {"layer", n.layer},
                            {"is", n.initial_score},
                            {"no_update", n.no_update_flag},
                            {"internet", n.internet_flag}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const EdgeSpec& e : c.edges)
    doc["edges"].push_back({{"a", e.a}, {"b", e.b}, {"s", e.strength}});
  doc["metadata"] = c.metadata;
  return doc.dump(2) + "\n";
}

namespace {

const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                    const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

}  // namespace

InfrastructureGraph load_graph(const std::string& bytes, int levels) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("graph document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("graph document: expected JSON object");

  InfrastructureGraph g;
  const auto& layers = require_field(doc, "layers", "graph");
  if (!layers.is_array()) throw ParseError("layers: expected array");
  for (const auto& l : layers) {
    if (!l.is_string()) throw ParseError("layers: expected string entries");
    g.layers.push_back(l.get<std::string>());
  }

  const auto& nodes = require_field(doc, "nodes", "graph");
  if (!nodes.is_array()) throw ParseError("nodes: expected array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const auto& jn = nodes[i];
    if (!jn.is_object()) throw ParseError(where + ": expected object");
    NodeSpec n;
    try {
      n.id = require_field(jn, "id", where).get<int>();
      n.layer = require_field(jn, "layer", where).get<std::string>();
      n.initial_score = require_field(jn, "is", where).get<int>();
      n.no_update_flag = require_field(jn, "no_update", where).get<bool>();
      n.internet_flag = require_field(jn, "internet", where).get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    g.nodes.push_back(std::move(n));
  }

  const auto& edges = require_field(doc, "edges", "graph");
  if (!edges.is_array()) throw ParseError("edges: expected array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = "edges[" + std::to_string(i) + "]";
    const auto& je = edges[i];
    if (!je.is_object()) throw ParseError(where + ": expected object");
    EdgeSpec e;
    try {
      e.a = require_field(je, "a", where).get<int>();
      e.b = require_field(je, "b", where).get<int>();
      e.strength = require_field(je, "s", where).get<double>();
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(where + ": " + ex.what());
    }
    g.edges.push_back(e);
  }

  if (doc.contains("metadata")) {
    const auto& meta = doc["metadata"];
    if (!meta.is_object()) throw ParseError("metadata: expected object");
    for (auto it = meta.begin(); it != meta.end(); ++it) {
      if (it.value().is_string())
        g.metadata[it.key()] = it.value().get<std::string>();
      else
        g.metadata[it.key()] = it.value().dump();
    }
  }

  try {
    g.validate(levels);
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  g.canonicalize();
  return g;
}

std::string to_dot(const InfrastructureGraph& g, int levels) {
  InfrastructureGraph c = g;
  c.canonicalize();

  std::ostringstream out;
  out << "graph infrastructure {\n";
  out << "  node [style=filled, fixedsize=true, fontsize=8];\n";
  for (const NodeSpec& n : c.nodes) {
    double t = levels > 1
                   ? static_cast<double>(n.initial_score - 1) / (levels - 1)
                   : 0.0;
    int r = static_cast<int>(std::lround(40 + t * 180));
    int gg = static_cast<int>(std::lround(200 - t * 180));
    char color[8];
    std::snprintf(color, sizeof color, "#%02x%02x28", r, gg);
    double size = 0.25 + 0.08 * n.initial_score;
    char attrs[160];
    std::snprintf(attrs, sizeof attrs,
                  "  %d [label=\"%d\", fillcolor=\"%s\", width=%.2f, height=%.2f];\n",
                  n.id, n.id, color, size, size);
    out << attrs;
  }
  for (const EdgeSpec& e : c.edges) {
    char line[96];
    std::snprintf(line, sizeof line, "  %d -- %d [penwidth=%.2f];\n", e.a, e.b,
                  std::min(4.0, 0.5 + 0.5 * e.strength));
    out << line;
  }
  out << "}\n";
  return out.str();
}

}  // namespace cyrisk
