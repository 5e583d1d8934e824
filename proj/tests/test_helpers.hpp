#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cyrisk/netmodel.hpp"
#include "cyrisk/qubo.hpp"
#include "cyrisk/rng.hpp"

namespace testutil {

inline bool approx(double a, double b, double rel = 1e-9) {
  return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Triangle fixture: three mutually connected nodes.
inline cyrisk::InfrastructureGraph triangle(int is0 = 2, int is1 = 3, int is2 = 4) {
  cyrisk::InfrastructureGraph g;
  g.layers = {"test"};
  g.nodes = {{0, "test", is0, false, false},
             {1, "test", is1, false, false},
             {2, "test", is2, false, false}};
  g.edges = {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}};
  return g;
}

inline cyrisk::InfrastructureGraph single_node(int is = 5) {
  cyrisk::InfrastructureGraph g;
  g.layers = {"test"};
  g.nodes = {{0, "test", is, false, false}};
  return g;
}

// Small random instance for oracle cross-checks.
inline cyrisk::InfrastructureGraph random_graph(cyrisk::Rng& rng, int max_nodes,
                                                int levels) {
  cyrisk::InfrastructureGraph g;
  g.layers = {"test"};
  int n = 1 + static_cast<int>(rng.below(max_nodes));
  for (int i = 0; i < n; ++i) {
    cyrisk::NodeSpec node;
    node.id = i;
    node.layer = "test";
    node.initial_score = rng.int_in(1, levels);
    node.no_update_flag = rng.chance(0.3);
    node.internet_flag = rng.chance(0.3);
    g.nodes.push_back(node);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.chance(0.5)) g.edges.push_back({i, j, 0.25 + 2.75 * rng.real01()});
  return g;
}

inline cyrisk::Weights random_weights(cyrisk::Rng& rng) {
  cyrisk::Weights w;
  w.l1 = -1.0 + 3.0 * rng.real01();
  w.l2 = -1.0 + 3.0 * rng.real01();
  w.l3 = -1.0 + 3.0 * rng.real01();
  w.l4 = -1.0 + 3.0 * rng.real01();
  w.l5 = -1.0 + 3.0 * rng.real01();
  return w;
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout
  std::string error;   // stderr
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Run the cyrisk binary with `args` inside `workdir`.
inline CliResult run_cli(const std::string& args,
                         const std::filesystem::path& workdir) {
  namespace fs = std::filesystem;
  fs::create_directories(workdir);
  fs::path out = workdir / ".cli_stdout";
  fs::path err = workdir / ".cli_stderr";
  std::string cmd = "cd '" + workdir.string() + "' && '" + CYRISK_BIN_PATH + "' " +
                    args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  int rc = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = (rc == -1) ? -1 : WEXITSTATUS(rc);
  res.output = slurp(out);
  res.error = slurp(err);
  return res;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "cyrisk_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace testutil
