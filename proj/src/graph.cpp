#include "mrf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mrf/errors.hpp"
#include "mrf/rng.hpp"

namespace mrf {

void GraphStructure::validate() const {
  if (n_nodes <= 0) throw ShapeError("structure: n_nodes must be positive");
  if (support_size <= 0) throw ShapeError("structure: support_size must be positive");
  std::set<std::pair<int, int>> seen;
  std::vector<int> degree(n_nodes, 0);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n_nodes || j >= n_nodes)
      throw ShapeError("structure: edge endpoint out of range");
    if (i >= j) throw ShapeError("structure: edges must satisfy i < j");
    if (!seen.insert({i, j}).second) throw ShapeError("structure: duplicate edge");
    ++degree[i];
    ++degree[j];
  }
  int md = degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
  if (md != max_degree) throw ShapeError("structure: max_degree inconsistent");
}

static int compute_max_degree(int n_nodes, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> degree(n_nodes, 0);
  for (auto [i, j] : edges) {
    ++degree[i];
    ++degree[j];
  }
  return degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
}

int param_index(const GraphStructure& g, int edge_idx, int x_i, int x_j) {
  const int X = g.support_size;
  if (edge_idx < 0 || edge_idx >= g.n_edges()) throw IndexError("param_index: edge out of range");
  if (x_i < 0 || x_i >= X || x_j < 0 || x_j >= X)
    throw IndexError("param_index: value out of range");
  return edge_idx * X * X + x_i * X + x_j;
}

GraphStructure make_random_structure(int n_nodes, double edge_factor, std::uint64_t seed) {
  if (n_nodes <= 0) throw ConfigError("make_random_structure: n_nodes must be positive");
  // Nearest rounding, ties away from zero.
  const long want = std::lround(edge_factor * n_nodes);
  const long max_edges = static_cast<long>(n_nodes) * (n_nodes - 1) / 2;
  if (want < 0 || want > max_edges)
    throw ConfigError("make_random_structure: requested edge count infeasible");

  std::vector<std::pair<int, int>> all;
  all.reserve(max_edges);
  for (int i = 0; i < n_nodes; ++i)
    for (int j = i + 1; j < n_nodes; ++j) all.push_back({i, j});

  Rng rng = make_rng(seed);
  std::vector<std::pair<int, int>> chosen;
  chosen.reserve(want);
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), want, rng);
  std::sort(chosen.begin(), chosen.end());

  GraphStructure g;
  g.n_nodes = n_nodes;
  g.support_size = 2;
  g.edges = std::move(chosen);
  g.max_degree = compute_max_degree(n_nodes, g.edges);
  return g;
}

GraphStructure make_grid_structure(int height, int width) {
  if (height < 1 || width < 1) throw ConfigError("make_grid_structure: dims must be >= 1");
  GraphStructure g;
  g.n_nodes = height * width;
  g.support_size = 2;
  auto at = [width](int r, int c) { return r * width + c; };
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      if (c + 1 < width) g.edges.push_back({at(r, c), at(r, c + 1)});
      if (r + 1 < height) g.edges.push_back({at(r, c), at(r + 1, c)});
    }
  std::sort(g.edges.begin(), g.edges.end());
  g.max_degree = compute_max_degree(g.n_nodes, g.edges);
  return g;
}

double log_score(const GraphStructure& g, const LogPotentials& psi, const Assignment& x) {
  if (static_cast<int>(x.size()) != g.n_nodes) throw ShapeError("log_score: assignment length");
  if (static_cast<int>(psi.v.size()) != g.param_count())
    throw ShapeError("log_score: potentials length");
  const int X = g.support_size;
  double s = 0.0;
  for (int e = 0; e < g.n_edges(); ++e) {
    auto [i, j] = g.edges[e];
    s += psi.v[e * X * X + x[i] * X + x[j]];
  }
  return s;
}

void save_structure(const GraphStructure& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_structure: cannot open " + path);
  out << "mrf-structure v1\n";
  out << "n_nodes " << g.n_nodes << "\n";
  out << "support_size " << g.support_size << "\n";
  for (auto [i, j] : g.edges) out << i << " " << j << "\n";
  if (!out) throw IoError("save_structure: write failed for " + path);
}

GraphStructure load_structure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_structure: cannot open " + path);
  std::string line;
  long lineno = 1;
  if (!std::getline(in, line) || line != "mrf-structure v1")
    throw ParseError("load_structure: bad header", lineno);

  GraphStructure g;
  std::string key;
  ++lineno;
  if (!(in >> key >> g.n_nodes) || key != "n_nodes")
    throw ParseError("load_structure: expected n_nodes", lineno);
  ++lineno;
  if (!(in >> key >> g.support_size) || key != "support_size")
    throw ParseError("load_structure: expected support_size", lineno);

  int i, j;
  while (in >> i >> j) g.edges.push_back({i, j});
  g.max_degree = compute_max_degree(g.n_nodes, g.edges);
  g.validate();
  return g;
}

Adjacency build_adjacency(const GraphStructure& g) {
  Adjacency adj;
  adj.nodes.resize(g.n_nodes);
  for (int e = 0; e < g.n_edges(); ++e) {
    auto [i, j] = g.edges[e];
    adj.nodes[i].push_back({j, e, true});
    adj.nodes[j].push_back({i, e, false});
  }
  return adj;
}

}  // namespace mrf
