#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mrf {

using Assignment = std::vector<int>;

// Pairwise undirected model structure: node count, common discrete support,
// and a canonical edge list sorted lexicographically with i < j per pair.
// The flat parameter layout over edges is edge-major, then row-major over
// (x_i, x_j), so edge e owns the slots [e*X^2, (e+1)*X^2).
struct GraphStructure {
  int n_nodes = 0;
  int support_size = 0;
  std::vector<std::pair<int, int>> edges;
  int max_degree = 0;

  int n_edges() const { return static_cast<int>(edges.size()); }
  int param_count() const { return n_edges() * support_size * support_size; }

  // Checks the stored invariants (endpoint range, i<j, no duplicates,
  // max_degree consistency). Throws ShapeError on violation.
  void validate() const;
};

// Log-domain edge potentials; values[param_index(e, xi, xj)] = log psi_e(xi, xj).
struct LogPotentials {
  std::vector<double> v;
};

int param_index(const GraphStructure& g, int edge_idx, int x_i, int x_j);

GraphStructure make_random_structure(int n_nodes, double edge_factor, std::uint64_t seed);
GraphStructure make_grid_structure(int height, int width);

double log_score(const GraphStructure& g, const LogPotentials& psi, const Assignment& x);

void save_structure(const GraphStructure& g, const std::string& path);
GraphStructure load_structure(const std::string& path);

// Per-node adjacency: (neighbor node, edge index, true when this node is the
// lexicographically-first endpoint of the edge). Neighbor lists are sorted by
// edge index.
struct Adjacency {
  struct Arc {
    int neighbor;
    int edge;
    bool is_first;
  };
  std::vector<std::vector<Arc>> nodes;
};
Adjacency build_adjacency(const GraphStructure& g);

}  // namespace mrf
