#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mrf/graph.hpp"

namespace mrf::gibbs {

struct GibbsConfig {
  int burn_in = 0;    // discarded initial sweeps
  int thinning = 1;   // sweeps between emitted samples
  std::uint64_t seed = 0;
  std::optional<Assignment> init;  // uniform-random when absent
};

// p(x_i = v | x_{-i}), normalized; depends only on i's neighbors.
std::vector<double> conditional(const GraphStructure& g, const LogPotentials& psi,
                                const Assignment& state, int node);
std::vector<double> conditional(const GraphStructure& g, const Adjacency& adj,
                                const LogPotentials& psi, const Assignment& state, int node);

// Systematic-scan chain (nodes in index order). Runs burn_in sweeps, then
// emits one sample every `thinning` sweeps until n_samples are collected.
std::vector<Assignment> sample(const GraphStructure& g, const LogPotentials& psi,
                               const GibbsConfig& cfg, int n_samples);

}  // namespace mrf::gibbs
