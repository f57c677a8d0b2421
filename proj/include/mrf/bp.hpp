#pragma once

#include <map>
#include <span>
#include <vector>

#include "mrf/graph.hpp"
#include "mrf/tape.hpp"
#include "mrf/tensor.hpp"

namespace mrf {

// Observations attached to nodes. Hard evidence clamps a node to one value;
// soft evidence attaches a categorical prior (rows sum to 1). A node may
// carry at most one of the two.
struct Evidence {
  std::map<int, int> hard;
  std::map<int, std::vector<double>> soft;

  void check(const GraphStructure& g) const;
  bool empty() const { return hard.empty() && soft.empty(); }
};

// Per-node conditional beliefs, one normalized row per node.
struct Marginals {
  Tensor beliefs;  // n_nodes x support_size
};

namespace bp {

// Large negative log used in place of -inf for clamped states; keeps every
// tensor shape fixed and the whole computation differentiable.
inline constexpr double kHardClampLog = -1e9;

// Unary log-factors for a structure under the given evidence:
// 0 for free nodes, one-hot-at-value rows (0 / kHardClampLog) for hard
// evidence, clamped log-priors for soft evidence.
Tensor unary_log_factors(const GraphStructure& g, const Evidence& ev);

// Directed-edge bookkeeping shared by all kernels. Edge e yields directed
// ids 2e (i->j) and 2e+1 (j->i); rev(d) = d^1. Incoming lists are sorted by
// directed id, which fixes every accumulation order.
struct Plan {
  int n = 0, X = 0, E = 0;
  std::vector<int> tail, head;           // size 2E
  std::vector<std::vector<int>> in_edges;  // per node
  explicit Plan(const GraphStructure& g);
};

// Synchronous (flooding) sum-product in log domain: t message rounds from
// uniform messages, per-round message renormalization, then belief read-out.
// `inference` runs the OpenMP kernel; `inference_reference` is a plain
// serial implementation kept for testing and benchmarking against it.
Marginals inference(const GraphStructure& g, const LogPotentials& psi, const Evidence& ev, int t);
Marginals inference_reference(const GraphStructure& g, const LogPotentials& psi,
                              const Evidence& ev, int t);

// B independent inference calls sharing one structure; psi_batch is B x k.
// `ev` holds either one Evidence (shared by all rows) or B of them.
std::vector<Marginals> batch_inference(const GraphStructure& g, const Tensor& psi_batch,
                                       std::span<const Evidence> ev, int t);

// Index arrays that let the taped kernel run BP for B models as one set of
// matrix ops on the disjoint union of B copies of the graph. When
// shared_psi is set all copies read the same k-vector of potentials.
struct UnrollIndices {
  int B = 0;
  bool shared_psi = false;
  IndexPtr phi;        // (B*2E*X*X) -> psi slot
  IndexPtr rep;        // (B*2E*X*X) -> pre-message slot, repeats columns
  IndexPtr tail_rows;  // (B*2E) -> union node row
  IndexPtr rev_rows;   // (B*2E) -> reversed directed row
  IndexPtr head_rows;  // (B*2E) -> union node row
};
UnrollIndices build_unroll_indices(const GraphStructure& g, int B, bool shared_psi);

// Taped BP over the union graph. psi_rows must be B x k (or 1 x k with
// shared_psi indices). Returns log-beliefs and beliefs, each (B*n) x X.
struct UnrolledBeliefs {
  Tape::Id log_beliefs;
  Tape::Id beliefs;
};
UnrolledBeliefs inference_unrolled_batch(Tape& tp, const GraphStructure& g, Tape::Id psi_rows,
                                         const UnrollIndices& ix, Tape::Id unary, int t);

// Single-model taped BP matching `inference` numerically. When
// soft_prior_rows >= 0 it must be an S x X tape value holding the priors of
// ev.soft in ascending node order; gradients then flow to those priors.
UnrolledBeliefs inference_unrolled(Tape& tp, const GraphStructure& g, Tape::Id psi,
                                   const Evidence& ev, int t, Tape::Id soft_prior_rows = -1);

}  // namespace bp
}  // namespace mrf
