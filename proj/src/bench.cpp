#include "mrf/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <omp.h>

#include "mrf/bp.hpp"
#include "mrf/errors.hpp"
#include "mrf/graph.hpp"
#include "mrf/rng.hpp"

namespace mrf::bench {

namespace {

GraphStructure structure_with_edges(int n_edges, std::uint64_t seed) {
  // edge_factor 4 keeps the graph sparse while hitting the edge target.
  const int n_nodes = std::max(8, n_edges / 4);
  GraphStructure g = make_random_structure(n_nodes, static_cast<double>(n_edges) / n_nodes, seed);
  g.support_size = 3;
  return g;
}

double time_call(const GraphStructure& g, const Tensor& psi_batch, int t, bool parallel,
                 int repeats) {
  std::vector<Evidence> ev = {Evidence{}};
  std::vector<double> times;
  for (int r = 0; r < repeats + 1; ++r) {
    const double t0 = omp_get_wtime();
    if (parallel) {
      auto out = bp::batch_inference(g, psi_batch, ev, t);
      (void)out;
    } else {
      LogPotentials psi;
      const double t1 = omp_get_wtime();
      for (std::size_t b = 0; b < psi_batch.rows(); ++b) {
        psi.v.assign(psi_batch.data() + b * psi_batch.cols(),
                     psi_batch.data() + (b + 1) * psi_batch.cols());
        auto out = bp::inference_reference(g, psi, ev[0], t);
        (void)out;
      }
      (void)t1;
    }
    if (r > 0) times.push_back((omp_get_wtime() - t0) * 1000.0);  // first call is warm-up
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

BenchRow run_cell(int n_edges, int t, int batch, std::uint64_t seed, int repeats) {
  GraphStructure g = structure_with_edges(n_edges, seed);
  Rng rng = make_rng(derive_seed(seed, n_edges * 131 + t));
  Tensor psi_batch(batch, g.param_count());
  for (std::size_t i = 0; i < psi_batch.size(); ++i) psi_batch[i] = 0.5 * normal01(rng);

  BenchRow row;
  row.n_edges = g.n_edges();
  row.max_degree = g.max_degree;
  row.t = t;
  row.batch = batch;
  row.parallel_ms = time_call(g, psi_batch, t, true, repeats);
  row.serial_ms = time_call(g, psi_batch, t, false, repeats);
  return row;
}

}  // namespace

std::vector<BenchRow> bench_bp(const std::vector<int>& edge_counts, const std::vector<int>& ts,
                               int batch, std::uint64_t seed, int repeats) {
  if (edge_counts.empty() || ts.empty()) throw ConfigError("bench_bp: empty sweep lists");
  std::vector<int> es = edge_counts, tt = ts;
  std::sort(es.begin(), es.end());
  std::sort(tt.begin(), tt.end());

  std::vector<BenchRow> rows;
  for (int t : tt) rows.push_back(run_cell(es.front(), t, batch, seed, repeats));
  for (std::size_t i = 1; i < es.size(); ++i)
    rows.push_back(run_cell(es[i], tt.front(), batch, seed, repeats));
  return rows;
}

ScalingCheck check_scaling(const std::vector<BenchRow>& rows, double t_lo, double t_hi,
                           double e_lo, double e_hi) {
  ScalingCheck out;
  std::ostringstream detail;
  const int e_min = rows.front().n_edges;
  std::vector<const BenchRow*> t_sweep, e_sweep;
  for (const auto& r : rows) {
    if (r.n_edges == e_min) t_sweep.push_back(&r);
  }
  const int t_min = t_sweep.front()->t;
  for (const auto& r : rows)
    if (r.t == t_min) e_sweep.push_back(&r);

  for (std::size_t i = 1; i < t_sweep.size(); ++i) {
    const double ratio = t_sweep[i]->parallel_ms / t_sweep[i - 1]->parallel_ms;
    out.t_ratios.push_back(ratio);
    if (ratio < t_lo || ratio > t_hi) {
      out.ok = false;
      detail << "t " << t_sweep[i - 1]->t << "->" << t_sweep[i]->t << " ratio " << ratio
             << " outside [" << t_lo << "," << t_hi << "]; ";
    }
  }
  for (std::size_t i = 1; i < e_sweep.size(); ++i) {
    const double ratio = e_sweep[i]->parallel_ms / e_sweep[i - 1]->parallel_ms;
    out.edge_ratios.push_back(ratio);
    if (ratio < e_lo || ratio > e_hi) {
      out.ok = false;
      detail << "|E| " << e_sweep[i - 1]->n_edges << "->" << e_sweep[i]->n_edges << " ratio "
             << ratio << " outside [" << e_lo << "," << e_hi << "]; ";
    }
  }
  out.detail = detail.str();
  return out;
}

}  // namespace mrf::bench
