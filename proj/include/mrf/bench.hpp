#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mrf::bench {

struct BenchRow {
  int n_edges = 0;
  int max_degree = 0;
  int t = 0;
  int batch = 0;
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
};

// Times batch BP along two sweeps: t varies at the smallest edge count, and
// the edge count varies at the smallest t. Random structures, |X| = 3.
std::vector<BenchRow> bench_bp(const std::vector<int>& edge_counts, const std::vector<int>& ts,
                               int batch, std::uint64_t seed, int repeats = 3);

struct ScalingCheck {
  bool ok = true;
  std::vector<double> t_ratios;     // parallel time ratio per t doubling
  std::vector<double> edge_ratios;  // parallel time ratio per |E| doubling
  std::string detail;
};

// Near-linear bands: each t ratio in [t_lo, t_hi], each edge ratio in
// [e_lo, e_hi]. Ratios assume consecutive doublings in the sweeps.
ScalingCheck check_scaling(const std::vector<BenchRow>& rows, double t_lo = 1.6,
                           double t_hi = 2.6, double e_lo = 1.5, double e_hi = 3.0);

}  // namespace mrf::bench
