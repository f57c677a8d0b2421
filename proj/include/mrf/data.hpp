#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mrf/graph.hpp"
#include "mrf/tensor.hpp"

namespace mrf {

// Discrete dataset (one Assignment per point), or a soft one holding reals in
// [0,1] per variable (Bernoulli-encoded data, support fixed to {0,1}).
struct Dataset {
  int n_vars = 0;
  int support_size = 0;
  bool soft = false;
  std::vector<Assignment> rows;
  std::vector<std::vector<double>> soft_rows;
  std::string split;

  std::size_t size() const { return soft ? soft_rows.size() : rows.size(); }
  void check() const;
};

// `mrf-data v1` text format: header line, then n_vars / support_size / kind
// lines, then one comma-separated point per line.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);

std::vector<double> encode_onehot(const Assignment& x, int support_size);
Assignment decode_onehot(const std::vector<double>& row, int support_size);

// Continuous value in [0,1] as a Bernoulli prior over {0,1} and back.
std::array<double, 2> bernoulli_encode(double v);
double bernoulli_decode(const std::vector<double>& belief_row);

// pixel > threshold -> 1.
Dataset binarize_images(const std::vector<std::vector<double>>& grayscale,
                        double threshold = 0.5);

// Desk-scale test corpora sampled from known generators so that tests can
// reach for exact ground truth. Spec grammar (key=value after the kind):
//   bits:n=8,p=0.5            independent Bernoulli bits
//   const:n=8,value=0         every point identical
//   chain:n=4,scale=1.0       chain MRF, exact enumeration sampling
//   mrf:n=16,edge_factor=2.0,scale=1.0,structure_seed=1
//                             random binary MRF, exact enumeration sampling
//   ising-grid:h=10,w=10,coupling=0.8,sweeps=50
//                             attractive grid MRF, Gibbs sampling
Dataset make_synthetic_dataset(const std::string& spec, int n, std::uint64_t seed);

// Portable graymap support for tests and sample grids (P2 format, values
// scaled to [0,1]).
std::vector<std::vector<double>> load_pgm(const std::string& path, int* height, int* width);
void write_pgm_grid(const std::string& path, const std::vector<std::vector<double>>& images,
                    int height, int width);

}  // namespace mrf
