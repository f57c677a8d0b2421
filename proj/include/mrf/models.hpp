#pragma once

#include <cstdint>
#include <vector>

#include "mrf/rng.hpp"
#include "mrf/tape.hpp"
#include "mrf/tensor.hpp"

namespace mrf {

enum class Mode { Train, Eval };

// Latent-to-potentials network: Linear(m -> 2m), batch norm, leaky-relu(0.1),
// Linear(2m -> k). Output rows are read directly as log potentials.
struct LearnerParams {
  int m = 0, k = 0;
  Tensor W1, b1, gamma, beta, run_mean, run_var, W2, b2;

  static LearnerParams init(int m, int k, std::uint64_t seed);
  std::vector<Tensor*> trainable();
  // Flat serialization order: W1 b1 gamma beta run_mean run_var W2 b2.
  std::vector<Tensor*> all_tensors();
  std::vector<const Tensor*> all_tensors() const;
};

// Critic: Linear(in -> 2in), dropout, leaky-relu; same again; Linear(2in -> 1),
// dropout. `in` is N|X|.
struct DiscriminatorParams {
  int in = 0;
  double dropout = 0.2;
  Tensor W1, b1, W2, b2, W3, b3;

  static DiscriminatorParams init(int in, std::uint64_t seed);
  std::vector<Tensor*> trainable();
  std::vector<Tensor*> all_tensors();
  std::vector<const Tensor*> all_tensors() const;
};

inline int default_latent_dim(int n_nodes) { return n_nodes < 500 ? 64 : 128; }

struct LearnerIds {
  Tape::Id W1, b1, gamma, beta, W2, b2;
};
struct DiscriminatorIds {
  Tape::Id W1, b1, W2, b2, W3, b3;
};

// Register parameters on a tape, as differentiable inputs or as constants.
LearnerIds learner_inputs(Tape& tp, const LearnerParams& p);
LearnerIds learner_constants(Tape& tp, const LearnerParams& p);
DiscriminatorIds discriminator_inputs(Tape& tp, const DiscriminatorParams& p);
DiscriminatorIds discriminator_constants(Tape& tp, const DiscriminatorParams& p);

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kLeakySlope = 0.1;

// Taped forward pass. Train mode normalizes by batch statistics (batch >= 2)
// and, when stats_update is given, refreshes its running mean/var in place.
Tape::Id learner_forward(Tape& tp, const LearnerIds& ids, const LearnerParams& p, Tape::Id z,
                         Mode mode, LearnerParams* stats_update = nullptr);

// Taped critic forward; rng drives the dropout masks in train mode.
Tape::Id discriminator_forward(Tape& tp, const DiscriminatorIds& ids,
                               const DiscriminatorParams& p, Tape::Id x, Mode mode,
                               Rng* dropout_rng = nullptr);

// Value-only wrappers (run on a private tape).
Tensor learner_forward_value(const LearnerParams& p, const Tensor& z_batch, Mode mode,
                             LearnerParams* stats_update = nullptr);
Tensor discriminator_forward_value(const DiscriminatorParams& p, const Tensor& x_batch,
                                   Mode mode, Rng* dropout_rng = nullptr);

Tensor gaussian_latents(int batch, int m, Rng& rng);

}  // namespace mrf
