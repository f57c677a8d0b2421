#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mrf/adam.hpp"
#include "mrf/bp.hpp"
#include "mrf/data.hpp"
#include "mrf/graph.hpp"
#include "mrf/models.hpp"

namespace mrf::agm {

struct AgmConfig {
  double lambda = 10.0;  // gradient-penalty coefficient
  int critic_steps = 10;
  int bp_steps = 5;  // t'
  int batch_size = 128;
  int total_steps = 3000;  // generator updates
  double lr = 1e-4;
  double adam_beta1 = 0.0, adam_beta2 = 0.9, adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int checkpoint_every = 100;
  int latent_dim = 0;  // 0 -> 64 when N < 500, else 128
};

struct AgmTrainState {
  const GraphStructure* structure = nullptr;
  LearnerParams learner;
  DiscriminatorParams disc;
  AdamState opt_learner, opt_disc;
  long generator_step = 0;
  bp::UnrollIndices unroll;  // per-member psi indices for the training batch
};

AgmTrainState init_state(const GraphStructure& g, const AgmConfig& cfg);

// Samples B latents, maps through the learner in train mode (running stats
// refreshed), runs BP with empty evidence, and concatenates the node
// marginals: rows are B x N|X| with each |X| block summing to 1.
Tensor generate_fake_batch(LearnerParams& learner, const GraphStructure& g, int B, int bp_steps,
                           Rng& rng);

struct CriticLoss {
  double total = 0.0;
  double penalty = 0.0;
};
// One Adam update on the critic: E[D(fake)] - E[D(real)] + lambda * penalty
// at per-row interpolates x' = eps x + (1-eps) x_fake, eps ~ U(0,1).
CriticLoss critic_step(AgmTrainState& s, const Tensor& real_batch, const AgmConfig& cfg,
                       Rng& rng);

// One Adam update on the learner minimizing -E[D(fake)], gradients flowing
// through BP; the critic is untouched.
double generator_step(AgmTrainState& s, const AgmConfig& cfg, Rng& rng);

struct TraceRow {
  long step;
  double critic_loss, generator_loss, penalty;
};
struct AgmResult {
  LearnerParams learner;
  DiscriminatorParams disc;
  std::vector<TraceRow> trace;
};

using AgmCheckpointFn = std::function<void(long step, const AgmTrainState&)>;

AgmResult train_agm(const Dataset& data, const GraphStructure& g, const AgmConfig& cfg,
                    const AgmCheckpointFn& checkpoint = nullptr);

// Dataset rows as discriminator inputs: one-hot concatenations for discrete
// data, (1-v, v) Bernoulli blocks for soft binary data.
Tensor encode_real_rows(const Dataset& data);

}  // namespace mrf::agm
