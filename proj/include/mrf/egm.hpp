#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mrf/data.hpp"
#include "mrf/graph.hpp"
#include "mrf/query.hpp"

namespace mrf::egm {

struct EgmConfig {
  int bp_steps = 25;
  double lr = 1e-2;
  int batch_size = 128;
  int total_steps = 500;
  std::uint64_t seed = 0;
  int checkpoint_every = 100;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
};

// Conditional NLL of the query targets under t-step BP beliefs, averaged
// over the query nodes. Beliefs are floored at 1e-30 before the log;
// clamp_count, when given, is incremented once per floored belief.
double erm_loss(const GraphStructure& g, const LogPotentials& psi, const Query& q, int t,
                long* clamp_count = nullptr);

struct TraceRow {
  long step;
  double loss;
};
struct EgmResult {
  LogPotentials psi;
  std::vector<TraceRow> trace;
  long clamp_events = 0;
};

using EgmCheckpointFn = std::function<void(long step, const LogPotentials&)>;

// Adam on one flat potential vector, gradients through unrolled BP, queries
// drawn per batch item from the curriculum.
EgmResult train_egm(const Dataset& data, const GraphStructure& g, const Curriculum& curriculum,
                    const EgmConfig& cfg, const EgmCheckpointFn& checkpoint = nullptr);

}  // namespace mrf::egm
