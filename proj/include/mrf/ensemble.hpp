#pragma once

#include <cstdint>
#include <vector>

#include "mrf/data.hpp"
#include "mrf/graph.hpp"
#include "mrf/models.hpp"
#include "mrf/query.hpp"
#include "mrf/rng.hpp"

namespace mrf::ensemble {

struct EnsembleConfig {
  int M = 1000;
  int bp_steps = 5;
  int member_batch = 250;  // members per BP batch, memory bound
  std::uint64_t seed = 0;
};

// M eval-mode learner passes on fresh standard-Gaussian latents; row j is
// the potential vector of ensemble member j.
Tensor sample_members(const LearnerParams& p, int M, Rng& rng);

struct PooledPrediction {
  std::vector<int> nodes;        // query nodes in ascending order
  std::vector<int> values;       // argmax of the pooled scores, ties to low value
  Tensor scores;                 // |Q| x |X| mean log-beliefs over members
};

// Log-linear pooling: score_i(x) = (1/M) sum_j log mu_i(x | x_E; psi_j),
// beliefs floored at 1e-30. The log-domain geometric mean shares its argmax
// with the direct product form.
PooledPrediction pooled_predict(const GraphStructure& g, const Tensor& members, const Query& q,
                                int bp_steps, int member_batch = 250);

struct EvalResult {
  double accuracy = 0.0;  // percent of query variables correctly guessed
  long total_vars = 0, correct_vars = 0;
  struct PerQuery {
    int id;
    int n_query;
    int n_correct;
  };
  std::vector<PerQuery> queries;
  struct PredRow {
    int query_id, node, predicted, truth;
    std::vector<double> scores;
  };
  std::vector<PredRow> predictions;
};

// Queries are built from dataset points in order (point q mod n), with the
// task's random choices drawn from cfg.seed.
EvalResult evaluate_task(const GraphStructure& g, const Tensor& members, const Dataset& data,
                         const TaskSpec& task, int n_queries, const EnsembleConfig& cfg);

// Single-model (EGM) evaluation: pooling over one member.
EvalResult evaluate_task(const GraphStructure& g, const LogPotentials& psi, const Dataset& data,
                         const TaskSpec& task, int n_queries, const EnsembleConfig& cfg);

// Accuracy at each ensemble size in Ms, sharing one query set and one member
// draw: members are sampled once (max M) and pooled over nested prefixes.
std::vector<std::pair<int, double>> sweep_ensemble_size(const GraphStructure& g,
                                                        const LearnerParams& learner,
                                                        const Dataset& data, const TaskSpec& task,
                                                        int n_queries, std::vector<int> Ms,
                                                        const EnsembleConfig& cfg);

}  // namespace mrf::ensemble
