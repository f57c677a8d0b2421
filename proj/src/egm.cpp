#include "mrf/egm.hpp"

#include <cmath>

#include "mrf/adam.hpp"
#include "mrf/bp.hpp"
#include "mrf/errors.hpp"
#include "mrf/rng.hpp"
#include "mrf/tape.hpp"

namespace mrf::egm {

namespace {
const double kLogFloor = std::log(1e-30);
}

double erm_loss(const GraphStructure& g, const LogPotentials& psi, const Query& q, int t,
                long* clamp_count) {
  q.check(g.n_nodes);
  if (q.query_set.empty()) throw QueryError("erm_loss: empty query set");
  Marginals m = bp::inference(g, psi, q.evidence, t);
  double loss = 0.0;
  for (int i : q.query_set) {
    const double b = m.beliefs(i, q.targets.at(i));
    double lb = std::log(b);
    if (!(lb >= kLogFloor)) {
      lb = kLogFloor;
      if (clamp_count) ++*clamp_count;
    }
    loss -= lb;
  }
  return loss / static_cast<double>(q.query_set.size());
}

EgmResult train_egm(const Dataset& data, const GraphStructure& g, const Curriculum& curriculum,
                    const EgmConfig& cfg, const EgmCheckpointFn& checkpoint) {
  data.check();
  if (data.soft) throw ConfigError("train_egm: soft datasets are not trainable directly");
  if (data.n_vars != g.n_nodes || data.support_size != g.support_size)
    throw ShapeError("train_egm: dataset does not match structure");
  if (data.size() == 0) throw ConfigError("train_egm: empty dataset");

  const int B = cfg.batch_size;
  const int N = g.n_nodes, X = g.support_size;
  Rng rng = make_rng(derive_seed(cfg.seed, 0xe6));
  bp::UnrollIndices ix = bp::build_unroll_indices(g, B, /*shared_psi=*/true);
  AdamConfig adam_cfg{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};

  EgmResult result;
  result.psi.v.assign(g.param_count(), 0.0);  // uniform model start
  Tensor psi_row(1, g.param_count(), 0.0);
  std::vector<Tensor*> params = {&psi_row};
  AdamState opt = AdamState::like(params);

  long last_good = -1;
  for (long step = 0; step < cfg.total_steps; ++step) {
    // Draw one query per batch item.
    std::vector<Query> queries;
    queries.reserve(B);
    for (int b = 0; b < B; ++b) {
      const Assignment& row = data.rows[uniform_int(rng, 0, static_cast<int>(data.size()) - 1)];
      const TaskSpec& task = curriculum.draw(rng);
      queries.push_back(make_query(task, row, X, rng));
    }

    Tensor unary(static_cast<std::size_t>(B) * N, X, 0.0);
    IndexArray target_idx;
    std::vector<double> weights;
    for (int b = 0; b < B; ++b) {
      const Query& q = queries[b];
      q.check(N);
      if (q.query_set.empty()) throw QueryError("train_egm: task produced an empty query set");
      Tensor u = bp::unary_log_factors(g, q.evidence);
      std::copy(u.data(), u.data() + u.size(), unary.data() + static_cast<std::size_t>(b) * N * X);
      const double w = 1.0 / (static_cast<double>(B) * q.query_set.size());
      for (int i : q.query_set) {
        target_idx.push_back(
            static_cast<std::uint32_t>((static_cast<std::size_t>(b) * N + i) * X + q.targets.at(i)));
        weights.push_back(-w);
      }
    }

    Tape tp;
    Tape::Id psi_id = tp.input(psi_row);
    bp::UnrolledBeliefs ub =
        bp::inference_unrolled_batch(tp, g, psi_id, ix, tp.constant(unary), cfg.bp_steps);
    Tape::Id picked = tp.gather_flat(ub.log_beliefs, make_index(target_idx), target_idx.size(), 1);
    for (double lb : tp.val(picked).vec())
      if (lb < kLogFloor) ++result.clamp_events;
    Tape::Id floored = tp.maximum(picked, tp.scalar(kLogFloor));
    Tape::Id loss_id =
        tp.sum_all(tp.mul(floored, tp.constant(Tensor::from_rows(weights.size(), 1, weights))));

    const double loss = tp.val(loss_id)[0];
    if (!std::isfinite(loss))
      throw DivergenceError("train_egm: non-finite loss at step " + std::to_string(step),
                            last_good);

    std::vector<Tensor> grads = grad(tp, loss_id, {psi_id});
    opt.update(params, grads, adam_cfg);

    result.trace.push_back({step, loss});
    if (checkpoint && ((step + 1) % cfg.checkpoint_every == 0 || step + 1 == cfg.total_steps)) {
      result.psi.v = psi_row.vec();
      checkpoint(step + 1, result.psi);
      last_good = step + 1;
    }
  }

  result.psi.v = psi_row.vec();
  return result;
}

}  // namespace mrf::egm
