#include "mrf/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "mrf/bp.hpp"
#include "mrf/errors.hpp"

namespace mrf::ensemble {

namespace {
const double kLogFloor = std::log(1e-30);

Tensor member_chunk(const Tensor& members, std::size_t lo, std::size_t hi) {
  Tensor chunk(hi - lo, members.cols());
  std::copy(members.data() + lo * members.cols(), members.data() + hi * members.cols(),
            chunk.data());
  return chunk;
}

int argmax_lowest_tie(const double* row, int n) {
  int best = 0;
  for (int v = 1; v < n; ++v)
    if (row[v] > row[best]) best = v;
  return best;
}

}  // namespace

Tensor sample_members(const LearnerParams& p, int M, Rng& rng) {
  if (M < 1) throw ConfigError("sample_members: M must be >= 1");
  Tensor z = gaussian_latents(M, p.m, rng);
  return learner_forward_value(p, z, Mode::Eval);
}

PooledPrediction pooled_predict(const GraphStructure& g, const Tensor& members, const Query& q,
                                int bp_steps, int member_batch) {
  if (members.rows() == 0) throw ConfigError("pooled_predict: no ensemble members");
  if (member_batch < 1) throw ConfigError("pooled_predict: member_batch must be >= 1");
  q.check(g.n_nodes);
  const int X = g.support_size;
  const std::size_t M = members.rows();

  PooledPrediction out;
  out.nodes = q.query_set;
  std::sort(out.nodes.begin(), out.nodes.end());
  out.scores = Tensor(out.nodes.size(), X, 0.0);

  std::vector<Evidence> ev = {q.evidence};
  for (std::size_t lo = 0; lo < M; lo += member_batch) {
    const std::size_t hi = std::min(M, lo + member_batch);
    std::vector<Marginals> beliefs =
        bp::batch_inference(g, member_chunk(members, lo, hi), ev, bp_steps);
    // Accumulate in member-index order for reproducibility.
    for (const Marginals& m : beliefs)
      for (std::size_t qi = 0; qi < out.nodes.size(); ++qi)
        for (int x = 0; x < X; ++x)
          out.scores(qi, x) += std::max(std::log(m.beliefs(out.nodes[qi], x)), kLogFloor);
  }
  for (std::size_t i = 0; i < out.scores.size(); ++i) out.scores[i] /= static_cast<double>(M);

  out.values.resize(out.nodes.size());
  for (std::size_t qi = 0; qi < out.nodes.size(); ++qi)
    out.values[qi] = argmax_lowest_tie(out.scores.data() + qi * X, X);
  return out;
}

EvalResult evaluate_task(const GraphStructure& g, const Tensor& members, const Dataset& data,
                         const TaskSpec& task, int n_queries, const EnsembleConfig& cfg) {
  if (data.size() == 0) throw ConfigError("evaluate_task: empty dataset");
  if (data.soft) throw ConfigError("evaluate_task: soft datasets not supported here");
  if (n_queries < 1) throw ConfigError("evaluate_task: n_queries must be >= 1");
  Rng rng = make_rng(derive_seed(cfg.seed, 0xeb1));

  EvalResult res;
  for (int qi = 0; qi < n_queries; ++qi) {
    const Assignment& point = data.rows[qi % data.size()];
    Query q = make_query(task, point, g.support_size, rng);
    if (q.query_set.empty()) {
      res.queries.push_back({qi, 0, 0});
      continue;
    }
    PooledPrediction pred = pooled_predict(g, members, q, cfg.bp_steps, cfg.member_batch);
    int correct = 0;
    for (std::size_t i = 0; i < pred.nodes.size(); ++i) {
      const int truth = q.targets.at(pred.nodes[i]);
      if (pred.values[i] == truth) ++correct;
      EvalResult::PredRow row;
      row.query_id = qi;
      row.node = pred.nodes[i];
      row.predicted = pred.values[i];
      row.truth = truth;
      row.scores.assign(pred.scores.data() + i * g.support_size,
                        pred.scores.data() + (i + 1) * g.support_size);
      res.predictions.push_back(std::move(row));
    }
    res.total_vars += static_cast<long>(pred.nodes.size());
    res.correct_vars += correct;
    res.queries.push_back({qi, static_cast<int>(pred.nodes.size()), correct});
  }
  res.accuracy =
      res.total_vars == 0 ? 0.0 : 100.0 * static_cast<double>(res.correct_vars) / res.total_vars;
  return res;
}

EvalResult evaluate_task(const GraphStructure& g, const LogPotentials& psi, const Dataset& data,
                         const TaskSpec& task, int n_queries, const EnsembleConfig& cfg) {
  if (static_cast<int>(psi.v.size()) != g.param_count())
    throw ShapeError("evaluate_task: potentials length");
  Tensor single = Tensor::from_rows(1, psi.v.size(), psi.v);
  return evaluate_task(g, single, data, task, n_queries, cfg);
}

std::vector<std::pair<int, double>> sweep_ensemble_size(const GraphStructure& g,
                                                        const LearnerParams& learner,
                                                        const Dataset& data, const TaskSpec& task,
                                                        int n_queries, std::vector<int> Ms,
                                                        const EnsembleConfig& cfg) {
  if (Ms.empty()) throw ConfigError("sweep_ensemble_size: M list empty");
  std::sort(Ms.begin(), Ms.end());
  const int max_m = Ms.back();
  Rng mrng = make_rng(derive_seed(cfg.seed, 0x5eed));
  Tensor members = sample_members(learner, max_m, mrng);
  const int X = g.support_size;

  Rng rng = make_rng(derive_seed(cfg.seed, 0xeb1));
  std::vector<long> total(Ms.size(), 0), correct(Ms.size(), 0);
  for (int qi = 0; qi < n_queries; ++qi) {
    const Assignment& point = data.rows[qi % data.size()];
    Query q = make_query(task, point, g.support_size, rng);
    if (q.query_set.empty()) continue;
    std::sort(q.query_set.begin(), q.query_set.end());

    // Beliefs for every member once; pooled prefixes give each M.
    std::vector<Evidence> ev = {q.evidence};
    Tensor scores(q.query_set.size(), X, 0.0);
    std::size_t snapshot = 0;
    std::size_t done = 0;
    for (std::size_t lo = 0; lo < static_cast<std::size_t>(max_m); lo += cfg.member_batch) {
      const std::size_t hi = std::min<std::size_t>(max_m, lo + cfg.member_batch);
      std::vector<Marginals> beliefs =
          bp::batch_inference(g, member_chunk(members, lo, hi), ev, cfg.bp_steps);
      for (const Marginals& m : beliefs) {
        for (std::size_t i = 0; i < q.query_set.size(); ++i)
          for (int x = 0; x < X; ++x)
            scores(i, x) += std::max(std::log(m.beliefs(q.query_set[i], x)), kLogFloor);
        ++done;
        while (snapshot < Ms.size() && done == static_cast<std::size_t>(Ms[snapshot])) {
          for (std::size_t i = 0; i < q.query_set.size(); ++i) {
            const int pred = argmax_lowest_tie(scores.data() + i * X, X);
            ++total[snapshot];
            if (pred == q.targets.at(q.query_set[i])) ++correct[snapshot];
          }
          ++snapshot;
        }
      }
    }
  }

  std::vector<std::pair<int, double>> out;
  for (std::size_t i = 0; i < Ms.size(); ++i)
    out.push_back({Ms[i], total[i] == 0 ? 0.0 : 100.0 * correct[i] / total[i]});
  return out;
}

}  // namespace mrf::ensemble
