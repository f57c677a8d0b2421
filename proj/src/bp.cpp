#include "mrf/bp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrf/errors.hpp"

namespace mrf {

void Evidence::check(const GraphStructure& g) const {
  for (auto& [n, v] : hard) {
    if (n < 0 || n >= g.n_nodes) throw ShapeError("evidence: hard node out of range");
    if (v < 0 || v >= g.support_size) throw ShapeError("evidence: hard value out of range");
    if (soft.count(n)) throw ShapeError("evidence: node has both hard and soft evidence");
  }
  for (auto& [n, prior] : soft) {
    if (n < 0 || n >= g.n_nodes) throw ShapeError("evidence: soft node out of range");
    if (static_cast<int>(prior.size()) != g.support_size)
      throw ShapeError("evidence: soft prior length != support size");
    double s = 0.0;
    for (double p : prior) {
      if (p < 0.0) throw ShapeError("evidence: negative soft prior");
      s += p;
    }
    if (std::fabs(s - 1.0) > 1e-9) throw ShapeError("evidence: soft prior must sum to 1");
  }
}

namespace bp {

Tensor unary_log_factors(const GraphStructure& g, const Evidence& ev) {
  ev.check(g);
  Tensor u(g.n_nodes, g.support_size, 0.0);
  for (auto& [n, v] : ev.hard)
    for (int x = 0; x < g.support_size; ++x) u(n, x) = (x == v) ? 0.0 : kHardClampLog;
  for (auto& [n, prior] : ev.soft)
    for (int x = 0; x < g.support_size; ++x)
      u(n, x) = std::max(std::log(prior[x]), kHardClampLog);
  return u;
}

Plan::Plan(const GraphStructure& g)
    : n(g.n_nodes), X(g.support_size), E(g.n_edges()) {
  tail.resize(2 * E);
  head.resize(2 * E);
  in_edges.assign(n, {});
  for (int e = 0; e < E; ++e) {
    auto [i, j] = g.edges[e];
    tail[2 * e] = i;
    head[2 * e] = j;
    tail[2 * e + 1] = j;
    head[2 * e + 1] = i;
  }
  for (int d = 0; d < 2 * E; ++d) in_edges[head[d]].push_back(d);
}

namespace {

void validate_inputs(const GraphStructure& g, const LogPotentials& psi, const Evidence& ev,
                     int t) {
  if (t < 0) throw ContractError("inference: t must be >= 0");
  if (static_cast<int>(psi.v.size()) != g.param_count())
    throw ShapeError("inference: potentials length != |E||X|^2");
  for (double x : psi.v)
    if (std::isnan(x)) throw InputError("inference: NaN in potentials");
  ev.check(g);
}

inline double dir_psi(const double* psi, int d, int X, int xt, int xh) {
  const int e = d >> 1;
  return (d & 1) == 0 ? psi[e * X * X + xt * X + xh] : psi[e * X * X + xh * X + xt];
}

// Flooding schedule in log domain. Message rows are shifted to log-normalize
// after every update. `parallel` toggles the OpenMP loops; the math and the
// accumulation orders are identical either way.
void run_kernel(const Plan& p, const double* psi, const Tensor& unary, int t, bool parallel,
                Tensor& beliefs_out) {
  const int X = p.X, E2 = 2 * p.E, N = p.n;
  const double init = -std::log(static_cast<double>(X));
  Tensor msg(E2, X, init), nmsg(E2, X), pre(N, X);

  auto compute_pre = [&](int n) {
    double* row = pre.data() + n * X;
    std::fill(row, row + X, 0.0);
    for (int d : p.in_edges[n]) {
      const double* m = msg.data() + d * X;
      for (int x = 0; x < X; ++x) row[x] += m[x];
    }
    const double* u = unary.data() + n * X;
    for (int x = 0; x < X; ++x) row[x] = u[x] + row[x];
  };
  auto update_edge = [&](int d) {
    const int tl = p.tail[d];
    const double* s_pre = pre.data() + tl * X;
    const double* m_rev = msg.data() + (d ^ 1) * X;
    double* out = nmsg.data() + d * X;
    for (int xh = 0; xh < X; ++xh) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int xt = 0; xt < X; ++xt)
        mx = std::max(mx, dir_psi(psi, d, X, xt, xh) + (s_pre[xt] - m_rev[xt]));
      double sum = 0.0;
      for (int xt = 0; xt < X; ++xt)
        sum += std::exp(dir_psi(psi, d, X, xt, xh) + (s_pre[xt] - m_rev[xt]) - mx);
      out[xh] = mx + std::log(sum);
    }
    double mx = out[0];
    for (int x = 1; x < X; ++x) mx = std::max(mx, out[x]);
    double sum = 0.0;
    for (int x = 0; x < X; ++x) sum += std::exp(out[x] - mx);
    const double shift = mx + std::log(sum);
    for (int x = 0; x < X; ++x) out[x] -= shift;
  };

  for (int it = 0; it < t; ++it) {
    if (parallel) {
#pragma omp parallel for schedule(static)
      for (int n = 0; n < N; ++n) compute_pre(n);
#pragma omp parallel for schedule(static)
      for (int d = 0; d < E2; ++d) update_edge(d);
    } else {
      for (int n = 0; n < N; ++n) compute_pre(n);
      for (int d = 0; d < E2; ++d) update_edge(d);
    }
    std::swap(msg, nmsg);
  }

  beliefs_out = Tensor(N, X);
  for (int n = 0; n < N; ++n) {
    compute_pre(n);
    const double* row = pre.data() + n * X;
    double mx = row[0];
    for (int x = 1; x < X; ++x) mx = std::max(mx, row[x]);
    double sum = 0.0;
    for (int x = 0; x < X; ++x) sum += std::exp(row[x] - mx);
    const double lse = mx + std::log(sum);
    for (int x = 0; x < X; ++x) beliefs_out(n, x) = std::exp(row[x] - lse);
  }
}

// Textbook per-edge implementation, no shared pre-sums, kept as the serial
// reference the parallel kernel is tested against.
void run_reference(const Plan& p, const double* psi, const Tensor& unary, int t,
                   Tensor& beliefs_out) {
  const int X = p.X, E2 = 2 * p.E, N = p.n;
  Tensor msg(E2, X, -std::log(static_cast<double>(X))), nmsg(E2, X);
  std::vector<double> s(X), row(X);

  for (int it = 0; it < t; ++it) {
    for (int d = 0; d < E2; ++d) {
      const int tl = p.tail[d];
      for (int xt = 0; xt < X; ++xt) s[xt] = unary(tl, xt);
      for (int d2 : p.in_edges[tl]) {
        if (d2 == (d ^ 1)) continue;
        for (int xt = 0; xt < X; ++xt) s[xt] += msg(d2, xt);
      }
      for (int xh = 0; xh < X; ++xh) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int xt = 0; xt < X; ++xt) mx = std::max(mx, dir_psi(psi, d, X, xt, xh) + s[xt]);
        double sum = 0.0;
        for (int xt = 0; xt < X; ++xt)
          sum += std::exp(dir_psi(psi, d, X, xt, xh) + s[xt] - mx);
        row[xh] = mx + std::log(sum);
      }
      double mx = row[0];
      for (int x = 1; x < X; ++x) mx = std::max(mx, row[x]);
      double sum = 0.0;
      for (int x = 0; x < X; ++x) sum += std::exp(row[x] - mx);
      const double shift = mx + std::log(sum);
      for (int x = 0; x < X; ++x) nmsg(d, x) = row[x] - shift;
    }
    std::swap(msg, nmsg);
  }

  beliefs_out = Tensor(N, X);
  for (int n = 0; n < N; ++n) {
    for (int x = 0; x < X; ++x) row[x] = unary(n, x);
    for (int d : p.in_edges[n])
      for (int x = 0; x < X; ++x) row[x] += msg(d, x);
    double mx = row[0];
    for (int x = 1; x < X; ++x) mx = std::max(mx, row[x]);
    double sum = 0.0;
    for (int x = 0; x < X; ++x) sum += std::exp(row[x] - mx);
    const double lse = mx + std::log(sum);
    for (int x = 0; x < X; ++x) beliefs_out(n, x) = std::exp(row[x] - lse);
  }
}

}  // namespace

Marginals inference(const GraphStructure& g, const LogPotentials& psi, const Evidence& ev,
                    int t) {
  validate_inputs(g, psi, ev, t);
  Plan p(g);
  Tensor unary = unary_log_factors(g, ev);
  Marginals m;
  run_kernel(p, psi.v.data(), unary, t, true, m.beliefs);
  return m;
}

Marginals inference_reference(const GraphStructure& g, const LogPotentials& psi,
                              const Evidence& ev, int t) {
  validate_inputs(g, psi, ev, t);
  Plan p(g);
  Tensor unary = unary_log_factors(g, ev);
  Marginals m;
  run_reference(p, psi.v.data(), unary, t, m.beliefs);
  return m;
}

std::vector<Marginals> batch_inference(const GraphStructure& g, const Tensor& psi_batch,
                                       std::span<const Evidence> ev, int t) {
  const std::size_t B = psi_batch.rows();
  if (static_cast<int>(psi_batch.cols()) != g.param_count())
    throw ShapeError("batch_inference: psi row width != |E||X|^2");
  if (ev.size() != 1 && ev.size() != B)
    throw ShapeError("batch_inference: evidence count must be 1 or B");
  if (t < 0) throw ContractError("batch_inference: t must be >= 0");
  for (std::size_t i = 0; i < psi_batch.size(); ++i)
    if (std::isnan(psi_batch[i])) throw InputError("batch_inference: NaN in potentials");

  Plan p(g);
  std::vector<Tensor> unaries;
  unaries.reserve(ev.size());
  for (const Evidence& e : ev) unaries.push_back(unary_log_factors(g, e));

  std::vector<Marginals> out(B);
#pragma omp parallel for schedule(dynamic)
  for (long b = 0; b < static_cast<long>(B); ++b) {
    const Tensor& unary = unaries[ev.size() == 1 ? 0 : b];
    run_kernel(p, psi_batch.data() + b * psi_batch.cols(), unary, t, false, out[b].beliefs);
  }
  return out;
}

UnrollIndices build_unroll_indices(const GraphStructure& g, int B, bool shared_psi) {
  Plan p(g);
  const int X = p.X, E2 = 2 * p.E, N = p.n;
  const int k = g.param_count();
  UnrollIndices ix;
  ix.B = B;
  ix.shared_psi = shared_psi;

  IndexArray phi(static_cast<std::size_t>(B) * E2 * X * X);
  IndexArray rep(phi.size());
  IndexArray tails(static_cast<std::size_t>(B) * E2);
  IndexArray revs(tails.size());
  IndexArray heads(tails.size());
  std::size_t q = 0;
  for (int b = 0; b < B; ++b) {
    const std::size_t psi0 = shared_psi ? 0 : static_cast<std::size_t>(b) * k;
    for (int d = 0; d < E2; ++d) {
      const std::size_t dd = static_cast<std::size_t>(b) * E2 + d;
      tails[dd] = static_cast<std::uint32_t>(b * N + p.tail[d]);
      revs[dd] = static_cast<std::uint32_t>(static_cast<std::size_t>(b) * E2 + (d ^ 1));
      heads[dd] = static_cast<std::uint32_t>(b * N + p.head[d]);
      const int e = d >> 1;
      for (int xt = 0; xt < X; ++xt)
        for (int xh = 0; xh < X; ++xh) {
          const int slot = (d & 1) == 0 ? e * X * X + xt * X + xh : e * X * X + xh * X + xt;
          phi[q] = static_cast<std::uint32_t>(psi0 + slot);
          rep[q] = static_cast<std::uint32_t>(dd * X + xt);
          ++q;
        }
    }
  }
  ix.phi = make_index(std::move(phi));
  ix.rep = make_index(std::move(rep));
  ix.tail_rows = make_index(std::move(tails));
  ix.rev_rows = make_index(std::move(revs));
  ix.head_rows = make_index(std::move(heads));
  return ix;
}

UnrolledBeliefs inference_unrolled_batch(Tape& tp, const GraphStructure& g, Tape::Id psi_rows,
                                         const UnrollIndices& ix, Tape::Id unary, int t) {
  if (t < 0) throw ContractError("inference_unrolled: t must be >= 0");
  const int X = g.support_size, E2 = 2 * g.n_edges(), N = g.n_nodes;
  const std::size_t B = static_cast<std::size_t>(ix.B);
  const std::size_t rows_msg = B * E2;
  if (tp.val(unary).rows() != B * N || tp.val(unary).cols() != static_cast<std::size_t>(X))
    throw ShapeError("inference_unrolled: unary shape mismatch");

  Tape::Id phi_dir = tp.gather_flat(psi_rows, ix.phi, rows_msg * X, X);
  Tape::Id msg = tp.constant(Tensor(rows_msg, X, -std::log(static_cast<double>(X))));

  for (int it = 0; it < t; ++it) {
    Tape::Id msum = tp.scatter_add_rows(msg, ix.head_rows, B * N);
    Tape::Id pre = tp.add(unary, msum);
    Tape::Id s = tp.sub(tp.gather_rows(pre, ix.tail_rows), tp.gather_rows(msg, ix.rev_rows));
    Tape::Id srep = tp.gather_flat(s, ix.rep, rows_msg * X, X);
    Tape::Id tmat = tp.add(phi_dir, srep);
    Tape::Id mnew = tp.lse_grouped(tmat, X);
    msg = tp.sub(mnew, tp.lse_rows(mnew));
  }

  Tape::Id bel = tp.add(unary, tp.scatter_add_rows(msg, ix.head_rows, B * N));
  Tape::Id logbel = tp.sub(bel, tp.lse_rows(bel));
  return {logbel, tp.exp(logbel)};
}

UnrolledBeliefs inference_unrolled(Tape& tp, const GraphStructure& g, Tape::Id psi,
                                   const Evidence& ev, int t, Tape::Id soft_prior_rows) {
  ev.check(g);
  if (tp.val(psi).size() != static_cast<std::size_t>(g.param_count()))
    throw ShapeError("inference_unrolled: potentials length != |E||X|^2");
  for (std::size_t i = 0; i < tp.val(psi).size(); ++i)
    if (std::isnan(tp.val(psi)[i])) throw InputError("inference_unrolled: NaN in potentials");

  UnrollIndices ix = build_unroll_indices(g, 1, true);
  Tape::Id psi_row = tp.reshape(psi, 1, g.param_count());

  Tape::Id unary;
  if (soft_prior_rows < 0) {
    unary = tp.constant(unary_log_factors(g, ev));
  } else {
    if (tp.val(soft_prior_rows).rows() != ev.soft.size())
      throw ShapeError("inference_unrolled: soft prior row count mismatch");
    Evidence hard_only;
    hard_only.hard = ev.hard;
    Tape::Id base = tp.constant(unary_log_factors(g, hard_only));
    IndexArray soft_nodes;
    for (auto& [n, prior] : ev.soft) soft_nodes.push_back(static_cast<std::uint32_t>(n));
    Tape::Id logp = tp.maximum(tp.log(soft_prior_rows), tp.scalar(kHardClampLog));
    unary = tp.add(base, tp.scatter_add_rows(logp, make_index(std::move(soft_nodes)),
                                             g.n_nodes));
  }
  return inference_unrolled_batch(tp, g, psi_row, ix, unary, t);
}

}  // namespace bp
}  // namespace mrf
