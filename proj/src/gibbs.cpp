#include "mrf/gibbs.hpp"

#include <cmath>

#include "mrf/errors.hpp"
#include "mrf/rng.hpp"

namespace mrf::gibbs {

std::vector<double> conditional(const GraphStructure& g, const Adjacency& adj,
                                const LogPotentials& psi, const Assignment& state, int node) {
  const int X = g.support_size;
  std::vector<double> logp(X, 0.0);
  for (const auto& arc : adj.nodes[node]) {
    const int base = arc.edge * X * X;
    const int nv = state[arc.neighbor];
    for (int v = 0; v < X; ++v)
      logp[v] += arc.is_first ? psi.v[base + v * X + nv] : psi.v[base + nv * X + v];
  }
  double mx = logp[0];
  for (int v = 1; v < X; ++v) mx = std::max(mx, logp[v]);
  double z = 0.0;
  for (int v = 0; v < X; ++v) {
    logp[v] = std::exp(logp[v] - mx);
    z += logp[v];
  }
  for (int v = 0; v < X; ++v) logp[v] /= z;
  return logp;
}

std::vector<double> conditional(const GraphStructure& g, const LogPotentials& psi,
                                const Assignment& state, int node) {
  return conditional(g, build_adjacency(g), psi, state, node);
}

namespace {

int sample_categorical(const std::vector<double>& p, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t v = 0; v + 1 < p.size(); ++v) {
    acc += p[v];
    if (u < acc) return static_cast<int>(v);
  }
  return static_cast<int>(p.size()) - 1;
}

}  // namespace

std::vector<Assignment> sample(const GraphStructure& g, const LogPotentials& psi,
                               const GibbsConfig& cfg, int n_samples) {
  if (n_samples < 1) throw ConfigError("gibbs: n_samples must be >= 1");
  if (cfg.burn_in < 0 || cfg.thinning < 1) throw ConfigError("gibbs: bad burn_in/thinning");
  if (static_cast<int>(psi.v.size()) != g.param_count())
    throw ShapeError("gibbs: potentials length != |E||X|^2");

  Adjacency adj = build_adjacency(g);
  Rng rng = make_rng(cfg.seed);

  Assignment state;
  if (cfg.init) {
    state = *cfg.init;
    if (static_cast<int>(state.size()) != g.n_nodes)
      throw ShapeError("gibbs: init state length mismatch");
  } else {
    state.resize(g.n_nodes);
    for (auto& v : state) v = uniform_int(rng, 0, g.support_size - 1);
  }

  auto sweep = [&] {
    for (int n = 0; n < g.n_nodes; ++n)
      state[n] = sample_categorical(conditional(g, adj, psi, state, n), rng);
  };

  for (int i = 0; i < cfg.burn_in; ++i) sweep();

  std::vector<Assignment> out;
  out.reserve(n_samples);
  while (static_cast<int>(out.size()) < n_samples) {
    for (int i = 0; i < cfg.thinning; ++i) sweep();
    out.push_back(state);
  }
  return out;
}

}  // namespace mrf::gibbs
