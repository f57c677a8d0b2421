#include "mrf/exact.hpp"

#include <cmath>
#include <limits>

#include "mrf/errors.hpp"

namespace mrf::exact {

namespace {

struct EnumSetup {
  std::vector<int> free_nodes;     // enumerated nodes in index order
  Assignment state;                // full assignment, hard evidence pre-filled
  std::vector<const std::vector<double>*> soft;  // per node, null when absent
};

EnumSetup prepare(const GraphStructure& g, const Evidence& ev, std::size_t state_cap) {
  ev.check(g);
  EnumSetup s;
  s.state.assign(g.n_nodes, 0);
  s.soft.assign(g.n_nodes, nullptr);
  for (auto& [node, prior] : ev.soft) s.soft[node] = &prior;
  for (int n = 0; n < g.n_nodes; ++n) {
    auto it = ev.hard.find(n);
    if (it != ev.hard.end())
      s.state[n] = it->second;
    else
      s.free_nodes.push_back(n);
  }
  double states = std::pow(static_cast<double>(g.support_size),
                           static_cast<double>(s.free_nodes.size()));
  if (states > static_cast<double>(state_cap))
    throw OracleSizeError("brute force: state space exceeds cap");
  return s;
}

// Calls fn(state, log_weight) for every assignment of the free nodes.
template <class F>
void for_each_state(const GraphStructure& g, const LogPotentials& psi, EnumSetup& s, F fn) {
  const int X = g.support_size;
  const std::size_t nf = s.free_nodes.size();
  std::vector<int> odo(nf, 0);
  for (std::size_t i = 0; i < nf; ++i) s.state[s.free_nodes[i]] = 0;
  while (true) {
    double w = log_score(g, psi, s.state);
    for (int n = 0; n < g.n_nodes; ++n)
      if (s.soft[n]) w += std::log((*s.soft[n])[s.state[n]]);
    fn(s.state, w);
    std::size_t pos = 0;
    while (pos < nf) {
      if (++odo[pos] < X) {
        s.state[s.free_nodes[pos]] = odo[pos];
        break;
      }
      odo[pos] = 0;
      s.state[s.free_nodes[pos]] = 0;
      ++pos;
    }
    if (pos == nf) break;
  }
}

}  // namespace

Marginals brute_force_marginals(const GraphStructure& g, const LogPotentials& psi,
                                const Evidence& ev, std::size_t state_cap) {
  const int X = g.support_size;
  EnumSetup s = prepare(g, ev, state_cap);

  double mx = -std::numeric_limits<double>::infinity();
  for_each_state(g, psi, s, [&](const Assignment&, double w) { mx = std::max(mx, w); });
  if (!std::isfinite(mx)) throw InputError("brute force: evidence leaves no support");

  Tensor bins(g.n_nodes, X, 0.0);
  double z = 0.0;
  for_each_state(g, psi, s, [&](const Assignment& x, double w) {
    const double p = std::exp(w - mx);
    z += p;
    for (int n = 0; n < g.n_nodes; ++n) bins(n, x[n]) += p;
  });

  Marginals m;
  m.beliefs = Tensor(g.n_nodes, X, 0.0);
  for (int n = 0; n < g.n_nodes; ++n)
    for (int v = 0; v < X; ++v) m.beliefs(n, v) = bins(n, v) / z;
  return m;
}

double brute_force_log_partition(const GraphStructure& g, const LogPotentials& psi,
                                 std::size_t state_cap) {
  EnumSetup s = prepare(g, Evidence{}, state_cap);
  double mx = -std::numeric_limits<double>::infinity();
  for_each_state(g, psi, s, [&](const Assignment&, double w) { mx = std::max(mx, w); });
  double z = 0.0;
  for_each_state(g, psi, s, [&](const Assignment&, double w) { z += std::exp(w - mx); });
  return mx + std::log(z);
}

}  // namespace mrf::exact
