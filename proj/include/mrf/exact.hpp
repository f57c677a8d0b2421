#pragma once

#include <cstddef>

#include "mrf/bp.hpp"
#include "mrf/graph.hpp"

namespace mrf::exact {

inline constexpr std::size_t kDefaultStateCap = std::size_t{1} << 20;

// Exact conditional node marginals by full enumeration over the unobserved
// variables. Hard-evidence rows come back one-hot; soft evidence enters as a
// per-state prior weight. Test oracle — cost is |X|^n_unobserved.
Marginals brute_force_marginals(const GraphStructure& g, const LogPotentials& psi,
                                const Evidence& ev, std::size_t state_cap = kDefaultStateCap);

// log sum over all assignments of exp(log_score).
double brute_force_log_partition(const GraphStructure& g, const LogPotentials& psi,
                                 std::size_t state_cap = kDefaultStateCap);

}  // namespace mrf::exact
