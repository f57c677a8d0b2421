#pragma once

#include <cstdint>
#include <string>

#include "mrf/adam.hpp"
#include "mrf/graph.hpp"
#include "mrf/models.hpp"

namespace mrf::store {

// Checkpoint layout: a text header (`mrf-checkpoint v1`, kind, shape
// metadata, one `tensor <name> <rows> <cols>` line per tensor in blob order,
// `blob <n_doubles>`) followed by the raw little-endian float64 blob and a
// trailing 64-bit FNV-1a checksum of the blob bytes. Version or checksum
// mismatches are rejected outright.
enum class Kind { Potentials, Learner, Discriminator, TrainState };

struct Header {
  Kind kind;
  int n_nodes = 0;
  int support_size = 0;
  int m = 0, k = 0, in = 0;
  long step = 0;
  std::uint64_t seed = 0;
  std::string parent;
  std::string structure_ref;
};

Header peek(const std::string& path);

void save_potentials(const LogPotentials& psi, const GraphStructure& g, const std::string& path,
                     const std::string& structure_ref = "", std::uint64_t seed = 0,
                     const std::string& parent = "");
LogPotentials load_potentials(const std::string& path, const GraphStructure& expected);

void save_learner(const LearnerParams& p, int n_nodes, int support_size, const std::string& path,
                  std::uint64_t seed = 0, const std::string& parent = "");
LearnerParams load_learner(const std::string& path, Header* header = nullptr);

void save_discriminator(const DiscriminatorParams& p, const std::string& path,
                        std::uint64_t seed = 0, const std::string& parent = "");
DiscriminatorParams load_discriminator(const std::string& path);

// Full adversarial training state: learner, discriminator, both Adam moment
// sets, and the generator-step counter.
struct TrainStateBlob {
  LearnerParams learner;
  DiscriminatorParams disc;
  AdamState opt_learner;
  AdamState opt_disc;
  long generator_step = 0;
};
void save_train_state(const TrainStateBlob& s, int n_nodes, int support_size,
                      const std::string& path, std::uint64_t seed = 0);
TrainStateBlob load_train_state(const std::string& path);

}  // namespace mrf::store
