#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrf/bp.hpp"
#include "mrf/graph.hpp"
#include "mrf/rng.hpp"

namespace mrf {

// One inference problem: observed values, nodes to predict (with their true
// values), and nodes to marginalize out. The three sets partition the nodes.
struct Query {
  Evidence evidence;
  std::vector<int> query_set;
  std::vector<int> hidden_set;
  std::map<int, int> targets;

  void check(int n_nodes) const;
};

enum class TaskKind { Fractional, Corrupt, Window, Quadrant };

struct TaskSpec {
  TaskKind kind = TaskKind::Fractional;
  double param = 0.5;
  std::optional<std::pair<int, int>> image_shape;  // (height, width)

  std::string str() const;
};

// Query creation schemes. Targets always hold the original data values; for
// `corrupt`, evidence carries the corrupted values.
Query fractional(double f, const Assignment& x, int support_size, Rng& rng);
Query corrupt(double c, const Assignment& x, int support_size, Rng& rng);
Query window(int w, const Assignment& x, int support_size, std::pair<int, int> shape, Rng& rng);
Query quadrant(int q, const Assignment& x, int support_size, std::pair<int, int> shape, Rng& rng);

Query make_query(const TaskSpec& task, const Assignment& x, int support_size, Rng& rng);

// MIX draws uniformly over specs; MIX-1 excludes one task.
class Curriculum {
 public:
  explicit Curriculum(std::vector<TaskSpec> specs);
  Curriculum(std::vector<TaskSpec> specs, const TaskSpec& exclude);
  const TaskSpec& draw(Rng& rng) const;
  const std::vector<TaskSpec>& specs() const { return specs_; }

 private:
  std::vector<TaskSpec> specs_;
};

// Textual syntax: `fractional=0.7`, `corrupt=0.5`, `window=7`, `quadrant=1`,
// comma-combinable, with an optional `exclude=<spec>` item.
TaskSpec parse_task_spec(const std::string& text);
struct TaskList {
  std::vector<TaskSpec> specs;
  std::optional<TaskSpec> exclude;
};
TaskList parse_task_list(const std::string& text);

}  // namespace mrf
