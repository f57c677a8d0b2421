#include "mrf/query.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "mrf/errors.hpp"

namespace mrf {

void Query::check(int n_nodes) const {
  std::vector<char> seen(n_nodes, 0);
  auto mark = [&](int n) {
    if (n < 0 || n >= n_nodes) throw QueryError("query: node out of range");
    if (seen[n]) throw QueryError("query: node in more than one of E/Q/H");
    seen[n] = 1;
  };
  for (auto& [n, v] : evidence.hard) mark(n);
  for (auto& [n, p] : evidence.soft) mark(n);
  for (int n : query_set) mark(n);
  for (int n : hidden_set) mark(n);
  for (char s : seen)
    if (!s) throw QueryError("query: E/Q/H do not cover all nodes");
  for (int n : query_set)
    if (!targets.count(n)) throw QueryError("query: query node without target");
}

std::string TaskSpec::str() const {
  std::ostringstream os;
  switch (kind) {
    case TaskKind::Fractional: os << "fractional=" << param; break;
    case TaskKind::Corrupt: os << "corrupt=" << param; break;
    case TaskKind::Window: os << "window=" << static_cast<int>(param); break;
    case TaskKind::Quadrant: os << "quadrant=" << static_cast<int>(param); break;
  }
  return os.str();
}

namespace {

// Build a query from the (possibly corrupted) observed point, keeping the
// original values as targets for the chosen query indices.
Query from_split(const Assignment& observed, const Assignment& original,
                 const std::vector<int>& query_idx) {
  Query q;
  std::set<int> qset(query_idx.begin(), query_idx.end());
  for (int n = 0; n < static_cast<int>(observed.size()); ++n) {
    if (qset.count(n)) {
      q.query_set.push_back(n);
      q.targets[n] = original[n];
    } else {
      q.evidence.hard[n] = observed[n];
    }
  }
  return q;
}

std::vector<int> sample_indices(int n, int count, Rng& rng) {
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> out;
  out.reserve(count);
  std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
  return out;
}

}  // namespace

Query fractional(double f, const Assignment& x, int support_size, Rng& rng) {
  (void)support_size;
  if (f < 0.0 || f > 1.0) throw ConfigError("fractional: f must be in [0,1]");
  const int n = static_cast<int>(x.size());
  const int q = static_cast<int>(std::lround(f * n));
  return from_split(x, x, sample_indices(n, q, rng));
}

Query corrupt(double c, const Assignment& x, int support_size, Rng& rng) {
  if (c < 0.0 || c > 1.0) throw ConfigError("corrupt: c must be in [0,1]");
  Assignment corrupted = x;
  if (c > 0.0) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (auto& v : corrupted) {
      if (u01(rng) < c) {
        // Uniform over the other support values.
        int r = uniform_int(rng, 0, support_size - 2);
        v = r >= v ? r + 1 : r;
      }
    }
  }
  const int n = static_cast<int>(x.size());
  const int q = static_cast<int>(std::lround(0.5 * n));
  return from_split(corrupted, x, sample_indices(n, q, rng));
}

Query window(int w, const Assignment& x, int support_size, std::pair<int, int> shape, Rng& rng) {
  (void)support_size;
  (void)rng;
  auto [h, width] = shape;
  if (h * width != static_cast<int>(x.size())) throw ConfigError("window: shape mismatch");
  if (w < 0 || w > std::min(h, width)) throw ConfigError("window: width exceeds image");
  const int r0 = (h - w) / 2, c0 = (width - w) / 2;
  std::vector<int> q;
  for (int r = r0; r < r0 + w; ++r)
    for (int c = c0; c < c0 + w; ++c) q.push_back(r * width + c);
  return from_split(x, x, q);
}

Query quadrant(int nq, const Assignment& x, int support_size, std::pair<int, int> shape,
               Rng& rng) {
  (void)support_size;
  auto [h, width] = shape;
  if (h * width != static_cast<int>(x.size())) throw ConfigError("quadrant: shape mismatch");
  if (nq < 1 || nq > 3) throw ConfigError("quadrant: q must be in [1,3]");
  const int rs = h / 2, cs = width / 2;  // odd remainders go to bottom/right
  std::vector<int> chosen = sample_indices(4, nq, rng);
  std::set<int> chosen_set(chosen.begin(), chosen.end());
  std::vector<int> q;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < width; ++c) {
      const int quad = (r < rs ? 0 : 2) + (c < cs ? 0 : 1);
      if (chosen_set.count(quad)) q.push_back(r * width + c);
    }
  return from_split(x, x, q);
}

Query make_query(const TaskSpec& task, const Assignment& x, int support_size, Rng& rng) {
  switch (task.kind) {
    case TaskKind::Fractional: return fractional(task.param, x, support_size, rng);
    case TaskKind::Corrupt: return corrupt(task.param, x, support_size, rng);
    case TaskKind::Window:
      if (!task.image_shape) throw ConfigError("window task needs an image shape");
      return window(static_cast<int>(task.param), x, support_size, *task.image_shape, rng);
    case TaskKind::Quadrant:
      if (!task.image_shape) throw ConfigError("quadrant task needs an image shape");
      return quadrant(static_cast<int>(task.param), x, support_size, *task.image_shape, rng);
  }
  throw ConfigError("make_query: unknown task kind");
}

Curriculum::Curriculum(std::vector<TaskSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw ConfigError("curriculum: no tasks");
}

Curriculum::Curriculum(std::vector<TaskSpec> specs, const TaskSpec& exclude) {
  for (auto& s : specs)
    if (!(s.kind == exclude.kind && s.param == exclude.param)) specs_.push_back(s);
  if (specs_.empty()) throw ConfigError("curriculum: empty after exclusion");
}

const TaskSpec& Curriculum::draw(Rng& rng) const {
  if (specs_.size() == 1) return specs_[0];
  return specs_[uniform_int(rng, 0, static_cast<int>(specs_.size()) - 1)];
}

TaskSpec parse_task_spec(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ParseError("task spec: expected kind=param in '" + text + "'");
  const std::string kind = text.substr(0, eq);
  const std::string val = text.substr(eq + 1);
  TaskSpec s;
  try {
    s.param = std::stod(val);
  } catch (...) {
    throw ParseError("task spec: bad parameter in '" + text + "'");
  }
  if (kind == "fractional")
    s.kind = TaskKind::Fractional;
  else if (kind == "corrupt")
    s.kind = TaskKind::Corrupt;
  else if (kind == "window")
    s.kind = TaskKind::Window;
  else if (kind == "quadrant")
    s.kind = TaskKind::Quadrant;
  else
    throw ParseError("task spec: unknown kind '" + kind + "'");
  return s;
}

TaskList parse_task_list(const std::string& text) {
  TaskList out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item.rfind("exclude=", 0) == 0) {
      out.exclude = parse_task_spec(item.substr(8));
    } else {
      out.specs.push_back(parse_task_spec(item));
    }
  }
  if (out.specs.empty()) throw ParseError("task list: no tasks in '" + text + "'");
  return out;
}

}  // namespace mrf
