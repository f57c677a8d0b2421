#include "mrf/store.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "mrf/errors.hpp"

namespace mrf::store {

namespace {

constexpr const char* kMagic = "mrf-checkpoint v1";

std::uint64_t fnv1a(const unsigned char* bytes, std::size_t n) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Potentials: return "potentials";
    case Kind::Learner: return "learner";
    case Kind::Discriminator: return "discriminator";
    case Kind::TrainState: return "trainstate";
  }
  return "?";
}

Kind kind_from(const std::string& s) {
  if (s == "potentials") return Kind::Potentials;
  if (s == "learner") return Kind::Learner;
  if (s == "discriminator") return Kind::Discriminator;
  if (s == "trainstate") return Kind::TrainState;
  throw ParseError("checkpoint: unknown kind '" + s + "'");
}

struct NamedTensor {
  std::string name;
  const Tensor* t;
};

void write_checkpoint(const std::string& path, Kind kind,
                      const std::vector<std::pair<std::string, std::string>>& fields,
                      const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot open " + path);
  out << kMagic << "\n";
  out << "kind " << kind_name(kind) << "\n";
  for (auto& [k, v] : fields) out << k << " " << v << "\n";
  std::size_t total = 0;
  for (auto& nt : tensors) {
    out << "tensor " << nt.name << " " << nt.t->rows() << " " << nt.t->cols() << "\n";
    total += nt.t->size();
  }
  out << "blob " << total << "\n";
  std::uint64_t h = 14695981039346656037ull;
  for (auto& nt : tensors) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(nt.t->data());
    const std::size_t nb = nt.t->size() * sizeof(double);
    out.write(reinterpret_cast<const char*>(bytes), nb);
    for (std::size_t i = 0; i < nb; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

struct Loaded {
  Header header;
  std::map<std::string, std::string> fields;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

Loaded read_checkpoint(const std::string& path, bool header_only = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw ParseError("checkpoint: bad or unsupported format version");

  Loaded out;
  std::vector<std::tuple<std::string, std::size_t, std::size_t>> shapes;
  std::size_t blob_len = 0;
  bool have_blob = false;
  while (std::getline(in, line)) {
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "tensor") {
      std::string name;
      std::size_t r, c;
      if (!(is >> name >> r >> c)) throw ParseError("checkpoint: bad tensor line");
      shapes.emplace_back(name, r, c);
    } else if (key == "blob") {
      if (!(is >> blob_len)) throw ParseError("checkpoint: bad blob line");
      have_blob = true;
      break;
    } else {
      std::string rest;
      std::getline(is, rest);
      if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
      out.fields[key] = rest;
    }
  }
  if (!have_blob) throw ParseError("checkpoint: missing blob section");

  auto geti = [&](const std::string& k, long dflt) {
    auto it = out.fields.find(k);
    return it == out.fields.end() ? dflt : std::stol(it->second);
  };
  out.header.kind = kind_from(out.fields.count("kind") ? out.fields["kind"] : "");
  out.header.n_nodes = static_cast<int>(geti("n_nodes", 0));
  out.header.support_size = static_cast<int>(geti("support_size", 0));
  out.header.m = static_cast<int>(geti("m", 0));
  out.header.k = static_cast<int>(geti("k", 0));
  out.header.in = static_cast<int>(geti("in", 0));
  out.header.step = geti("step", 0);
  out.header.seed = static_cast<std::uint64_t>(geti("seed", 0));
  if (out.fields.count("parent")) out.header.parent = out.fields["parent"];
  if (out.fields.count("structure")) out.header.structure_ref = out.fields["structure"];
  if (header_only) return out;

  std::size_t expect = 0;
  for (auto& [name, r, c] : shapes) expect += r * c;
  if (expect != blob_len) throw ParseError("checkpoint: tensor shapes disagree with blob length");

  std::vector<double> blob(blob_len);
  in.read(reinterpret_cast<char*>(blob.data()), blob_len * sizeof(double));
  std::uint64_t stored = 0;
  in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
  if (!in) throw ParseError("checkpoint: truncated blob");
  const std::uint64_t h =
      fnv1a(reinterpret_cast<const unsigned char*>(blob.data()), blob_len * sizeof(double));
  if (h != stored) throw ParseError("checkpoint: checksum mismatch");

  std::size_t offset = 0;
  for (auto& [name, r, c] : shapes) {
    std::vector<double> chunk(blob.begin() + offset, blob.begin() + offset + r * c);
    out.tensors.emplace_back(name, Tensor::from_rows(r, c, std::move(chunk)));
    offset += r * c;
  }
  return out;
}

void require_kind(const Loaded& l, Kind k) {
  if (l.header.kind != k)
    throw ParseError("checkpoint: expected kind " + kind_name(k) + ", found " +
                     kind_name(l.header.kind));
}

Tensor take(Loaded& l, std::size_t i, const char* name) {
  if (i >= l.tensors.size() || l.tensors[i].first != name)
    throw ParseError(std::string("checkpoint: missing tensor ") + name);
  return std::move(l.tensors[i].second);
}

std::vector<NamedTensor> learner_tensors(const LearnerParams& p) {
  return {{"W1", &p.W1}, {"b1", &p.b1},          {"gamma", &p.gamma}, {"beta", &p.beta},
          {"run_mean", &p.run_mean}, {"run_var", &p.run_var}, {"W2", &p.W2}, {"b2", &p.b2}};
}

LearnerParams learner_from(Loaded& l, std::size_t base, int m, int k) {
  LearnerParams p;
  p.m = m;
  p.k = k;
  p.W1 = take(l, base + 0, "W1");
  p.b1 = take(l, base + 1, "b1");
  p.gamma = take(l, base + 2, "gamma");
  p.beta = take(l, base + 3, "beta");
  p.run_mean = take(l, base + 4, "run_mean");
  p.run_var = take(l, base + 5, "run_var");
  p.W2 = take(l, base + 6, "W2");
  p.b2 = take(l, base + 7, "b2");
  if (p.W1.rows() != static_cast<std::size_t>(m) || p.W2.cols() != static_cast<std::size_t>(k))
    throw ShapeError("checkpoint: learner tensor shapes disagree with m/k");
  for (double v : p.run_var.vec())
    if (v <= 0.0) throw ShapeError("checkpoint: running variance must be positive");
  return p;
}

std::vector<NamedTensor> disc_tensors(const DiscriminatorParams& p) {
  return {{"W1", &p.W1}, {"b1", &p.b1}, {"W2", &p.W2},
          {"b2", &p.b2}, {"W3", &p.W3}, {"b3", &p.b3}};
}

DiscriminatorParams disc_from(Loaded& l, std::size_t base, int in) {
  DiscriminatorParams p;
  p.in = in;
  p.W1 = take(l, base + 0, "W1");
  p.b1 = take(l, base + 1, "b1");
  p.W2 = take(l, base + 2, "W2");
  p.b2 = take(l, base + 3, "b2");
  p.W3 = take(l, base + 4, "W3");
  p.b3 = take(l, base + 5, "b3");
  if (p.W1.rows() != static_cast<std::size_t>(in))
    throw ShapeError("checkpoint: discriminator shapes disagree with input width");
  return p;
}

}  // namespace

Header peek(const std::string& path) { return read_checkpoint(path, true).header; }

void save_potentials(const LogPotentials& psi, const GraphStructure& g, const std::string& path,
                     const std::string& structure_ref, std::uint64_t seed,
                     const std::string& parent) {
  if (static_cast<int>(psi.v.size()) != g.param_count())
    throw ShapeError("save_potentials: length != |E||X|^2");
  Tensor t = Tensor::from_rows(1, psi.v.size(), psi.v);
  std::vector<std::pair<std::string, std::string>> fields = {
      {"n_nodes", std::to_string(g.n_nodes)},
      {"support_size", std::to_string(g.support_size)},
      {"k", std::to_string(g.param_count())},
      {"seed", std::to_string(seed)}};
  if (!structure_ref.empty()) fields.push_back({"structure", structure_ref});
  if (!parent.empty()) fields.push_back({"parent", parent});
  write_checkpoint(path, Kind::Potentials, fields, {{"psi", &t}});
}

LogPotentials load_potentials(const std::string& path, const GraphStructure& expected) {
  Loaded l = read_checkpoint(path);
  require_kind(l, Kind::Potentials);
  if (l.header.k != expected.param_count() || l.header.n_nodes != expected.n_nodes ||
      l.header.support_size != expected.support_size)
    throw ShapeError("load_potentials: checkpoint does not match structure (wrong k)");
  Tensor t = take(l, 0, "psi");
  LogPotentials psi;
  psi.v = t.vec();
  return psi;
}

void save_learner(const LearnerParams& p, int n_nodes, int support_size, const std::string& path,
                  std::uint64_t seed, const std::string& parent) {
  std::vector<std::pair<std::string, std::string>> fields = {
      {"m", std::to_string(p.m)},
      {"k", std::to_string(p.k)},
      {"n_nodes", std::to_string(n_nodes)},
      {"support_size", std::to_string(support_size)},
      {"seed", std::to_string(seed)}};
  if (!parent.empty()) fields.push_back({"parent", parent});
  write_checkpoint(path, Kind::Learner, fields, learner_tensors(p));
}

LearnerParams load_learner(const std::string& path, Header* header) {
  Loaded l = read_checkpoint(path);
  require_kind(l, Kind::Learner);
  if (header) *header = l.header;
  return learner_from(l, 0, l.header.m, l.header.k);
}

void save_discriminator(const DiscriminatorParams& p, const std::string& path,
                        std::uint64_t seed, const std::string& parent) {
  std::vector<std::pair<std::string, std::string>> fields = {
      {"in", std::to_string(p.in)}, {"seed", std::to_string(seed)}};
  if (!parent.empty()) fields.push_back({"parent", parent});
  write_checkpoint(path, Kind::Discriminator, fields, disc_tensors(p));
}

DiscriminatorParams load_discriminator(const std::string& path) {
  Loaded l = read_checkpoint(path);
  require_kind(l, Kind::Discriminator);
  return disc_from(l, 0, l.header.in);
}

void save_train_state(const TrainStateBlob& s, int n_nodes, int support_size,
                      const std::string& path, std::uint64_t seed) {
  std::vector<std::pair<std::string, std::string>> fields = {
      {"m", std::to_string(s.learner.m)},
      {"k", std::to_string(s.learner.k)},
      {"in", std::to_string(s.disc.in)},
      {"n_nodes", std::to_string(n_nodes)},
      {"support_size", std::to_string(support_size)},
      {"step", std::to_string(s.generator_step)},
      {"adam_learner_step", std::to_string(s.opt_learner.step)},
      {"adam_disc_step", std::to_string(s.opt_disc.step)},
      {"seed", std::to_string(seed)}};
  std::vector<NamedTensor> tensors = learner_tensors(s.learner);
  for (auto& nt : disc_tensors(s.disc)) tensors.push_back({"d_" + nt.name, nt.t});
  for (std::size_t i = 0; i < s.opt_learner.m.size(); ++i) {
    tensors.push_back({"lm" + std::to_string(i), &s.opt_learner.m[i]});
    tensors.push_back({"lv" + std::to_string(i), &s.opt_learner.v[i]});
  }
  for (std::size_t i = 0; i < s.opt_disc.m.size(); ++i) {
    tensors.push_back({"dm" + std::to_string(i), &s.opt_disc.m[i]});
    tensors.push_back({"dv" + std::to_string(i), &s.opt_disc.v[i]});
  }
  fields.push_back({"adam_learner_tensors", std::to_string(s.opt_learner.m.size())});
  fields.push_back({"adam_disc_tensors", std::to_string(s.opt_disc.m.size())});
  write_checkpoint(path, Kind::TrainState, fields, tensors);
}

TrainStateBlob load_train_state(const std::string& path) {
  Loaded l = read_checkpoint(path);
  require_kind(l, Kind::TrainState);
  TrainStateBlob s;
  s.generator_step = l.header.step;
  s.learner = learner_from(l, 0, l.header.m, l.header.k);
  std::size_t base = 8;
  {
    DiscriminatorParams p;
    p.in = l.header.in;
    p.W1 = take(l, base + 0, "d_W1");
    p.b1 = take(l, base + 1, "d_b1");
    p.W2 = take(l, base + 2, "d_W2");
    p.b2 = take(l, base + 3, "d_b2");
    p.W3 = take(l, base + 4, "d_W3");
    p.b3 = take(l, base + 5, "d_b3");
    s.disc = std::move(p);
  }
  base += 6;
  const long nl = std::stol(l.fields.at("adam_learner_tensors"));
  const long nd = std::stol(l.fields.at("adam_disc_tensors"));
  for (long i = 0; i < nl; ++i) {
    s.opt_learner.m.push_back(take(l, base++, ("lm" + std::to_string(i)).c_str()));
    s.opt_learner.v.push_back(take(l, base++, ("lv" + std::to_string(i)).c_str()));
  }
  for (long i = 0; i < nd; ++i) {
    s.opt_disc.m.push_back(take(l, base++, ("dm" + std::to_string(i)).c_str()));
    s.opt_disc.v.push_back(take(l, base++, ("dv" + std::to_string(i)).c_str()));
  }
  s.opt_learner.step = std::stol(l.fields.at("adam_learner_step"));
  s.opt_disc.step = std::stol(l.fields.at("adam_disc_step"));
  return s;
}

}  // namespace mrf::store
