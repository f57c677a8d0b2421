#include "mrf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mrf/errors.hpp"
#include "mrf/exact.hpp"
#include "mrf/gibbs.hpp"
#include "mrf/rng.hpp"

namespace mrf {

void Dataset::check() const {
  if (n_vars <= 0 || support_size <= 0) throw ShapeError("dataset: bad dimensions");
  if (soft) {
    if (support_size != 2) throw ShapeError("dataset: soft data requires binary support");
    for (auto& r : soft_rows) {
      if (static_cast<int>(r.size()) != n_vars) throw ShapeError("dataset: soft row length");
      for (double v : r)
        if (v < 0.0 || v > 1.0) throw ShapeError("dataset: soft value outside [0,1]");
    }
  } else {
    for (auto& r : rows) {
      if (static_cast<int>(r.size()) != n_vars) throw ShapeError("dataset: row length");
      for (int v : r)
        if (v < 0 || v >= support_size) throw ShapeError("dataset: value outside support");
    }
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_dataset: cannot open " + path);
  std::string line;
  long lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw ParseError("load_dataset: truncated header", lineno);
    ++lineno;
  };

  next_line();
  if (line != "mrf-data v1") throw ParseError("load_dataset: bad header", lineno);

  Dataset d;
  std::string key, kind;
  next_line();
  {
    std::istringstream is(line);
    if (!(is >> key >> d.n_vars) || key != "n_vars")
      throw ParseError("load_dataset: expected n_vars", lineno);
  }
  next_line();
  {
    std::istringstream is(line);
    if (!(is >> key >> d.support_size) || key != "support_size")
      throw ParseError("load_dataset: expected support_size", lineno);
  }
  next_line();
  {
    std::istringstream is(line);
    if (!(is >> key >> kind) || key != "kind" || (kind != "int" && kind != "soft"))
      throw ParseError("load_dataset: expected kind int|soft", lineno);
  }
  d.soft = (kind == "soft");

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (...) {
        throw ParseError("load_dataset: bad value '" + cell + "'", lineno);
      }
    }
    if (static_cast<int>(vals.size()) != d.n_vars)
      throw ParseError("load_dataset: wrong number of values", lineno);
    if (d.soft) {
      for (double v : vals)
        if (v < 0.0 || v > 1.0) throw ParseError("load_dataset: soft value outside [0,1]", lineno);
      d.soft_rows.push_back(std::move(vals));
    } else {
      Assignment row(vals.size());
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const int v = static_cast<int>(vals[i]);
        if (vals[i] != v || v < 0 || v >= d.support_size)
          throw ParseError("load_dataset: value outside support", lineno);
        row[i] = v;
      }
      d.rows.push_back(std::move(row));
    }
  }
  return d;
}

void save_dataset(const Dataset& d, const std::string& path) {
  d.check();
  std::ofstream out(path);
  if (!out) throw IoError("save_dataset: cannot open " + path);
  out << "mrf-data v1\n";
  out << "n_vars " << d.n_vars << "\n";
  out << "support_size " << d.support_size << "\n";
  out << "kind " << (d.soft ? "soft" : "int") << "\n";
  out.precision(17);
  if (d.soft) {
    for (auto& r : d.soft_rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << "\n";
    }
  } else {
    for (auto& r : d.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << "\n";
    }
  }
  if (!out) throw IoError("save_dataset: write failed for " + path);
}

std::vector<double> encode_onehot(const Assignment& x, int support_size) {
  std::vector<double> out(x.size() * support_size, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0 || x[i] >= support_size) throw IndexError("encode_onehot: value outside support");
    out[i * support_size + x[i]] = 1.0;
  }
  return out;
}

Assignment decode_onehot(const std::vector<double>& row, int support_size) {
  if (row.size() % support_size != 0) throw ShapeError("decode_onehot: length not divisible");
  Assignment x(row.size() / support_size);
  for (std::size_t i = 0; i < x.size(); ++i) {
    int best = 0;
    for (int v = 1; v < support_size; ++v)
      if (row[i * support_size + v] > row[i * support_size + best]) best = v;
    x[i] = best;
  }
  return x;
}

std::array<double, 2> bernoulli_encode(double v) {
  if (v < 0.0 || v > 1.0) throw InputError("bernoulli_encode: value outside [0,1]");
  return {1.0 - v, v};
}

double bernoulli_decode(const std::vector<double>& belief_row) {
  if (belief_row.size() != 2) throw ShapeError("bernoulli_decode: expected a binary row");
  if (std::fabs(belief_row[0] + belief_row[1] - 1.0) > 1e-9)
    throw InputError("bernoulli_decode: row not normalized");
  return belief_row[1];
}

Dataset binarize_images(const std::vector<std::vector<double>>& grayscale, double threshold) {
  Dataset d;
  d.support_size = 2;
  if (grayscale.empty()) throw InputError("binarize_images: no images");
  d.n_vars = static_cast<int>(grayscale[0].size());
  for (auto& img : grayscale) {
    if (static_cast<int>(img.size()) != d.n_vars)
      throw ShapeError("binarize_images: ragged input");
    Assignment row(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
      if (img[i] < 0.0 || img[i] > 1.0) throw InputError("binarize_images: value outside [0,1]");
      row[i] = img[i] > threshold ? 1 : 0;
    }
    d.rows.push_back(std::move(row));
  }
  return d;
}

namespace {

std::map<std::string, double> parse_kv(const std::string& text) {
  std::map<std::string, double> kv;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("synthetic spec: expected key=value");
    kv[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return kv;
}

double get_or(const std::map<std::string, double>& kv, const std::string& key, double dflt) {
  auto it = kv.find(key);
  return it == kv.end() ? dflt : it->second;
}

LogPotentials gaussian_potentials(const GraphStructure& g, double scale, Rng& rng) {
  LogPotentials psi;
  psi.v.resize(g.param_count());
  for (auto& v : psi.v) v = scale * normal01(rng);
  return psi;
}

// Exact iid sampling by enumerating the joint (small N only).
std::vector<Assignment> exact_mrf_samples(const GraphStructure& g, const LogPotentials& psi,
                                          int n, Rng& rng) {
  const int X = g.support_size;
  double states_d = std::pow(static_cast<double>(X), g.n_nodes);
  if (states_d > static_cast<double>(std::size_t{1} << 22))
    throw OracleSizeError("synthetic mrf: state space too large for exact sampling");
  const std::size_t S = static_cast<std::size_t>(states_d);

  std::vector<double> logw(S);
  Assignment x(g.n_nodes, 0);
  double mx = -1e300;
  for (std::size_t s = 0; s < S; ++s) {
    std::size_t r = s;
    for (int i = 0; i < g.n_nodes; ++i) {
      x[i] = static_cast<int>(r % X);
      r /= X;
    }
    logw[s] = log_score(g, psi, x);
    mx = std::max(mx, logw[s]);
  }
  std::vector<double> cdf(S);
  double acc = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    acc += std::exp(logw[s] - mx);
    cdf[s] = acc;
  }

  std::vector<Assignment> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng) * acc;
    const std::size_t s =
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    std::size_t r = std::min(s, S - 1);
    Assignment row(g.n_nodes);
    for (int j = 0; j < g.n_nodes; ++j) {
      row[j] = static_cast<int>(r % X);
      r /= X;
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

Dataset make_synthetic_dataset(const std::string& spec, int n, std::uint64_t seed) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const auto kv = parse_kv(colon == std::string::npos ? "" : spec.substr(colon + 1));
  Rng rng = make_rng(seed);

  Dataset d;
  d.support_size = 2;
  if (kind == "bits") {
    d.n_vars = static_cast<int>(get_or(kv, "n", 8));
    const double p = get_or(kv, "p", 0.5);
    for (int i = 0; i < n; ++i) {
      Assignment row(d.n_vars);
      for (auto& v : row) v = uniform01(rng) < p ? 1 : 0;
      d.rows.push_back(std::move(row));
    }
  } else if (kind == "const") {
    d.n_vars = static_cast<int>(get_or(kv, "n", 8));
    const int value = static_cast<int>(get_or(kv, "value", 0));
    d.rows.assign(n, Assignment(d.n_vars, value));
  } else if (kind == "chain") {
    const int nn = static_cast<int>(get_or(kv, "n", 4));
    GraphStructure g;
    g.n_nodes = nn;
    g.support_size = 2;
    for (int i = 0; i + 1 < nn; ++i) g.edges.push_back({i, i + 1});
    g.max_degree = nn > 2 ? 2 : (nn > 1 ? 1 : 0);
    LogPotentials psi = gaussian_potentials(g, get_or(kv, "scale", 1.0), rng);
    d.n_vars = nn;
    d.rows = exact_mrf_samples(g, psi, n, rng);
  } else if (kind == "mrf") {
    const int nn = static_cast<int>(get_or(kv, "n", 16));
    const double ef = get_or(kv, "edge_factor", 2.0);
    const auto sseed = static_cast<std::uint64_t>(get_or(kv, "structure_seed", 1));
    GraphStructure g = make_random_structure(nn, ef, sseed);
    LogPotentials psi = gaussian_potentials(g, get_or(kv, "scale", 1.0), rng);
    d.n_vars = nn;
    d.rows = exact_mrf_samples(g, psi, n, rng);
  } else if (kind == "ising-grid") {
    const int h = static_cast<int>(get_or(kv, "h", 10));
    const int w = static_cast<int>(get_or(kv, "w", 10));
    const double coupling = get_or(kv, "coupling", 0.8);
    const int sweeps = static_cast<int>(get_or(kv, "sweeps", 50));
    GraphStructure g = make_grid_structure(h, w);
    LogPotentials psi;
    psi.v.assign(g.param_count(), 0.0);
    for (int e = 0; e < g.n_edges(); ++e) {
      psi.v[e * 4 + 0] = coupling;  // (0,0)
      psi.v[e * 4 + 3] = coupling;  // (1,1)
    }
    // Independent chains: correlated blobs per image, fresh image per chain.
    d.n_vars = h * w;
    for (int i = 0; i < n; ++i) {
      gibbs::GibbsConfig gc;
      gc.burn_in = sweeps;
      gc.seed = derive_seed(seed, 1000 + i);
      d.rows.push_back(gibbs::sample(g, psi, gc, 1)[0]);
    }
  } else {
    throw ParseError("synthetic spec: unknown kind '" + kind + "'");
  }
  d.check();
  return d;
}

std::vector<std::vector<double>> load_pgm(const std::string& path, int* height, int* width) {
  std::ifstream in(path);
  if (!in) throw IoError("load_pgm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2") throw ParseError("load_pgm: only ASCII P2 supported");
  int w, h, maxval;
  in >> w >> h >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval <= 0) throw ParseError("load_pgm: bad dimensions");
  std::vector<double> img(static_cast<std::size_t>(w) * h);
  for (auto& v : img) {
    int raw;
    if (!(in >> raw)) throw ParseError("load_pgm: truncated pixel data");
    v = static_cast<double>(raw) / maxval;
  }
  if (height) *height = h;
  if (width) *width = w;
  return {img};
}

void write_pgm_grid(const std::string& path, const std::vector<std::vector<double>>& images,
                    int height, int width) {
  if (images.empty()) throw InputError("write_pgm_grid: no images");
  const int n = static_cast<int>(images.size());
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  const int pad = 1;
  const int W = cols * width + (cols - 1) * pad;
  const int H = rows * height + (rows - 1) * pad;
  std::vector<int> canvas(static_cast<std::size_t>(W) * H, 0);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(images[i].size()) != height * width)
      throw ShapeError("write_pgm_grid: image size mismatch");
    const int r0 = (i / cols) * (height + pad);
    const int c0 = (i % cols) * (width + pad);
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        const double v = std::clamp(images[i][r * width + c], 0.0, 1.0);
        canvas[static_cast<std::size_t>(r0 + r) * W + (c0 + c)] =
            static_cast<int>(std::lround(v * 255.0));
      }
  }
  std::ofstream out(path);
  if (!out) throw IoError("write_pgm_grid: cannot open " + path);
  out << "P2\n" << W << " " << H << "\n255\n";
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) out << canvas[static_cast<std::size_t>(r) * W + c] << (c + 1 == W ? "" : " ");
    out << "\n";
  }
}

}  // namespace mrf
