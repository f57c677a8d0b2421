#include "mrf/tape.hpp"

#include <algorithm>
#include <cmath>

#include "mrf/errors.hpp"

namespace mrf {

namespace {

constexpr std::size_t kParallelCutoff = 1u << 15;

bool broadcastable(std::size_t a, std::size_t b) { return a == b || a == 1 || b == 1; }

// Elementwise binary with row/column/scalar broadcasting.
template <class F>
Tensor ew_binary(const Tensor& a, const Tensor& b, F f, const char* name) {
  if (!broadcastable(a.rows(), b.rows()) || !broadcastable(a.cols(), b.cols()))
    throw ShapeError(std::string(name) + ": shapes not broadcastable");
  const std::size_t R = std::max(a.rows(), b.rows());
  const std::size_t C = std::max(a.cols(), b.cols());
  Tensor out(R, C);
  const std::size_t ar = a.rows() == 1 ? 0 : 1, ac = a.cols() == 1 ? 0 : 1;
  const std::size_t br = b.rows() == 1 ? 0 : 1, bc = b.cols() == 1 ? 0 : 1;
  const long n = static_cast<long>(R * C);
#pragma omp parallel for schedule(static) if (n > static_cast<long>(kParallelCutoff))
  for (long i = 0; i < n; ++i) {
    const std::size_t r = static_cast<std::size_t>(i) / C;
    const std::size_t c = static_cast<std::size_t>(i) % C;
    out[i] = f(a(r * ar, c * ac), b(r * br, c * bc));
  }
  return out;
}

template <class F>
Tensor ew_unary(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  const long n = static_cast<long>(a.size());
#pragma omp parallel for schedule(static) if (n > static_cast<long>(kParallelCutoff))
  for (long i = 0; i < n; ++i) out[i] = f(a[i]);
  return out;
}

Tensor matmul_impl(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  const std::size_t R = a.rows(), K = a.cols(), C = b.cols();
  Tensor out(R, C, 0.0);
#pragma omp parallel for schedule(static) if (R * K * C > kParallelCutoff)
  for (long r = 0; r < static_cast<long>(R); ++r) {
    double* orow = out.data() + r * C;
    for (std::size_t k = 0; k < K; ++k) {
      const double av = a(r, k);
      const double* brow = b.data() + k * C;
      for (std::size_t c = 0; c < C; ++c) orow[c] += av * brow[c];
    }
  }
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

IndexPtr make_index(IndexArray v) { return std::make_shared<const IndexArray>(std::move(v)); }

void Tape::check_id(Id id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
    throw IndexError("tape: bad node id");
}

Tape::Id Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::input(Tensor v) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(v);
  n.diff = true;
  return push(std::move(n));
}

Tape::Id Tape::constant(Tensor v) {
  Node n;
  n.op = Op::kConst;
  n.value = std::move(v);
  return push(std::move(n));
}

Tape::Id Tape::binary(Op op, Id a, Id b) {
  check_id(a);
  check_id(b);
  const Tensor& va = nodes_[a].value;
  const Tensor& vb = nodes_[b].value;
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.diff = nodes_[a].diff || nodes_[b].diff;
  switch (op) {
    case Op::kAdd: n.value = ew_binary(va, vb, [](double x, double y) { return x + y; }, "add"); break;
    case Op::kSub: n.value = ew_binary(va, vb, [](double x, double y) { return x - y; }, "sub"); break;
    case Op::kMul: n.value = ew_binary(va, vb, [](double x, double y) { return x * y; }, "mul"); break;
    case Op::kDiv: n.value = ew_binary(va, vb, [](double x, double y) { return x / y; }, "div"); break;
    case Op::kMax: n.value = ew_binary(va, vb, [](double x, double y) { return x >= y ? x : y; }, "max"); break;
    case Op::kMatMul: n.value = matmul_impl(va, vb); break;
    default: throw ContractError("tape: not a binary op");
  }
  return push(std::move(n));
}

Tape::Id Tape::unary(Op op, Id a, double attr) {
  check_id(a);
  const Tensor& va = nodes_[a].value;
  Node n;
  n.op = op;
  n.a = a;
  n.attr = attr;
  n.diff = nodes_[a].diff;
  switch (op) {
    case Op::kExp: n.value = ew_unary(va, [](double x) { return std::exp(x); }); break;
    case Op::kLog: n.value = ew_unary(va, [](double x) { return std::log(x); }); break;
    case Op::kSqrt: n.value = ew_unary(va, [](double x) { return std::sqrt(x); }); break;
    case Op::kLeakyRelu:
      n.value = ew_unary(va, [attr](double x) { return x >= 0.0 ? x : attr * x; });
      break;
    case Op::kSigmoid: n.value = ew_unary(va, stable_sigmoid); break;
    case Op::kTranspose: {
      Tensor out(va.cols(), va.rows());
      for (std::size_t r = 0; r < va.rows(); ++r)
        for (std::size_t c = 0; c < va.cols(); ++c) out(c, r) = va(r, c);
      n.value = std::move(out);
      break;
    }
    case Op::kSumAll: {
      double s = 0.0;
      for (std::size_t i = 0; i < va.size(); ++i) s += va[i];
      n.value = Tensor::scalar(s);
      break;
    }
    case Op::kSumRows: {
      Tensor out(1, va.cols(), 0.0);
      for (std::size_t r = 0; r < va.rows(); ++r)
        for (std::size_t c = 0; c < va.cols(); ++c) out[c] += va(r, c);
      n.value = std::move(out);
      break;
    }
    case Op::kSumCols: {
      Tensor out(va.rows(), 1, 0.0);
      for (std::size_t r = 0; r < va.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < va.cols(); ++c) s += va(r, c);
        out[r] = s;
      }
      n.value = std::move(out);
      break;
    }
    case Op::kLseRows: {
      Tensor out(va.rows(), 1);
      const long R = static_cast<long>(va.rows());
#pragma omp parallel for schedule(static) if (va.size() > kParallelCutoff)
      for (long r = 0; r < R; ++r) {
        double mx = va(r, 0);
        for (std::size_t c = 1; c < va.cols(); ++c) mx = std::max(mx, va(r, c));
        double s = 0.0;
        for (std::size_t c = 0; c < va.cols(); ++c) s += std::exp(va(r, c) - mx);
        out[r] = mx + std::log(s);
      }
      n.value = std::move(out);
      break;
    }
    default: throw ContractError("tape: not a unary op");
  }
  return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) { return binary(Op::kAdd, a, b); }
Tape::Id Tape::sub(Id a, Id b) { return binary(Op::kSub, a, b); }
Tape::Id Tape::mul(Id a, Id b) { return binary(Op::kMul, a, b); }
Tape::Id Tape::div(Id a, Id b) { return binary(Op::kDiv, a, b); }
Tape::Id Tape::maximum(Id a, Id b) { return binary(Op::kMax, a, b); }
Tape::Id Tape::matmul(Id a, Id b) { return binary(Op::kMatMul, a, b); }
Tape::Id Tape::transpose(Id a) { return unary(Op::kTranspose, a); }
Tape::Id Tape::exp(Id a) { return unary(Op::kExp, a); }
Tape::Id Tape::log(Id a) { return unary(Op::kLog, a); }
Tape::Id Tape::sqrt(Id a) { return unary(Op::kSqrt, a); }
Tape::Id Tape::leaky_relu(Id a, double slope) { return unary(Op::kLeakyRelu, a, slope); }
Tape::Id Tape::sigmoid(Id a) { return unary(Op::kSigmoid, a); }
Tape::Id Tape::sum_all(Id a) { return unary(Op::kSumAll, a); }
Tape::Id Tape::sum_rows(Id a) { return unary(Op::kSumRows, a); }
Tape::Id Tape::sum_cols(Id a) { return unary(Op::kSumCols, a); }
Tape::Id Tape::lse_rows(Id a) { return unary(Op::kLseRows, a); }

Tape::Id Tape::lse_grouped(Id a, int group) {
  check_id(a);
  const Tensor& va = nodes_[a].value;
  if (group <= 0 || va.rows() % group != 0)
    throw ShapeError("lse_grouped: group must divide row count");
  const std::size_t G = static_cast<std::size_t>(group);
  const std::size_t S = va.rows() / G, C = va.cols();
  Tensor out(S, C);
#pragma omp parallel for schedule(static) if (va.size() > kParallelCutoff)
  for (long s = 0; s < static_cast<long>(S); ++s) {
    for (std::size_t c = 0; c < C; ++c) {
      double mx = va(s * G, c);
      for (std::size_t r = 1; r < G; ++r) mx = std::max(mx, va(s * G + r, c));
      double sum = 0.0;
      for (std::size_t r = 0; r < G; ++r) sum += std::exp(va(s * G + r, c) - mx);
      out(s, c) = mx + std::log(sum);
    }
  }
  Node n;
  n.op = Op::kLseGrouped;
  n.a = a;
  n.i0 = G;
  n.diff = nodes_[a].diff;
  n.value = std::move(out);
  return push(std::move(n));
}

Tape::Id Tape::broadcast_to(Id a, std::size_t rows, std::size_t cols) {
  check_id(a);
  const Tensor& va = nodes_[a].value;
  if (!broadcastable(va.rows(), rows) || !broadcastable(va.cols(), cols) || va.rows() > rows ||
      va.cols() > cols)
    throw ShapeError("broadcast_to: incompatible target shape");
  Tensor out(rows, cols);
  const std::size_t ar = va.rows() == 1 ? 0 : 1, ac = va.cols() == 1 ? 0 : 1;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = va(r * ar, c * ac);
  Node n;
  n.op = Op::kBroadcast;
  n.a = a;
  n.i0 = rows;
  n.i1 = cols;
  n.diff = nodes_[a].diff;
  n.value = std::move(out);
  return push(std::move(n));
}

Tape::Id Tape::gather_rows(Id a, IndexPtr idx) {
  check_id(a);
  const Tensor& va = nodes_[a].value;
  const std::size_t C = va.cols();
  for (std::uint32_t src : *idx)
    if (src >= va.rows()) throw IndexError("gather_rows: index out of range");
  Tensor out(idx->size(), C);
  const long n = static_cast<long>(idx->size());
#pragma omp parallel for schedule(static) if (n * static_cast<long>(C) > static_cast<long>(kParallelCutoff))
  for (long r = 0; r < n; ++r) {
    const double* s = va.data() + (*idx)[r] * C;
    double* d = out.data() + r * C;
    std::copy(s, s + C, d);
  }
  Node nd;
  nd.op = Op::kGatherRows;
  nd.a = a;
  nd.idx = std::move(idx);
  nd.diff = nodes_[a].diff;
  nd.value = std::move(out);
  return push(std::move(nd));
}

Tape::Id Tape::scatter_add_rows(Id a, IndexPtr idx, std::size_t n_out) {
  check_id(a);
  const Tensor& va = nodes_[a].value;
  if (idx->size() != va.rows()) throw ShapeError("scatter_add_rows: index length != rows");
  const std::size_t C = va.cols();
  Tensor out(n_out, C, 0.0);
  // Serial accumulation in input-row order keeps results deterministic.
  for (std::size_t r = 0; r < va.rows(); ++r) {
    const std::uint32_t dst = (*idx)[r];
    if (dst >= n_out) throw IndexError("scatter_add_rows: index out of range");
    const double* s = va.data() + r * C;
    double* d = out.data() + dst * C;
    for (std::size_t c = 0; c < C; ++c) d[c] += s[c];
  }
  Node nd;
  nd.op = Op::kScatterAddRows;
  nd.a = a;
  nd.i0 = n_out;
  nd.idx = std::move(idx);
  nd.diff = nodes_[a].diff;
  nd.value = std::move(out);
  return push(std::move(nd));
}

Tape::Id Tape::gather_flat(Id a, IndexPtr idx, std::size_t rows, std::size_t cols) {
  check_id(a);
  const Tensor& va = nodes_[a].value;
  if (idx->size() != rows * cols) throw ShapeError("gather_flat: index length != output size");
  for (std::uint32_t src : *idx)
    if (src >= va.size()) throw IndexError("gather_flat: index out of range");
  Tensor out(rows, cols);
  const long n = static_cast<long>(idx->size());
#pragma omp parallel for schedule(static) if (n > static_cast<long>(kParallelCutoff))
  for (long i = 0; i < n; ++i) out[i] = va[(*idx)[i]];
  Node nd;
  nd.op = Op::kGatherFlat;
  nd.a = a;
  nd.i0 = rows;
  nd.i1 = cols;
  nd.idx = std::move(idx);
  nd.diff = nodes_[a].diff;
  nd.value = std::move(out);
  return push(std::move(nd));
}

Tape::Id Tape::scatter_add_flat(Id a, IndexPtr idx, std::size_t rows, std::size_t cols) {
  check_id(a);
  const Tensor& va = nodes_[a].value;
  if (idx->size() != va.size()) throw ShapeError("scatter_add_flat: index length != input size");
  Tensor out(rows, cols, 0.0);
  for (std::size_t i = 0; i < va.size(); ++i) {
    const std::uint32_t dst = (*idx)[i];
    if (dst >= out.size()) throw IndexError("scatter_add_flat: index out of range");
    out[dst] += va[i];
  }
  Node nd;
  nd.op = Op::kScatterAddFlat;
  nd.a = a;
  nd.i0 = rows;
  nd.i1 = cols;
  nd.idx = std::move(idx);
  nd.diff = nodes_[a].diff;
  nd.value = std::move(out);
  return push(std::move(nd));
}

Tape::Id Tape::reshape(Id a, std::size_t rows, std::size_t cols) {
  check_id(a);
  const Tensor& va = nodes_[a].value;
  if (rows * cols != va.size()) throw ShapeError("reshape: size mismatch");
  Node nd;
  nd.op = Op::kReshape;
  nd.a = a;
  nd.i0 = rows;
  nd.i1 = cols;
  nd.diff = nodes_[a].diff;
  nd.value = Tensor::from_rows(rows, cols, va.vec());
  return push(std::move(nd));
}

Tape::Id Tape::concat_rows(Id a, Id b) {
  check_id(a);
  check_id(b);
  const Tensor& va = nodes_[a].value;
  const Tensor& vb = nodes_[b].value;
  if (va.cols() != vb.cols()) throw ShapeError("concat_rows: column mismatch");
  Tensor out(va.rows() + vb.rows(), va.cols());
  std::copy(va.data(), va.data() + va.size(), out.data());
  std::copy(vb.data(), vb.data() + vb.size(), out.data() + va.size());
  Node nd;
  nd.op = Op::kConcatRows;
  nd.a = a;
  nd.b = b;
  nd.diff = nodes_[a].diff || nodes_[b].diff;
  nd.value = std::move(out);
  return push(std::move(nd));
}

Tape::Id Tape::slice_rows(Id a, std::size_t row0, std::size_t n_rows) {
  check_id(a);
  const Tensor& va = nodes_[a].value;
  if (row0 + n_rows > va.rows()) throw ShapeError("slice_rows: range out of bounds");
  Tensor out(n_rows, va.cols());
  std::copy(va.data() + row0 * va.cols(), va.data() + (row0 + n_rows) * va.cols(), out.data());
  Node nd;
  nd.op = Op::kSliceRows;
  nd.a = a;
  nd.i0 = row0;
  nd.i1 = n_rows;
  nd.diff = nodes_[a].diff;
  nd.value = std::move(out);
  return push(std::move(nd));
}

Tape::Id Tape::mean_all(Id a) {
  const double n = static_cast<double>(val(a).size());
  return scale(sum_all(a), 1.0 / n);
}

Tape::Id Tape::row_l2_norm(Id a) { return sqrt(sum_cols(square(a))); }

Tape::Id Tape::reduce_to(Id g, std::size_t rows, std::size_t cols) {
  const Tensor& vg = val(g);
  if (vg.rows() == rows && vg.cols() == cols) return g;
  if (rows == 1 && cols == 1) return sum_all(g);
  if (rows == 1) return sum_rows(g);
  if (cols == 1) return sum_cols(g);
  throw ShapeError("reduce_to: cannot reduce to larger shape");
}

std::vector<Tape::Id> Tape::backward(Id loss, const std::vector<Id>& wrt) {
  check_id(loss);
  if (val(loss).size() != 1) throw ContractError("backward: loss must be scalar");
  for (Id w : wrt) check_id(w);

  std::vector<Id> adj(static_cast<std::size_t>(loss) + 1, -1);
  adj[loss] = constant(Tensor::scalar(1.0));

  auto accumulate = [&](Id target, Id contribution) {
    if (target > loss) throw ContractError("backward: adjoint of later node");
    adj[target] = adj[target] < 0 ? contribution : add(adj[target], contribution);
  };

  // Pushing adjoint nodes can reallocate nodes_, so copy everything needed
  // out of the node before emitting any new ops.
  for (Id id = loss; id >= 0; --id) {
    if (adj[id] < 0 || !nodes_[id].diff) continue;
    const Op op = nodes_[id].op;
    const Id a = nodes_[id].a, b = nodes_[id].b;
    const double attr = nodes_[id].attr;
    const std::size_t i0 = nodes_[id].i0, i1 = nodes_[id].i1;
    const IndexPtr idx = nodes_[id].idx;
    const Id g = adj[id];
    const bool da = a >= 0 && nodes_[a].diff;
    const bool db = b >= 0 && nodes_[b].diff;
    auto rows_of = [&](Id x) { return nodes_[x].value.rows(); };
    auto cols_of = [&](Id x) { return nodes_[x].value.cols(); };
    auto reduce_like = [&](Id grad_id, Id like) {
      return reduce_to(grad_id, rows_of(like), cols_of(like));
    };

    switch (op) {
      case Op::kLeaf:
      case Op::kConst:
        break;
      case Op::kAdd: {
        if (da) accumulate(a, reduce_like(g, a));
        if (db) accumulate(b, reduce_like(g, b));
        break;
      }
      case Op::kSub: {
        if (da) accumulate(a, reduce_like(g, a));
        if (db) accumulate(b, reduce_like(neg(g), b));
        break;
      }
      case Op::kMul: {
        if (da) accumulate(a, reduce_like(mul(g, b), a));
        if (db) accumulate(b, reduce_like(mul(g, a), b));
        break;
      }
      case Op::kDiv: {
        if (da) accumulate(a, reduce_like(div(g, b), a));
        if (db) accumulate(b, reduce_like(neg(div(mul(g, id), b)), b));
        break;
      }
      case Op::kMax: {
        // Subgradient: ties route to the first operand.
        Tensor mask = ew_binary(nodes_[a].value, nodes_[b].value,
                                [](double x, double y) { return x >= y ? 1.0 : 0.0; }, "max");
        Id mid = constant(std::move(mask));
        if (da) accumulate(a, reduce_like(mul(g, mid), a));
        if (db) accumulate(b, reduce_like(mul(g, sub(scalar(1.0), mid)), b));
        break;
      }
      case Op::kMatMul: {
        if (da) accumulate(a, matmul(g, transpose(b)));
        if (db) accumulate(b, matmul(transpose(a), g));
        break;
      }
      case Op::kTranspose:
        if (da) accumulate(a, transpose(g));
        break;
      case Op::kExp:
        if (da) accumulate(a, mul(g, id));
        break;
      case Op::kLog:
        if (da) accumulate(a, div(g, a));
        break;
      case Op::kSqrt:
        if (da) accumulate(a, div(g, scale(id, 2.0)));
        break;
      case Op::kLeakyRelu: {
        if (da) {
          Tensor mask =
              ew_unary(nodes_[a].value, [attr](double x) { return x >= 0.0 ? 1.0 : attr; });
          accumulate(a, mul(g, constant(std::move(mask))));
        }
        break;
      }
      case Op::kSigmoid:
        if (da) accumulate(a, mul(mul(g, id), sub(scalar(1.0), id)));
        break;
      case Op::kSumAll:
      case Op::kSumRows:
      case Op::kSumCols:
        if (da) accumulate(a, broadcast_to(g, rows_of(a), cols_of(a)));
        break;
      case Op::kBroadcast:
        if (da) accumulate(a, reduce_like(g, a));
        break;
      case Op::kLseRows:
        // d lse / d x = softmax(x) row-wise; g is Rx1 and broadcasts.
        if (da) accumulate(a, mul(g, exp(sub(a, id))));
        break;
      case Op::kLseGrouped: {
        if (da) {
          IndexArray rep(rows_of(a));
          for (std::size_t r = 0; r < rep.size(); ++r)
            rep[r] = static_cast<std::uint32_t>(r / i0);
          IndexPtr repp = make_index(std::move(rep));
          Id out_rep = gather_rows(id, repp);
          Id g_rep = gather_rows(g, repp);
          accumulate(a, mul(g_rep, exp(sub(a, out_rep))));
        }
        break;
      }
      case Op::kGatherRows:
        if (da) accumulate(a, scatter_add_rows(g, idx, rows_of(a)));
        break;
      case Op::kScatterAddRows:
        if (da) accumulate(a, gather_rows(g, idx));
        break;
      case Op::kGatherFlat:
        if (da) accumulate(a, scatter_add_flat(g, idx, rows_of(a), cols_of(a)));
        break;
      case Op::kScatterAddFlat:
        if (da) accumulate(a, gather_flat(g, idx, rows_of(a), cols_of(a)));
        break;
      case Op::kReshape:
        if (da) accumulate(a, reshape(g, rows_of(a), cols_of(a)));
        break;
      case Op::kConcatRows: {
        if (da) accumulate(a, slice_rows(g, 0, rows_of(a)));
        if (db) accumulate(b, slice_rows(g, rows_of(a), rows_of(b)));
        break;
      }
      case Op::kSliceRows: {
        if (da) {
          IndexArray sidx(i1);
          for (std::size_t r = 0; r < i1; ++r) sidx[r] = static_cast<std::uint32_t>(i0 + r);
          accumulate(a, scatter_add_rows(g, make_index(std::move(sidx)), rows_of(a)));
        }
        break;
      }
    }
  }

  std::vector<Id> out;
  out.reserve(wrt.size());
  for (Id w : wrt) {
    if (w <= loss && adj[w] >= 0) {
      out.push_back(adj[w]);
    } else {
      out.push_back(constant(Tensor(nodes_[w].value.rows(), nodes_[w].value.cols(), 0.0)));
    }
  }
  return out;
}

std::vector<Tensor> grad(Tape& tp, Tape::Id loss, const std::vector<Tape::Id>& wrt) {
  std::vector<Tape::Id> ids = tp.backward(loss, wrt);
  std::vector<Tensor> out;
  out.reserve(ids.size());
  for (Tape::Id id : ids) out.push_back(tp.val(id));
  return out;
}

Tape::Id grad_norm_penalty(Tape& tp, Tape::Id outputs, Tape::Id x) {
  Tape::Id s = tp.sum_all(outputs);
  Tape::Id gx = tp.backward(s, {x})[0];
  Tape::Id norms = tp.row_l2_norm(gx);
  return tp.mean_all(tp.square(tp.sub(norms, tp.scalar(1.0))));
}

}  // namespace mrf
