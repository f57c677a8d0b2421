#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mrf/tensor.hpp"

namespace mrf {

using IndexArray = std::vector<std::uint32_t>;
using IndexPtr = std::shared_ptr<const IndexArray>;

IndexPtr make_index(IndexArray v);

// Reverse-mode autodiff over eagerly-evaluated dense ops. Adjoints are
// recorded as ordinary tape nodes built from the same primitives, so a
// gradient produced by backward() can itself be differentiated — that is how
// the critic's gradient penalty gets its parameter gradients.
//
// Binary ops broadcast: operand shapes must match per dimension or be 1
// (row vectors, column vectors, scalars).
class Tape {
 public:
  using Id = std::int32_t;

  Id input(Tensor v);     // differentiable leaf
  Id constant(Tensor v);  // non-differentiable leaf

  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id div(Id a, Id b);
  Id maximum(Id a, Id b);
  Id matmul(Id a, Id b);
  Id transpose(Id a);
  Id exp(Id a);
  Id log(Id a);
  Id sqrt(Id a);
  Id leaky_relu(Id a, double slope);
  Id sigmoid(Id a);
  Id sum_all(Id a);                       // 1x1
  Id sum_rows(Id a);                      // column sums, 1xC
  Id sum_cols(Id a);                      // row sums, Rx1
  Id lse_rows(Id a);                      // stabilized row-wise logsumexp, Rx1
  Id lse_grouped(Id a, int group);        // logsumexp over row groups, (R/group)xC
  Id broadcast_to(Id a, std::size_t rows, std::size_t cols);
  Id gather_rows(Id a, IndexPtr idx);
  Id scatter_add_rows(Id a, IndexPtr idx, std::size_t n_out);
  Id gather_flat(Id a, IndexPtr idx, std::size_t rows, std::size_t cols);
  Id scatter_add_flat(Id a, IndexPtr idx, std::size_t rows, std::size_t cols);
  Id reshape(Id a, std::size_t rows, std::size_t cols);
  Id concat_rows(Id a, Id b);
  Id slice_rows(Id a, std::size_t row0, std::size_t n_rows);

  // Conveniences built on the primitives above.
  Id scalar(double v) { return constant(Tensor::scalar(v)); }
  Id neg(Id a) { return mul(a, scalar(-1.0)); }
  Id square(Id a) { return mul(a, a); }
  Id scale(Id a, double s) { return mul(a, scalar(s)); }
  Id mean_all(Id a);
  Id row_l2_norm(Id a);  // Rx1

  // Appends adjoint nodes for d(loss)/d(node) and returns one grad id per
  // `wrt` entry (a zero tensor when the loss does not depend on it). The
  // loss must be 1x1.
  std::vector<Id> backward(Id loss, const std::vector<Id>& wrt);

  const Tensor& val(Id id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kConst, kAdd, kSub, kMul, kDiv, kMax, kMatMul, kTranspose,
    kExp, kLog, kSqrt, kLeakyRelu, kSigmoid, kSumAll, kSumRows, kSumCols,
    kLseRows, kLseGrouped, kBroadcast, kGatherRows, kScatterAddRows,
    kGatherFlat, kScatterAddFlat, kReshape, kConcatRows, kSliceRows,
  };
  struct Node {
    Op op;
    Id a = -1, b = -1;
    double attr = 0.0;
    std::size_t i0 = 0, i1 = 0;
    IndexPtr idx;
    Tensor value;
    bool diff = false;
  };

  Id push(Node n);
  Id binary(Op op, Id a, Id b);
  Id unary(Op op, Id a, double attr = 0.0);
  Id reduce_to(Id g, std::size_t rows, std::size_t cols);
  void check_id(Id id) const;

  std::vector<Node> nodes_;
};

// Values of d(loss)/d(wrt[i]); wrapper over Tape::backward.
std::vector<Tensor> grad(Tape& tp, Tape::Id loss, const std::vector<Tape::Id>& wrt);

// Mean over batch rows of (||d(sum outputs)/d x_row||_2 - 1)^2, recorded on
// the tape so it can be differentiated w.r.t. upstream parameters. Valid for
// row-independent (per-sample feed-forward) outputs.
Tape::Id grad_norm_penalty(Tape& tp, Tape::Id outputs, Tape::Id x);

}  // namespace mrf
