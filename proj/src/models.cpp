#include "mrf/models.hpp"

#include <cmath>

#include "mrf/errors.hpp"

namespace mrf {

namespace {

Tensor uniform_init(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Tensor t(rows, cols);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

// Inverted dropout mask: 0 with probability p, else 1/(1-p).
Tensor dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng) {
  Tensor mask(rows, cols);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = dist(rng) < p ? 0.0 : keep_scale;
  return mask;
}

}  // namespace

LearnerParams LearnerParams::init(int m, int k, std::uint64_t seed) {
  if (m <= 0 || k <= 0) throw ConfigError("learner init: dims must be positive");
  Rng rng = make_rng(seed);
  LearnerParams p;
  p.m = m;
  p.k = k;
  const int h = 2 * m;
  p.W1 = uniform_init(m, h, 1.0 / std::sqrt(static_cast<double>(m)), rng);
  p.b1 = Tensor(1, h, 0.0);
  p.gamma = Tensor(1, h, 1.0);
  p.beta = Tensor(1, h, 0.0);
  p.run_mean = Tensor(1, h, 0.0);
  p.run_var = Tensor(1, h, 1.0);
  p.W2 = uniform_init(h, k, 1.0 / std::sqrt(static_cast<double>(h)), rng);
  p.b2 = Tensor(1, k, 0.0);
  return p;
}

std::vector<Tensor*> LearnerParams::trainable() {
  return {&W1, &b1, &gamma, &beta, &W2, &b2};
}
std::vector<Tensor*> LearnerParams::all_tensors() {
  return {&W1, &b1, &gamma, &beta, &run_mean, &run_var, &W2, &b2};
}
std::vector<const Tensor*> LearnerParams::all_tensors() const {
  return {&W1, &b1, &gamma, &beta, &run_mean, &run_var, &W2, &b2};
}

DiscriminatorParams DiscriminatorParams::init(int in, std::uint64_t seed) {
  if (in <= 0) throw ConfigError("discriminator init: input width must be positive");
  Rng rng = make_rng(seed);
  DiscriminatorParams p;
  p.in = in;
  const int h = 2 * in;
  p.W1 = uniform_init(in, h, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  p.b1 = Tensor(1, h, 0.0);
  p.W2 = uniform_init(h, h, 1.0 / std::sqrt(static_cast<double>(h)), rng);
  p.b2 = Tensor(1, h, 0.0);
  p.W3 = uniform_init(h, 1, 1.0 / std::sqrt(static_cast<double>(h)), rng);
  p.b3 = Tensor(1, 1, 0.0);
  return p;
}

std::vector<Tensor*> DiscriminatorParams::trainable() {
  return {&W1, &b1, &W2, &b2, &W3, &b3};
}
std::vector<Tensor*> DiscriminatorParams::all_tensors() {
  return {&W1, &b1, &W2, &b2, &W3, &b3};
}
std::vector<const Tensor*> DiscriminatorParams::all_tensors() const {
  return {&W1, &b1, &W2, &b2, &W3, &b3};
}

LearnerIds learner_inputs(Tape& tp, const LearnerParams& p) {
  return {tp.input(p.W1), tp.input(p.b1), tp.input(p.gamma),
          tp.input(p.beta), tp.input(p.W2), tp.input(p.b2)};
}
LearnerIds learner_constants(Tape& tp, const LearnerParams& p) {
  return {tp.constant(p.W1), tp.constant(p.b1), tp.constant(p.gamma),
          tp.constant(p.beta), tp.constant(p.W2), tp.constant(p.b2)};
}
DiscriminatorIds discriminator_inputs(Tape& tp, const DiscriminatorParams& p) {
  return {tp.input(p.W1), tp.input(p.b1), tp.input(p.W2),
          tp.input(p.b2), tp.input(p.W3), tp.input(p.b3)};
}
DiscriminatorIds discriminator_constants(Tape& tp, const DiscriminatorParams& p) {
  return {tp.constant(p.W1), tp.constant(p.b1), tp.constant(p.W2),
          tp.constant(p.b2), tp.constant(p.W3), tp.constant(p.b3)};
}

Tape::Id learner_forward(Tape& tp, const LearnerIds& ids, const LearnerParams& p, Tape::Id z,
                         Mode mode, LearnerParams* stats_update) {
  const std::size_t B = tp.val(z).rows();
  if (tp.val(z).cols() != static_cast<std::size_t>(p.m))
    throw ShapeError("learner_forward: latent width != m");

  Tape::Id h = tp.add(tp.matmul(z, ids.W1), ids.b1);

  Tape::Id xhat;
  if (mode == Mode::Train) {
    if (B < 2) throw ConfigError("learner_forward: batch norm needs batch >= 2");
    Tape::Id mean = tp.scale(tp.sum_rows(h), 1.0 / static_cast<double>(B));
    Tape::Id centered = tp.sub(h, mean);
    Tape::Id var = tp.scale(tp.sum_rows(tp.square(centered)), 1.0 / static_cast<double>(B));
    xhat = tp.div(centered, tp.sqrt(tp.add(var, tp.scalar(kBatchNormEps))));
    if (stats_update) {
      const Tensor& mv = tp.val(mean);
      const Tensor& vv = tp.val(var);
      const double unbias = static_cast<double>(B) / static_cast<double>(B - 1);
      for (std::size_t i = 0; i < mv.size(); ++i) {
        stats_update->run_mean[i] =
            (1.0 - kBatchNormMomentum) * stats_update->run_mean[i] + kBatchNormMomentum * mv[i];
        stats_update->run_var[i] = (1.0 - kBatchNormMomentum) * stats_update->run_var[i] +
                                   kBatchNormMomentum * vv[i] * unbias;
      }
    }
  } else {
    Tape::Id mean = tp.constant(p.run_mean);
    Tape::Id var = tp.constant(p.run_var);
    xhat = tp.div(tp.sub(h, mean), tp.sqrt(tp.add(var, tp.scalar(kBatchNormEps))));
  }

  Tape::Id act = tp.leaky_relu(tp.add(tp.mul(xhat, ids.gamma), ids.beta), kLeakySlope);
  return tp.add(tp.matmul(act, ids.W2), ids.b2);
}

Tape::Id discriminator_forward(Tape& tp, const DiscriminatorIds& ids,
                               const DiscriminatorParams& p, Tape::Id x, Mode mode,
                               Rng* dropout_rng) {
  if (tp.val(x).cols() != static_cast<std::size_t>(p.in))
    throw ShapeError("discriminator_forward: input width != N|X|");
  const std::size_t B = tp.val(x).rows();
  if (mode == Mode::Train && dropout_rng == nullptr)
    throw ConfigError("discriminator_forward: train mode needs a dropout rng");

  auto drop = [&](Tape::Id v) {
    if (mode != Mode::Train) return v;
    return tp.mul(v, tp.constant(dropout_mask(B, tp.val(v).cols(), p.dropout, *dropout_rng)));
  };

  Tape::Id h1 = tp.leaky_relu(drop(tp.add(tp.matmul(x, ids.W1), ids.b1)), kLeakySlope);
  Tape::Id h2 = tp.leaky_relu(drop(tp.add(tp.matmul(h1, ids.W2), ids.b2)), kLeakySlope);
  return drop(tp.add(tp.matmul(h2, ids.W3), ids.b3));
}

Tensor learner_forward_value(const LearnerParams& p, const Tensor& z_batch, Mode mode,
                             LearnerParams* stats_update) {
  Tape tp;
  LearnerIds ids = learner_constants(tp, p);
  Tape::Id out = learner_forward(tp, ids, p, tp.constant(z_batch), mode, stats_update);
  return tp.val(out);
}

Tensor discriminator_forward_value(const DiscriminatorParams& p, const Tensor& x_batch,
                                   Mode mode, Rng* dropout_rng) {
  Tape tp;
  DiscriminatorIds ids = discriminator_constants(tp, p);
  Tape::Id out = discriminator_forward(tp, ids, p, tp.constant(x_batch), mode, dropout_rng);
  return tp.val(out);
}

Tensor gaussian_latents(int batch, int m, Rng& rng) {
  Tensor z(batch, m);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = dist(rng);
  return z;
}

}  // namespace mrf
