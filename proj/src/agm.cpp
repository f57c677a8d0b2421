#include "mrf/agm.hpp"

#include <cmath>

#include "mrf/errors.hpp"
#include "mrf/tape.hpp"

namespace mrf::agm {

AgmTrainState init_state(const GraphStructure& g, const AgmConfig& cfg) {
  if (cfg.lambda < 0 || cfg.critic_steps < 1 || cfg.bp_steps < 0 || cfg.batch_size < 2 ||
      cfg.total_steps < 1 || cfg.lr <= 0)
    throw ConfigError("agm: invalid configuration");
  AgmTrainState s;
  s.structure = &g;
  const int m = cfg.latent_dim > 0 ? cfg.latent_dim : default_latent_dim(g.n_nodes);
  s.learner = LearnerParams::init(m, g.param_count(), derive_seed(cfg.seed, 0x11));
  s.disc = DiscriminatorParams::init(g.n_nodes * g.support_size, derive_seed(cfg.seed, 0x22));
  s.opt_learner = AdamState::like(s.learner.trainable());
  s.opt_disc = AdamState::like(s.disc.trainable());
  s.unroll = bp::build_unroll_indices(g, cfg.batch_size, /*shared_psi=*/false);
  return s;
}

Tensor generate_fake_batch(LearnerParams& learner, const GraphStructure& g, int B, int bp_steps,
                           Rng& rng) {
  const int N = g.n_nodes, X = g.support_size;
  Tensor z = gaussian_latents(B, learner.m, rng);
  Tensor psi_batch = learner_forward_value(learner, z, Mode::Train, &learner);
  std::vector<Evidence> empty_ev = {Evidence{}};
  std::vector<Marginals> beliefs = bp::batch_inference(g, psi_batch, empty_ev, bp_steps);
  Tensor out(B, static_cast<std::size_t>(N) * X);
  for (int b = 0; b < B; ++b)
    std::copy(beliefs[b].beliefs.data(), beliefs[b].beliefs.data() + N * X,
              out.data() + static_cast<std::size_t>(b) * N * X);
  return out;
}

CriticLoss critic_step(AgmTrainState& s, const Tensor& real_batch, const AgmConfig& cfg,
                       Rng& rng) {
  const GraphStructure& g = *s.structure;
  const std::size_t B = real_batch.rows();
  if (real_batch.cols() != static_cast<std::size_t>(g.n_nodes) * g.support_size)
    throw ShapeError("critic_step: real batch width != N|X|");

  Tensor fake = generate_fake_batch(s.learner, g, static_cast<int>(B), cfg.bp_steps, rng);

  // Per-row interpolates between real and fake.
  Tensor interp(B, real_batch.cols());
  for (std::size_t b = 0; b < B; ++b) {
    const double eps = uniform01(rng);
    for (std::size_t c = 0; c < real_batch.cols(); ++c)
      interp(b, c) = eps * real_batch(b, c) + (1.0 - eps) * fake(b, c);
  }

  Tape tp;
  DiscriminatorIds ids = discriminator_inputs(tp, s.disc);
  Tape::Id y_fake = discriminator_forward(tp, ids, s.disc, tp.constant(fake), Mode::Train, &rng);
  Tape::Id y_real =
      discriminator_forward(tp, ids, s.disc, tp.constant(real_batch), Mode::Train, &rng);
  Tape::Id x_interp = tp.input(interp);
  Tape::Id y_interp = discriminator_forward(tp, ids, s.disc, x_interp, Mode::Train, &rng);
  Tape::Id penalty = grad_norm_penalty(tp, y_interp, x_interp);
  Tape::Id loss_id = tp.add(tp.sub(tp.mean_all(y_fake), tp.mean_all(y_real)),
                            tp.scale(penalty, cfg.lambda));

  CriticLoss out;
  out.total = tp.val(loss_id)[0];
  out.penalty = tp.val(penalty)[0];
  if (!std::isfinite(out.total))
    throw DivergenceError("critic_step: non-finite loss", s.generator_step);

  std::vector<Tape::Id> wrt = {ids.W1, ids.b1, ids.W2, ids.b2, ids.W3, ids.b3};
  std::vector<Tensor> grads = grad(tp, loss_id, wrt);
  AdamConfig ac{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  s.opt_disc.update(s.disc.trainable(), grads, ac);
  return out;
}

double generator_step(AgmTrainState& s, const AgmConfig& cfg, Rng& rng) {
  const GraphStructure& g = *s.structure;
  const int B = cfg.batch_size;
  const int N = g.n_nodes, X = g.support_size;

  Tensor z = gaussian_latents(B, s.learner.m, rng);

  Tape tp;
  LearnerIds lids = learner_inputs(tp, s.learner);
  Tape::Id psi_rows =
      learner_forward(tp, lids, s.learner, tp.constant(z), Mode::Train, &s.learner);
  Tape::Id unary = tp.constant(Tensor(static_cast<std::size_t>(B) * N, X, 0.0));
  bp::UnrolledBeliefs ub = bp::inference_unrolled_batch(tp, g, psi_rows, s.unroll, unary,
                                                        cfg.bp_steps);
  Tape::Id fake = tp.reshape(ub.beliefs, B, static_cast<std::size_t>(N) * X);

  DiscriminatorIds dids = discriminator_constants(tp, s.disc);
  Tape::Id y = discriminator_forward(tp, dids, s.disc, fake, Mode::Train, &rng);
  Tape::Id loss_id = tp.neg(tp.mean_all(y));

  const double loss = tp.val(loss_id)[0];
  if (!std::isfinite(loss))
    throw DivergenceError("generator_step: non-finite loss", s.generator_step);

  std::vector<Tape::Id> wrt = {lids.W1, lids.b1, lids.gamma, lids.beta, lids.W2, lids.b2};
  std::vector<Tensor> grads = grad(tp, loss_id, wrt);
  AdamConfig ac{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  s.opt_learner.update(s.learner.trainable(), grads, ac);
  ++s.generator_step;
  return loss;
}

Tensor encode_real_rows(const Dataset& data) {
  data.check();
  const int X = data.support_size;
  Tensor out(data.size(), static_cast<std::size_t>(data.n_vars) * X);
  if (data.soft) {
    for (std::size_t r = 0; r < data.soft_rows.size(); ++r)
      for (int i = 0; i < data.n_vars; ++i) {
        const auto enc = bernoulli_encode(data.soft_rows[r][i]);
        out(r, 2 * i) = enc[0];
        out(r, 2 * i + 1) = enc[1];
      }
  } else {
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
      std::vector<double> enc = encode_onehot(data.rows[r], X);
      std::copy(enc.begin(), enc.end(), out.data() + r * out.cols());
    }
  }
  return out;
}

AgmResult train_agm(const Dataset& data, const GraphStructure& g, const AgmConfig& cfg,
                    const AgmCheckpointFn& checkpoint) {
  data.check();
  if (data.n_vars != g.n_nodes || data.support_size != g.support_size)
    throw ShapeError("train_agm: dataset does not match structure");
  if (data.size() == 0) throw ConfigError("train_agm: empty dataset");

  AgmTrainState s = init_state(g, cfg);
  Tensor real = encode_real_rows(data);
  Rng rng = make_rng(derive_seed(cfg.seed, 0x33));

  AgmResult result;
  const int B = cfg.batch_size;
  Tensor real_batch(B, real.cols());

  for (long step = 0; step < cfg.total_steps; ++step) {
    CriticLoss closs;
    for (int c = 0; c < cfg.critic_steps; ++c) {
      for (int b = 0; b < B; ++b) {
        const std::size_t r = uniform_int(rng, 0, static_cast<int>(data.size()) - 1);
        std::copy(real.data() + r * real.cols(), real.data() + (r + 1) * real.cols(),
                  real_batch.data() + static_cast<std::size_t>(b) * real.cols());
      }
      closs = critic_step(s, real_batch, cfg, rng);
    }
    const double gloss = generator_step(s, cfg, rng);
    result.trace.push_back({step + 1, closs.total, gloss, closs.penalty});
    if (checkpoint && ((step + 1) % cfg.checkpoint_every == 0 || step + 1 == cfg.total_steps))
      checkpoint(step + 1, s);
  }

  result.learner = std::move(s.learner);
  result.disc = std::move(s.disc);
  return result;
}

}  // namespace mrf::agm
