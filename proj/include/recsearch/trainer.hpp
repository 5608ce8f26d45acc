#pragma once

// Contrastive fine-tuning with the multiple-negatives ranking loss: for a batch
// of (query, document) pairs every other document in the batch is a negative.
// AdamW with decoupled weight decay, gradient accumulation, linear warmup then
// linear decay.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "recsearch/encoder.hpp"
#include "recsearch/error.hpp"
#include "recsearch/random.hpp"

namespace recsearch {

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t grad_accum = 4;
  std::size_t epochs = 1;
  double temperature = 0.05;
  double lr = 2e-4;
  double warmup_fraction = 0.10;
  double weight_decay = 0.01;
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
    if (grad_accum < 1) throw Error(ErrorCode::InvalidArgument, "grad_accum must be >= 1");
    if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "warmup_fraction must lie in [0, 1)");
    }
  }
};

struct TrainingExample {
  std::string query_text;
  std::string doc_text;
};

struct TrainReport {
  std::size_t steps_run = 0;        // micro-batches
  std::size_t optimizer_steps = 0;  // parameter updates
  std::vector<std::pair<std::size_t, double>> loss_curve;  // (optimizer step, mean loss)
  double wall_time_s = 0.0;
};

// ---------------------------------------------------------------------------
// Loss

/// L = -(1/B) sum_i log softmax_j(q_i . d_j / tau)[i], log-sum-exp stabilized.
/// Rows of Q and D must be unit norm.
template <typename DerivedQ, typename DerivedD>
typename DerivedQ::Scalar mnrl_loss(const Eigen::MatrixBase<DerivedQ>& Q,
                                    const Eigen::MatrixBase<DerivedD>& D, double tau) {
  using Scalar = typename DerivedQ::Scalar;
  if (Q.rows() != D.rows() || Q.cols() != D.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "Q and D must have equal shapes");
  }
  if (Q.rows() < 1) throw Error(ErrorCode::InvalidArgument, "batch must be non-empty");
  if (!Q.allFinite() || !D.allFinite()) throw Error(ErrorCode::NonFinite, "non-finite input");
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    if (std::abs(static_cast<double>(Q.row(i).norm()) - 1.0) > kUnitNormTol ||
        std::abs(static_cast<double>(D.row(i).norm()) - 1.0) > kUnitNormTol) {
      throw Error(ErrorCode::NonNormalizedRows, "row " + std::to_string(i) + " is not unit norm");
    }
  }
  const RowMatrix<Scalar> S = (Q * D.transpose()) / static_cast<Scalar>(tau);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    const Scalar m = S.row(i).maxCoeff();
    const Scalar lse = m + std::log((S.row(i).array() - m).exp().sum());
    total += lse - S(i, i);
  }
  const Scalar loss = total / static_cast<Scalar>(S.rows());
  if (!std::isfinite(static_cast<double>(loss))) throw Error(ErrorCode::NonFinite, "loss");
  return loss;
}

// ---------------------------------------------------------------------------
// Gradients

template <typename Scalar>
struct Gradients {
  RowMatrix<Scalar> emb;
  RowMatrix<Scalar> proj;

  static Gradients zeros_like(const EncoderModel<Scalar>& model) {
    return {RowMatrix<Scalar>::Zero(model.emb_table.rows(), model.emb_table.cols()),
            RowMatrix<Scalar>::Zero(model.proj.rows(), model.proj.cols())};
  }
  void set_zero() {
    emb.setZero();
    proj.setZero();
  }
};

template <typename Scalar>
struct LossAndGradients {
  Scalar loss = 0;
  Gradients<Scalar> grads;
};

namespace detail {

template <typename Scalar>
struct ForwardCache {
  std::span<const std::uint32_t> buckets;
  RowVector<Scalar> pooled;
  Scalar norm = 0;
  RowVector<Scalar> unit;
};

template <typename Scalar>
ForwardCache<Scalar> forward(const EncoderModel<Scalar>& model,
                             std::span<const std::uint32_t> buckets) {
  ForwardCache<Scalar> c;
  c.buckets = buckets;
  c.pooled = pool_buckets<Scalar>(buckets, model.d_in(),
                                  [&](std::uint32_t b) { return model.emb_table.row(b); });
  RowVector<Scalar> projected = c.pooled * model.proj;
  c.norm = projected.norm();
  if (!(static_cast<double>(c.norm) > kZeroNormEps)) {
    throw Error(ErrorCode::ZeroVector, "projected embedding is zero");
  }
  c.unit = projected / c.norm;
  return c;
}

// Back-propagates dL/d(unit) through normalization, projection and pooling.
template <typename Scalar>
void backward(const EncoderModel<Scalar>& model, const ForwardCache<Scalar>& c,
              const RowVector<Scalar>& g_unit, Scalar weight, Gradients<Scalar>& grads) {
  const RowVector<Scalar> g_proj_out = (g_unit - c.unit * c.unit.dot(g_unit)) / c.norm;
  grads.proj.noalias() += weight * c.pooled.transpose() * g_proj_out;
  const RowVector<Scalar> g_pooled =
      (weight / static_cast<Scalar>(c.buckets.size())) * (g_proj_out * model.proj.transpose());
  for (std::uint32_t b : c.buckets) grads.emb.row(b) += g_pooled;
}

}  // namespace detail

/// Adds weight * dL/dtheta for one batch (given as pre-hashed token buckets)
/// into `grads` and returns the batch loss. The B x B similarity matrix is
/// formed once.
template <typename Scalar>
Scalar accumulate_mnrl_grad(const EncoderModel<Scalar>& model,
                            std::span<const std::vector<std::uint32_t>> queries,
                            std::span<const std::vector<std::uint32_t>> docs, double tau,
                            Gradients<Scalar>& grads, Scalar weight = Scalar(1)) {
  if (queries.size() != docs.size() || queries.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "batch needs equal, non-zero query/doc counts");
  }
  const auto B = static_cast<Eigen::Index>(queries.size());
  std::vector<detail::ForwardCache<Scalar>> qc, dc;
  qc.reserve(queries.size());
  dc.reserve(docs.size());
  RowMatrix<Scalar> Q(B, model.d_out()), D(B, model.d_out());
  for (Eigen::Index i = 0; i < B; ++i) {
    qc.push_back(detail::forward(model, std::span<const std::uint32_t>(queries[i])));
    dc.push_back(detail::forward(model, std::span<const std::uint32_t>(docs[i])));
    Q.row(i) = qc.back().unit;
    D.row(i) = dc.back().unit;
  }

  const Scalar inv_tau = static_cast<Scalar>(1.0 / tau);
  const RowMatrix<Scalar> S = (Q * D.transpose()) * inv_tau;
  RowMatrix<Scalar> dS(B, B);  // dL/dS
  Scalar total = 0;
  for (Eigen::Index i = 0; i < B; ++i) {
    const Scalar m = S.row(i).maxCoeff();
    const auto e = (S.row(i).array() - m).exp();
    const Scalar z = e.sum();
    total += m + std::log(z) - S(i, i);
    dS.row(i) = (e / z).matrix() / static_cast<Scalar>(B);
    dS(i, i) -= Scalar(1) / static_cast<Scalar>(B);
  }
  const RowMatrix<Scalar> gQ = (dS * D) * inv_tau;
  const RowMatrix<Scalar> gD = (dS.transpose() * Q) * inv_tau;
  for (Eigen::Index i = 0; i < B; ++i) {
    detail::backward(model, qc[i], RowVector<Scalar>(gQ.row(i)), weight, grads);
    detail::backward(model, dc[i], RowVector<Scalar>(gD.row(i)), weight, grads);
  }
  return total / static_cast<Scalar>(B);
}

/// Loss and analytic gradients for all parameters on one batch of texts.
template <typename Scalar>
LossAndGradients<Scalar> mnrl_grad(const EncoderModel<Scalar>& model,
                                   std::span<const TrainingExample> batch, double tau) {
  std::vector<std::vector<std::uint32_t>> q, d;
  for (const auto& ex : batch) {
    q.push_back(text_buckets(model, ex.query_text));
    d.push_back(text_buckets(model, ex.doc_text));
  }
  LossAndGradients<Scalar> out{Scalar(0), Gradients<Scalar>::zeros_like(model)};
  out.loss = accumulate_mnrl_grad<Scalar>(model, q, d, tau, out.grads);
  return out;
}

/// Loss only, through the same encode path; used by finite-difference checks.
template <typename Scalar>
Scalar mnrl_batch_loss(const EncoderModel<Scalar>& model, std::span<const TrainingExample> batch,
                       double tau) {
  RowMatrix<Scalar> Q(static_cast<Eigen::Index>(batch.size()), model.d_out());
  RowMatrix<Scalar> D(Q.rows(), Q.cols());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Q.row(static_cast<Eigen::Index>(i)) = encode(model, batch[i].query_text).vector;
    D.row(static_cast<Eigen::Index>(i)) = encode(model, batch[i].doc_text).vector;
  }
  return mnrl_loss(Q, D, tau);
}

// ---------------------------------------------------------------------------
// Optimization

inline std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& cfg) {
  return static_cast<std::size_t>(std::floor(cfg.warmup_fraction * static_cast<double>(total_steps)));
}

/// Multiplier in [0, 1]: 0 -> 1 over the warmup steps, then 1 -> 0 at total_steps.
inline double lr_schedule(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  if (step > total_steps) throw Error(ErrorCode::InvalidArgument, "step beyond total_steps");
  if (total_steps == 0) return 0.0;
  const std::size_t warmup = warmup_steps(total_steps, cfg);
  if (step < warmup) return static_cast<double>(step) / static_cast<double>(warmup);
  return static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup);
}

template <typename Scalar>
struct AdamWState {
  RowMatrix<Scalar> m;
  RowMatrix<Scalar> v;
  std::int64_t step = 0;
};

/// One decoupled-weight-decay Adam update with bias-corrected moments.
template <typename Scalar>
void adamw_step(Eigen::Ref<RowMatrix<Scalar>> param, const Eigen::Ref<const RowMatrix<Scalar>>& grad,
                AdamWState<Scalar>& state, double lr_t, const TrainConfig& cfg) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "parameter and gradient shapes differ");
  }
  if (state.step == 0 && state.m.size() == 0) {
    state.m = RowMatrix<Scalar>::Zero(param.rows(), param.cols());
    state.v = RowMatrix<Scalar>::Zero(param.rows(), param.cols());
  }
  if (state.m.rows() != param.rows() || state.m.cols() != param.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer state shape differs from parameter");
  }
  ++state.step;
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  const auto lr = static_cast<Scalar>(lr_t);
  const auto bc1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, static_cast<double>(state.step)));
  const auto bc2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.step)));

  param *= Scalar(1) - lr * static_cast<Scalar>(cfg.weight_decay);
  state.m = b1 * state.m + (Scalar(1) - b1) * grad;
  state.v = b2 * state.v + (Scalar(1) - b2) * grad.cwiseAbs2();
  param.array() -= lr * (state.m.array() / bc1) /
                   ((state.v.array() / bc2).sqrt() + static_cast<Scalar>(cfg.eps));
}

template <typename Scalar>
struct ModelAdamState {
  AdamWState<Scalar> emb;
  AdamWState<Scalar> proj;
};

template <typename Scalar>
void adamw_step(EncoderModel<Scalar>& model, const Gradients<Scalar>& grads,
                ModelAdamState<Scalar>& state, double lr_t, const TrainConfig& cfg) {
  adamw_step<Scalar>(model.emb_table, grads.emb, state.emb, lr_t, cfg);
  adamw_step<Scalar>(model.proj, grads.proj, state.proj, lr_t, cfg);
}

template <typename Scalar>
struct TrainResult {
  EncoderModel<Scalar> model;
  TrainReport report;
};

/// Micro-batches of cfg.batch_size; an optimizer step every cfg.grad_accum
/// micro-batches with their gradients averaged (a trailing partial group is
/// flushed at epoch end).
template <typename Scalar>
TrainResult<Scalar> train(EncoderModel<Scalar> model, std::span<const TrainingExample> examples,
                          const TrainConfig& cfg) {
  cfg.validate();
  if (examples.size() < cfg.batch_size) {
    throw Error(ErrorCode::TooFewPairs, std::to_string(examples.size()) +
                                            " pairs for batch size " +
                                            std::to_string(cfg.batch_size));
  }
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<std::vector<std::uint32_t>> q_buckets, d_buckets;
  q_buckets.reserve(examples.size());
  d_buckets.reserve(examples.size());
  for (const auto& ex : examples) {
    q_buckets.push_back(text_buckets(model, ex.query_text));
    d_buckets.push_back(text_buckets(model, ex.doc_text));
  }

  const std::size_t micro_per_epoch = (examples.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t steps_per_epoch = (micro_per_epoch + cfg.grad_accum - 1) / cfg.grad_accum;
  const std::size_t total_steps = steps_per_epoch * cfg.epochs;

  TrainReport report;
  ModelAdamState<Scalar> adam;
  auto grads = Gradients<Scalar>::zeros_like(model);
  std::vector<std::size_t> order(examples.size());
  std::vector<std::vector<std::uint32_t>> qb, db;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(cfg.seed, 100 + epoch));
    shuffle(std::span(order), rng);

    std::size_t pending = 0;
    double pending_loss = 0.0;
    auto flush = [&] {
      grads.emb /= static_cast<Scalar>(pending);
      grads.proj /= static_cast<Scalar>(pending);
      const double lr_t = cfg.lr * lr_schedule(report.optimizer_steps, total_steps, cfg);
      adamw_step(model, grads, adam, lr_t, cfg);
      report.loss_curve.emplace_back(report.optimizer_steps, pending_loss / static_cast<double>(pending));
      ++report.optimizer_steps;
      grads.set_zero();
      pending = 0;
      pending_loss = 0.0;
    };

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      qb.clear();
      db.clear();
      for (std::size_t i = start; i < end; ++i) {
        qb.push_back(q_buckets[order[i]]);
        db.push_back(d_buckets[order[i]]);
      }
      pending_loss += static_cast<double>(accumulate_mnrl_grad<Scalar>(model, qb, db, cfg.temperature, grads));
      ++pending;
      ++report.steps_run;
      if (pending == cfg.grad_accum) flush();
    }
    if (pending > 0) flush();
  }

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(model), std::move(report)};
}

}  // namespace recsearch
