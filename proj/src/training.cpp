#include "kge/training.hpp"

#include <algorithm>
#include <cmath>

namespace kge {

std::string_view to_string(LossKind kind) { return kind == LossKind::Margin ? "margin" : "sigmoid"; }

LossKind parse_loss_kind(std::string_view name) {
  if (name == "margin") return LossKind::Margin;
  if (name == "sigmoid") return LossKind::Sigmoid;
  throw Error("unknown loss '" + std::string(name) + "'");
}

MarginLossResult margin_loss(std::span<const double> pos, std::span<const double> neg, double margin) {
  if (pos.size() != neg.size()) throw Error("margin loss needs as many negatives as positives");
  MarginLossResult out{0.0, std::vector<double>(pos.size(), 0.0), std::vector<double>(pos.size(), 0.0)};
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const double arg = margin - pos[i] + neg[i];
    if (arg > 0.0) {
      out.loss += arg;
      out.d_pos[i] = -1.0;
      out.d_neg[i] = 1.0;
    }
  }
  return out;
}

SigmoidLossResult sigmoid_loss(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw Error("sigmoid loss needs one label per score");
  SigmoidLossResult out{0.0, std::vector<double>(scores.size(), 0.0)};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double y = labels[i];
    if (y != 1.0 && y != -1.0) throw Error("sigmoid loss labels must be +1 or -1");
    const double z = -y * scores[i];
    // softplus(z) = max(z, 0) + log1p(exp(-|z|))
    out.loss += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    // sigma(z), evaluated without overflow on either side
    const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    out.d_scores[i] = -y * sig;
  }
  return out;
}

AdamState AdamState::for_params(std::span<const ParamTable> params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.data.size(), 0.0);
    s.v.emplace_back(p.data.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<ParamTable> params, AdamState& state, const Gradients& grads, double lr,
               double l2) {
  if (state.m.size() != params.size() || grads.tables.size() != params.size())
    throw Error("optimizer state does not match the parameter layout");
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (state.m[j].size() != params[j].data.size() || state.v[j].size() != params[j].data.size() ||
        grads.tables[j].cols() != params[j].cols)
      throw Error("optimizer state does not match table '" + params[j].name + "'");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, t);

  for (std::size_t j = 0; j < params.size(); ++j) {
    const SparseRows& g = grads.tables[j];
    const std::size_t cols = params[j].cols;
    auto rows = g.rows();
    for (std::size_t s = 0; s < rows.size(); ++s) {
      auto theta = params[j].row(rows[s]);
      auto grad = g.row_at(s);
      double* m = state.m[j].data() + rows[s] * cols;
      double* v = state.v[j].data() + rows[s] * cols;
      for (std::size_t k = 0; k < cols; ++k) {
        const double gk = grad[k] + l2 * theta[k];
        m[k] = AdamState::kBeta1 * m[k] + (1.0 - AdamState::kBeta1) * gk;
        v[k] = AdamState::kBeta2 * v[k] + (1.0 - AdamState::kBeta2) * gk * gk;
        const double m_hat = m[k] / c1;
        const double v_hat = v[k] / c2;
        theta[k] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
      }
    }
  }
}

BatchLoss batch_loss(const Model& model, std::span<const Triple> positives,
                     std::span<const Triple> negatives, LossKind loss, double margin) {
  if (positives.size() != negatives.size()) throw Error("positives and negatives differ in length");
  const std::vector<double> pos = score_batch(model, positives);
  const std::vector<double> neg = score_batch(model, negatives);
  BatchLoss out{0.0, zero_gradients(model)};
  if (loss == LossKind::Margin) {
    auto res = margin_loss(pos, neg, margin);
    out.loss = res.loss;
    accumulate_gradients(model, positives, res.d_pos, out.grads);
    accumulate_gradients(model, negatives, res.d_neg, out.grads);
  } else {
    const std::size_t b = positives.size();
    std::vector<double> scores(pos);
    scores.insert(scores.end(), neg.begin(), neg.end());
    std::vector<double> labels(b, 1.0);
    labels.resize(2 * b, -1.0);
    auto res = sigmoid_loss(scores, labels);
    out.loss = res.loss;
    std::span<const double> d(res.d_scores);
    accumulate_gradients(model, positives, d.first(b), out.grads);
    accumulate_gradients(model, negatives, d.subspan(b), out.grads);
  }
  return out;
}

double train_epoch(Model& model, const KnowledgeGraph& train, NegativeSampler& sampler,
                   const TrainConfig& cfg, AdamState& adam, Rng& shuffle_rng) {
  if (train.empty()) throw Error("cannot train on an empty graph");
  if (train.n_ent() > model.n_ent || train.n_rel() > model.n_rel)
    throw Error("training graph is larger than the model");
  if (cfg.n_batches == 0) throw Error("n_batches must be positive");
  if (cfg.loss == LossKind::Margin && !cfg.margin) throw Error("margin loss needs a margin");

  std::vector<Triple> facts(train.triples().begin(), train.triples().end());
  shuffle_rng.shuffle(std::span<Triple>(facts));
  const std::size_t n = facts.size();
  const std::size_t batch_size = (n + cfg.n_batches - 1) / cfg.n_batches;

  double total = 0.0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::span<const Triple> batch(facts.data() + start, std::min(batch_size, n - start));
    const std::vector<Triple> negatives = sampler.corrupt_batch(batch);
    const double margin = cfg.margin.value_or(0.0);
    BatchLoss step = batch_loss(model, batch, negatives, cfg.loss, margin);
    total += step.loss;
    adam_step(model, adam, step.grads, cfg.lr, cfg.l2);
    normalize_parameters(model);
  }
  return total;
}

}  // namespace kge
