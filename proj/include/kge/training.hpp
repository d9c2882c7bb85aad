#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kge/graph.hpp"
#include "kge/model.hpp"
#include "kge/random.hpp"
#include "kge/sampling.hpp"

namespace kge {

enum class LossKind { Margin, Sigmoid };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct TrainConfig {
  ModelKind model = ModelKind::TransE;
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::size_t n_batches = 10;
  std::size_t dim = 50;
  std::size_t rel_dim = 50;
  LossKind loss = LossKind::Margin;
  std::optional<double> margin = 1.0;
  double lr = 0.01;
  double l2 = 0.0;
  std::size_t n_epochs = 100;
  SamplerKind sampler = SamplerKind::Uniform;
  std::uint64_t seed = 0;
  std::size_t eval_every = 0;
  std::vector<int> k_values = {1, 3, 10};
  std::string preset;

  // Throws Error when the record is inconsistent (margin iff margin loss,
  // positive rates and counts).
  void validate() const;
};

// Hyperparameters of the reference experiments: Adam at lr 0.01, L2 factor
// 1e-5, Bernoulli sampling, dimension 100, hidden dimension 50 for TransD
// and TransR, 20 batches for RESCAL and 10 otherwise, margin loss with margin
// 1 for translation models and sigmoid loss for bilinear ones.
TrainConfig paper_table1_preset(ModelKind model);

// Flat `key = value` text; `#` starts a comment. A `preset` key seeds the
// values before the other keys are applied, whatever their order. Unknown
// keys throw ConfigKeyError.
class ConfigKeyError : public Error {
 public:
  explicit ConfigKeyError(std::string key) : Error("unknown config key '" + key + "'"), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

ConfigEntries parse_config_text(std::string_view text);
TrainConfig resolve_config(const ConfigEntries& entries);
TrainConfig load_config(const std::string& path, const ConfigEntries& overrides = {});

// Canonical key/value listing of a resolved config, used in run manifests.
std::map<std::string, std::string> config_to_map(const TrainConfig& cfg);

struct MarginLossResult {
  double loss = 0.0;
  std::vector<double> d_pos;
  std::vector<double> d_neg;
};

// sum_i max(0, margin - pos_i + neg_i); gradient zero at the kink.
MarginLossResult margin_loss(std::span<const double> pos, std::span<const double> neg, double margin);

struct SigmoidLossResult {
  double loss = 0.0;
  std::vector<double> d_scores;
};

// sum_i log(1 + exp(-y_i s_i)) with labels y_i in {+1, -1}.
SigmoidLossResult sigmoid_loss(std::span<const double> scores, std::span<const double> labels);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  static AdamState for_params(std::span<const ParamTable> params);
  static AdamState for_model(const Model& model) { return for_params(model.params); }
};

// One Adam step over the rows present in grads. The L2 factor adds l2 * theta
// to the gradient of each touched row; untouched rows and their moments are
// left as they are. The step counter advances even for an empty gradient.
void adam_step(std::span<ParamTable> params, AdamState& state, const Gradients& grads, double lr,
               double l2);
inline void adam_step(Model& model, AdamState& state, const Gradients& grads, double lr, double l2) {
  adam_step(model.params, state, grads, lr, l2);
}

// Loss of one batch of positives and their index-aligned negatives, with its
// gradient with respect to every touched parameter row. The margin loss pairs
// pos_i with neg_i; the sigmoid loss labels positives +1 and negatives -1.
struct BatchLoss {
  double loss = 0.0;
  Gradients grads;
};
BatchLoss batch_loss(const Model& model, std::span<const Triple> positives,
                     std::span<const Triple> negatives, LossKind loss, double margin);

// Shuffles the facts, splits them into cfg.n_batches contiguous batches and
// runs corrupt / score / loss / backward / Adam / normalize per batch.
// Returns the summed loss of the epoch.
double train_epoch(Model& model, const KnowledgeGraph& train, NegativeSampler& sampler,
                   const TrainConfig& cfg, AdamState& adam, Rng& shuffle_rng);

}  // namespace kge
