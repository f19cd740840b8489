#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tagtrain/corpus.hpp"
#include "tagtrain/objective.hpp"

namespace tagtrain {

enum class OptimizerKind { SgdNesterov, AdamW };

std::string to_string(OptimizerKind kind);
std::optional<OptimizerKind> optimizer_kind_from(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::SgdNesterov;
  double base_lr = 0.1;
  std::uint64_t ref_batch = 256;
  std::uint64_t batch = 256;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double weight_decay = 1e-5;
  double epsilon = 1e-8;
  std::set<std::string> wd_exclusions;  // parameter group names exempt from decay

  static OptimizerConfig sgd_defaults();    // lr 0.1 @ 256, momentum 0.9, wd 1e-5
  static OptimizerConfig adamw_defaults();  // lr 4e-4 @ 8192, beta 0.9/0.95, wd 0.1
};

struct ScheduleConfig {
  std::uint64_t total_steps = 0;
  double warmup_frac = 0.05;
  double warmup_start_factor = 0.1;
  double final_lr = 0.0;
};

// Initial learning rate scaled linearly with the batch size.
double effective_lr(const OptimizerConfig& config);

// Linear warmup from warmup_start_factor * lr over the first
// floor(warmup_frac * total) steps, then half-cosine decay to final_lr.
// step must be in [0, total_steps].
double lr_at(std::uint64_t step, const ScheduleConfig& schedule, double lr);

// One named parameter tensor with its optimizer moments and EMA shadow.
struct ParamGroup {
  std::string name;
  std::vector<double> value;
  std::vector<double> momentum;  // SGD velocity / AdamW first moment
  std::vector<double> second;    // AdamW second moment
  std::vector<double> ema;
};

// Linear classifier state: weights[n_classes x feature_dim] + bias[n_classes].
struct TrainState {
  std::size_t feature_dim = 0;
  std::size_t n_classes = 0;
  ParamGroup weights{"weights", {}, {}, {}, {}};
  ParamGroup bias{"bias", {}, {}, {}, {}};
  std::uint64_t step = 0;
  std::vector<std::string> class_keys;  // class index -> canonical_key / class name

  double* weight_row(std::size_t c) { return weights.value.data() + c * feature_dim; }
  const double* weight_row(std::size_t c) const {
    return weights.value.data() + c * feature_dim;
  }
};

struct Gradients {
  std::vector<double> weights;
  std::vector<double> bias;
};

TrainState init_state(std::size_t feature_dim, std::size_t n_classes,
                      std::uint64_t seed, double init_scale = 0.01);

// v <- mu v + g~ ; w <- w - lr (g~ + mu v), where g~ includes coupled decay
// lambda w except for groups listed in wd_exclusions.
void sgd_nesterov_step(TrainState& state, const Gradients& grads, double lr,
                       const OptimizerConfig& config);

// Decoupled weight decay applied before the bias-corrected adaptive update.
void adamw_step(TrainState& state, const Gradients& grads, double lr,
                const OptimizerConfig& config);

// ema <- (1 - decay_rate) * ema + decay_rate * value.
void ema_update(TrainState& state, double decay_rate);

std::vector<double> logits_of(const TrainState& state, const std::vector<double>& features,
                              bool use_ema = false);

struct TrainConfig {
  OptimizerConfig optimizer;
  ScheduleConfig schedule;
  bool use_mixup = false;
  double mixup_alpha = 0.1;
  double ema_decay = 1e-4;
  double init_scale = 0.01;
  std::uint64_t seed = 0;
};

struct TrainResult {
  TrainState state;
  std::vector<double> losses;  // mean batch loss per step
};

// Mini-batch loop over `order` (indices into `examples`, cycled when shorter
// than total_steps * batch): targets + softmax cross-entropy + the configured
// optimizer and schedule + optional mixup + EMA. Deterministic per seed.
TrainResult train_on(const std::vector<MixupExample>& examples,
                     const std::vector<std::size_t>& order, std::size_t feature_dim,
                     std::size_t n_classes, const TrainConfig& config,
                     const TrainState* init = nullptr);

// Tag-supervised training: examples are corpus records with features, targets
// are 1/K over each record's tags. epoch_ids, when non-empty, gives the
// resampled visit order by image id. Every record must carry features.
TrainResult train(const Corpus& corpus, const std::vector<std::string>& epoch_ids,
                  const std::map<std::string, std::size_t>& class_index,
                  const TrainConfig& config, const TrainState* init = nullptr);

// Label-supervised finetuning: targets are one-hot from record.label.
TrainResult finetune(const Corpus& corpus, std::size_t n_classes,
                     const TrainConfig& config, const TrainState* init = nullptr);

// Checkpoint (JSON): shape header, class keys, raw + EMA parameters, step.
void save_checkpoint(const TrainState& state, std::ostream& out);
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

// Flat key = value text config mirroring OptimizerConfig/ScheduleConfig plus
// the train-loop fields. Unknown keys are rejected.
TrainConfig parse_train_config(std::istream& in);

}  // namespace tagtrain
