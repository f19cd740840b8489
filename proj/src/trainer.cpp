#include "tagtrain/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tagtrain/rng.hpp"

namespace tagtrain {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::SgdNesterov ? "sgd-nesterov" : "adamw";
}

std::optional<OptimizerKind> optimizer_kind_from(const std::string& name) {
  if (name == "sgd-nesterov" || name == "sgd") return OptimizerKind::SgdNesterov;
  if (name == "adamw") return OptimizerKind::AdamW;
  return std::nullopt;
}

OptimizerConfig OptimizerConfig::sgd_defaults() {
  OptimizerConfig c;
  c.kind = OptimizerKind::SgdNesterov;
  c.base_lr = 0.1;
  c.ref_batch = 256;
  c.batch = 256;
  c.momentum = 0.9;
  c.weight_decay = 1e-5;
  return c;
}

OptimizerConfig OptimizerConfig::adamw_defaults() {
  OptimizerConfig c;
  c.kind = OptimizerKind::AdamW;
  c.base_lr = 4e-4;
  c.ref_batch = 8192;
  c.batch = 8192;
  c.beta1 = 0.9;
  c.beta2 = 0.95;
  c.weight_decay = 0.1;
  return c;
}

double effective_lr(const OptimizerConfig& config) {
  if (config.ref_batch == 0 || config.batch == 0) {
    throw std::invalid_argument("effective_lr: batch sizes must be positive");
  }
  return config.base_lr * static_cast<double>(config.batch) /
         static_cast<double>(config.ref_batch);
}

double lr_at(std::uint64_t step, const ScheduleConfig& schedule, double lr) {
  if (step > schedule.total_steps) {
    throw std::out_of_range("lr_at: step " + std::to_string(step) + " beyond total " +
                            std::to_string(schedule.total_steps));
  }
  if (schedule.warmup_frac < 0.0 || schedule.warmup_frac >= 1.0) {
    throw std::invalid_argument("lr_at: warmup_frac must be in [0, 1)");
  }
  const std::uint64_t warmup =
      static_cast<std::uint64_t>(schedule.warmup_frac * static_cast<double>(schedule.total_steps));
  if (step < warmup) {
    const double t = static_cast<double>(step) / static_cast<double>(warmup);
    return lr * (schedule.warmup_start_factor + (1.0 - schedule.warmup_start_factor) * t);
  }
  if (schedule.total_steps == warmup) return lr;
  const double t = static_cast<double>(step - warmup) /
                   static_cast<double>(schedule.total_steps - warmup);
  const double cosine = 0.5 * (1.0 + std::cos(3.14159265358979323846 * t));
  return schedule.final_lr + (lr - schedule.final_lr) * cosine;
}

TrainState init_state(std::size_t feature_dim, std::size_t n_classes, std::uint64_t seed,
                      double init_scale) {
  TrainState s;
  s.feature_dim = feature_dim;
  s.n_classes = n_classes;
  Rng rng(seed, "init");
  s.weights.value.resize(feature_dim * n_classes);
  for (double& v : s.weights.value) v = init_scale * rng.normal();
  s.bias.value.assign(n_classes, 0.0);
  for (ParamGroup* g : {&s.weights, &s.bias}) {
    g->momentum.assign(g->value.size(), 0.0);
    g->second.assign(g->value.size(), 0.0);
    g->ema = g->value;  // EMA starts at the initial weights
  }
  return s;
}

namespace {

void check_shapes(const TrainState& state, const Gradients& grads) {
  if (grads.weights.size() != state.weights.value.size() ||
      grads.bias.size() != state.bias.value.size()) {
    throw std::invalid_argument("optimizer step: gradient shape mismatch");
  }
  for (const auto* g : {&grads.weights, &grads.bias}) {
    for (double v : *g) {
      if (!std::isfinite(v)) throw std::invalid_argument("optimizer step: non-finite gradient");
    }
  }
}

}  // namespace

void sgd_nesterov_step(TrainState& state, const Gradients& grads, double lr,
                       const OptimizerConfig& config) {
  check_shapes(state, grads);
  const double mu = config.momentum;
  const auto update = [&](ParamGroup& group, const std::vector<double>& grad) {
    const double lambda = config.wd_exclusions.count(group.name) ? 0.0 : config.weight_decay;
    for (std::size_t i = 0; i < group.value.size(); ++i) {
      const double g = grad[i] + lambda * group.value[i];
      group.momentum[i] = mu * group.momentum[i] + g;
      group.value[i] -= lr * (g + mu * group.momentum[i]);
    }
  };
  update(state.weights, grads.weights);
  update(state.bias, grads.bias);
  ++state.step;
}

void adamw_step(TrainState& state, const Gradients& grads, double lr,
                const OptimizerConfig& config) {
  check_shapes(state, grads);
  const double t = static_cast<double>(state.step + 1);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  const auto update = [&](ParamGroup& group, const std::vector<double>& grad) {
    const double lambda = config.wd_exclusions.count(group.name) ? 0.0 : config.weight_decay;
    for (std::size_t i = 0; i < group.value.size(); ++i) {
      group.value[i] -= lr * lambda * group.value[i];
      group.momentum[i] = config.beta1 * group.momentum[i] + (1.0 - config.beta1) * grad[i];
      group.second[i] = config.beta2 * group.second[i] + (1.0 - config.beta2) * grad[i] * grad[i];
      const double m_hat = group.momentum[i] / bc1;
      const double v_hat = group.second[i] / bc2;
      group.value[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  };
  update(state.weights, grads.weights);
  update(state.bias, grads.bias);
  ++state.step;
}

void ema_update(TrainState& state, double decay_rate) {
  for (ParamGroup* g : {&state.weights, &state.bias}) {
    for (std::size_t i = 0; i < g->value.size(); ++i) {
      g->ema[i] = (1.0 - decay_rate) * g->ema[i] + decay_rate * g->value[i];
    }
  }
}

std::vector<double> logits_of(const TrainState& state, const std::vector<double>& features,
                              bool use_ema) {
  if (features.size() != state.feature_dim) {
    throw std::invalid_argument("logits_of: feature dimensionality mismatch");
  }
  const auto& w = use_ema ? state.weights.ema : state.weights.value;
  const auto& b = use_ema ? state.bias.ema : state.bias.value;
  std::vector<double> logits(state.n_classes);
  for (std::size_t c = 0; c < state.n_classes; ++c) {
    double z = b[c];
    const double* row = w.data() + c * state.feature_dim;
    for (std::size_t d = 0; d < state.feature_dim; ++d) z += row[d] * features[d];
    logits[c] = z;
  }
  return logits;
}

TrainResult train_on(const std::vector<MixupExample>& examples,
                     const std::vector<std::size_t>& order, std::size_t feature_dim,
                     std::size_t n_classes, const TrainConfig& config,
                     const TrainState* init) {
  if (examples.empty()) throw std::invalid_argument("train_on: no examples");
  for (const auto& ex : examples) {
    if (ex.features.size() != feature_dim) {
      throw std::invalid_argument("train_on: example feature dimensionality mismatch");
    }
  }
  if (config.optimizer.batch == 0) throw std::invalid_argument("train_on: batch must be >= 1");
  if (config.optimizer.batch > 8192) {
    std::cerr << "warning: batch size " << config.optimizer.batch
              << " exceeds 8192; the recipe was tuned for batches up to 8192 and larger"
                 " batches degraded accuracy\n";
  }

  TrainResult result;
  result.state = init ? *init : init_state(feature_dim, n_classes, config.seed,
                                           config.init_scale);
  if (result.state.feature_dim != feature_dim || result.state.n_classes != n_classes) {
    throw std::invalid_argument("train_on: initial state shape mismatch");
  }
  TrainState& state = result.state;
  state.step = 0;

  const std::vector<std::size_t>* visit = &order;
  std::vector<std::size_t> identity;
  if (order.empty()) {
    identity.resize(examples.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
    visit = &identity;
  }

  const double lr_base = effective_lr(config.optimizer);
  const std::size_t batch = config.optimizer.batch;
  Gradients grads;
  grads.weights.resize(state.weights.value.size());
  grads.bias.resize(state.bias.value.size());

  for (std::uint64_t step = 0; step < config.schedule.total_steps; ++step) {
    std::vector<MixupExample> batch_examples;
    batch_examples.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t pos = (step * batch + k) % visit->size();
      batch_examples.push_back(examples[(*visit)[pos]]);
    }
    if (config.use_mixup && batch_examples.size() >= 2) {
      batch_examples = mixup(batch_examples, config.mixup_alpha,
                             config.seed ^ (0x9e3779b97f4a7c15ull * (step + 1)));
    }

    std::fill(grads.weights.begin(), grads.weights.end(), 0.0);
    std::fill(grads.bias.begin(), grads.bias.end(), 0.0);
    double batch_loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch_examples.size());
    for (const MixupExample& ex : batch_examples) {
      const auto logits = logits_of(state, ex.features);
      const LossValue lv = softmax_xent(logits, ex.target);
      batch_loss += lv.loss * inv_b;
      for (std::size_t c = 0; c < n_classes; ++c) {
        const double gc = lv.grad_logits[c] * inv_b;
        grads.bias[c] += gc;
        double* row = grads.weights.data() + c * feature_dim;
        for (std::size_t d = 0; d < feature_dim; ++d) row[d] += gc * ex.features[d];
      }
    }

    const double lr = lr_at(step, config.schedule, lr_base);
    if (config.optimizer.kind == OptimizerKind::SgdNesterov) {
      sgd_nesterov_step(state, grads, lr, config.optimizer);
    } else {
      adamw_step(state, grads, lr, config.optimizer);
    }
    ema_update(state, config.ema_decay);
    result.losses.push_back(batch_loss);
  }
  return result;
}

TrainResult train(const Corpus& corpus, const std::vector<std::string>& epoch_ids,
                  const std::map<std::string, std::size_t>& class_index,
                  const TrainConfig& config, const TrainState* init) {
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  std::size_t feature_dim = 0;
  for (const ImageRecord& rec : corpus) {
    if (rec.features.empty()) {
      throw std::runtime_error("train: record without features: " + rec.id);
    }
    if (feature_dim == 0) feature_dim = rec.features.size();
    if (rec.features.size() != feature_dim) {
      throw std::runtime_error("train: inconsistent feature dimensionality at " + rec.id);
    }
  }
  const std::size_t n_classes = class_index.size();

  std::vector<MixupExample> examples;
  examples.reserve(corpus.size());
  std::map<std::string, std::size_t> row_of_id;
  for (const ImageRecord& rec : corpus) {
    MixupExample ex;
    ex.features = rec.features;
    ex.target = encode_targets({rec.tags.begin(), rec.tags.end()}, class_index, n_classes);
    row_of_id.emplace(rec.id, examples.size());
    examples.push_back(std::move(ex));
  }

  std::vector<std::size_t> order;
  order.reserve(epoch_ids.size());
  for (const std::string& id : epoch_ids) {
    const auto it = row_of_id.find(id);
    if (it == row_of_id.end()) throw std::runtime_error("train: epoch id not in corpus: " + id);
    order.push_back(it->second);
  }

  auto result = train_on(examples, order, feature_dim, n_classes, config, init);
  if (result.state.class_keys.empty()) {
    result.state.class_keys.resize(n_classes);
    for (const auto& [key, idx] : class_index) result.state.class_keys[idx] = key;
  }
  return result;
}

TrainResult finetune(const Corpus& corpus, std::size_t n_classes, const TrainConfig& config,
                     const TrainState* init) {
  if (corpus.empty()) throw std::invalid_argument("finetune: empty corpus");
  std::size_t feature_dim = 0;
  std::vector<MixupExample> examples;
  examples.reserve(corpus.size());
  for (const ImageRecord& rec : corpus) {
    if (rec.features.empty()) {
      throw std::runtime_error("finetune: record without features: " + rec.id);
    }
    if (!rec.label) throw std::runtime_error("finetune: record without label: " + rec.id);
    if (*rec.label < 0 || static_cast<std::size_t>(*rec.label) >= n_classes) {
      throw std::runtime_error("finetune: label out of range at " + rec.id);
    }
    if (feature_dim == 0) feature_dim = rec.features.size();
    MixupExample ex;
    ex.features = rec.features;
    ex.target = make_target({{static_cast<std::size_t>(*rec.label), 1.0}}, n_classes);
    examples.push_back(std::move(ex));
  }
  return train_on(examples, {}, feature_dim, n_classes, config, init);
}

void save_checkpoint(const TrainState& state, std::ostream& out) {
  nlohmann::ordered_json j;
  j["feature_dim"] = state.feature_dim;
  j["n_classes"] = state.n_classes;
  j["step"] = state.step;
  j["class_keys"] = state.class_keys;
  j["weights"] = state.weights.value;
  j["bias"] = state.bias.value;
  j["ema_weights"] = state.weights.ema;
  j["ema_bias"] = state.bias.ema;
  out << j.dump() << '\n';
}

void save_checkpoint(const TrainState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  save_checkpoint(state, out);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("bad checkpoint " + path + ": " + e.what());
  }
  TrainState s;
  s.feature_dim = j.at("feature_dim").get<std::size_t>();
  s.n_classes = j.at("n_classes").get<std::size_t>();
  s.step = j.at("step").get<std::uint64_t>();
  s.class_keys = j.at("class_keys").get<std::vector<std::string>>();
  s.weights.value = j.at("weights").get<std::vector<double>>();
  s.bias.value = j.at("bias").get<std::vector<double>>();
  s.weights.ema = j.at("ema_weights").get<std::vector<double>>();
  s.bias.ema = j.at("ema_bias").get<std::vector<double>>();
  if (s.weights.value.size() != s.feature_dim * s.n_classes ||
      s.bias.value.size() != s.n_classes) {
    throw std::runtime_error("bad checkpoint " + path + ": shape mismatch");
  }
  for (ParamGroup* g : {&s.weights, &s.bias}) {
    g->momentum.assign(g->value.size(), 0.0);
    g->second.assign(g->value.size(), 0.0);
    if (g->ema.size() != g->value.size()) {
      throw std::runtime_error("bad checkpoint " + path + ": EMA shape mismatch");
    }
  }
  return s;
}

TrainConfig parse_train_config(std::istream& in) {
  TrainConfig cfg;
  bool optimizer_set = false;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }

  // The optimizer key selects the per-kind defaults, so apply it first.
  for (const auto& [key, value] : entries) {
    if (key == "optimizer") {
      const auto kind = optimizer_kind_from(value);
      if (!kind) throw std::runtime_error("config: unknown optimizer '" + value + "'");
      cfg.optimizer = *kind == OptimizerKind::SgdNesterov ? OptimizerConfig::sgd_defaults()
                                                          : OptimizerConfig::adamw_defaults();
      optimizer_set = true;
    }
  }
  (void)optimizer_set;

  for (const auto& [key, value] : entries) {
    if (key == "optimizer") continue;
    if (key == "base_lr") cfg.optimizer.base_lr = std::stod(value);
    else if (key == "ref_batch") cfg.optimizer.ref_batch = std::stoull(value);
    else if (key == "batch") cfg.optimizer.batch = std::stoull(value);
    else if (key == "momentum") cfg.optimizer.momentum = std::stod(value);
    else if (key == "beta1") cfg.optimizer.beta1 = std::stod(value);
    else if (key == "beta2") cfg.optimizer.beta2 = std::stod(value);
    else if (key == "weight_decay") cfg.optimizer.weight_decay = std::stod(value);
    else if (key == "epsilon") cfg.optimizer.epsilon = std::stod(value);
    else if (key == "wd_exclusions") {
      cfg.optimizer.wd_exclusions.clear();
      std::istringstream ss(value);
      std::string group;
      while (std::getline(ss, group, ',')) {
        if (!group.empty()) cfg.optimizer.wd_exclusions.insert(group);
      }
    } else if (key == "total_steps") cfg.schedule.total_steps = std::stoull(value);
    else if (key == "warmup_frac") cfg.schedule.warmup_frac = std::stod(value);
    else if (key == "warmup_start_factor") cfg.schedule.warmup_start_factor = std::stod(value);
    else if (key == "final_lr") cfg.schedule.final_lr = std::stod(value);
    else if (key == "mixup") cfg.use_mixup = (value == "on" || value == "true" || value == "1");
    else if (key == "mixup_alpha") cfg.mixup_alpha = std::stod(value);
    else if (key == "ema_decay") cfg.ema_decay = std::stod(value);
    else if (key == "init_scale") cfg.init_scale = std::stod(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else throw std::runtime_error("config: unknown key '" + key + "'");
  }
  return cfg;
}

}  // namespace tagtrain
