#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "tagtrain/rng.hpp"
#include "tagtrain/sampler.hpp"
#include "tagtrain/trainer.hpp"

using namespace tagtrain;

namespace {

// Scalar quadratic f(w) = 0.5 * sum lambda_i (w_i - target_i)^2 packed into a
// 1-class state of dimension d (bias excluded from the test by zero grads).
struct Quadratic {
  std::vector<double> curvature;
  std::vector<double> minimizer;

  Gradients gradients(const TrainState& s) const {
    Gradients g;
    g.weights.resize(s.weights.value.size());
    for (std::size_t i = 0; i < g.weights.size(); ++i) {
      g.weights[i] = curvature[i] * (s.weights.value[i] - minimizer[i]);
    }
    g.bias.assign(s.bias.value.size(), 0.0);
    return g;
  }

  double distance(const TrainState& s) const {
    double d2 = 0.0;
    for (std::size_t i = 0; i < s.weights.value.size(); ++i) {
      d2 += (s.weights.value[i] - minimizer[i]) * (s.weights.value[i] - minimizer[i]);
    }
    return std::sqrt(d2);
  }
};

Quadratic make_bowl(std::size_t dim) {
  Quadratic q;
  Rng rng(4711, "bowl");
  for (std::size_t i = 0; i < dim; ++i) {
    q.curvature.push_back(0.5 + 1.5 * rng.uniform());
    q.minimizer.push_back(2.0 * rng.normal());
  }
  return q;
}

TrainState blank_state(std::size_t dim) {
  TrainState s;
  s.feature_dim = dim;
  s.n_classes = 1;
  s.weights.value.assign(dim, 0.0);
  s.bias.value.assign(1, 0.0);
  for (ParamGroup* g : {&s.weights, &s.bias}) {
    g->momentum.assign(g->value.size(), 0.0);
    g->second.assign(g->value.size(), 0.0);
    g->ema = g->value;
  }
  return s;
}

}  // namespace

TEST_CASE("effective_lr scales linearly with batch size") {
  OptimizerConfig c = OptimizerConfig::sgd_defaults();
  CHECK(effective_lr(c) == doctest::Approx(0.1).epsilon(1e-12));
  c.batch = 8192;
  CHECK(effective_lr(c) == doctest::Approx(3.2).epsilon(1e-12));
  c.batch = c.ref_batch = 512;
  CHECK(effective_lr(c) == doctest::Approx(c.base_lr).epsilon(1e-12));
}

TEST_CASE("lr_at hits the closed-form checkpoints") {
  ScheduleConfig s;
  s.total_steps = 1000;
  s.warmup_frac = 0.05;
  const double lr = 2.0;
  const std::uint64_t W = 50;

  CHECK(lr_at(0, s, lr) == doctest::Approx(0.1 * lr).epsilon(1e-12));
  CHECK(lr_at(W, s, lr) == doctest::Approx(lr).epsilon(1e-12));
  CHECK(lr_at(W + (1000 - W) / 2, s, lr) == doctest::Approx(0.5 * lr).epsilon(1e-12));
  CHECK(lr_at(1000, s, lr) == doctest::Approx(0.0).epsilon(1e-12));

  // continuity at the warmup/cosine junction
  const double before = lr_at(W - 1, s, lr);
  CHECK(std::abs(lr_at(W, s, lr) - before) < lr * (0.9 / W + 1e-9));

  CHECK_THROWS(lr_at(1001, s, lr));
}

TEST_CASE("sgd nesterov hand-checked step") {
  // f(w) = w^2/2 at w=1: one step with lr 0.1, mu 0.9 lands on 0.81.
  TrainState s = blank_state(1);
  s.weights.value[0] = 1.0;
  OptimizerConfig cfg = OptimizerConfig::sgd_defaults();
  cfg.weight_decay = 0.0;
  Gradients g;
  g.weights = {1.0};
  g.bias = {0.0};
  sgd_nesterov_step(s, g, 0.1, cfg);
  CHECK(s.weights.value[0] == doctest::Approx(0.81).epsilon(1e-12));
  CHECK(s.step == 1);
}

TEST_CASE("zero gradient with zero decay is a fixed point") {
  for (auto kind : {OptimizerKind::SgdNesterov, OptimizerKind::AdamW}) {
    TrainState s = blank_state(3);
    s.weights.value = {0.5, -0.25, 1.5};
    OptimizerConfig cfg = kind == OptimizerKind::SgdNesterov
                              ? OptimizerConfig::sgd_defaults()
                              : OptimizerConfig::adamw_defaults();
    cfg.weight_decay = 0.0;
    Gradients g;
    g.weights = {0.0, 0.0, 0.0};
    g.bias = {0.0};
    const auto before = s.weights.value;
    for (int i = 0; i < 5; ++i) {
      if (kind == OptimizerKind::SgdNesterov) {
        sgd_nesterov_step(s, g, 0.1, cfg);
      } else {
        adamw_step(s, g, 0.1, cfg);
      }
    }
    CHECK(s.weights.value == before);
  }
}

TEST_CASE("wd exclusions make decayed groups exact fixed points") {
  for (auto kind : {OptimizerKind::SgdNesterov, OptimizerKind::AdamW}) {
    TrainState s = blank_state(2);
    s.weights.value = {1.0, -2.0};
    s.bias.value = {3.0};
    OptimizerConfig cfg = kind == OptimizerKind::SgdNesterov
                              ? OptimizerConfig::sgd_defaults()
                              : OptimizerConfig::adamw_defaults();
    cfg.weight_decay = 0.5;
    cfg.wd_exclusions = {"weights", "bias"};
    Gradients g;
    g.weights = {0.0, 0.0};
    g.bias = {0.0};
    const auto w = s.weights.value;
    const auto b = s.bias.value;
    if (kind == OptimizerKind::SgdNesterov) {
      sgd_nesterov_step(s, g, 0.1, cfg);
    } else {
      adamw_step(s, g, 0.1, cfg);
    }
    CHECK(s.weights.value == w);
    CHECK(s.bias.value == b);
  }
}

TEST_CASE("adamw first step has magnitude lr") {
  TrainState s = blank_state(1);
  OptimizerConfig cfg = OptimizerConfig::adamw_defaults();
  cfg.weight_decay = 0.0;
  Gradients g;
  g.weights = {0.37};
  g.bias = {0.0};
  adamw_step(s, g, 0.01, cfg);
  CHECK(std::abs(s.weights.value[0]) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(s.weights.value[0] < 0.0);  // moves against the gradient
}

TEST_CASE("optimizers converge on a 10-d quadratic bowl") {
  const Quadratic bowl = make_bowl(10);

  TrainState sgd_state = blank_state(10);
  OptimizerConfig sgd_cfg = OptimizerConfig::sgd_defaults();
  sgd_cfg.weight_decay = 0.0;
  for (int step = 0; step < 500 && bowl.distance(sgd_state) > 1e-7; ++step) {
    sgd_nesterov_step(sgd_state, bowl.gradients(sgd_state), 0.05, sgd_cfg);
  }
  CHECK(bowl.distance(sgd_state) < 1e-6);

  // AdamW oscillates at the learning-rate scale on a quadratic, so it runs
  // under the half-cosine schedule it is paired with in training.
  TrainState adam_state = blank_state(10);
  OptimizerConfig adam_cfg = OptimizerConfig::adamw_defaults();
  adam_cfg.weight_decay = 0.0;
  ScheduleConfig adam_sched;
  adam_sched.total_steps = 2000;
  adam_sched.warmup_frac = 0.0;
  for (std::uint64_t step = 0; step < 2000; ++step) {
    adamw_step(adam_state, bowl.gradients(adam_state), lr_at(step, adam_sched, 0.05),
               adam_cfg);
  }
  CHECK(bowl.distance(adam_state) < 1e-5);

  Gradients bad;
  bad.weights.assign(10, std::nan(""));
  bad.bias.assign(1, 0.0);
  CHECK_THROWS(sgd_nesterov_step(sgd_state, bad, 0.1, sgd_cfg));
  CHECK_THROWS(adamw_step(adam_state, bad, 0.1, adam_cfg));
}

TEST_CASE("ema update fixed point and closed form") {
  TrainState s = blank_state(2);
  s.weights.value = {1.0, -1.0};
  s.weights.ema = s.weights.value;

  // constant weights: ema equals weights exactly
  for (int i = 0; i < 10; ++i) ema_update(s, 1e-4);
  CHECK(s.weights.ema == s.weights.value);

  // delta = 1 tracks the weights identically
  s.weights.value = {5.0, 7.0};
  ema_update(s, 1.0);
  CHECK(s.weights.ema == s.weights.value);

  // N steps of constant w1 from start w0: ema = w1 + (1-d)^N (w0 - w1)
  const double w0 = 2.0, w1 = -3.0, delta = 1e-4;
  TrainState t = blank_state(1);
  t.weights.value = {w1};
  t.weights.ema = {w0};
  const int N = 1234;
  for (int i = 0; i < N; ++i) ema_update(t, delta);
  const double expected = w1 + std::pow(1.0 - delta, N) * (w0 - w1);
  CHECK(t.weights.ema[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ema stays within the historical min/max envelope") {
  TrainState s = blank_state(1);
  Rng rng(31);
  s.weights.value = {0.0};
  s.weights.ema = {0.0};
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    s.weights.value[0] = rng.normal();
    lo = std::min(lo, s.weights.value[0]);
    hi = std::max(hi, s.weights.value[0]);
    ema_update(s, 0.05);
    CHECK(s.weights.ema[0] >= lo - 1e-12);
    CHECK(s.weights.ema[0] <= hi + 1e-12);
  }
}

TEST_CASE("train runs the full recipe deterministically") {
  SynthConfig synth;
  synth.n_images = 400;
  synth.n_tags = 10;
  synth.zipf_exponent = 0.8;
  synth.feature_dim = 8;
  synth.seed = 5;
  synth.noise_scale = 0.3;
  const Corpus corpus = generate_synthetic_corpus(synth);

  std::set<std::string> keys;
  for (const auto& r : corpus) keys.insert(r.tags.begin(), r.tags.end());
  const auto index = class_index_of_keys(keys);

  TrainConfig cfg;
  cfg.optimizer = OptimizerConfig::sgd_defaults();
  cfg.optimizer.batch = 16;
  cfg.optimizer.wd_exclusions = {"bias"};
  cfg.schedule.total_steps = 200;
  cfg.seed = 77;

  const TrainResult a = train(corpus, {}, index, cfg);
  const TrainResult b = train(corpus, {}, index, cfg);
  CHECK(a.state.weights.value == b.state.weights.value);  // bit-identical
  CHECK(a.state.bias.ema == b.state.bias.ema);
  CHECK(a.state.step == 200);

  // smoothed loss decreases over the first 90% of training
  const std::size_t window = 50;
  const auto smooth = [&](std::size_t from) {
    double sum = 0.0;
    for (std::size_t i = from; i < from + window; ++i) sum += a.losses[i];
    return sum / window;
  };
  CHECK(smooth(130) < smooth(0));
  CHECK(a.losses.back() < a.losses.front());

  // zero steps: initialized state untouched
  TrainConfig zero = cfg;
  zero.schedule.total_steps = 0;
  const TrainResult untouched = train(corpus, {}, index, zero);
  const TrainState fresh = init_state(8, index.size(), cfg.seed, cfg.init_scale);
  CHECK(untouched.state.weights.value == fresh.weights.value);

  // featureless corpus is an error
  Corpus no_features = corpus;
  for (auto& r : no_features) r.features.clear();
  CHECK_THROWS_WITH(train(no_features, {}, index, cfg),
                    doctest::Contains("without features"));
}

TEST_CASE("oversized batches warn but proceed") {
  std::vector<MixupExample> examples(2);
  examples[0].features = {1.0};
  examples[0].target = make_target({{0, 1.0}}, 2);
  examples[1].features = {-1.0};
  examples[1].target = make_target({{1, 1.0}}, 2);

  TrainConfig cfg;
  cfg.optimizer = OptimizerConfig::sgd_defaults();
  cfg.optimizer.batch = 8193;
  cfg.schedule.total_steps = 1;
  cfg.seed = 1;

  std::ostringstream captured;
  std::streambuf* old = std::cerr.rdbuf(captured.rdbuf());
  const TrainResult result = train_on(examples, {}, 1, 2, cfg);
  std::cerr.rdbuf(old);
  CHECK(result.state.step == 1);
  CHECK(captured.str().find("exceeds 8192") != std::string::npos);
}

TEST_CASE("checkpoint round trip") {
  TrainState s = init_state(3, 2, 9);
  s.class_keys = {"k1", "k2"};
  s.step = 42;
  std::ostringstream ss;
  save_checkpoint(s, ss);
  const std::string path = (std::filesystem::temp_directory_path() /
                            "tagtrain_ckpt_test.json").string();
  std::ofstream(path) << ss.str();
  const TrainState back = load_checkpoint(path);
  CHECK(back.feature_dim == 3);
  CHECK(back.n_classes == 2);
  CHECK(back.step == 42);
  CHECK(back.class_keys == s.class_keys);
  CHECK(back.weights.value == s.weights.value);
  CHECK(back.weights.ema == s.weights.ema);
  std::filesystem::remove(path);
}

TEST_CASE("train config file parsing") {
  std::istringstream in(
      "optimizer = adamw\n"
      "batch = 64\n"
      "base_lr = 0.001\n"
      "total_steps = 10\n"
      "wd_exclusions = bias\n"
      "mixup = on\n"
      "# comment\n"
      "seed = 5\n");
  const TrainConfig cfg = parse_train_config(in);
  CHECK(cfg.optimizer.kind == OptimizerKind::AdamW);
  CHECK(cfg.optimizer.batch == 64);
  CHECK(cfg.optimizer.base_lr == 0.001);
  CHECK(cfg.optimizer.beta2 == 0.95);  // adamw default preserved
  CHECK(cfg.optimizer.wd_exclusions == std::set<std::string>{"bias"});
  CHECK(cfg.schedule.total_steps == 10);
  CHECK(cfg.use_mixup);
  CHECK(cfg.seed == 5);

  std::istringstream bad("nonsense_key = 3\n");
  CHECK_THROWS_WITH(parse_train_config(bad), doctest::Contains("unknown key"));
}
