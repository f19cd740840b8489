#include "tagtrain/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tagtrain/rng.hpp"

namespace tagtrain {

std::map<std::string, std::size_t> class_index_of_keys(const std::set<std::string>& keys) {
  std::map<std::string, std::size_t> index;
  std::size_t i = 0;
  for (const std::string& key : keys) index.emplace(key, i++);
  return index;
}

TargetVector encode_targets(const std::set<std::string>& tags,
                            const std::map<std::string, std::size_t>& class_index,
                            std::size_t n_classes) {
  if (tags.empty()) throw std::invalid_argument("encode_targets: empty tag set");
  TargetVector t;
  t.n_classes = n_classes;
  const double mass = 1.0 / static_cast<double>(tags.size());
  for (const std::string& tag : tags) {
    const auto it = class_index.find(tag);
    if (it == class_index.end()) {
      throw std::runtime_error("encode_targets: unknown tag: " + tag);
    }
    t.entries[it->second] = mass;
  }
  return t;
}

TargetVector make_target(const std::map<std::size_t, double>& entries, std::size_t n_classes) {
  TargetVector t;
  t.n_classes = n_classes;
  t.entries = entries;
  for (const auto& [c, mass] : entries) {
    if (c >= n_classes) throw std::invalid_argument("make_target: class index out of range");
    (void)mass;
  }
  return t;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    p[c] = std::exp(logits[c] - max_logit);
    total += p[c];
  }
  for (double& v : p) v /= total;
  return p;
}

LossValue softmax_xent(const std::vector<double>& logits, const TargetVector& target) {
  if (logits.size() != target.n_classes) {
    throw std::invalid_argument("softmax_xent: logits length != n_classes");
  }
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::invalid_argument("softmax_xent: non-finite logit");
  }

  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum_exp = 0.0;
  for (double v : logits) sum_exp += std::exp(v - max_logit);
  const double log_z = max_logit + std::log(sum_exp);

  LossValue out;
  out.grad_logits.resize(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out.grad_logits[c] = std::exp(logits[c] - log_z);
  }
  for (const auto& [c, mass] : target.entries) {
    out.loss -= mass * (logits[c] - log_z);
    out.grad_logits[c] -= mass;
  }
  return out;
}

std::vector<MixupExample> mixup(const std::vector<MixupExample>& batch, double alpha,
                                std::uint64_t seed, double forced_lambda) {
  if (batch.size() < 2) throw std::invalid_argument("mixup: batch size must be >= 2");
  const std::size_t dim = batch.front().features.size();
  for (const auto& ex : batch) {
    if (ex.features.size() != dim) {
      throw std::invalid_argument("mixup: mismatched feature dimensionality");
    }
  }

  Rng rng(seed, "mixup");
  std::vector<std::size_t> partner(batch.size());
  for (std::size_t i = 0; i < partner.size(); ++i) partner[i] = i;
  for (std::size_t i = partner.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(partner[i - 1], partner[j]);
  }

  std::vector<MixupExample> mixed;
  mixed.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const MixupExample& a = batch[i];
    const MixupExample& b = batch[partner[i]];
    const double lambda = forced_lambda >= 0.0 ? forced_lambda : rng.beta(alpha, alpha);

    MixupExample m;
    m.features.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      m.features[d] = lambda * a.features[d] + (1.0 - lambda) * b.features[d];
    }
    m.target.n_classes = a.target.n_classes;
    for (const auto& [c, mass] : a.target.entries) m.target.entries[c] += lambda * mass;
    for (const auto& [c, mass] : b.target.entries) m.target.entries[c] += (1.0 - lambda) * mass;
    mixed.push_back(std::move(m));
  }
  return mixed;
}

}  // namespace tagtrain
