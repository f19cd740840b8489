#include "tagtrain/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

namespace tagtrain {

CorpusStats compute_stats(const Corpus& corpus) {
  CorpusStats stats;
  std::set<std::string> seen;
  for (const ImageRecord& rec : corpus) {
    if (!seen.insert(rec.id).second) {
      throw std::runtime_error("duplicate image id in corpus: " + rec.id);
    }
    std::set<std::string> tags(rec.tags.begin(), rec.tags.end());
    for (const std::string& tag : tags) ++stats.freq[tag];
    ++stats.n_images;
  }
  return stats;
}

double importance_hashtag(std::uint64_t f) {
  if (f == 0) throw std::invalid_argument("importance_hashtag: frequency must be >= 1");
  return 1.0 / std::sqrt(static_cast<double>(f));
}

double importance_image(const ImageRecord& record, const CorpusStats& stats) {
  if (record.tags.empty()) throw std::invalid_argument("importance_image: record has no tags");
  double best = 0.0;
  for (const std::string& tag : record.tags) {
    const auto it = stats.freq.find(tag);
    if (it == stats.freq.end()) {
      throw std::runtime_error("importance_image: tag not in stats: " + tag);
    }
    best = std::max(best, importance_hashtag(it->second));
  }
  return best;
}

HeadTailSplit partition_head_tail(const Corpus& corpus, const CorpusStats& stats,
                                  std::uint64_t cutoff) {
  if (cutoff == 0) throw std::invalid_argument("partition_head_tail: cutoff must be >= 1");
  HeadTailSplit split;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    bool has_tail_tag = false;
    for (const std::string& tag : corpus[i].tags) {
      const auto it = stats.freq.find(tag);
      if (it == stats.freq.end()) {
        throw std::runtime_error("partition_head_tail: tag not in stats: " + tag);
      }
      if (it->second < cutoff) {
        has_tail_tag = true;
        break;
      }
    }
    (has_tail_tag ? split.tail : split.head).push_back(i);
  }
  return split;
}

AliasTable::AliasTable(const std::vector<double>& weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("AliasTable: empty weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("AliasTable: negative or NaN weight");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("AliasTable: zero total weight");

  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * static_cast<double>(n) / total;

  std::deque<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.front();
    small.pop_front();
    const std::size_t l = large.front();
    large.pop_front();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  for (std::size_t i : large) prob_[i] = 1.0;
  for (std::size_t i : small) prob_[i] = 1.0;  // numerical leftovers
}

std::size_t AliasTable::sample(Rng& rng) const {
  const std::size_t column = static_cast<std::size_t>(rng.uniform_int(prob_.size()));
  return rng.uniform() < prob_[column] ? column : alias_[column];
}

std::vector<double> sampling_probabilities(const Corpus& corpus,
                                           const CorpusStats& stats,
                                           const std::vector<std::size_t>& part) {
  std::vector<double> p(part.size());
  double total = 0.0;
  for (std::size_t k = 0; k < part.size(); ++k) {
    p[k] = importance_image(corpus[part[k]], stats);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

SampledEpoch resample(const Corpus& corpus, const CorpusStats& stats,
                      const SamplePlan& plan) {
  if (plan.head_fraction < 0.0 || plan.head_fraction > 1.0) {
    throw std::invalid_argument("resample: head_fraction must be in [0, 1]");
  }
  const auto split = partition_head_tail(corpus, stats, plan.tail_cutoff);
  const double alpha_m = plan.head_fraction * static_cast<double>(plan.total_samples);
  const std::uint64_t head_quota = static_cast<std::uint64_t>(std::ceil(alpha_m));
  const std::uint64_t tail_quota = plan.total_samples - head_quota;

  if (head_quota > 0 && split.head.empty()) {
    throw std::runtime_error("resample: head partition is empty but head quota is " +
                             std::to_string(head_quota));
  }
  if (tail_quota > 0 && split.tail.empty()) {
    throw std::runtime_error("resample: tail partition is empty but tail quota is " +
                             std::to_string(tail_quota));
  }

  SampledEpoch epoch;
  epoch.head_draws = head_quota;
  epoch.tail_draws = tail_quota;
  epoch.ids.reserve(plan.total_samples);

  const auto draw_from = [&](const std::vector<std::size_t>& part, std::uint64_t quota,
                             const char* stream) {
    if (quota == 0) return;
    std::vector<double> weights(part.size());
    for (std::size_t k = 0; k < part.size(); ++k) {
      weights[k] = importance_image(corpus[part[k]], stats);
    }
    AliasTable table(weights);
    Rng rng(plan.seed, stream);
    for (std::uint64_t d = 0; d < quota; ++d) {
      epoch.ids.push_back(corpus[part[table.sample(rng)]].id);
    }
  };
  draw_from(split.head, head_quota, "head");
  draw_from(split.tail, tail_quota, "tail");

  // SGD consumes the epoch in order, so head and tail draws are shuffled
  // together (Fisher-Yates on its own stream).
  Rng shuffle_rng(plan.seed, "shuffle");
  for (std::size_t i = epoch.ids.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform_int(i));
    std::swap(epoch.ids[i - 1], epoch.ids[j]);
  }

  epoch.tail_multiplier =
      split.tail.empty() ? 0.0
                         : static_cast<double>(tail_quota) / static_cast<double>(split.tail.size());
  return epoch;
}

std::map<std::string, std::vector<double>> synthetic_tag_centers(const SynthConfig& config) {
  std::vector<std::string> names = config.tag_names;
  if (names.empty()) {
    names.reserve(config.n_tags);
    for (std::uint64_t t = 0; t < config.n_tags; ++t) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "tag%04llu", static_cast<unsigned long long>(t + 1));
      names.emplace_back(buf);
    }
  }
  Rng rng(config.seed, "centers");
  std::map<std::string, std::vector<double>> centers;
  for (const std::string& name : names) {
    std::vector<double> c(config.feature_dim);
    for (double& v : c) v = config.cluster_scale * rng.normal();
    centers.emplace(name, std::move(c));
  }
  return centers;
}

Corpus generate_synthetic_corpus(const SynthConfig& config) {
  if (config.tag_names.empty() && config.n_tags == 0 && config.n_images > 0) {
    throw std::invalid_argument("generate_synthetic_corpus: need at least one tag");
  }
  std::vector<std::string> names = config.tag_names;
  if (names.empty()) {
    for (std::uint64_t t = 0; t < config.n_tags; ++t) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "tag%04llu", static_cast<unsigned long long>(t + 1));
      names.emplace_back(buf);
    }
  }
  const std::size_t n_tags = names.size();

  // Zipf over tag ranks: p(r) proportional to (r+1)^(-exponent).
  std::vector<double> tag_weights(n_tags);
  for (std::size_t r = 0; r < n_tags; ++r) {
    tag_weights[r] = std::pow(static_cast<double>(r + 1), -config.zipf_exponent);
  }
  AliasTable tag_table(tag_weights);

  const auto centers = synthetic_tag_centers(config);
  Rng tag_rng(config.seed, "tags");
  Rng feat_rng(config.seed, "features");
  Rng attr_rng(config.seed, "attrs");

  Corpus corpus;
  corpus.reserve(config.n_images);
  const std::uint64_t max_tags = std::max<std::uint64_t>(1, config.max_tags_per_image);
  for (std::uint64_t i = 0; i < config.n_images; ++i) {
    ImageRecord rec;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "img%08llu", static_cast<unsigned long long>(i + 1));
    rec.id = buf;

    const std::uint64_t want =
        1 + tag_rng.uniform_int(std::min<std::uint64_t>(max_tags, n_tags));
    std::set<std::string> chosen;
    while (chosen.size() < want) chosen.insert(names[tag_table.sample(tag_rng)]);
    rec.tags.assign(chosen.begin(), chosen.end());

    if (config.feature_dim > 0) {
      rec.features.assign(config.feature_dim, 0.0);
      for (const std::string& tag : rec.tags) {
        const auto& c = centers.at(tag);
        for (std::size_t d = 0; d < rec.features.size(); ++d) rec.features[d] += c[d];
      }
      for (double& v : rec.features) v /= static_cast<double>(rec.tags.size());
      for (double& v : rec.features) v += config.noise_scale * feat_rng.normal();
    }

    if (config.attr_groups > 0) {
      const std::uint64_t g = attr_rng.uniform_int(config.attr_groups);
      rec.attrs["group"] = "g" + std::to_string(g + 1);
    }
    corpus.push_back(std::move(rec));
  }
  return corpus;
}

}  // namespace tagtrain
