#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tagtrain/corpus.hpp"
#include "tagtrain/rng.hpp"

namespace tagtrain {

struct CorpusStats {
  std::map<std::string, std::uint64_t> freq;  // canonical_key -> image count f(h)
  std::uint64_t n_images = 0;
};

// f(h) = number of distinct images carrying h. Throws on duplicate image ids.
CorpusStats compute_stats(const Corpus& corpus);

// I_h = f(h)^(-1/2); f must be >= 1.
double importance_hashtag(std::uint64_t f);

// I_i = max over the record's tags of I_h. Throws on tags missing from stats.
double importance_image(const ImageRecord& record, const CorpusStats& stats);

struct HeadTailSplit {
  std::vector<std::size_t> head;  // corpus indices
  std::vector<std::size_t> tail;
};

// A head hashtag has f(h) >= cutoff; a tail image carries at least one tail
// hashtag, every other image is a head image. The two sides partition the
// corpus.
HeadTailSplit partition_head_tail(const Corpus& corpus, const CorpusStats& stats,
                                  std::uint64_t cutoff);

struct SamplePlan {
  std::uint64_t total_samples = 0;   // M
  double head_fraction = 0.7;        // alpha
  std::uint64_t tail_cutoff = 5000;
  std::uint64_t seed = 0;
};

struct SampledEpoch {
  std::vector<std::string> ids;      // length M after sampling + shuffle
  std::uint64_t head_draws = 0;      // == ceil(alpha * M)
  std::uint64_t tail_draws = 0;
  double tail_multiplier = 0.0;      // realized tail upsampling: draws per unique tail image
};

// Normalized sampling probabilities (p_i proportional to I_i) for the given
// corpus indices. Exposed so the induced distribution is testable directly.
std::vector<double> sampling_probabilities(const Corpus& corpus,
                                           const CorpusStats& stats,
                                           const std::vector<std::size_t>& part);

// Draws ceil(alpha*M) ids with replacement from the head and floor((1-alpha)*M)
// from the tail, each with probability proportional to the image importance
// factor renormalized within its partition, then shuffles the concatenation.
// Deterministic given (corpus order, plan). Throws when a partition is empty
// but its quota is positive.
SampledEpoch resample(const Corpus& corpus, const CorpusStats& stats,
                      const SamplePlan& plan);

// O(1) weighted sampling (Vose alias method).
class AliasTable {
 public:
  explicit AliasTable(const std::vector<double>& weights);
  std::size_t sample(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

struct SynthConfig {
  std::uint64_t n_images = 0;
  std::uint64_t n_tags = 0;
  double zipf_exponent = 1.1;
  std::uint64_t feature_dim = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> tag_names;  // optional; defaults to tag0001..
  std::uint64_t attr_groups = 0;       // when > 0, assign attrs["group"] = g1..gk
  double cluster_scale = 1.0;
  double noise_scale = 0.5;
  std::uint64_t max_tags_per_image = 3;
};

// Synthetic corpus for tests and demos: tags by Zipfian draw (1..3 per image),
// features from tag-dependent Gaussian clusters so tags are learnable.
// Deterministic per seed.
Corpus generate_synthetic_corpus(const SynthConfig& config);

// Per-tag Gaussian cluster centers used by the generator, keyed by tag name.
std::map<std::string, std::vector<double>> synthetic_tag_centers(const SynthConfig& config);

}  // namespace tagtrain
