#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagtrain/lexdb.hpp"
#include "tagtrain/trainer.hpp"
#include "tagtrain/vocab.hpp"

namespace tagtrain {

struct TaxonomyClass {
  std::string name;
  SynsetId synset;
};

// Target label space; class order defines the index space.
struct ClassTaxonomy {
  std::vector<TaxonomyClass> classes;
};

// TSV: class_index <TAB> class_name <TAB> wordnet_offset (noun offsets).
ClassTaxonomy read_taxonomy_tsv(std::istream& in);
void write_taxonomy_tsv(const ClassTaxonomy& taxonomy, std::ostream& out);

struct MapEdge {
  std::string key;  // canonical hashtag
  std::size_t class_index = 0;
  double similarity = 0.0;
};

// Many-to-many hashtag <-> class mapping. Every mapped class keeps only the
// hashtags achieving its maximum similarity (ties all kept).
struct TagClassMap {
  std::size_t n_classes = 0;
  std::vector<MapEdge> edges;                   // sorted by (class_index, key)
  std::vector<double> class_max_similarity;     // 0 for unmapped classes

  std::vector<std::vector<std::size_t>> edges_of_class() const;
  std::map<std::string, std::vector<std::size_t>> edges_of_key() const;
};

// sim(h, c) = max over h's synsets of path_similarity(synset, class synset);
// each class maps to every hashtag achieving its maximum. Throws on an empty
// vocabulary.
TagClassMap build_mapping(const Vocabulary& vocab, const ClassTaxonomy& taxonomy,
                          const LexDb& db);

// TSV: class_index <TAB> class_name <TAB> canonical_key <TAB> similarity.
void write_mapping_tsv(const TagClassMap& map, const ClassTaxonomy& taxonomy,
                       std::ostream& out);

enum class AggregationStrategy { Sum, Avg, SplitMax };

std::optional<AggregationStrategy> aggregation_from(const std::string& name);
std::string to_string(AggregationStrategy strategy);

// Hashtag scores -> class scores. Edgeless classes score 0.
std::vector<double> aggregate_sum(const std::map<std::string, double>& scores,
                                  const TagClassMap& map);
std::vector<double> aggregate_avg(const std::map<std::string, double>& scores,
                                  const TagClassMap& map);
// Each hashtag mapped to N classes contributes score/N to each; classes take
// the maximum contribution.
std::vector<double> aggregate_split_max(const std::map<std::string, double>& scores,
                                        const TagClassMap& map);
std::vector<double> aggregate(const std::map<std::string, double>& scores,
                              const TagClassMap& map, AggregationStrategy strategy);

// Per-class affine rescaling on the simplex.
struct PlattParams {
  std::vector<double> w;  // init 1
  std::vector<double> b;  // init 0

  static PlattParams identity(std::size_t n_classes);
};

void write_platt_json(const PlattParams& params, std::ostream& out);
PlattParams read_platt_json(std::istream& in);

// p' = softmax(w . p + b), elementwise product.
std::vector<double> apply_platt(const std::vector<double>& p, const PlattParams& params);

struct PlattFitOptions {
  double lr = 5.0;
  std::size_t max_iters = 2000;
  double tol = 1e-8;            // gradient-norm stopping threshold
  bool per_example = false;     // alternative reading of the objective
};

struct PlattFitResult {
  PlattParams params;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::size_t iterations = 0;
};

// Objective: cross-entropy between the mean rescaled prediction and the
// uniform distribution, -(1/C) sum_c log mean_n apply_platt(p_n)_c. The
// per_example variant averages per-example cross-entropies against uniform
// instead. Uses no labels.
double platt_objective(const std::vector<std::vector<double>>& predictions,
                       const PlattParams& params, bool per_example = false);

// Analytic gradient of platt_objective (dw, db).
std::pair<std::vector<double>, std::vector<double>> platt_gradient(
    const std::vector<std::vector<double>>& predictions, const PlattParams& params,
    bool per_example = false);

// Full-batch gradient descent with backtracking from (w=1, b=0); the accepted
// objective sequence is non-increasing and the best-seen parameters win.
PlattFitResult fit_platt(const std::vector<std::vector<double>>& predictions,
                         const PlattFitOptions& options = {});

struct ZeroshotResult {
  std::vector<std::size_t> predicted;              // per-row argmax class
  std::vector<std::vector<double>> class_probs;    // per-row, simplex-normalized
  std::optional<PlattParams> platt;
  std::vector<double> marginal_before;             // mean class distribution
  std::vector<double> marginal_after;              // after Platt (== before if off)
};

// Aggregates each row of hashtag probabilities into class scores, normalizes
// onto the simplex, optionally fits and applies the transductive Platt scaler
// on the whole prediction set, and takes the per-row argmax.
ZeroshotResult zeroshot_classify(const std::vector<std::vector<double>>& hashtag_probs,
                                 const std::vector<std::string>& hashtag_keys,
                                 const TagClassMap& map, AggregationStrategy strategy,
                                 bool use_platt, const PlattFitOptions& options = {});

// Classifier initialization for finetuning: every mapped target class row is
// the arithmetic mean of its hashtags' pretrained rows (the average
// aggregation rule, no Platt); unmapped classes get zero rows.
TrainState zeroshot_init(const TrainState& pretrained, const TagClassMap& map,
                         std::size_t n_target_classes);

}  // namespace tagtrain
