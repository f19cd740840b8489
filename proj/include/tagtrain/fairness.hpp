#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagtrain/corpus.hpp"

namespace tagtrain {

// The k highest-scoring keys; ties broken by ascending canonical_key.
std::vector<std::string> topk(const std::vector<double>& scores,
                              const std::vector<std::string>& keys, std::size_t k);

// Per-image top-k hashtag predictions, keyed by image id.
using TopkPredictions = std::map<std::string, std::vector<std::string>>;

struct GroupStats {
  std::string group;
  std::map<std::string, std::uint64_t> pred_counts;  // per-image occurrence in top-k
  std::uint64_t size = 0;

  double rate(const std::string& key) const;
};

// Tallies how often each hashtag appears in the top-k per value of the given
// attribute. Every image must carry the attribute and a prediction.
std::map<std::string, GroupStats> collect_group_stats(const Corpus& corpus,
                                                      const TopkPredictions& predictions,
                                                      const std::string& attribute);

struct DisparityRow {
  std::string key;
  double group_rate = 0.0;
  double others_mean = 0.0;          // unweighted mean over the other groups
  double diff = 0.0;                 // group_rate - others_mean
  std::optional<double> rel_diff;    // diff / others_mean; absent when mean is 0
};

struct DisparityReport {
  std::string attribute;
  std::string group;
  std::size_t k = 0;
  std::vector<DisparityRow> rows;  // sorted by |diff| descending, at most max_rows
};

// Hashtags whose prediction rate for `group` differs most from the mean rate
// over the other groups. Throws when fewer than two groups are present.
DisparityReport disparity_report(const Corpus& corpus, const TopkPredictions& predictions,
                                 const std::string& attribute, const std::string& group,
                                 std::size_t k, std::size_t max_rows = 20);

struct GroupAccuracy {
  std::map<std::string, double> accuracy;                        // group -> top-1
  std::map<std::string, std::map<int, double>> per_class;        // group -> class -> acc
  std::map<std::string, std::map<int, std::uint64_t>> per_class_count;
};

// Top-1 accuracy per group plus the per-(group, class) table feeding the
// ratio matrix. Every image needs a label, the attribute and a prediction.
GroupAccuracy per_group_accuracy(const Corpus& corpus,
                                 const std::map<std::string, int>& predicted_class,
                                 const std::string& attribute);

struct RatioMatrix {
  std::vector<std::string> groups;
  std::vector<std::vector<double>> entries;  // (i, j): fraction of classes where
                                             // acc_i/acc_j < threshold
};

// Entry (i, j) = |{c : acc_j(c) > 0 and acc_i(c)/acc_j(c) < threshold}| /
// |{c : acc_j(c) > 0}|. Classes the row group never saw count as accuracy 0.
RatioMatrix ratio_matrix(const GroupAccuracy& accuracy, double threshold = 0.8);

// CSV emitters. Relative differences with a zero complement mean render as
// "inf" so batch reports never divide by zero.
void write_disparity_csv(const DisparityReport& report, std::ostream& out);
void write_ratio_matrix_csv(const RatioMatrix& matrix, std::ostream& out);
void write_group_accuracy_csv(const GroupAccuracy& accuracy, std::ostream& out);

// Minimal standalone SVG bar chart of the report: absolute-difference bars
// annotated with the relative differences.
void write_disparity_svg(const DisparityReport& report, std::ostream& out);

}  // namespace tagtrain
