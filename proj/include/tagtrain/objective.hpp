#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace tagtrain {

// Sparse multi-label target: K non-zero entries of 1/K each.
struct TargetVector {
  std::map<std::size_t, double> entries;  // class index -> probability mass
  std::size_t n_classes = 0;
};

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad_logits;  // softmax(logits) - target; sums to zero
};

// Class index space: canonical_key -> dense class index, in key order.
std::map<std::string, std::size_t> class_index_of_keys(const std::set<std::string>& keys);

TargetVector encode_targets(const std::set<std::string>& tags,
                            const std::map<std::string, std::size_t>& class_index,
                            std::size_t n_classes);

// Uniform mass over explicit class indices (labeled finetuning, mixup output).
TargetVector make_target(const std::map<std::size_t, double>& entries, std::size_t n_classes);

// Cross-entropy of softmax(logits) against the target, with max-subtraction
// log-sum-exp stabilization, plus the analytic gradient wrt logits.
LossValue softmax_xent(const std::vector<double>& logits, const TargetVector& target);

std::vector<double> softmax(const std::vector<double>& logits);

struct MixupExample {
  std::vector<double> features;
  TargetVector target;
};

// Pairs examples with a seeded permutation and convexly combines features and
// targets with per-pair lambda ~ Beta(alpha, alpha). forced_lambda overrides
// the draw when non-negative (tests).
std::vector<MixupExample> mixup(const std::vector<MixupExample>& batch, double alpha,
                                std::uint64_t seed, double forced_lambda = -1.0);

}  // namespace tagtrain
