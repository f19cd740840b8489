#include "tagtrain/zeroshot.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tagtrain {

ClassTaxonomy read_taxonomy_tsv(std::istream& in) {
  std::map<std::size_t, TaxonomyClass> by_index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string index_field, name, offset_field;
    if (!std::getline(ss, index_field, '\t') || !std::getline(ss, name, '\t') ||
        !std::getline(ss, offset_field, '\t')) {
      throw std::runtime_error("taxonomy tsv line " + std::to_string(line_no) +
                               ": expected index<TAB>name<TAB>offset");
    }
    const std::size_t index = std::stoull(index_field);
    SynsetId id{static_cast<std::uint32_t>(std::stoul(offset_field)), Pos::Noun};
    if (!by_index.emplace(index, TaxonomyClass{name, id}).second) {
      throw std::runtime_error("taxonomy tsv line " + std::to_string(line_no) +
                               ": duplicate class index " + index_field);
    }
  }
  ClassTaxonomy taxonomy;
  std::size_t expected = 0;
  for (const auto& [index, cls] : by_index) {
    if (index != expected++) {
      throw std::runtime_error("taxonomy tsv: class indices must be contiguous from 0");
    }
    taxonomy.classes.push_back(cls);
  }
  return taxonomy;
}

void write_taxonomy_tsv(const ClassTaxonomy& taxonomy, std::ostream& out) {
  for (std::size_t c = 0; c < taxonomy.classes.size(); ++c) {
    char offset[16];
    std::snprintf(offset, sizeof(offset), "%08u", taxonomy.classes[c].synset.offset);
    out << c << '\t' << taxonomy.classes[c].name << '\t' << offset << '\n';
  }
}

std::vector<std::vector<std::size_t>> TagClassMap::edges_of_class() const {
  std::vector<std::vector<std::size_t>> out(n_classes);
  for (std::size_t e = 0; e < edges.size(); ++e) out[edges[e].class_index].push_back(e);
  return out;
}

std::map<std::string, std::vector<std::size_t>> TagClassMap::edges_of_key() const {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t e = 0; e < edges.size(); ++e) out[edges[e].key].push_back(e);
  return out;
}

TagClassMap build_mapping(const Vocabulary& vocab, const ClassTaxonomy& taxonomy,
                          const LexDb& db) {
  if (vocab.tags.empty()) throw std::invalid_argument("build_mapping: empty vocabulary");

  TagClassMap map;
  map.n_classes = taxonomy.classes.size();
  map.class_max_similarity.assign(map.n_classes, 0.0);

  for (std::size_t c = 0; c < taxonomy.classes.size(); ++c) {
    // One traversal from the class synset covers every hashtag synset.
    const auto dist = db.hypernym_graph_distances(taxonomy.classes[c].synset);

    double best = 0.0;
    std::vector<std::string> best_keys;
    for (const auto& [key, tag] : vocab.tags) {
      double sim = 0.0;
      for (const SynsetId& id : tag.synset_ids) {
        const int d = dist[db.dense_index(id)];
        if (d >= 0) sim = std::max(sim, 1.0 / (1.0 + static_cast<double>(d)));
      }
      if (sim > best) {
        best = sim;
        best_keys.assign(1, key);
      } else if (sim == best && sim > 0.0) {
        best_keys.push_back(key);
      }
    }
    map.class_max_similarity[c] = best;
    for (const std::string& key : best_keys) {
      map.edges.push_back(MapEdge{key, c, best});
    }
  }
  return map;
}

void write_mapping_tsv(const TagClassMap& map, const ClassTaxonomy& taxonomy,
                       std::ostream& out) {
  char sim[32];
  for (const MapEdge& edge : map.edges) {
    std::snprintf(sim, sizeof(sim), "%.6f", edge.similarity);
    out << edge.class_index << '\t' << taxonomy.classes[edge.class_index].name << '\t'
        << edge.key << '\t' << sim << '\n';
  }
}

std::optional<AggregationStrategy> aggregation_from(const std::string& name) {
  if (name == "sum") return AggregationStrategy::Sum;
  if (name == "avg" || name == "average") return AggregationStrategy::Avg;
  if (name == "split-max" || name == "split_max") return AggregationStrategy::SplitMax;
  return std::nullopt;
}

std::string to_string(AggregationStrategy strategy) {
  switch (strategy) {
    case AggregationStrategy::Sum: return "sum";
    case AggregationStrategy::Avg: return "avg";
    case AggregationStrategy::SplitMax: return "split-max";
  }
  return "?";
}

namespace {

double score_of(const std::map<std::string, double>& scores, const std::string& key) {
  const auto it = scores.find(key);
  return it == scores.end() ? 0.0 : it->second;
}

}  // namespace

std::vector<double> aggregate_sum(const std::map<std::string, double>& scores,
                                  const TagClassMap& map) {
  std::vector<double> out(map.n_classes, 0.0);
  for (const MapEdge& edge : map.edges) {
    out[edge.class_index] += score_of(scores, edge.key);
  }
  return out;
}

std::vector<double> aggregate_avg(const std::map<std::string, double>& scores,
                                  const TagClassMap& map) {
  std::vector<double> out(map.n_classes, 0.0);
  std::vector<std::size_t> degree(map.n_classes, 0);
  for (const MapEdge& edge : map.edges) {
    out[edge.class_index] += score_of(scores, edge.key);
    ++degree[edge.class_index];
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (degree[c] > 0) out[c] /= static_cast<double>(degree[c]);
  }
  return out;
}

std::vector<double> aggregate_split_max(const std::map<std::string, double>& scores,
                                        const TagClassMap& map) {
  std::vector<double> out(map.n_classes, 0.0);
  const auto by_key = map.edges_of_key();
  for (const auto& [key, edge_ids] : by_key) {
    const double share = score_of(scores, key) / static_cast<double>(edge_ids.size());
    for (std::size_t e : edge_ids) {
      out[map.edges[e].class_index] = std::max(out[map.edges[e].class_index], share);
    }
  }
  return out;
}

std::vector<double> aggregate(const std::map<std::string, double>& scores,
                              const TagClassMap& map, AggregationStrategy strategy) {
  switch (strategy) {
    case AggregationStrategy::Sum: return aggregate_sum(scores, map);
    case AggregationStrategy::Avg: return aggregate_avg(scores, map);
    case AggregationStrategy::SplitMax: return aggregate_split_max(scores, map);
  }
  throw std::invalid_argument("aggregate: unknown strategy");
}

PlattParams PlattParams::identity(std::size_t n_classes) {
  PlattParams p;
  p.w.assign(n_classes, 1.0);
  p.b.assign(n_classes, 0.0);
  return p;
}

void write_platt_json(const PlattParams& params, std::ostream& out) {
  nlohmann::ordered_json j;
  j["w"] = params.w;
  j["b"] = params.b;
  out << j.dump() << '\n';
}

PlattParams read_platt_json(std::istream& in) {
  nlohmann::json j;
  in >> j;
  PlattParams p;
  p.w = j.at("w").get<std::vector<double>>();
  p.b = j.at("b").get<std::vector<double>>();
  if (p.w.size() != p.b.size()) throw std::runtime_error("platt params: shape mismatch");
  return p;
}

std::vector<double> apply_platt(const std::vector<double>& p, const PlattParams& params) {
  if (p.size() != params.w.size()) {
    throw std::invalid_argument("apply_platt: dimension mismatch");
  }
  std::vector<double> z(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (!std::isfinite(params.w[c]) || !std::isfinite(params.b[c])) {
      throw std::invalid_argument("apply_platt: non-finite parameters");
    }
    z[c] = params.w[c] * p[c] + params.b[c];
  }
  return softmax(z);
}

double platt_objective(const std::vector<std::vector<double>>& predictions,
                       const PlattParams& params, bool per_example) {
  if (predictions.empty()) throw std::invalid_argument("platt_objective: empty prediction set");
  const std::size_t n_classes = params.w.size();
  const double n = static_cast<double>(predictions.size());

  if (per_example) {
    double loss = 0.0;
    for (const auto& p : predictions) {
      const auto q = apply_platt(p, params);
      for (double qc : q) loss -= std::log(qc);
    }
    return loss / (n * static_cast<double>(n_classes));
  }

  std::vector<double> marginal(n_classes, 0.0);
  for (const auto& p : predictions) {
    const auto q = apply_platt(p, params);
    for (std::size_t c = 0; c < n_classes; ++c) marginal[c] += q[c] / n;
  }
  double loss = 0.0;
  for (double m : marginal) loss -= std::log(m);
  return loss / static_cast<double>(n_classes);
}

std::pair<std::vector<double>, std::vector<double>> platt_gradient(
    const std::vector<std::vector<double>>& predictions, const PlattParams& params,
    bool per_example) {
  if (predictions.empty()) throw std::invalid_argument("platt_gradient: empty prediction set");
  const std::size_t n_classes = params.w.size();
  const double n = static_cast<double>(predictions.size());
  const double c_count = static_cast<double>(n_classes);

  std::vector<double> dw(n_classes, 0.0);
  std::vector<double> db(n_classes, 0.0);

  std::vector<std::vector<double>> rescaled;
  rescaled.reserve(predictions.size());
  for (const auto& p : predictions) rescaled.push_back(apply_platt(p, params));

  std::vector<double> marginal(n_classes, 0.0);
  if (!per_example) {
    for (const auto& q : rescaled) {
      for (std::size_t c = 0; c < n_classes; ++c) marginal[c] += q[c] / n;
    }
  }

  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    const auto& s = rescaled[i];
    double weighted = 0.0;  // sum_c s_c * dL/dq_c for the softmax Jacobian
    std::vector<double> dq(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
      dq[c] = per_example ? -1.0 / (n * c_count * s[c]) : -1.0 / (n * c_count * marginal[c]);
      weighted += s[c] * dq[c];
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
      const double dz = s[c] * (dq[c] - weighted);
      dw[c] += dz * p[c];
      db[c] += dz;
    }
  }
  return {dw, db};
}

PlattFitResult fit_platt(const std::vector<std::vector<double>>& predictions,
                         const PlattFitOptions& options) {
  if (predictions.empty()) throw std::invalid_argument("fit_platt: empty prediction set");
  const std::size_t n_classes = predictions.front().size();
  for (const auto& p : predictions) {
    if (p.size() != n_classes) throw std::invalid_argument("fit_platt: ragged predictions");
  }

  PlattFitResult result;
  result.params = PlattParams::identity(n_classes);
  double loss = platt_objective(predictions, result.params, options.per_example);
  result.initial_loss = loss;

  PlattParams best = result.params;
  double best_loss = loss;

  PlattParams current = result.params;
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    const auto [dw, db] = platt_gradient(predictions, current, options.per_example);
    double grad_norm_sq = 0.0;
    for (double g : dw) grad_norm_sq += g * g;
    for (double g : db) grad_norm_sq += g * g;
    if (std::sqrt(grad_norm_sq) < options.tol) break;

    // Backtracking line search keeps the accepted objective non-increasing.
    double step = options.lr;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      PlattParams cand = current;
      for (std::size_t c = 0; c < n_classes; ++c) {
        cand.w[c] -= step * dw[c];
        cand.b[c] -= step * db[c];
      }
      const double cand_loss = platt_objective(predictions, cand, options.per_example);
      if (cand_loss <= loss) {
        current = std::move(cand);
        loss = cand_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    result.iterations = iter + 1;
    if (!accepted) break;
    if (loss < best_loss) {
      best_loss = loss;
      best = current;
    }
  }

  result.params = best;
  result.final_loss = best_loss;
  return result;
}

ZeroshotResult zeroshot_classify(const std::vector<std::vector<double>>& hashtag_probs,
                                 const std::vector<std::string>& hashtag_keys,
                                 const TagClassMap& map, AggregationStrategy strategy,
                                 bool use_platt, const PlattFitOptions& options) {
  ZeroshotResult result;
  const std::size_t n_classes = map.n_classes;
  if (n_classes == 0) throw std::invalid_argument("zeroshot_classify: empty class map");

  result.class_probs.reserve(hashtag_probs.size());
  for (const auto& row : hashtag_probs) {
    if (row.size() != hashtag_keys.size()) {
      throw std::invalid_argument("zeroshot_classify: row width != number of hashtag keys");
    }
    std::map<std::string, double> scores;
    for (std::size_t h = 0; h < row.size(); ++h) scores[hashtag_keys[h]] = row[h];
    auto class_scores = aggregate(scores, map, strategy);

    double total = 0.0;
    for (double s : class_scores) total += s;
    if (total > 0.0) {
      for (double& s : class_scores) s /= total;
    } else {
      class_scores.assign(n_classes, 1.0 / static_cast<double>(n_classes));
    }
    result.class_probs.push_back(std::move(class_scores));
  }

  result.marginal_before.assign(n_classes, 0.0);
  for (const auto& p : result.class_probs) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      result.marginal_before[c] += p[c] / static_cast<double>(result.class_probs.size());
    }
  }

  if (use_platt && !result.class_probs.empty()) {
    // Transductive: the scaler is fitted on the whole unlabeled prediction set.
    const auto fit = fit_platt(result.class_probs, options);
    result.platt = fit.params;
    for (auto& p : result.class_probs) p = apply_platt(p, fit.params);
  }

  result.marginal_after.assign(n_classes, 0.0);
  for (const auto& p : result.class_probs) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      result.marginal_after[c] += p[c] / static_cast<double>(result.class_probs.size());
    }
  }

  result.predicted.reserve(result.class_probs.size());
  for (const auto& p : result.class_probs) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < p.size(); ++c) {
      if (p[c] > p[arg]) arg = c;
    }
    result.predicted.push_back(arg);
  }
  return result;
}

TrainState zeroshot_init(const TrainState& pretrained, const TagClassMap& map,
                         std::size_t n_target_classes) {
  if (map.edges.empty()) throw std::invalid_argument("zeroshot_init: empty mapping");
  if (map.n_classes != n_target_classes) {
    throw std::invalid_argument("zeroshot_init: mapping covers a different class count");
  }

  std::map<std::string, std::size_t> row_of_key;
  for (std::size_t i = 0; i < pretrained.class_keys.size(); ++i) {
    row_of_key.emplace(pretrained.class_keys[i], i);
  }

  TrainState s;
  s.feature_dim = pretrained.feature_dim;
  s.n_classes = n_target_classes;
  s.weights.value.assign(s.feature_dim * n_target_classes, 0.0);
  s.bias.value.assign(n_target_classes, 0.0);

  const auto by_class = map.edges_of_class();
  for (std::size_t c = 0; c < n_target_classes; ++c) {
    const auto& edge_ids = by_class[c];
    if (edge_ids.empty()) continue;
    double used = 0.0;
    for (std::size_t e : edge_ids) {
      const auto it = row_of_key.find(map.edges[e].key);
      if (it == row_of_key.end()) {
        throw std::runtime_error("zeroshot_init: mapped hashtag not in pretrained head: " +
                                 map.edges[e].key);
      }
      const double* src = pretrained.weight_row(it->second);
      double* dst = s.weight_row(c);
      for (std::size_t d = 0; d < s.feature_dim; ++d) dst[d] += src[d];
      s.bias.value[c] += pretrained.bias.value[it->second];
      used += 1.0;
    }
    double* dst = s.weight_row(c);
    for (std::size_t d = 0; d < s.feature_dim; ++d) dst[d] /= used;
    s.bias.value[c] /= used;
  }

  for (ParamGroup* g : {&s.weights, &s.bias}) {
    g->momentum.assign(g->value.size(), 0.0);
    g->second.assign(g->value.size(), 0.0);
    g->ema = g->value;
  }
  return s;
}

}  // namespace tagtrain
