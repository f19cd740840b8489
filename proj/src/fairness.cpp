#include "tagtrain/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

namespace tagtrain {

std::vector<std::string> topk(const std::vector<double>& scores,
                              const std::vector<std::string>& keys, std::size_t k) {
  if (k == 0) throw std::invalid_argument("topk: k must be positive");
  if (scores.size() != keys.size()) throw std::invalid_argument("topk: size mismatch");
  if (k > keys.size()) throw std::invalid_argument("topk: k exceeds vocabulary size");

  std::vector<std::size_t> order(keys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return keys[a] < keys[b];
  });
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(keys[order[i]]);
  return out;
}

double GroupStats::rate(const std::string& key) const {
  if (size == 0) return 0.0;
  const auto it = pred_counts.find(key);
  return it == pred_counts.end() ? 0.0
                                 : static_cast<double>(it->second) / static_cast<double>(size);
}

namespace {

// The skin_tone attribute is pinned to the six ordered tones; every other
// attribute takes free-form labels.
void check_attribute_value(const std::string& attribute, const std::string& value,
                           const std::string& image_id) {
  if (attribute != "skin_tone") return;
  static const std::set<std::string> kTones{"1", "2", "3", "4", "5", "6"};
  if (!kTones.count(value)) {
    throw std::runtime_error("image " + image_id + ": skin_tone must be one of 1..6, got '" +
                             value + "'");
  }
}

}  // namespace

std::map<std::string, GroupStats> collect_group_stats(const Corpus& corpus,
                                                      const TopkPredictions& predictions,
                                                      const std::string& attribute) {
  std::map<std::string, GroupStats> groups;
  for (const ImageRecord& rec : corpus) {
    const auto attr = rec.attrs.find(attribute);
    if (attr == rec.attrs.end()) {
      throw std::runtime_error("image " + rec.id + " has no attribute '" + attribute + "'");
    }
    check_attribute_value(attribute, attr->second, rec.id);
    const auto pred = predictions.find(rec.id);
    if (pred == predictions.end()) {
      throw std::runtime_error("no prediction for image " + rec.id);
    }
    GroupStats& g = groups[attr->second];
    g.group = attr->second;
    ++g.size;
    // A key counts once per image (top-k keys are distinct by construction).
    std::set<std::string> uniq(pred->second.begin(), pred->second.end());
    for (const std::string& key : uniq) ++g.pred_counts[key];
  }
  return groups;
}

DisparityReport disparity_report(const Corpus& corpus, const TopkPredictions& predictions,
                                 const std::string& attribute, const std::string& group,
                                 std::size_t k, std::size_t max_rows) {
  const auto groups = collect_group_stats(corpus, predictions, attribute);
  if (groups.size() < 2) {
    throw std::runtime_error("disparity_report: need at least two groups, found " +
                             std::to_string(groups.size()));
  }
  const auto it = groups.find(group);
  if (it == groups.end()) {
    throw std::runtime_error("disparity_report: no images with " + attribute + " = " + group);
  }

  std::set<std::string> all_keys;
  for (const auto& [name, g] : groups) {
    for (const auto& [key, count] : g.pred_counts) all_keys.insert(key);
  }

  DisparityReport report;
  report.attribute = attribute;
  report.group = group;
  report.k = k;
  const double n_others = static_cast<double>(groups.size() - 1);
  for (const std::string& key : all_keys) {
    DisparityRow row;
    row.key = key;
    row.group_rate = it->second.rate(key);
    for (const auto& [name, g] : groups) {
      if (name == group) continue;
      row.others_mean += g.rate(key) / n_others;
    }
    row.diff = row.group_rate - row.others_mean;
    if (row.others_mean > 0.0) {
      row.rel_diff = row.diff / row.others_mean;
    }
    report.rows.push_back(std::move(row));
  }

  std::sort(report.rows.begin(), report.rows.end(),
            [](const DisparityRow& a, const DisparityRow& b) {
              if (std::abs(a.diff) != std::abs(b.diff)) {
                return std::abs(a.diff) > std::abs(b.diff);
              }
              return a.key < b.key;
            });
  if (report.rows.size() > max_rows) report.rows.resize(max_rows);
  return report;
}

GroupAccuracy per_group_accuracy(const Corpus& corpus,
                                 const std::map<std::string, int>& predicted_class,
                                 const std::string& attribute) {
  struct Tally {
    std::uint64_t correct = 0;
    std::uint64_t total = 0;
  };
  std::map<std::string, Tally> overall;
  std::map<std::string, std::map<int, Tally>> per_class;

  for (const ImageRecord& rec : corpus) {
    if (!rec.label) throw std::runtime_error("image " + rec.id + " has no label");
    const auto attr = rec.attrs.find(attribute);
    if (attr == rec.attrs.end()) {
      throw std::runtime_error("image " + rec.id + " has no attribute '" + attribute + "'");
    }
    check_attribute_value(attribute, attr->second, rec.id);
    const auto pred = predicted_class.find(rec.id);
    if (pred == predicted_class.end()) {
      throw std::runtime_error("no prediction for image " + rec.id);
    }
    const bool correct = pred->second == *rec.label;
    Tally& o = overall[attr->second];
    ++o.total;
    o.correct += correct ? 1 : 0;
    Tally& pc = per_class[attr->second][*rec.label];
    ++pc.total;
    pc.correct += correct ? 1 : 0;
  }

  GroupAccuracy out;
  for (const auto& [group, tally] : overall) {
    out.accuracy[group] = static_cast<double>(tally.correct) / static_cast<double>(tally.total);
  }
  for (const auto& [group, classes] : per_class) {
    for (const auto& [cls, tally] : classes) {
      out.per_class[group][cls] =
          static_cast<double>(tally.correct) / static_cast<double>(tally.total);
      out.per_class_count[group][cls] = tally.total;
    }
  }
  return out;
}

RatioMatrix ratio_matrix(const GroupAccuracy& accuracy, double threshold) {
  RatioMatrix matrix;
  for (const auto& [group, acc] : accuracy.per_class) matrix.groups.push_back(group);
  if (matrix.groups.size() < 2) {
    throw std::runtime_error("ratio_matrix: need at least two groups");
  }

  const auto acc_of = [&](const std::string& group, int cls) {
    const auto git = accuracy.per_class.find(group);
    const auto cit = git->second.find(cls);
    // A class the group never saw has no observed correct recognitions.
    return cit == git->second.end() ? 0.0 : cit->second;
  };

  const std::size_t n = matrix.groups.size();
  matrix.entries.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<int> denom_classes;
    for (const auto& [cls, acc] : accuracy.per_class.at(matrix.groups[j])) {
      if (acc > 0.0) denom_classes.push_back(cls);
    }
    if (denom_classes.empty()) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      std::size_t count = 0;
      for (int cls : denom_classes) {
        if (acc_of(matrix.groups[i], cls) / acc_of(matrix.groups[j], cls) < threshold) {
          ++count;
        }
      }
      matrix.entries[i][j] =
          static_cast<double>(count) / static_cast<double>(denom_classes.size());
    }
  }
  return matrix;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_disparity_csv(const DisparityReport& report, std::ostream& out) {
  out << "hashtag,group_rate,others_mean_rate,abs_diff,rel_diff\n";
  for (const DisparityRow& row : report.rows) {
    out << row.key << ',' << fmt(row.group_rate) << ',' << fmt(row.others_mean) << ','
        << fmt(std::abs(row.diff)) << ',' << (row.rel_diff ? fmt(*row.rel_diff) : "inf")
        << '\n';
  }
}

void write_ratio_matrix_csv(const RatioMatrix& matrix, std::ostream& out) {
  out << "group";
  for (const std::string& g : matrix.groups) out << ',' << g;
  out << '\n';
  for (std::size_t i = 0; i < matrix.groups.size(); ++i) {
    out << matrix.groups[i];
    for (std::size_t j = 0; j < matrix.groups.size(); ++j) {
      out << ',' << fmt(matrix.entries[i][j]);
    }
    out << '\n';
  }
  out << "# entry (row, col) = fraction of classes with acc_row/acc_col below the"
         " threshold; classes with zero accuracy in the column group are excluded"
         " from that column's denominator\n";
}

void write_group_accuracy_csv(const GroupAccuracy& accuracy, std::ostream& out) {
  out << "group,class,examples,accuracy\n";
  for (const auto& [group, classes] : accuracy.per_class) {
    for (const auto& [cls, acc] : classes) {
      out << group << ',' << cls << ',' << accuracy.per_class_count.at(group).at(cls) << ','
          << fmt(acc) << '\n';
    }
  }
}

void write_disparity_svg(const DisparityReport& report, std::ostream& out) {
  constexpr int kRowHeight = 22;
  constexpr int kLabelWidth = 180;
  constexpr int kBarMax = 400;
  constexpr int kTopMargin = 40;
  const int height = kTopMargin + kRowHeight * static_cast<int>(report.rows.size()) + 20;
  const int width = kLabelWidth + kBarMax + 160;

  double max_abs = 0.0;
  for (const DisparityRow& row : report.rows) max_abs = std::max(max_abs, std::abs(row.diff));
  if (max_abs == 0.0) max_abs = 1.0;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "  <text x=\"10\" y=\"20\" font-size=\"14\">prediction-rate differences for "
      << xml_escape(report.attribute) << " = " << xml_escape(report.group)
      << " (top-" << report.k << ")</text>\n";
  int y = kTopMargin;
  for (const DisparityRow& row : report.rows) {
    const int bar = static_cast<int>(std::abs(row.diff) / max_abs * kBarMax);
    const char* color = row.diff >= 0.0 ? "#4c72b0" : "#c44e52";
    out << "  <text x=\"10\" y=\"" << y + 14 << "\" font-size=\"12\">"
        << xml_escape(row.key) << "</text>\n";
    out << "  <rect x=\"" << kLabelWidth << "\" y=\"" << y << "\" width=\"" << std::max(bar, 1)
        << "\" height=\"" << kRowHeight - 6 << "\" fill=\"" << color << "\"/>\n";
    out << "  <text x=\"" << kLabelWidth + std::max(bar, 1) + 6 << "\" y=\"" << y + 14
        << "\" font-size=\"11\">" << fmt(std::abs(row.diff)) << " ("
        << (row.rel_diff ? fmt(*row.rel_diff) : "inf") << ")</text>\n";
    y += kRowHeight;
  }
  out << "</svg>\n";
}

}  // namespace tagtrain
