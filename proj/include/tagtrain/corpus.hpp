#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tagtrain {

// One example: an id, its canonical tags (or raw hashtags before relabeling),
// an optional feature vector, optional subgroup attributes, and an optional
// integer class label for labeled evaluation sets.
struct ImageRecord {
  std::string id;
  std::vector<std::string> tags;
  std::vector<double> features;
  std::map<std::string, std::string> attrs;
  std::optional<int> label;
};

using Corpus = std::vector<ImageRecord>;

// JSON-lines, one object per image: {"id": ..., "tags": [...],
// "features": [...], "attrs": {...}, "label": ...}. features/attrs/label are
// optional on read and omitted on write when absent.
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);
Corpus read_corpus_jsonl(std::istream& in);

Corpus read_corpus_file(const std::string& path);
void write_corpus_file(const Corpus& corpus, const std::string& path);

}  // namespace tagtrain
