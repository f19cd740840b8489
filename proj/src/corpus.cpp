#include "tagtrain/corpus.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tagtrain {

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const ImageRecord& rec : corpus) {
    nlohmann::ordered_json j;
    j["id"] = rec.id;
    j["tags"] = rec.tags;
    if (!rec.features.empty()) j["features"] = rec.features;
    if (!rec.attrs.empty()) j["attrs"] = rec.attrs;
    if (rec.label) j["label"] = *rec.label;
    out << j.dump() << '\n';
  }
}

Corpus read_corpus_jsonl(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    ImageRecord rec;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.tags = j.at("tags").get<std::vector<std::string>>();
      if (j.contains("features")) rec.features = j["features"].get<std::vector<double>>();
      if (j.contains("attrs")) rec.attrs = j["attrs"].get<std::map<std::string, std::string>>();
      if (j.contains("label")) rec.label = j["label"].get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    corpus.push_back(std::move(rec));
  }
  return corpus;
}

Corpus read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return read_corpus_jsonl(in);
}

void write_corpus_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  write_corpus_jsonl(corpus, out);
}

}  // namespace tagtrain
