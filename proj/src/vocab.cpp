#include "tagtrain/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tagtrain {

const std::set<std::string>& allowed_senses() {
  static const std::set<std::string> kAllowed = {
      "noun.animal", "noun.artifact", "noun.food",
      "noun.object", "noun.plant",    "noun.event"};
  return kAllowed;
}

std::string normalize_hashtag(std::string hashtag) {
  if (!hashtag.empty() && hashtag.front() == '#') hashtag.erase(hashtag.begin());
  for (char& c : hashtag) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return hashtag;
}

namespace {

// All synsets of a word as standard WordNet tooling resolves them: the word
// is morphologically expanded per part of speech and every indexed analysis
// contributes its senses. Matters for forms that are both indexed and in the
// exception table ("men" is a lemma and also inflects to "man").
void add_senses_of(const std::string& word, const LexDb& db,
                   std::set<SynsetId>& out) {
  for (Pos pos : kAllPos) {
    for (const std::string& form : db.morphy_all(word, pos)) {
      for (const SynsetId& id : db.index_entry(form, pos)) {
        if (allowed_senses().count(db.synset(id).lexname)) out.insert(id);
      }
    }
  }
}

}  // namespace

std::set<SynsetId> get_synsets(const std::string& hashtag, const LexDb& db) {
  if (hashtag.size() < kMinHashtagLen) return {};

  std::set<std::string> candidates;
  if (const auto base = db.morphy(hashtag, Pos::Noun)) candidates.insert(*base);
  if (hashtag.size() >= 2 * kMinHashtagLen) {
    for (std::size_t i = kMinHashtagLen; i + kMinHashtagLen <= hashtag.size(); ++i) {
      const std::string split = hashtag.substr(0, i) + "_" + hashtag.substr(i);
      if (const auto base = db.morphy(split)) candidates.insert(*base);
    }
  }

  std::set<SynsetId> synsets;
  for (const std::string& word : candidates) add_senses_of(word, db, synsets);
  return synsets;
}

std::string canonical_key_of(const std::set<SynsetId>& ids) {
  std::string key;
  for (const SynsetId& id : ids) {
    if (!key.empty()) key += '+';
    key += id.to_string();
  }
  return key;
}

std::optional<CanonicalTag> canonicalize(const std::string& hashtag, const LexDb& db) {
  auto ids = get_synsets(hashtag, db);
  if (ids.empty()) return std::nullopt;
  CanonicalTag tag;
  tag.canonical_key = canonical_key_of(ids);
  tag.synset_ids = std::move(ids);
  return tag;
}

std::optional<std::string> Vocabulary::key_for(const std::string& raw_or_key) const {
  if (tags.count(raw_or_key)) return raw_or_key;
  for (const auto& [key, raw_set] : members) {
    if (raw_set.count(raw_or_key)) return key;
  }
  return std::nullopt;
}

Vocabulary build_vocabulary(
    const std::vector<std::pair<std::string, std::uint64_t>>& hashtag_counts,
    const LexDb& db, std::uint64_t min_count) {
  Vocabulary vocab;
  for (const auto& [raw, count] : hashtag_counts) {
    if (count < min_count) continue;
    const std::string hashtag = normalize_hashtag(raw);
    const auto tag = canonicalize(hashtag, db);
    if (!tag) continue;
    const std::string& key = tag->canonical_key;
    vocab.tags.emplace(key, *tag);
    vocab.members[key].insert(hashtag);
    vocab.counts[key] += count;
  }
  return vocab;
}

void write_vocabulary_tsv(const Vocabulary& vocab, std::ostream& out) {
  for (const auto& [key, tag] : vocab.tags) {
    out << key << '\t' << vocab.counts.at(key) << '\t';
    bool first = true;
    for (const auto& raw : vocab.members.at(key)) {
      if (!first) out << ',';
      out << raw;
      first = false;
    }
    out << '\n';
  }
}

Vocabulary read_vocabulary_tsv(std::istream& in) {
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key, count_field, members_field;
    if (!std::getline(ss, key, '\t') || !std::getline(ss, count_field, '\t')) {
      throw std::runtime_error("vocabulary tsv line " + std::to_string(line_no) +
                               ": expected key<TAB>count<TAB>members");
    }
    std::getline(ss, members_field, '\t');

    CanonicalTag tag;
    tag.canonical_key = key;
    std::istringstream ids(key);
    std::string id_text;
    while (std::getline(ids, id_text, '+')) {
      const auto id = SynsetId::parse(id_text);
      if (!id) {
        throw std::runtime_error("vocabulary tsv line " + std::to_string(line_no) +
                                 ": bad synset id '" + id_text + "'");
      }
      tag.synset_ids.insert(*id);
    }
    vocab.counts[key] = std::stoull(count_field);
    std::istringstream ms(members_field);
    std::string member;
    while (std::getline(ms, member, ',')) {
      if (!member.empty()) vocab.members[key].insert(member);
    }
    vocab.tags.emplace(key, std::move(tag));
  }
  return vocab;
}

Corpus relabel_corpus(const Corpus& corpus, const Vocabulary& vocab) {
  std::map<std::string, std::string> key_of_raw;
  for (const auto& [key, raws] : vocab.members) {
    for (const auto& raw : raws) key_of_raw.emplace(raw, key);
  }
  Corpus out;
  for (const ImageRecord& rec : corpus) {
    ImageRecord labeled = rec;
    std::set<std::string> keys;
    for (const std::string& tag : rec.tags) {
      if (vocab.tags.count(tag)) {
        keys.insert(tag);
        continue;
      }
      const auto it = key_of_raw.find(normalize_hashtag(tag));
      if (it != key_of_raw.end()) keys.insert(it->second);
    }
    if (keys.empty()) continue;  // no in-vocabulary hashtag
    labeled.tags.assign(keys.begin(), keys.end());
    out.push_back(std::move(labeled));
  }
  return out;
}

std::vector<std::pair<std::string, std::uint64_t>> read_hashtag_counts_tsv(std::istream& in) {
  std::vector<std::pair<std::string, std::uint64_t>> counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string hashtag, count_field;
    if (!std::getline(ss, hashtag, '\t') || !std::getline(ss, count_field, '\t')) {
      throw std::runtime_error("hashtag counts tsv line " + std::to_string(line_no) +
                               ": expected hashtag<TAB>count");
    }
    counts.emplace_back(hashtag, std::stoull(count_field));
  }
  return counts;
}

}  // namespace tagtrain
