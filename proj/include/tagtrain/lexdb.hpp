#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tagtrain {

enum class Pos : std::uint8_t { Noun = 0, Verb = 1, Adj = 2, Adv = 3 };

inline constexpr std::array<Pos, 4> kAllPos = {Pos::Noun, Pos::Verb, Pos::Adj,
                                               Pos::Adv};

char pos_tag(Pos pos);                       // 'n', 'v', 'a', 'r'
std::optional<Pos> pos_from_tag(char tag);   // accepts 's' as Adj

// A synset is identified by its byte offset in the data file plus the
// part-of-speech tag, rendered as e.g. "02084071-n".
struct SynsetId {
  std::uint32_t offset = 0;
  Pos pos = Pos::Noun;

  auto operator<=>(const SynsetId&) const = default;
  std::string to_string() const;
  static std::optional<SynsetId> parse(std::string_view text);
};

struct Synset {
  SynsetId id;
  std::vector<std::string> lemmas;  // lowercase, underscores for spaces
  std::string lexname;              // lexicographer-file name, e.g. "noun.animal"
  std::vector<SynsetId> hypernyms;  // includes instance hypernyms
};

// Error with the offending file (and line, when known) in the message.
struct LexDbError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The parsed WordNet database: synsets, the (lemma, pos) sense index and the
// per-pos morphological exception tables. Immutable after load_database, so
// concurrent readers need no synchronization.
class LexDb {
 public:
  const Synset& synset(SynsetId id) const;
  const Synset* find(SynsetId id) const;
  bool is_indexed(const std::string& lemma, Pos pos) const;

  // Noun synsets of a lemma in database sense order (plain index lookup,
  // no morphological analysis). Spaces are normalized to underscores.
  std::vector<SynsetId> synsets_of(const std::string& word) const;

  // Sense-ordered synsets of a lemma for one part of speech.
  std::vector<SynsetId> index_entry(const std::string& lemma, Pos pos) const;

  // First morphological base form of `word` for one part of speech:
  // exception-table lookup first, then the detachment rules with re-lookup
  // in the index; a word already indexed returns itself. std::nullopt when
  // nothing indexed is reachable.
  std::optional<std::string> morphy(const std::string& word, Pos pos) const;

  // Part-of-speech-free variant: noun, verb, adjective, adverb in that order.
  std::optional<std::string> morphy(const std::string& word) const;

  // All indexed base forms of `word` for one part of speech, in analysis
  // order. This is the full analysis set backing morphy; canonicalization
  // needs it because the sense lookup of standard WordNet tooling expands
  // its argument the same way.
  std::vector<std::string> morphy_all(const std::string& word, Pos pos) const;

  // 1 / (d + 1) where d is the shortest path between the two synsets through
  // the hypernym graph with edges traversable in both directions; a virtual
  // root above all noun roots guarantees connectivity. Throws on unknown ids.
  double path_similarity(SynsetId a, SynsetId b) const;

  // Shortest hypernym-graph distances from `from` to every synset of the same
  // part of speech (virtual root included in traversal). Index into the result
  // with dense_index(). Unreachable entries are -1 (cannot happen for nouns).
  std::vector<int> hypernym_graph_distances(SynsetId from) const;
  std::size_t dense_index(SynsetId id) const;

  std::size_t synset_count(Pos pos) const;
  std::size_t synset_count() const { return synsets_.size(); }

  const std::map<SynsetId, Synset>& synsets() const { return synsets_; }

 private:
  friend LexDb load_database(const std::string& directory);

  void link_and_check();

  std::map<SynsetId, Synset> synsets_;
  std::map<std::pair<std::string, Pos>, std::vector<SynsetId>> index_;
  std::array<std::map<std::string, std::vector<std::string>>, 4> exceptions_;

  // Dense ids and reverse (hyponym) adjacency for graph traversals.
  std::map<SynsetId, std::size_t> dense_;
  std::vector<SynsetId> by_dense_;
  std::vector<std::vector<std::size_t>> up_;    // hypernym edges
  std::vector<std::vector<std::size_t>> down_;  // reverse edges
  std::array<std::vector<std::size_t>, 4> roots_;  // per pos, synsets with no hypernym
};

// Loads `index.noun`, `data.noun` and `noun.exc` (required) plus the verb,
// adjective and adverb files when present, from a WordNet 3.0 database
// directory. Throws LexDbError naming the file (and line for parse errors).
LexDb load_database(const std::string& directory);

// The 45 standard lexicographer-file names, indexed by file number.
std::string_view lexname_from_filenum(int filenum);

}  // namespace tagtrain
