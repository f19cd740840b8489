#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tagtrain/corpus.hpp"
#include "tagtrain/lexdb.hpp"

namespace tagtrain {

// Lexicographer files whose senses survive hashtag filtering.
const std::set<std::string>& allowed_senses();

// Minimum hashtag length, and minimum length of each half of a compound split.
inline constexpr std::size_t kMinHashtagLen = 3;

// Strips a leading '#' and lowercases.
std::string normalize_hashtag(std::string hashtag);

// Maps a hashtag to its set of allowed-sense synsets: the morphological base
// of the whole tag plus every in-vocabulary two-part compound split, with all
// senses outside allowed_senses() dropped. Empty set = filtered out.
std::set<SynsetId> get_synsets(const std::string& hashtag, const LexDb& db);

// One training label: a set of synsets and its deterministic text key
// (sorted synset ids joined by '+').
struct CanonicalTag {
  std::set<SynsetId> synset_ids;
  std::string canonical_key;
};

std::string canonical_key_of(const std::set<SynsetId>& ids);

// std::nullopt iff get_synsets is empty.
std::optional<CanonicalTag> canonicalize(const std::string& hashtag, const LexDb& db);

struct Vocabulary {
  std::map<std::string, CanonicalTag> tags;                // key -> tag
  std::map<std::string, std::set<std::string>> members;    // key -> raw hashtags
  std::map<std::string, std::uint64_t> counts;             // key -> image count

  // raw hashtag -> canonical key, for relabeling corpora. Keys map to
  // themselves so already-canonical corpora pass through.
  std::optional<std::string> key_for(const std::string& raw_or_key) const;

  std::size_t size() const { return tags.size(); }
};

// Builds the label vocabulary from (raw hashtag, occurrence count) pairs:
// counts below min_count are dropped, survivors are canonicalized and merged
// per canonical key, unmappable hashtags are dropped.
Vocabulary build_vocabulary(
    const std::vector<std::pair<std::string, std::uint64_t>>& hashtag_counts,
    const LexDb& db, std::uint64_t min_count = 2);

// TSV: canonical_key <TAB> image_count <TAB> comma-joined raw hashtags.
void write_vocabulary_tsv(const Vocabulary& vocab, std::ostream& out);
Vocabulary read_vocabulary_tsv(std::istream& in);

// TSV: hashtag <TAB> count.
std::vector<std::pair<std::string, std::uint64_t>> read_hashtag_counts_tsv(std::istream& in);

// Converts raw hashtags into canonical targets: tags resolve through the
// vocabulary (already-canonical keys pass through), out-of-vocabulary tags are
// discarded, and images left with no tag are dropped.
Corpus relabel_corpus(const Corpus& corpus, const Vocabulary& vocab);

}  // namespace tagtrain
