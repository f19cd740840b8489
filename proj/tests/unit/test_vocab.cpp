#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "tagtrain/vocab.hpp"

using namespace tagtrain;

namespace {

const LexDb& mini_db() {
  static const LexDb db = load_database(wordnet_mini_dir());
  return db;
}

}  // namespace

TEST_CASE("get_synsets merges and filters like the published mapping") {
  const LexDb& db = mini_db();
  const auto eggplant = get_synsets("eggplant", db);
  const auto aubergine = get_synsets("aubergine", db);
  CHECK(!eggplant.empty());
  CHECK(eggplant == aubergine);

  CHECK(get_synsets("newyork", db).empty());   // maps only to a location sense
  CHECK(get_synsets("ab", db).empty());        // below the length gate
  CHECK(get_synsets("qqqq", db).empty());      // unindexed
  CHECK(!get_synsets("spermbank", db).empty());  // found via the compound split
  CHECK(get_synsets("breakdance", db).empty());  // verb-only compound, filtered
}

TEST_CASE("canonicalize is deterministic and none iff filtered") {
  const LexDb& db = mini_db();
  const auto a = canonicalize("crane", db);
  const auto b = canonicalize("crane", db);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->canonical_key == b->canonical_key);
  CHECK(a->synset_ids.size() == 2);

  CHECK_FALSE(canonicalize("newyork", db).has_value());
  // dog carries an extra food sense, canine does not
  CHECK(canonicalize("dog", db)->canonical_key !=
        canonicalize("canine", db)->canonical_key);
  CHECK(canonicalize("sofa", db)->canonical_key ==
        canonicalize("couch", db)->canonical_key);
}

TEST_CASE("canonicalization fixture matches the reference byte for byte") {
  const LexDb& db = mini_db();
  std::ifstream in(fixture_path("expected_get_synsets.tsv"));
  REQUIRE(in.good());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string hashtag = line.substr(0, tab);
    const std::string expected = line.substr(tab + 1);
    const auto tag = canonicalize(hashtag, db);
    if (expected == "-") {
      CHECK_MESSAGE(!tag.has_value(), hashtag);
    } else {
      REQUIRE_MESSAGE(tag.has_value(), hashtag);
      CHECK_MESSAGE(tag->canonical_key == expected, hashtag);
    }
    ++rows;
  }
  CHECK(rows == 200);
}

TEST_CASE("many-to-one soundness over the fixture hashtags") {
  const LexDb& db = mini_db();
  std::ifstream in(fixture_path("hashtags_200.txt"));
  std::vector<std::string> hashtags;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) hashtags.push_back(line);
  }
  for (std::size_t i = 0; i < hashtags.size(); i += 7) {
    for (std::size_t j = 0; j < hashtags.size(); j += 13) {
      const auto si = get_synsets(hashtags[i], db);
      const auto sj = get_synsets(hashtags[j], db);
      if (si.empty() || sj.empty()) continue;
      CHECK((canonical_key_of(si) == canonical_key_of(sj)) == (si == sj));
    }
  }
}

TEST_CASE("build_vocabulary thresholds, merges and closes") {
  const LexDb& db = mini_db();
  const std::vector<std::pair<std::string, std::uint64_t>> counts{
      {"cat", 5}, {"qqqq", 9}, {"rare", 1}, {"dog", 4}, {"dogs", 3},
      {"#Eggplant", 2}, {"aubergine", 6}, {"newyork", 50},
  };
  const Vocabulary vocab = build_vocabulary(counts, db, 2);

  // qqqq unmapped, rare below min_count, newyork filtered
  REQUIRE(vocab.size() == 3);
  const auto cat_key = canonicalize("cat", db)->canonical_key;
  const auto dog_key = canonicalize("dog", db)->canonical_key;
  const auto egg_key = canonicalize("eggplant", db)->canonical_key;
  CHECK(vocab.counts.at(cat_key) == 5);
  CHECK(vocab.counts.at(dog_key) == 7);  // dog + dogs merge
  CHECK(vocab.counts.at(egg_key) == 8);  // #Eggplant normalized + aubergine
  CHECK(vocab.members.at(dog_key) == std::set<std::string>{"dog", "dogs"});
  CHECK(vocab.members.at(egg_key) == std::set<std::string>{"aubergine", "eggplant"});

  for (const auto& [key, count] : vocab.counts) {
    CHECK(vocab.tags.count(key) == 1);
    CHECK(vocab.members.count(key) == 1);
  }

  CHECK(build_vocabulary({}, db, 2).size() == 0);
}

TEST_CASE("fixture stream as pseudo-hashtags: survivors have allowed senses only") {
  const LexDb& db = mini_db();
  std::ifstream in(fixture_path("hashtags_200.txt"));
  REQUIRE(in.good());
  std::vector<std::pair<std::string, std::uint64_t>> counts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) counts.emplace_back(line, 2);
  }
  const Vocabulary vocab = build_vocabulary(counts, db, 2);
  CHECK(vocab.size() > 0);
  for (const auto& [key, tag] : vocab.tags) {
    REQUIRE(!tag.synset_ids.empty());
    for (const SynsetId& id : tag.synset_ids) {
      CHECK(allowed_senses().count(db.synset(id).lexname) == 1);
    }
  }
}

TEST_CASE("vocabulary tsv round trip") {
  const LexDb& db = mini_db();
  const std::vector<std::pair<std::string, std::uint64_t>> counts{
      {"crane", 4}, {"pizza", 9}, {"sofa", 2}, {"couch", 3},
  };
  const Vocabulary vocab = build_vocabulary(counts, db, 2);
  std::stringstream ss;
  write_vocabulary_tsv(vocab, ss);
  const Vocabulary back = read_vocabulary_tsv(ss);
  REQUIRE(back.size() == vocab.size());
  for (const auto& [key, tag] : vocab.tags) {
    CHECK(back.tags.at(key).synset_ids == tag.synset_ids);
    CHECK(back.counts.at(key) == vocab.counts.at(key));
    CHECK(back.members.at(key) == vocab.members.at(key));
  }
}

TEST_CASE("relabel_corpus drops out-of-vocabulary tags and empty images") {
  const LexDb& db = mini_db();
  const Vocabulary vocab =
      build_vocabulary({{"dog", 5}, {"dogs", 2}, {"pizza", 4}}, db, 2);
  Corpus corpus;
  corpus.push_back({"a", {"dogs", "pizza"}, {}, {}, std::nullopt});
  corpus.push_back({"b", {"qqqq"}, {}, {}, std::nullopt});
  corpus.push_back({"c", {"dog", "dogs"}, {}, {}, std::nullopt});
  const Corpus out = relabel_corpus(corpus, vocab);
  REQUIRE(out.size() == 2);
  const auto dog_key = canonicalize("dog", db)->canonical_key;
  const auto pizza_key = canonicalize("pizza", db)->canonical_key;
  CHECK(std::set<std::string>(out[0].tags.begin(), out[0].tags.end()) ==
        std::set<std::string>{dog_key, pizza_key});
  CHECK(out[1].tags == std::vector<std::string>{dog_key});  // merged duplicates
}
