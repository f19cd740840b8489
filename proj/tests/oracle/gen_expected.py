#!/usr/bin/env python3
"""Generates the committed fixture expectations from the reference
implementation in wordnet_ref.py: the 200-hashtag canonicalization fixture,
the 50-noun morphology fixture, the 100-pair path-similarity fixture and the
toy/pipeline taxonomies. Run after gen_wordnet_mini.py; outputs are committed.
"""

import os
import random
import sys

sys.path.insert(0, os.path.dirname(__file__))
import wordnet_ref  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")
DB_DIR = os.path.join(FIXTURES, "wordnet_mini")

TOY_WORDS = [
    "cat", "goose", "poodle", "horse", "sheep", "wolf", "porcupine",
    "sunflower", "tulip", "oak", "pizza", "sushi", "bread", "cheese",
    "coffee", "guitar", "drum", "camera", "chair", "beach",
]

PIPELINE_TAXONOMY = [
    ("dog", "dog", "noun.animal"),
    ("cat", "cat", "noun.animal"),
    ("goose", "goose", "noun.animal"),
    ("crane_bird", "crane", "noun.animal"),
    ("porcupine", "porcupine", "noun.animal"),
    ("horse", "horse", "noun.animal"),
    ("wolf", "wolf", "noun.animal"),
    ("eggplant", "eggplant", "noun.plant"),
    ("sunflower", "sunflower", "noun.plant"),
    ("rose", "rose", "noun.plant"),
    ("pizza", "pizza", "noun.food"),
    ("sushi", "sushi", "noun.food"),
    ("bread", "bread", "noun.food"),
    ("cheese", "cheese", "noun.food"),
    ("coffee", "coffee", "noun.food"),
    ("guitar", "guitar", "noun.artifact"),
    ("bicycle", "bicycle", "noun.artifact"),
    ("church", "church", "noun.artifact"),
    ("party", "party", "noun.event"),
    ("beach", "beach", "noun.object"),
]

PIPELINE_HASHTAGS = [
    "dog", "dogs", "cat", "cats", "pizza", "sushi", "guitar", "bicycle",
    "bike", "crane", "goose", "geese", "eggplant", "aubergine", "sunflower",
    "church", "churches", "party", "parties", "beach", "mountain", "wedding",
    "concert", "coffee", "cheese", "bread", "icecream", "hotdog", "spermbank",
    "newyork", "qqqq", "sofa", "couch", "boxes", "camera", "chair", "house",
    "bridge", "drum", "rose", "tulip", "oak", "cactus", "salmon", "horse",
    "sheep", "wolf", "porcupine", "hedgehog", "kid", "makeup", "bikini",
    "redhead", "elder", "festival", "matches",
]

SPECIAL_HASHTAGS = [
    # canonicalization corner cases
    "eggplant", "aubergine", "brinjal", "newyork", "london", "paris",
    "crane", "cranes", "spermbank", "icecream", "hotdog", "hotdogs",
    "breakdance", "jackolantern", "dog", "dogs", "canine", "goose", "geese",
    "sofa", "couch", "lounge", "bike", "bicycle", "cycle",
    # exception-table and rule inflections
    "men", "women", "children", "feet", "teeth", "mice", "oxen", "wolves",
    "knives", "axes", "busses", "buses", "boxes", "churches", "bushes",
    "parties", "matches", "adzes", "cakes", "kids", "puppies", "kittens",
    "couches", "beaches",
    # filtered lexicographer files
    "redhead", "elder", "baby", "teacher", "storm", "music", "love", "idea",
    "mugshot", "football", "basketball", "makeup", "bikini", "rip",
    "workforce", "manpower",
    # length gate and junk
    "ab", "xy", "a", "qqqq", "zzzz", "thingamajig", "doodad",
]


def load_db():
    return wordnet_ref.load(DB_DIR)


def resolve_synset(db, word, lexname):
    hits = []
    for sid in db.index.get((word, "n"), []):
        syn = db.synsets[(sid, "n")]
        if syn["lexname"] == lexname:
            hits.append(sid)
    if len(hits) != 1:
        raise SystemExit(f"{word}/{lexname}: expected exactly one synset, got {hits}")
    return hits[0]


def gen_hashtag_fixture(db):
    words = list(SPECIAL_HASHTAGS)
    for w in TOY_WORDS + PIPELINE_HASHTAGS:
        if w not in words:
            words.append(w)
    # deterministic unindexed filler up to exactly 200 entries
    i = 0
    while len(words) < 200:
        filler = f"xqz{i:03d}"
        if filler not in words:
            words.append(filler)
        i += 1
    words = words[:200]

    with open(os.path.join(FIXTURES, "hashtags_200.txt"), "w") as f:
        f.write("\n".join(words) + "\n")
    with open(os.path.join(FIXTURES, "expected_get_synsets.tsv"), "w") as f:
        for w in words:
            key = db.canonical_key(w)
            f.write(f"{w}\t{key if key else '-'}\n")

    # sanity: the published behaviours of the mapping hold on the fixture db
    assert db.canonical_key("eggplant") == db.canonical_key("aubergine") != None  # noqa: E711
    assert db.canonical_key("newyork") is None
    assert db.canonical_key("ab") is None
    crane = db.get_synsets("crane")
    crane_lex = {db.synsets[s]["lexname"] for s in crane}
    assert {"noun.animal", "noun.artifact"} <= crane_lex, crane_lex
    assert db.canonical_key("spermbank") is not None
    assert db.canonical_key("sofa") == db.canonical_key("couch") is not None
    assert db.canonical_key("dog") != db.canonical_key("canine")
    assert db.canonical_key("goose") == db.canonical_key("geese")


def gen_morphy_fixture(db):
    words = [
        "axes", "busses", "children", "feet", "geese", "knives", "men",
        "mice", "oxen", "teeth", "wolves", "women",
        "dogs", "cats", "pizzas", "guitars", "cranes", "bikes", "churches",
        "boxes", "bushes", "parties", "buses", "adzes", "matches", "cakes",
        "horses", "tulips", "roses", "oaks", "beaches", "mountains",
        "rivers", "islands", "moons", "rocks", "drums", "cameras", "chairs",
        "tables", "sofas", "couches", "weddings", "concerts", "festivals",
        "races", "kittens", "puppies", "herons", "doodads",
    ]
    assert len(words) == 50, len(words)
    with open(os.path.join(FIXTURES, "expected_morphy.tsv"), "w") as f:
        for w in words:
            base = db.morphy(w, "n")
            f.write(f"{w}\t{base if base else '-'}\n")


def gen_pathsim_fixture(db):
    nouns = sorted(sid for sid in db.synsets if sid[1] == "n")

    def sid_str(s):
        return "%08d-%s" % s

    def by_word(word, lexname):
        return (resolve_synset(db, word, lexname), "n")

    pairs = [
        (by_word("dog", "noun.animal"), by_word("dog", "noun.animal")),
        (by_word("dog", "noun.animal"), by_word("canine", "noun.animal")),
        (by_word("canine", "noun.animal"),
         by_word("domestic_animal", "noun.animal")),
        (by_word("thingamajig", "noun.artifact"), by_word("dog", "noun.animal")),
    ]
    rng = random.Random(20260808)
    while len(pairs) < 100:
        a = rng.choice(nouns)
        b = rng.choice(nouns)
        pairs.append((a, b))

    with open(os.path.join(FIXTURES, "expected_pathsim.tsv"), "w") as f:
        for a, b in pairs:
            d = db.shortest_path(a, b)
            score = 1.0 / (1.0 + d)
            f.write("%s\t%s\t%d\t%.17g\n" % (sid_str(a), sid_str(b), d, score))


def gen_taxonomies(db):
    with open(os.path.join(FIXTURES, "hashtags_toy.txt"), "w") as f:
        f.write("\n".join(TOY_WORDS) + "\n")
    with open(os.path.join(FIXTURES, "taxonomy_toy.tsv"), "w") as f:
        for i, word in enumerate(TOY_WORDS):
            ids = db.get_synsets(word)
            if len(ids) != 1:
                raise SystemExit(f"toy word {word} must map to exactly one synset, got {ids}")
            offset = next(iter(ids))[0]
            f.write("%d\t%s\t%08d\n" % (i, word, offset))

    with open(os.path.join(FIXTURES, "hashtags_pipeline.txt"), "w") as f:
        f.write("\n".join(PIPELINE_HASHTAGS) + "\n")
    with open(os.path.join(FIXTURES, "taxonomy_pipeline.tsv"), "w") as f:
        for i, (name, word, lexname) in enumerate(PIPELINE_TAXONOMY):
            offset = resolve_synset(db, word, lexname)
            f.write("%d\t%s\t%08d\n" % (i, name, offset))


def gen_vocab_golden(db):
    """Committed counts fixture plus the vocabulary the reference
    implementation derives from it (min_count 2): an independent route to the
    exact bytes `build-vocab` must produce."""
    counts = [
        ("dog", 41), ("dogs", 13), ("#Canine", 7), ("cat", 25), ("cats", 2),
        ("eggplant", 6), ("aubergine", 9), ("brinjal", 3), ("newyork", 88),
        ("qqqq", 17), ("rare", 1), ("sofa", 4), ("couch", 5), ("crane", 12),
        ("cranes", 2), ("geese", 3), ("goose", 8), ("spermbank", 2),
        ("icecream", 11), ("matches", 4), ("parties", 6), ("party", 19),
        ("ab", 30), ("boxes", 2), ("redhead", 5), ("kid", 7), ("baby", 31),
    ]
    with open(os.path.join(FIXTURES, "hashtag_counts.tsv"), "w") as f:
        for tag, count in counts:
            f.write(f"{tag}\t{count}\n")

    min_count = 2
    tags, members, totals = {}, {}, {}
    for raw, count in counts:
        if count < min_count:
            continue
        hashtag = raw.lstrip("#").lower()
        key = db.canonical_key(hashtag)
        if key is None:
            continue
        tags[key] = True
        members.setdefault(key, set()).add(hashtag)
        totals[key] = totals.get(key, 0) + count
    os.makedirs(os.path.join(FIXTURES, "golden"), exist_ok=True)
    with open(os.path.join(FIXTURES, "golden", "vocab_from_counts.tsv"), "w") as f:
        for key in sorted(tags):
            f.write("%s\t%d\t%s\n" % (key, totals[key], ",".join(sorted(members[key]))))


def main():
    db = load_db()
    noun_count = sum(1 for sid in db.synsets if sid[1] == "n")
    gen_hashtag_fixture(db)
    gen_morphy_fixture(db)
    gen_pathsim_fixture(db)
    gen_taxonomies(db)
    gen_vocab_golden(db)
    with open(os.path.join(FIXTURES, "wordnet_mini_counts.tsv"), "w") as f:
        f.write("noun\t%d\n" % noun_count)
        f.write("total\t%d\n" % len(db.synsets))
    print(f"fixtures written; {noun_count} noun synsets in the mini db")


if __name__ == "__main__":
    main()
