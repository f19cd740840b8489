#!/usr/bin/env python3
"""Live two-route parity check: the reference implementation (wordnet_ref.py)
against the production module, over the committed fixtures. The committed
expectation files pin the behaviour even when this check cannot run; this
script re-derives them from both routes and demands exact agreement."""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
import wordnet_ref  # noqa: E402

import tagtrain  # noqa: E402


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--fixtures", required=True)
    args = parser.parse_args()

    db_dir = os.path.join(args.fixtures, "wordnet_mini")
    ref = wordnet_ref.load(db_dir)
    db = tagtrain.load_database(db_dir)

    ref_nouns = sum(1 for sid in ref.synsets if sid[1] == "n")
    assert db.noun_count() == ref_nouns, (db.noun_count(), ref_nouns)

    mismatches = 0

    # canonicalization over the 200-hashtag fixture
    with open(os.path.join(args.fixtures, "hashtags_200.txt")) as f:
        hashtags = [line.strip() for line in f if line.strip()]
    assert len(hashtags) == 200
    for h in hashtags:
        expected = ref.canonical_key(h)
        actual = tagtrain.canonicalize(h, db)
        if expected != actual:
            print(f"canonicalize mismatch: {h}: ref={expected} impl={actual}")
            mismatches += 1
        ids = sorted(tagtrain.get_synsets(h, db))
        ref_ids = sorted("%08d-%s" % s for s in ref.get_synsets(h))
        if ids != ref_ids:
            print(f"get_synsets mismatch: {h}: ref={ref_ids} impl={ids}")
            mismatches += 1

    # sense ordering of the plain index lookup
    for h in hashtags:
        ref_order = ["%08d-%s" % s for s in ref.noun_synsets(h)]
        impl_order = [s["id"] for s in db.synsets_of(h)]
        if ref_order != impl_order:
            print(f"sense order mismatch: {h}: ref={ref_order} impl={impl_order}")
            mismatches += 1

    # morphology over the committed fixture words
    with open(os.path.join(args.fixtures, "expected_morphy.tsv")) as f:
        for line in f:
            word = line.split("\t")[0]
            if ref.morphy(word, "n") != db.morphy(word, "n"):
                print(f"morphy mismatch: {word}")
                mismatches += 1

    # path similarity over the committed fixture pairs
    with open(os.path.join(args.fixtures, "expected_pathsim.tsv")) as f:
        for line in f:
            a, b, _, _ = line.split("\t")
            ra = tuple([int(a.split("-")[0]), a.split("-")[1]])
            rb = tuple([int(b.split("-")[0]), b.split("-")[1]])
            ref_score = ref.path_similarity((ra[0], ra[1]), (rb[0], rb[1]))
            impl_score = db.path_similarity(a, b)
            if ref_score != impl_score:
                print(f"path similarity mismatch: {a} {b}: {ref_score} vs {impl_score}")
                mismatches += 1

    if mismatches:
        print(f"parity FAILED with {mismatches} mismatches")
        return 1
    print("parity ok: 200 hashtags, 50 morphy words, 100 path-similarity pairs")
    return 0


if __name__ == "__main__":
    sys.exit(main())
