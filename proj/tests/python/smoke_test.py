#!/usr/bin/env python3
"""Smoke tests of the python module: the bindings load, the main operations
run, and a couple of known values hold. Heavier coverage lives in the C++
unit and acceptance suites."""

import math
import os
import sys
import tempfile

import tagtrain


def fixtures():
    env = os.environ.get("TAGTRAIN_FIXTURES")
    if env:
        return env
    return os.path.join(os.path.dirname(__file__), "..", "fixtures")


def main():
    db = tagtrain.load_database(os.path.join(fixtures(), "wordnet_mini"))
    assert db.noun_count() > 100

    assert db.morphy("dogs") == "dog"
    assert db.morphy("geese") == "goose"
    assert db.morphy("qqqq") is None
    assert db.morphy("ran", "all") == "run"

    crane = db.synsets_of("crane")
    assert len(crane) >= 2
    lexnames = {s["lexname"] for s in crane}
    assert "noun.animal" in lexnames and "noun.artifact" in lexnames
    assert db.path_similarity(crane[0]["id"], crane[0]["id"]) == 1.0

    assert tagtrain.get_synsets("eggplant", db) == tagtrain.get_synsets("aubergine", db)
    assert tagtrain.canonicalize("newyork", db) is None
    assert tagtrain.canonicalize("#Dogs", db) == tagtrain.canonicalize("dog", db)

    vocab_tsv = tagtrain.build_vocabulary([("dog", 5), ("dogs", 3), ("qqqq", 7)], db)
    assert vocab_tsv.count("\n") == 1 and "dog,dogs" in vocab_tsv

    assert tagtrain.importance_hashtag(10000) == 0.01
    assert abs(tagtrain.effective_lr(0.1, 256, 8192) - 3.2) < 1e-12
    assert abs(tagtrain.lr_at(0, 1000, 1.0) - 0.1) < 1e-12
    assert abs(tagtrain.lr_at(1000, 1000, 1.0)) < 1e-12

    loss, grad = tagtrain.softmax_xent([0.0] * 27, {5: 1.0})
    assert abs(loss - math.log(27)) < 1e-12
    assert abs(sum(grad)) < 1e-9

    p = tagtrain.apply_platt([0.7, 0.2, 0.1], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0])
    assert abs(sum(p) - 1.0) < 1e-9

    fit = tagtrain.fit_platt([[0.8, 0.1, 0.1], [0.7, 0.2, 0.1], [0.6, 0.3, 0.1]])
    assert fit["final_loss"] <= fit["initial_loss"]

    assert tagtrain.topk([0.5, 0.5], ["kb", "ka"], 1) == ["ka"]  # tie by key

    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "corpus.jsonl")
        code, _, err = tagtrain.run_cli(
            ["synth", "--images", "10", "--tags", "3", "--dim", "2",
             "--seed", "1", "--out", out])
        assert code == 0, err
        assert sum(1 for _ in open(out)) == 10

    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
