"""Smoke tests for the pybind11 module."""

import json
import math
import os
import sys
import tempfile

import pytest

import _pii_kit as pk

REPO = os.environ.get("PII_KIT_REPO", os.path.join(os.path.dirname(__file__), "..", ".."))
TAXONOMY = os.path.join(REPO, "data", "taxonomies", "mhealth.taxonomy.json")


def test_taxonomy_loads():
    t = pk.load_taxonomy(TAXONOMY)
    assert len(t) == 38
    assert "Heart rate" in t
    assert "heart rate" not in t


def test_taxonomy_errors():
    with pytest.raises(pk.PiiError):
        pk.parse_taxonomy('{"name":"x","entries":[]}')


def test_normalize_body():
    nb = pk.normalize_body("a%2Bb and &#x40; and aGVsbG8gd29ybGQ=")
    assert nb["normalized"] == "a+b and @ and hello world"
    assert nb["original"].startswith("a%2Bb")
    assert any(seg["transform"] == "base64" for seg in nb["span_map"])


def test_gestalt_matches_difflib():
    import difflib

    for a, b in [("Email", "E-mail"), ("Date of Birth", "Date of birth"), ("abc", "xyz")]:
        expected = difflib.SequenceMatcher(None, a, b, autojunk=False).ratio()
        assert math.isclose(pk.gestalt_similarity(a, b), expected, abs_tol=1e-9)


def test_embeddings():
    e1 = pk.fallback_embedding("Email")
    e2 = pk.fallback_embedding("E-mail")
    assert len(e1) == 256
    assert pk.cosine(e1, e2) >= 0.85


def test_generate_split_evaluate_round():
    with tempfile.TemporaryDirectory() as work:
        corpus = os.path.join(work, "corpus.jsonl")
        n = pk.generate_mock_corpus(TAXONOMY, 5, 20, 13, corpus)
        assert n == 100

        eval_path = os.path.join(work, "eval.jsonl")
        ex_path = os.path.join(work, "examples.jsonl")
        slack = pk.stratified_split_files(corpus, 0.8, 3, eval_path, ex_path)
        assert slack >= 0.0
        assert sum(1 for _ in open(eval_path)) == 80
        assert sum(1 for _ in open(ex_path)) == 20

        # gold echoed as a checkpoint file scores perfectly
        run_dir = os.path.join(work, "run")
        os.makedirs(run_dir)
        with open(eval_path) as f, open(os.path.join(run_dir, "annotator_two.jsonl"), "w") as out:
            for line in f:
                rec = json.loads(line)
                anns = [
                    {"data_type": a["data_type"], "value": a["value"], "placement": "body"}
                    for a in rec["annotations"]
                ]
                out.write(
                    json.dumps(
                        {"id": rec["id"], "stage": "annotator_two", "annotations": anns}
                    )
                    + "\n"
                )
        report = json.loads(pk.evaluate_run(run_dir, eval_path, 0.8))
        assert report["stages"]["annotator_two"]["exact"]["f1"] == 1.0
        assert report["stages"]["annotator_two"]["fuzzy"]["f1"] == 1.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
