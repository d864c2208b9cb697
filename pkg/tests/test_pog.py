import json
import math
import random
import threading
from collections import Counter
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from clozegen.corpus import RecordError
from clozegen.gae import ClozeCandidate
from clozegen.pog import (
    MaskPrediction,
    NgramPredictor,
    PredictorError,
    PredictorSpec,
    RemotePredictor,
    is_incomplete,
    levenshtein,
    make_predictor,
    predict_mask,
    read_generated,
    sample_distractors,
    stem,
    too_similar,
    write_generated,
)

DOCS = ["he ate an apple", "she ate an orange", "the apple fell"]


def test_ngram_scores_match_hand_computation():
    predictor = NgramPredictor.from_documents(DOCS)
    out = predictor.fill_mask("he ate an [MASK] .", "[MASK]", top_n=3)
    assert [p.token for p in out] == ["apple", "orange", "ate"]
    assert out[0].score == math.log1p(1) + 0.1 * math.log1p(2)
    assert out[1].score == math.log1p(1) + 0.1 * math.log1p(1)
    assert out[2].score == 0.1 * math.log1p(2)


def test_ngram_uses_both_neighbors():
    predictor = NgramPredictor.from_documents(["cows eat grass daily", "birds eat seed daily"])
    out = predictor.fill_mask("they eat [MASK] daily", "[MASK]", top_n=2)
    assert [p.token for p in out] == ["grass", "seed"]
    # both neighbors seen once, plus the unigram term
    expected = math.log1p(1) + math.log1p(1) + 0.1 * math.log1p(1)
    assert out[0].score == expected
    assert out[1].score == expected


def test_ngram_breaks_score_ties_lexicographically():
    predictor = NgramPredictor.from_documents(["m xx n", "m yy n"])
    out = predictor.fill_mask("m [MASK] n", "[MASK]", top_n=2)
    assert [p.token for p in out] == ["xx", "yy"]
    assert out[0].score == out[1].score


def test_ngram_never_proposes_function_words_or_non_alphabetic_tokens():
    docs = ["the the the cow 7 , the", "the cow the"]
    predictor = NgramPredictor.from_documents(docs)
    out = predictor.fill_mask("the [MASK] the", "[MASK]", top_n=10)
    assert [p.token for p in out] == ["cow"]


def test_ngram_empty_corpus_returns_no_candidates():
    predictor = NgramPredictor.from_documents([])
    assert predictor.fill_mask("a [MASK] b", "[MASK]", top_n=5) == []


def test_ngram_unseen_context_falls_back_to_unigram_ranking():
    predictor = NgramPredictor.from_documents(["cow cow cow boat boat gull"])
    out = predictor.fill_mask("zzz [MASK] zzz", "[MASK]", top_n=3)
    assert [p.token for p in out] == ["cow", "boat", "gull"]


def test_ngram_respects_top_n():
    predictor = NgramPredictor.from_documents(DOCS)
    assert len(predictor.fill_mask("an [MASK] fell", "[MASK]", top_n=1)) == 1


def test_ngram_rejects_bad_mask_counts():
    predictor = NgramPredictor.from_documents(DOCS)
    with pytest.raises(PredictorError):
        predictor.fill_mask("no mask here", "[MASK]", top_n=3)
    with pytest.raises(PredictorError):
        predictor.fill_mask("[MASK] and [MASK]", "[MASK]", top_n=3)
    with pytest.raises(ValueError):
        predictor.fill_mask("a [MASK] b", "[MASK]", top_n=0)


def brute_force_fill(predictor, text, top_n):
    """Score every eligible vocabulary word; no shortlist shortcut."""
    before, after = text.split("[MASK]")
    before_words = [w for w in _words(before)]
    after_words = [w for w in _words(after)]
    prev = before_words[-1] if before_words else None
    nxt = after_words[0] if after_words else None
    after_prev = predictor._following.get(prev, Counter()) if prev else Counter()
    before_next = predictor._preceding.get(nxt, Counter()) if nxt else Counter()
    scored = sorted(
        (
            (predictor._score(w, after_prev, before_next), w)
            for w in predictor._unigram
            if w.isalpha() and w not in _function_words()
        ),
        key=lambda pair: (-pair[0], pair[1]),
    )
    return [(w, s) for s, w in scored[:top_n]]


def _words(text):
    from clozegen.pog import _context_words

    return _context_words(text)


def _function_words():
    from clozegen.wordlists import FUNCTION_WORDS

    return FUNCTION_WORDS


def test_ngram_shortlist_equals_full_vocabulary_scan():
    rng = random.Random(99)
    vocab = ["cow", "boat", "gull", "seal", "crab", "kelp", "reef", "the", "a", "on"]
    for _ in range(40):
        docs = [
            " ".join(rng.choice(vocab) for _ in range(rng.randint(3, 12)))
            for _ in range(rng.randint(1, 6))
        ]
        predictor = NgramPredictor.from_documents(docs)
        left = rng.choice(vocab + ["zzz"])
        right = rng.choice(vocab + ["zzz"])
        text = f"{left} [MASK] {right}"
        top_n = rng.randint(1, 6)
        got = predictor.fill_mask(text, "[MASK]", top_n)
        assert [(p.token, p.score) for p in got] == brute_force_fill(predictor, text, top_n)


def test_mask_prediction_rejects_bad_values():
    with pytest.raises(ValueError):
        MaskPrediction("", 1.0)
    with pytest.raises(ValueError):
        MaskPrediction("cow", float("nan"))
    with pytest.raises(ValueError):
        MaskPrediction("cow", float("inf"))


def test_predictor_spec_validation():
    PredictorSpec()
    PredictorSpec(kind="remote", endpoint="http://127.0.0.1:1")
    with pytest.raises(ValueError):
        PredictorSpec(kind="neural")
    with pytest.raises(ValueError):
        PredictorSpec(kind="remote")
    with pytest.raises(ValueError):
        PredictorSpec(top_n=0)


def test_make_predictor_builds_the_requested_kind():
    builtin = make_predictor(PredictorSpec(), DOCS)
    assert isinstance(builtin, NgramPredictor)
    remote = make_predictor(PredictorSpec(kind="remote", endpoint="http://127.0.0.1:1/"))
    assert isinstance(remote, RemotePredictor)
    assert remote.endpoint == "http://127.0.0.1:1"


def test_predict_mask_validates_the_candidate_first():
    predictor = NgramPredictor.from_documents(DOCS)
    bad = ClozeCandidate("c1", "Doc.", "no mask", "x")
    with pytest.raises(ValueError):
        predict_mask(predictor, bad)


def test_is_incomplete_cases():
    assert is_incomplete("##ing") is True
    assert is_incomplete(",") is True
    assert is_incomplete("7") is True
    assert is_incomplete("") is True
    assert is_incomplete("water") is False
    assert is_incomplete("o'clock") is False
    assert is_incomplete("xying", continuation_marker="xy") is True
    assert is_incomplete("##a", continuation_marker="") is False


def test_levenshtein_known_distances():
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein("effortless", "effort") == 4
    assert levenshtein("", "abc") == 3
    assert levenshtein("same", "same") == 0
    assert levenshtein("a", "b") == 1


short_words = st.text(alphabet="abcdef", min_size=0, max_size=8)


@given(short_words, short_words)
def test_levenshtein_is_symmetric_and_bounded(a, b):
    d = levenshtein(a, b)
    assert d == levenshtein(b, a)
    assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))
    assert (d == 0) == (a == b)


def test_stem_strips_fixed_suffixes():
    assert stem("pressures") == "pressure"
    assert stem("pressure") == "pressure"
    assert stem("running") == "run"
    assert stem("stopped") == "stop"
    assert stem("falling") == "fall"
    assert stem("passed") == "pass"
    assert stem("buzzed") == "buzz"
    assert stem("classes") == "class"
    assert stem("watches") == "watch"
    assert stem("seeing") == "see"
    assert stem("quickly") == "quick"
    assert stem("waited") == "wait"
    assert stem("makes") == "make"


def test_stem_never_produces_stems_shorter_than_two():
    assert stem("is") == "is"
    assert stem("as") == "as"
    assert stem("aly") == "aly"


def test_too_similar_cases():
    assert too_similar("Water", "water") is True
    assert too_similar("pressures", "pressure") is True
    assert too_similar("effortless", "effort") is False
    assert too_similar("abcde", "abcdx") is True
    assert too_similar("abcd", "abxy") is False
    assert too_similar("boat", "water") is False


def test_too_similar_threshold_is_inclusive_and_tunable():
    # distance 1 over length 5: similarity exactly 0.8
    assert too_similar("abcde", "abcdx", threshold=0.8) is True
    assert too_similar("abcde", "abcdx", threshold=0.81) is False


@given(short_words.filter(bool))
def test_too_similar_is_reflexive(word):
    assert too_similar(word, word) is True


@given(short_words.filter(bool), short_words.filter(bool))
def test_too_similar_is_symmetric(a, b):
    assert too_similar(a, b) == too_similar(b, a)


def preds(*pairs):
    return [MaskPrediction(token, score) for token, score in pairs]


def test_sample_distractors_returns_exact_fit_pool():
    predictions = preds(("cow", 4.0), ("boat", 3.0), ("gull", 2.0), ("seal", 1.0))
    out = sample_distractors(predictions, "water", 4, random.Random(0))
    assert sorted(out) == ["boat", "cow", "gull", "seal"]


def test_sample_distractors_drops_when_pool_runs_short():
    predictions = preds(("cow", 4.0), ("boat", 3.0), ("gull", 2.0))
    assert sample_distractors(predictions, "water", 4, random.Random(0)) is None


def test_sample_distractors_filters_incomplete_and_similar():
    predictions = preds(
        ("##ing", 9.0),
        (",", 8.0),
        ("waters", 7.0),
        ("Water", 6.5),
        ("cow", 4.0),
        ("boat", 3.0),
    )
    out = sample_distractors(predictions, "water", 2, random.Random(0))
    assert sorted(out) == ["boat", "cow"]


def test_sample_distractors_dedupes_case_insensitively_keeping_best_score():
    predictions = preds(("Paris", 0.5), ("paris", 0.9), ("rome", 0.4))
    out = sample_distractors(predictions, "water", 2, random.Random(0))
    assert sorted(out) == ["paris", "rome"]
    predictions = preds(("Paris", 0.9), ("paris", 0.5), ("rome", 0.4))
    out = sample_distractors(predictions, "water", 2, random.Random(0))
    assert sorted(out) == ["Paris", "rome"]


def test_sample_distractors_is_deterministic_given_a_seed():
    predictions = preds(*((f"word{i}", float(i)) for i in range(10)))
    a = sample_distractors(predictions, "water", 4, random.Random(11))
    b = sample_distractors(predictions, "water", 4, random.Random(11))
    assert a == b


def test_sample_distractors_rejects_bad_needed():
    with pytest.raises(ValueError):
        sample_distractors([], "water", 0, random.Random(0))


def test_sample_distractors_subsets_are_uniform():
    predictions = preds(*((f"word{i}", float(i)) for i in range(6)))
    rng = random.Random(1234)
    counts = Counter()
    trials = 1500
    for _ in range(trials):
        out = sample_distractors(predictions, "water", 4, rng)
        counts[frozenset(out)] += 1
    assert len(counts) == 15
    result = stats.chisquare(list(counts.values()))
    assert result.pvalue > 0.01


class _FakeHandler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):
        pass

    def _reply(self):
        script = self.server.script
        step = script.pop(0) if len(script) > 1 else script[0]
        status, body = step
        payload = body if isinstance(body, bytes) else json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.server.requests.append(
            (self.path, json.loads(self.rfile.read(length).decode()))
        )
        self._reply()

    def do_GET(self):
        self.server.requests.append((self.path, None))
        self._reply()


@pytest.fixture
def fake_service():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _FakeHandler)
    server.script = [(200, {"candidates": []})]
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)


def _endpoint(server):
    return f"http://127.0.0.1:{server.server_address[1]}"


def test_remote_predictor_passes_candidates_through_verbatim(fake_service):
    body = {
        "candidates": [
            {"token": "boat", "score": 0.25},
            {"token": "##ing", "score": 0.9},
            {"token": "cow", "score": 0.5},
        ]
    }
    fake_service.script = [(200, body)]
    client = RemotePredictor(_endpoint(fake_service), backoff=0.0)
    out = client.fill_mask("a [MASK] b", "[MASK]", 3)
    assert [(p.token, p.score) for p in out] == [
        ("boat", 0.25),
        ("##ing", 0.9),
        ("cow", 0.5),
    ]


def test_remote_predictor_sends_the_wire_protocol_fields(fake_service):
    fake_service.script = [(200, {"candidates": []})]
    client = RemotePredictor(_endpoint(fake_service), backoff=0.0)
    client.fill_mask("the [MASK] swam", "[MASK]", 7)
    path, payload = fake_service.requests[0]
    assert path == "/v1/fill-mask"
    assert payload == {"text": "the [MASK] swam", "mask_token": "[MASK]", "top_n": 7}


def test_remote_predictor_retries_then_succeeds(fake_service):
    good = {"candidates": [{"token": "cow", "score": 1.0}]}
    fake_service.script = [(500, {"error": "boom"}), (500, {"error": "boom"}), (200, good)]
    client = RemotePredictor(_endpoint(fake_service), backoff=0.0)
    out = client.fill_mask("a [MASK] b", "[MASK]", 1)
    assert [p.token for p in out] == ["cow"]
    assert len(fake_service.requests) == 3


def test_remote_predictor_raises_after_exhausting_attempts(fake_service):
    fake_service.script = [(500, {"error": "boom"})]
    client = RemotePredictor(_endpoint(fake_service), attempts=3, backoff=0.0)
    with pytest.raises(PredictorError):
        client.fill_mask("a [MASK] b", "[MASK]", 1)
    assert len(fake_service.requests) == 3


def test_remote_predictor_rejects_malformed_bodies(fake_service):
    client = RemotePredictor(_endpoint(fake_service), backoff=0.0)
    fake_service.script = [(200, b"not json")]
    with pytest.raises(PredictorError):
        client.fill_mask("a [MASK] b", "[MASK]", 1)
    fake_service.script = [(200, {"wrong": []})]
    with pytest.raises(PredictorError):
        client.fill_mask("a [MASK] b", "[MASK]", 1)
    fake_service.script = [(200, {"candidates": [{"token": "cow", "score": "high"}]})]
    with pytest.raises(PredictorError):
        client.fill_mask("a [MASK] b", "[MASK]", 1)


def test_remote_predictor_connection_failure_raises(fake_service):
    port = fake_service.server_address[1]
    fake_service.shutdown()
    fake_service.server_close()
    client = RemotePredictor(f"http://127.0.0.1:{port}", attempts=2, backoff=0.0)
    with pytest.raises(PredictorError):
        client.fill_mask("a [MASK] b", "[MASK]", 1)


def test_remote_predictor_health_probe(fake_service):
    fake_service.script = [(200, {"status": "ok", "model": "test-mlm"})]
    client = RemotePredictor(_endpoint(fake_service))
    assert client.health() == {"status": "ok", "model": "test-mlm"}
    assert fake_service.requests[-1][0] == "/v1/health"
    fake_service.script = [(200, {"status": "loading"})]
    with pytest.raises(PredictorError):
        client.health()
    fake_service.script = [(503, {"error": "down"})]
    with pytest.raises(PredictorError):
        client.health()


def test_generated_records_round_trip(tmp_path):
    records = [
        (ClozeCandidate("c1", "Doc.", "a [MASK] b", "cow"), ["boat", "gull"]),
        (ClozeCandidate("c2", "Doc.", "x [MASK] y", "seal"), ["crab", "kelp", "reef"]),
    ]
    path = tmp_path / "generated.jsonl"
    assert write_generated(records, path) == 2
    back = list(read_generated(path))
    assert [(c.id, c.question, c.answer, d) for c, d in back] == [
        (c.id, c.question, c.answer, list(d)) for c, d in records
    ]


def test_read_generated_applies_malformed_record_policy(tmp_path):
    path = tmp_path / "generated.jsonl"
    path.write_text(
        '{"id": "c1", "article": "A.", "question": "a [MASK] b", "answer": "x", "distractors": ["y"]}\n'
        '{"id": "c2", "article": "A.", "question": "a [MASK] b", "answer": "x"}\n',
        encoding="utf-8",
    )
    skipped = []
    kept = list(read_generated(path, on_skip=lambda e: skipped.append(e)))
    assert [c.id for c, _ in kept] == ["c1"]
    assert len(skipped) == 1
    with pytest.raises(RecordError):
        list(read_generated(path, strict=True))
