import pytest
from fastapi.testclient import TestClient

from mlm_service.app import create_app


@pytest.fixture(scope="session")
def client(model_dir):
    return TestClient(create_app(model_dir))


def fill(client, **body):
    return client.post("/v1/fill-mask", json=body)


def test_health_reports_ok_and_model_identity(client, model_dir):
    response = client.get("/v1/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "model": model_dir}


def test_fill_mask_returns_token_score_candidates(client):
    response = fill(client, text="the [MASK] swam", mask_token="[MASK]", top_n=5)
    assert response.status_code == 200
    body = response.json()
    assert set(body) == {"candidates"}
    assert body["candidates"]
    for item in body["candidates"]:
        assert set(item) == {"token", "score"}
        assert isinstance(item["token"], str) and item["token"]
        assert isinstance(item["score"], float)
        assert 0.0 < item["score"] <= 1.0


def test_candidate_count_never_exceeds_top_n(client):
    for top_n in (1, 3, 5, 17):
        response = fill(client, text="the [MASK] swam", top_n=top_n)
        assert response.status_code == 200
        assert len(response.json()["candidates"]) <= top_n


def test_scores_are_monotonically_non_increasing(client):
    scores = [
        c["score"]
        for c in fill(client, text="the [MASK] swam", top_n=30).json()["candidates"]
    ]
    assert all(a >= b for a, b in zip(scores, scores[1:]))


def test_identical_requests_get_identical_responses(client):
    first = fill(client, text="the capital of france is [MASK]", top_n=8)
    second = fill(client, text="the capital of france is [MASK]", top_n=8)
    assert first.status_code == second.status_code == 200
    assert first.json() == second.json()


def test_zero_masks_is_a_400_with_error_body(client):
    response = fill(client, text="no mask anywhere")
    assert response.status_code == 400
    body = response.json()
    assert set(body) == {"error"}
    assert isinstance(body["error"], str) and body["error"]


def test_multiple_masks_is_a_400_with_error_body(client):
    response = fill(client, text="[MASK] and [MASK] again")
    assert response.status_code == 400
    assert "error" in response.json()


def test_custom_mask_token_is_translated(client):
    custom = fill(client, text="the <mask> swam", mask_token="<mask>", top_n=5)
    native = fill(client, text="the [MASK] swam", mask_token="[MASK]", top_n=5)
    assert custom.status_code == 200
    assert custom.json() == native.json()


def test_text_holding_the_native_mask_besides_the_custom_one_is_rejected(client):
    response = fill(client, text="the <mask> swam [MASK]", mask_token="<mask>")
    assert response.status_code == 400
    assert "error" in response.json()


def test_special_tokens_never_appear_as_candidates(client):
    tokens = {
        c["token"]
        for c in fill(client, text="the [MASK] swam", top_n=100).json()["candidates"]
    }
    assert not tokens & {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"}


def test_top_n_beyond_vocabulary_is_capped_at_real_candidates(client):
    candidates = fill(client, text="the [MASK] swam", top_n=10_000).json()["candidates"]
    assert 1 < len(candidates) < 10_000
    assert len({c["token"] for c in candidates}) == len(candidates)


def test_invalid_request_shapes_are_rejected(client):
    assert fill(client, text="the [MASK] swam", top_n=0).status_code == 422
    assert fill(client, top_n=5).status_code == 422
    assert fill(client, text="the [MASK] swam", mask_token="").status_code == 422


def test_defaults_apply_when_fields_are_omitted(client):
    response = fill(client, text="the [MASK] swam")
    assert response.status_code == 200
    assert 1 <= len(response.json()["candidates"]) <= 10
