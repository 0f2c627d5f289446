import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from courseqa.errors import ConfigError, InputError, ProviderError
from courseqa.providers import (
    MOCK_DIM,
    CompletionParams,
    EmbeddingVector,
    ProviderConfig,
    complete,
    embed,
    fnv1a64,
)

words = st.text(alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Nd")), min_size=1, max_size=8)


class TestProviderConfig:
    def test_http_requires_base_url_and_model(self):
        with pytest.raises(ConfigError):
            ProviderConfig(kind="http", base_url="", model_id="m")
        with pytest.raises(ConfigError):
            ProviderConfig(kind="http", base_url="http://x", model_id="")

    def test_rejects_bad_timeout_and_kind(self):
        with pytest.raises(ConfigError):
            ProviderConfig(timeout_ms=0)
        with pytest.raises(ConfigError):
            ProviderConfig(kind="grpc")
        with pytest.raises(ConfigError):
            ProviderConfig(max_retries=-1)

    def test_api_key_read_from_env_not_stored(self, monkeypatch):
        cfg = ProviderConfig(kind="http", base_url="http://x", model_id="m", api_key_env="QA_KEY")
        monkeypatch.setenv("QA_KEY", "sk-secret")
        assert cfg.api_key() == "sk-secret"
        assert "sk-secret" not in repr(cfg)


class TestMockEmbedding:
    def test_single_token_slot(self, mock_embed_cfg):
        # index FNV-1a("a") mod 64 = 12, verified against a reference FNV-1a
        (vec,) = embed(["a"], mock_embed_cfg)
        assert vec.dim == MOCK_DIM
        nonzero = [(i, v) for i, v in enumerate(vec.values) if v != 0.0]
        assert nonzero == [(12, 1.0)]

    def test_determinism(self, mock_embed_cfg):
        a, b = embed(["x", "x"], mock_embed_cfg)
        assert a.values == b.values

    def test_empty_text_rejected(self, mock_embed_cfg):
        with pytest.raises(InputError):
            embed([""], mock_embed_cfg)
        with pytest.raises(InputError):
            embed(["  "], mock_embed_cfg)
        with pytest.raises(InputError):
            embed([], mock_embed_cfg)

    def test_order_matches_input(self, mock_embed_cfg):
        vecs = embed(["a", "hello"], mock_embed_cfg)
        assert [i for i, v in enumerate(vecs[0].values) if v][0] == 12
        assert vecs[0].values != vecs[1].values

    @given(tokens=st.lists(words, min_size=1, max_size=12))
    @settings(max_examples=50)
    def test_token_permutation_invariance(self, tokens):
        cfg = ProviderConfig(kind="mock")
        (forward,) = embed([" ".join(tokens)], cfg)
        (backward,) = embed([" ".join(reversed(tokens))], cfg)
        assert forward.values == backward.values

    @given(tokens=st.lists(words, min_size=1, max_size=12))
    @settings(max_examples=50)
    def test_unit_norm(self, tokens):
        cfg = ProviderConfig(kind="mock")
        (vec,) = embed([" ".join(tokens)], cfg)
        assert math.isclose(math.sqrt(sum(v * v for v in vec.values)), 1.0, abs_tol=1e-6)

    def test_sign_uses_bit_six(self, mock_embed_cfg):
        # "world" has bit 6 set -> negative contribution
        h = fnv1a64(b"world")
        assert (h >> 6) & 1 == 1
        (vec,) = embed(["world"], mock_embed_cfg)
        assert vec.values[h % MOCK_DIM] == -1.0


class TestEmbeddingVector:
    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            EmbeddingVector(dim=2, values=[float("nan"), 0.0], normalized=False)

    def test_rejects_bad_norm_when_flagged(self):
        with pytest.raises(InputError):
            EmbeddingVector(dim=2, values=[1.0, 1.0], normalized=True)

    def test_dot(self):
        a = EmbeddingVector(dim=2, values=[1.0, 0.0])
        b = EmbeddingVector(dim=2, values=[0.0, 1.0])
        assert a.dot(b) == 0.0
        with pytest.raises(InputError):
            a.dot(EmbeddingVector(dim=3, values=[1.0, 0.0, 0.0]))


class TestMockCompletion:
    def test_scripted_marker(self):
        cfg = ProviderConfig(kind="mock", script={"REWRITTEN QUESTION:": "What is FAISS-free ANN?"})
        assert complete("...\nREWRITTEN QUESTION:\n", cfg) == "What is FAISS-free ANN?"

    def test_echo_last_line(self):
        cfg = ProviderConfig(kind="mock", echo=True)
        assert complete("Q:\nhello", cfg) == "hello"

    def test_no_marker_echo_off(self):
        cfg = ProviderConfig(kind="mock", echo=False)
        with pytest.raises(ProviderError):
            complete("anything", cfg)

    def test_empty_prompt(self):
        with pytest.raises(InputError):
            complete("", ProviderConfig(kind="mock"))


class TestHttpProvider:
    def test_retry_contract_counts_attempts(self):
        # port 9 (discard) refuses connections immediately
        cfg = ProviderConfig(
            kind="http", base_url="http://127.0.0.1:9/v1", model_id="m",
            timeout_ms=2000, max_retries=2,
        )
        with pytest.raises(ProviderError) as excinfo:
            complete("hi", cfg)
        assert excinfo.value.attempts == 3

    def test_completion_roundtrip_with_bearer(self, http_backend, monkeypatch):
        monkeypatch.setenv("QA_TEST_KEY", "sk-123")
        http_backend.enqueue(200, {"choices": [{"text": "an answer \n"}]})
        cfg = ProviderConfig(
            kind="http", base_url=http_backend.url, model_id="m",
            api_key_env="QA_TEST_KEY", max_retries=0,
        )
        out = complete("prompt here", cfg, CompletionParams(temperature=0.0, max_tokens=32))
        assert out == "an answer"
        req = http_backend.seen[0]
        assert req["headers"]["Authorization"] == "Bearer sk-123"
        assert req["body"] == {"model": "m", "prompt": "prompt here", "temperature": 0.0, "max_tokens": 32}

    def test_embeddings_roundtrip_batched_path(self, http_backend):
        http_backend.enqueue(
            200, {"data": [{"embedding": [3.0, 4.0]}, {"embedding": [0.0, 2.0]}]}
        )
        cfg = ProviderConfig(kind="http", base_url=http_backend.url, model_id="m", max_retries=0)
        vecs = embed(["one", "two"], cfg)
        assert vecs[0].values == [0.6, 0.8]  # normalized
        assert vecs[1].values == [0.0, 1.0]
        assert http_backend.seen[0]["body"] == {"model": "m", "input": ["one", "two"]}

    def test_retries_5xx_then_succeeds(self, http_backend):
        http_backend.enqueue(500, {})
        http_backend.enqueue(200, {"choices": [{"text": "ok"}]})
        cfg = ProviderConfig(kind="http", base_url=http_backend.url, model_id="m", max_retries=1)
        assert complete("p", cfg) == "ok"
        assert len(http_backend.seen) == 2

    def test_ragged_dims_rejected(self, http_backend):
        http_backend.enqueue(200, {"data": [{"embedding": [1.0, 0.0]}, {"embedding": [1.0]}]})
        cfg = ProviderConfig(kind="http", base_url=http_backend.url, model_id="m", max_retries=0)
        with pytest.raises(ProviderError):
            embed(["a", "b"], cfg)

    def test_missing_response_path(self, http_backend):
        http_backend.enqueue(200, {"unexpected": []})
        cfg = ProviderConfig(kind="http", base_url=http_backend.url, model_id="m", max_retries=0)
        with pytest.raises(ProviderError):
            complete("p", cfg)
