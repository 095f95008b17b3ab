"""Mock and HTTP provider behavior."""

import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from gem.providers import (
    HTTP,
    HttpEmbedder,
    HttpGenerator,
    MockEmbedder,
    MockGenerator,
    ProviderConfig,
    ProviderError,
    build_embedder,
    build_generator,
    split_sentences,
)


class TestMockEmbedder:
    def test_deterministic(self, embedder):
        a = embedder.embed(["the quick brown fox"])[0]
        b = embedder.embed(["the quick brown fox"])[0]
        assert a.values == b.values

    def test_unit_norm(self, embedder):
        emb = embedder.embed(["alpha beta gamma delta"])[0]
        assert math.isclose(
            sum(v * v for v in emb.values), 1.0, rel_tol=0, abs_tol=1e-12
        )

    def test_dim(self):
        emb = MockEmbedder(dim=64).embed(["hello"])[0]
        assert emb.dim == 64
        assert len(emb.values) == 64

    def test_word_order_irrelevant(self, embedder):
        a = embedder.embed(["cat cat dog"])[0]
        b = embedder.embed(["dog cat cat"])[0]
        assert a.values == b.values

    def test_case_insensitive(self, embedder):
        a = embedder.embed(["Cat Dog"])[0]
        b = embedder.embed(["cat dog"])[0]
        assert a.values == b.values

    def test_disjoint_vocab_high_dim_near_orthogonal(self):
        emb = MockEmbedder(dim=4096)
        a, b = emb.embed(["stellar fusion plasma", "harvest grain plough"])
        assert abs(float(a.array @ b.array)) < 1e-12

    def test_empty_input_rejected(self, embedder):
        with pytest.raises(ValueError):
            embedder.embed([])
        with pytest.raises(ValueError):
            embedder.embed(["ok", "   "])

    def test_array_is_read_only_and_matches_values(self, embedder):
        emb = embedder.embed(["one two"])[0]
        assert emb.array.shape == (emb.dim,)
        assert tuple(emb.array) == emb.values
        with pytest.raises(ValueError):
            emb.array[0] = 5.0

    def test_invalid_dim(self):
        with pytest.raises(ValueError):
            MockEmbedder(dim=0)


class TestMockGenerator:
    def test_single_question_names_topic_token(self, generator):
        qs = generator.generate_questions("the engine failed at dawn", 1)
        assert len(qs) == 1
        assert "engine" in qs[0]

    def test_exactly_m_even_beyond_vocab(self, generator):
        qs = generator.generate_questions("engine engine", 4)
        assert len(qs) == 4
        assert len(set(qs)) == 4

    def test_m_zero(self, generator):
        assert generator.generate_questions("anything", 0) == []

    def test_frequency_wins_then_first_seen(self, generator):
        qs = generator.generate_questions("rotor blade rotor pump blade rotor", 3)
        assert "rotor" in qs[0]
        assert "blade" in qs[1]
        assert "pump" in qs[2]

    def test_stopwords_skipped(self, generator):
        qs = generator.generate_questions("the the the turbine spun", 1)
        assert "turbine" in qs[0] or "spun" in qs[0]
        assert " the?" not in qs[0]

    def test_summarize_takes_first_sentences(self, generator):
        out = generator.summarize(
            ["First point. Extra detail.", "Second point! More."], 50
        )
        assert out == "First point. Second point!"

    def test_summarize_respects_token_cap(self, generator):
        long = " ".join(f"w{i}" for i in range(100)) + "."
        out = generator.summarize([long], 10)
        from gem.corpus import token_count

        assert token_count(out) <= 10

    def test_answer_picks_best_overlap_option(self, generator):
        ans = generator.answer(
            "what color?",
            ["the sky was blue above the field"],
            options=["red barn", "blue sky", "green grass"],
        )
        assert ans == "blue sky"

    def test_answer_zero_overlap_falls_to_first_option(self, generator):
        ans = generator.answer(
            "anything?", ["völlig anderes vokabular"], options=["xx", "yy"]
        )
        assert ans == "xx"

    def test_answer_free_text_returns_context_sentence(self, generator):
        ans = generator.answer(
            "where is the engine?",
            ["The barn is red. The engine sits in the cellar."],
        )
        assert ans == "The engine sits in the cellar."

    def test_answer_requires_context(self, generator):
        with pytest.raises(ValueError):
            generator.answer("q?", [])

    def test_split_sentences(self):
        assert split_sentences("One. Two! Three?") == ["One.", "Two!", "Three?"]
        assert split_sentences("no terminator") == ["no terminator"]
        assert split_sentences("") == []


class TestProviderConfig:
    def test_defaults_are_mock(self):
        cfg = ProviderConfig()
        assert cfg.kind == "mock"
        assert isinstance(build_embedder(cfg), MockEmbedder)
        assert isinstance(build_generator(cfg), MockGenerator)

    def test_http_requires_endpoint(self):
        with pytest.raises(ValueError):
            ProviderConfig(kind=HTTP)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            ProviderConfig(kind="carrier-pigeon")

    def test_bad_limits_rejected(self):
        with pytest.raises(ValueError):
            ProviderConfig(max_in_flight=0)
        with pytest.raises(ValueError):
            ProviderConfig(retry_count=-1)

    def test_dict_round_trip(self):
        cfg = ProviderConfig(
            kind=HTTP, endpoint="http://x", model_name="m", dim=32
        )
        assert ProviderConfig.from_dict(cfg.to_dict()) == cfg


class _Script:
    """Mutable behavior shared between the test and the handler threads."""

    def __init__(self):
        self.fail_next = 0
        self.reply_embeddings_shuffled = True
        self.chat_reply = "1. Q one?\n2. Q two?"
        self.malformed = False
        self.requests: list[dict] = []
        self.lock = threading.Lock()


def _make_handler(script: _Script):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # keep test output clean
            pass

        def do_POST(self):
            length = int(self.headers["Content-Length"])
            body = json.loads(self.rfile.read(length))
            with script.lock:
                script.requests.append(
                    {
                        "path": self.path,
                        "body": body,
                        "auth": self.headers.get("Authorization"),
                    }
                )
                if script.fail_next > 0:
                    script.fail_next -= 1
                    self.send_response(500)
                    self.end_headers()
                    self.wfile.write(b"boom")
                    return
            if script.malformed:
                payload = {"unexpected": True}
            elif self.path.endswith("/embeddings"):
                texts = body["input"]
                rows = [
                    {"index": i, "embedding": [float(len(t)), 1.0]}
                    for i, t in enumerate(texts)
                ]
                if script.reply_embeddings_shuffled:
                    rows = rows[::-1]
                payload = {"data": rows}
            else:
                payload = {
                    "choices": [{"message": {"content": script.chat_reply}}]
                }
            out = json.dumps(payload).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(out)))
            self.end_headers()
            self.wfile.write(out)

    return Handler


@pytest.fixture()
def http_server():
    script = _Script()
    server = ThreadingHTTPServer(("127.0.0.1", 0), _make_handler(script))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}", script
    finally:
        server.shutdown()
        server.server_close()


def _http_config(endpoint: str, **kw) -> ProviderConfig:
    kw.setdefault("retry_count", 1)
    return ProviderConfig(kind=HTTP, endpoint=endpoint, model_name="test-model", **kw)


class TestHttpProviders:
    def test_embeddings_reordered_by_index(self, http_server):
        endpoint, script = http_server
        script.reply_embeddings_shuffled = True
        emb = HttpEmbedder(_http_config(endpoint))
        out = emb.embed(["a", "bbb"])
        # row for "a" has length 1, row for "bbb" length 3
        assert out[0].values == (1.0, 1.0)
        assert out[1].values == (3.0, 1.0)

    def test_auth_header_from_env(self, http_server, monkeypatch):
        endpoint, script = http_server
        monkeypatch.setenv("TEST_PROVIDER_KEY", "sk-123")
        emb = HttpEmbedder(_http_config(endpoint, api_key_env="TEST_PROVIDER_KEY"))
        emb.embed(["x"])
        assert script.requests[-1]["auth"] == "Bearer sk-123"

    def test_no_auth_header_without_key(self, http_server):
        endpoint, script = http_server
        HttpEmbedder(_http_config(endpoint)).embed(["x"])
        assert script.requests[-1]["auth"] is None

    def test_retry_recovers_from_transient_failure(self, http_server):
        endpoint, script = http_server
        script.fail_next = 1
        emb = HttpEmbedder(_http_config(endpoint, retry_count=2))
        out = emb.embed(["ab"])
        assert out[0].values == (2.0, 1.0)
        assert len(script.requests) == 2

    def test_exhausted_retries_raise_with_stage(self, http_server):
        endpoint, script = http_server
        script.fail_next = 10
        emb = HttpEmbedder(_http_config(endpoint, retry_count=1))
        with pytest.raises(ProviderError) as err:
            emb.embed(["x"])
        assert err.value.stage == "embed"
        assert err.value.indices == [0]

    def test_malformed_response_raises(self, http_server):
        endpoint, script = http_server
        script.malformed = True
        with pytest.raises(ProviderError) as err:
            HttpEmbedder(_http_config(endpoint)).embed(["x"])
        assert err.value.stage == "embed"

    def test_generator_parses_numbered_questions(self, http_server):
        endpoint, script = http_server
        script.chat_reply = "1. What is A?\n2) What is B?\n3: ignored-prefix"
        gen = HttpGenerator(_http_config(endpoint))
        qs = gen.generate_questions("passage", 2)
        assert qs == ["What is A?", "What is B?"]
        sent = script.requests[-1]["body"]
        assert sent["temperature"] == 0
        assert "passage" in sent["messages"][0]["content"]

    def test_generator_pads_short_reply(self, http_server):
        endpoint, script = http_server
        script.chat_reply = "1. Only one?"
        gen = HttpGenerator(_http_config(endpoint, retry_count=0))
        qs = gen.generate_questions("passage", 3)
        assert len(qs) == 3
        assert qs[0] == "Only one?"

    def test_generator_unparseable_raises(self, http_server):
        endpoint, script = http_server
        script.chat_reply = "no numbering at all"
        gen = HttpGenerator(_http_config(endpoint, retry_count=0))
        with pytest.raises(ProviderError) as err:
            gen.generate_questions("passage", 2)
        assert err.value.stage == "questions"

    def test_answer_matches_option_verbatim(self, http_server):
        endpoint, script = http_server
        script.chat_reply = "  Blue Sky  "
        gen = HttpGenerator(_http_config(endpoint))
        assert gen.answer("q", ["ctx"], options=["red", "blue sky"]) == "blue sky"

    def test_summarize_truncates(self, http_server):
        endpoint, script = http_server
        script.chat_reply = " ".join(f"w{i}" for i in range(50))
        gen = HttpGenerator(_http_config(endpoint))
        from gem.corpus import token_count

        assert token_count(gen.summarize(["t"], 7)) == 7

    def test_concurrent_embeds_all_succeed(self, http_server):
        endpoint, script = http_server
        emb = HttpEmbedder(_http_config(endpoint, max_in_flight=3))
        results = [None] * 8
        errors = []

        def work(i):
            try:
                results[i] = emb.embed([f"t{i}"])[0]
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert all(isinstance(r.values, tuple) for r in results)
