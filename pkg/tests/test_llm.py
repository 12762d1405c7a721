import json

import httpx
import pytest

from pseudogen.errors import ConfigError
from pseudogen.generation import LlmConfig, PromptBundle, generate_batches, llm_generate
from pseudogen.generation.llm import LlmAuthError, LlmResponseError, LlmRetriesExhausted, batch_sizes

PROMPT = PromptBundle("task", "data", "method", "output", 3)


def completion(text, status=200):
    return httpx.Response(status, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


class Recorder:
    def __init__(self, *responses):
        self.responses = list(responses)
        self.requests = []

    def __call__(self, request):
        self.requests.append(request)
        r = self.responses.pop(0) if len(self.responses) > 1 else self.responses[0]
        if isinstance(r, Exception):
            raise r
        return r


@pytest.fixture
def key(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")


def run(handler, cfg=None, sleeps=None):
    cfg = cfg or LlmConfig()
    return llm_generate(cfg, PROMPT, transport=httpx.MockTransport(handler),
                        sleep=(sleeps.append if sleeps is not None else lambda s: None))


def test_passthrough_and_request_shape(key):
    rec = Recorder(completion("1,2\n"))
    assert run(rec) == "1,2\n"
    req = rec.requests[0]
    assert str(req.url) == "https://api.openai.com/v1/chat/completions"
    assert req.headers["authorization"] == "Bearer sk-test"
    body = json.loads(req.content)
    assert body["model"] == "gpt-3.5-turbo" and body["temperature"] == 1.0
    assert [m["role"] for m in body["messages"]] == ["system", "user"]


def test_retry_after_429(key):
    sleeps = []
    rec = Recorder(httpx.Response(429), completion("ok"))
    assert run(rec, sleeps=sleeps) == "ok"
    assert len(rec.requests) == 2 and sleeps == [1.0]


def test_timeouts_exhaust_retries(key):
    sleeps = []
    rec = Recorder(httpx.ReadTimeout("slow"))
    with pytest.raises(LlmRetriesExhausted, match="3 attempts"):
        run(rec, LlmConfig(max_retries=2), sleeps)
    assert len(rec.requests) == 3
    assert sleeps == [1.0, 2.0]


@pytest.mark.parametrize("status", [401, 403])
def test_auth_failure_not_retried(key, status):
    rec = Recorder(httpx.Response(status))
    with pytest.raises(LlmAuthError):
        run(rec)
    assert len(rec.requests) == 1


def test_malformed_response(key):
    with pytest.raises(LlmResponseError):
        run(Recorder(httpx.Response(200, json={"choices": []})))
    with pytest.raises(LlmResponseError):
        run(Recorder(httpx.Response(200, text="not json")))


def test_missing_key_means_no_requests(monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    rec = Recorder(completion("1,2"))
    with pytest.raises(ConfigError, match="OPENAI_API_KEY"):
        run(rec)
    with pytest.raises(ConfigError, match="OPENAI_API_KEY"):
        generate_batches(LlmConfig(), lambda k: PROMPT, 10, transport=httpx.MockTransport(rec))
    assert rec.requests == []


@pytest.mark.parametrize("url", ["ftp://x", "not a url", "http://"])
def test_endpoint_validation(url):
    with pytest.raises(ConfigError):
        LlmConfig(endpoint_url=url)


def test_batches(key, tmp_path):
    assert batch_sizes(100) == [25] * 4
    assert batch_sizes(60) == [25, 25, 10]
    seen = []

    def handler(request):
        n = json.loads(request.content)["messages"][1]["content"]
        seen.append(n)
        return completion(f"rows:{n}")

    out = generate_batches(LlmConfig(), lambda k: PromptBundle("t", "d", "m", str(k), k), 60, raw_dir=tmp_path,
                           transport=httpx.MockTransport(handler))
    assert out == ["rows:d\n\nm\n\n25", "rows:d\n\nm\n\n25", "rows:d\n\nm\n\n10"]
    assert sorted(p.name for p in tmp_path.iterdir()) == [f"llm_response_{k:03d}.txt" for k in range(3)]


def test_parallel_batches_keep_order(key):
    def handler(request):
        return completion(json.loads(request.content)["messages"][1]["content"][-2:])

    cfg = LlmConfig(parallelism=3)
    out = generate_batches(cfg, lambda k: PromptBundle("t", "d", "m", f"{k:02d}", k), 60,
                           transport=httpx.MockTransport(handler))
    assert out == ["25", "25", "10"]
