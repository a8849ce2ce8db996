"""Gateway behavior: fixture routing, retries, JSON extraction, judging."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from opengame import imaging
from opengame.gateway import (
    BackendError,
    ChatRequest,
    DeadlineExceeded,
    Gateway,
    HttpBackend,
    JudgeRequest,
    MockBackend,
    ResponseSchema,
    RetryPolicy,
    SchemaError,
    SchemaKey,
    ScriptedBackend,
    TransientBackendError,
    UnknownBackend,
    extract_json,
    validate_schema,
)

CLASSIFY_SCHEMA = ResponseSchema(
    required_keys=(
        SchemaKey("game_type", "enum", ("platformer", "top_down", "grid_logic", "tower_defense", "ui_heavy")),
        SchemaKey("confidence", "number"),
        SchemaKey("reason", "text"),
    )
)


def no_sleep_policy(attempts: int = 3) -> RetryPolicy:
    return RetryPolicy(attempts=attempts, backoffs=(0.0, 0.0, 0.0), timeout=2.0, sleep=lambda _: None)


def write_fixture(root, tag0, tag1, payload):
    path = root / tag0 / f"{tag1}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload))
    return path


def chat_request(tags=("classify", "platformer-fixture"), **kwargs) -> ChatRequest:
    defaults = dict(
        backend_id="chat",
        system_prompt="You classify games.",
        user_prompt="a hero leaps between ledges",
        tags=tags,
    )
    defaults.update(kwargs)
    return ChatRequest(**defaults)


# --- request validation --------------------------------------------------

def test_empty_prompt_rejected():
    with pytest.raises(ValueError):
        chat_request(user_prompt="   ")


def test_temperature_out_of_range_rejected():
    with pytest.raises(ValueError):
        chat_request(temperature=1.5)


def test_judge_request_requires_images():
    with pytest.raises(ValueError):
        JudgeRequest(images=(), rubric_prompt="score it", schema=CLASSIFY_SCHEMA)


def test_judge_request_requires_valid_png():
    with pytest.raises(ValueError):
        JudgeRequest(images=(b"not a png",), rubric_prompt="score it", schema=CLASSIFY_SCHEMA)


# --- mock fixture routing --------------------------------------------------

def test_mock_fixture_echo(tmp_path):
    write_fixture(tmp_path, "classify", "platformer-fixture", {"text": "hello fixture"})
    gw = Gateway(retry=no_sleep_policy()).register("chat", MockBackend(tmp_path))
    response = gw.complete_chat(chat_request())
    assert response.text == "hello fixture"
    assert response.attempts == 1


def test_mock_is_deterministic(tmp_path):
    write_fixture(tmp_path, "classify", "platformer-fixture", {"text": "same"})
    gw = Gateway(retry=no_sleep_policy()).register("chat", MockBackend(tmp_path))
    a = gw.complete_chat(chat_request())
    b = gw.complete_chat(chat_request())
    assert a == b


def test_mock_digest_fallback(tmp_path):
    from opengame.gateway import prompt_digest

    request = chat_request(tags=("nonexistent-tool", "nope"))
    digest = prompt_digest(request.system_prompt, request.user_prompt)
    write_fixture(tmp_path, "_digest", digest, {"text": "via digest"})
    gw = Gateway(retry=no_sleep_policy()).register("chat", MockBackend(tmp_path))
    assert gw.complete_chat(request).text == "via digest"


def test_mock_without_fixture_errors(tmp_path):
    gw = Gateway(retry=no_sleep_policy()).register("chat", MockBackend(tmp_path))
    with pytest.raises(BackendError):
        gw.complete_chat(chat_request(tags=("missing", "missing")))


def test_unknown_backend():
    gw = Gateway(retry=no_sleep_policy())
    with pytest.raises(UnknownBackend):
        gw.complete_chat(chat_request(backend_id="nope"))


# --- retries ---------------------------------------------------------------

def test_flaky_backend_succeeds_on_third_attempt():
    backend = ScriptedBackend(
        [TransientBackendError("boom"), TransientBackendError("boom"), "recovered"]
    )
    gw = Gateway(retry=no_sleep_policy()).register("chat", backend)
    response = gw.complete_chat(chat_request())
    assert response.text == "recovered"
    assert response.attempts == 3


def test_attempts_never_exceed_retry_limit():
    backend = ScriptedBackend([TransientBackendError("always")])
    gw = Gateway(retry=no_sleep_policy(attempts=3)).register("chat", backend)
    with pytest.raises(TransientBackendError):
        gw.complete_chat(chat_request())
    assert backend.calls == 3


def test_non_transient_error_not_retried():
    backend = ScriptedBackend([BackendError("fatal"), "never reached"])
    gw = Gateway(retry=no_sleep_policy()).register("chat", backend)
    with pytest.raises(BackendError):
        gw.complete_chat(chat_request())
    assert backend.calls == 1


def test_deadline_exceeded_propagates_as_timeout():
    backend = ScriptedBackend([DeadlineExceeded("slow")])
    gw = Gateway(retry=no_sleep_policy()).register("chat", backend)
    with pytest.raises(TimeoutError):
        gw.complete_chat(chat_request())


def test_backoff_schedule_used():
    sleeps: list[float] = []
    policy = RetryPolicy(attempts=3, backoffs=(1.0, 2.0, 4.0), timeout=2.0, sleep=sleeps.append)
    backend = ScriptedBackend([TransientBackendError("a"), TransientBackendError("b"), "ok"])
    gw = Gateway(retry=policy).register("chat", backend)
    gw.complete_chat(chat_request())
    assert sleeps == [1.0, 2.0]


# --- structured completion -----------------------------------------------

def test_structured_fixture_round_trip(tmp_path):
    payload = {"game_type": "platformer", "confidence": 0.9, "reason": "gravity"}
    write_fixture(tmp_path, "classify", "platformer-fixture", {"text": json.dumps(payload)})
    gw = Gateway(retry=no_sleep_policy()).register("chat", MockBackend(tmp_path))
    assert gw.complete_structured(chat_request(), CLASSIFY_SCHEMA) == payload


def test_structured_strips_code_fences(tmp_path):
    payload = {"game_type": "grid_logic", "confidence": 0.8, "reason": "snapping"}
    fenced = "```json\n" + json.dumps(payload) + "\n```"
    write_fixture(tmp_path, "classify", "platformer-fixture", {"text": fenced})
    gw = Gateway(retry=no_sleep_policy()).register("chat", MockBackend(tmp_path))
    assert gw.complete_structured(chat_request(), CLASSIFY_SCHEMA) == payload


def test_structured_failure_after_reprompt(tmp_path):
    write_fixture(
        tmp_path, "classify", "platformer-fixture", {"text": "I think it is a platformer"}
    )
    backend = MockBackend(tmp_path)
    gw = Gateway(retry=no_sleep_policy()).register("chat", backend)
    with pytest.raises(SchemaError):
        gw.complete_structured(chat_request(), CLASSIFY_SCHEMA)


def test_structured_reprompt_recovers():
    good = json.dumps({"game_type": "top_down", "confidence": 0.7, "reason": "steering"})
    backend = ScriptedBackend(["not json at all", good])
    gw = Gateway(retry=no_sleep_policy()).register("chat", backend)
    value = gw.complete_structured(chat_request(), CLASSIFY_SCHEMA)
    assert value["game_type"] == "top_down"
    assert backend.calls == 2


# --- JSON extraction unit cases --------------------------------------------

def test_extract_json_order():
    assert extract_json('{"a": 1}') == {"a": 1}
    assert extract_json('```json\n{"a": 2}\n```') == {"a": 2}
    assert extract_json('prefix {"a": 3} suffix') == {"a": 3}
    with pytest.raises(SchemaError):
        extract_json("no json here")


def test_validate_schema_kinds():
    schema = ResponseSchema(
        required_keys=(
            SchemaKey("name", "text"),
            SchemaKey("score", "number"),
            SchemaKey("items", "list"),
        )
    )
    good = {"name": "x", "score": 1.5, "items": [1]}
    assert validate_schema(good, schema) == good
    with pytest.raises(SchemaError):
        validate_schema({"name": "x", "score": True, "items": []}, schema)
    with pytest.raises(SchemaError):
        validate_schema({"name": "x", "score": 1}, schema)


# --- judge ----------------------------------------------------------------

def judge_fixture_png() -> bytes:
    return imaging.solid_png(16, 16, (10, 200, 30))


def test_judge_routes_on_tags(tmp_path):
    write_fixture(tmp_path, "judge_vu", "platformer-fixture", {"text": json.dumps({"score": 62})})
    gw = Gateway(retry=no_sleep_policy()).register("vlm", MockBackend(tmp_path))
    request = JudgeRequest(
        images=tuple(judge_fixture_png() for _ in range(4)),
        rubric_prompt="rate visual usability 0-100",
        schema=ResponseSchema(required_keys=(SchemaKey("score", "number"),)),
        tags=("judge_vu", "platformer-fixture"),
    )
    assert gw.judge(request) == {"score": 62}


def test_judge_image_digest_fallback(tmp_path):
    from opengame.gateway import image_set_digest

    images = (judge_fixture_png(),)
    digest = image_set_digest(images)
    write_fixture(tmp_path, "_digest", digest, {"text": json.dumps({"score": 10})})
    gw = Gateway(retry=no_sleep_policy()).register("vlm", MockBackend(tmp_path))
    request = JudgeRequest(
        images=images,
        rubric_prompt="rate",
        schema=ResponseSchema(required_keys=(SchemaKey("score", "number"),)),
        tags=("unrouted",),
    )
    assert gw.judge(request) == {"score": 10}


def test_judge_verdict_list(tmp_path):
    verdicts = {"verdicts": [{"requirement_id": f"r{i}", "value": v, "evidence": "seen"}
                             for i, v in enumerate(["pass", "partial", "fail"])]}
    write_fixture(tmp_path, "judge_ia", "t1", {"text": json.dumps(verdicts)})
    gw = Gateway(retry=no_sleep_policy()).register("vlm", MockBackend(tmp_path))
    request = JudgeRequest(
        images=(judge_fixture_png(),),
        rubric_prompt="verdict per requirement",
        schema=ResponseSchema(required_keys=(SchemaKey("verdicts", "list"),)),
        tags=("judge_ia", "t1"),
    )
    result = gw.judge(request)
    assert [v["value"] for v in result["verdicts"]] == ["pass", "partial", "fail"]


# --- HTTP wire format against a local scripted server -------------------------

class _ScriptedHandler(BaseHTTPRequestHandler):
    script: list = []
    requests_seen: list = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        type(self).requests_seen.append((self.path, body))
        status, payload = self.script.pop(0) if self.script else (200, {})
        blob = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)

    def log_message(self, *args):
        pass


@pytest.fixture
def scripted_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _ScriptedHandler)
    _ScriptedHandler.script = []
    _ScriptedHandler.requests_seen = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server, _ScriptedHandler
    server.shutdown()
    server.server_close()


def completion_payload(text: str) -> dict:
    return {
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 7, "completion_tokens": 3},
    }


def test_http_backend_retries_transient_500(scripted_server):
    server, handler = scripted_server
    handler.script.extend(
        [(500, {"error": "boom"}), (500, {"error": "boom"}), (200, completion_payload("ok"))]
    )
    backend = HttpBackend(f"http://127.0.0.1:{server.server_address[1]}")
    gw = Gateway(retry=no_sleep_policy()).register("chat", backend)
    response = gw.complete_chat(chat_request())
    assert response.text == "ok"
    assert response.attempts == 3
    assert response.token_usage.prompt == 7


def test_http_backend_sends_messages_array(scripted_server):
    server, handler = scripted_server
    handler.script.append((200, completion_payload("fine")))
    backend = HttpBackend(f"http://127.0.0.1:{server.server_address[1]}", api_key="k")
    gw = Gateway(retry=no_sleep_policy()).register("chat", backend)
    gw.complete_chat(chat_request())
    path, body = handler.requests_seen[0]
    assert path == "/chat/completions"
    assert [m["role"] for m in body["messages"]] == ["system", "user"]


class _SlowHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        import time

        time.sleep(3.0)
        self.send_response(200)
        self.end_headers()
        self.wfile.write(b"{}")

    def log_message(self, *args):
        pass


def test_http_backend_deadline_maps_to_timeout_error():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _SlowHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        backend = HttpBackend(f"http://127.0.0.1:{server.server_address[1]}")
        policy = RetryPolicy(attempts=1, backoffs=(0.0,), timeout=0.3, sleep=lambda _: None)
        gw = Gateway(retry=policy).register("chat", backend)
        with pytest.raises(TimeoutError):
            gw.complete_chat(chat_request())
    finally:
        server.shutdown()
        server.server_close()


def test_http_backend_4xx_is_non_transient(scripted_server):
    server, handler = scripted_server
    handler.script.append((401, {"error": "bad key"}))
    backend = HttpBackend(f"http://127.0.0.1:{server.server_address[1]}")
    gw = Gateway(retry=no_sleep_policy()).register("chat", backend)
    with pytest.raises(BackendError):
        gw.complete_chat(chat_request())
    assert len(handler.requests_seen) == 1
