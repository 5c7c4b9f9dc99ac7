import json

import httpx
import pytest

from drawgen.prompts import ChatTurn, PromptBundle, Role
from drawgen.provider import (
    AuthError,
    BadScriptFormat,
    HttpProvider,
    MockProvider,
    ProtocolError,
    ProviderConfig,
    ProviderKind,
    TransportError,
    load_mock_script,
    make_provider,
)


def bundle(text="hello"):
    turns = (ChatTurn(Role.SYSTEM, "sys"), ChatTurn(Role.USER, text))
    total = sum(len(t.text) for t in turns)
    return PromptBundle(turns=turns, token_estimate=-(-total // 4))


def write_script(tmp_path, entries):
    path = tmp_path / "script.json"
    path.write_text(json.dumps({"version": 1, "entries": entries}))
    return path


class TestMockScript:
    def test_load_and_serve_two_entries(self, tmp_path):
        path = write_script(
            tmp_path,
            [
                {"match": "first", "response": "one"},
                {"match": "", "response": "two"},
            ],
        )
        provider = MockProvider(load_mock_script(path))
        out1 = "".join(c.text for c in provider.send(bundle("the first request")))
        out2 = "".join(c.text for c in provider.send(bundle("anything")))
        assert (out1, out2) == ("one", "two")

    def test_entries_consumed_once(self, tmp_path):
        path = write_script(tmp_path, [{"match": "", "response": "only"}])
        provider = MockProvider(load_mock_script(path))
        list(provider.send(bundle()))
        with pytest.raises(ProtocolError):
            provider.send(bundle())

    def test_chunking(self, tmp_path):
        path = write_script(tmp_path, [{"response": "abc", "chunk_size": 1}])
        provider = MockProvider(load_mock_script(path))
        chunks = list(provider.send(bundle()))
        assert [c.text for c in chunks] == ["a", "b", "c"]
        assert [c.is_final for c in chunks] == [False, False, True]
        assert chunks[-1].usage == (bundle().token_estimate, 1)

    @pytest.mark.parametrize("size", [1, 2, 3, 5, 7, 16, 32])
    def test_concatenation_complete_for_any_chunk_size(self, tmp_path, size):
        text = "response text with some length to it, ünïcode too"
        path = write_script(tmp_path, [{"response": text, "chunk_size": size}])
        provider = MockProvider(load_mock_script(path))
        chunks = list(provider.send(bundle()))
        assert "".join(c.text for c in chunks) == text
        assert sum(1 for c in chunks if c.is_final) == 1

    def test_injected_transport_error_at_chunk_three(self, tmp_path):
        path = write_script(
            tmp_path,
            [{"response": "abcdef", "chunk_size": 1, "error": "transport", "error_at_chunk": 3}],
        )
        provider = MockProvider(load_mock_script(path))
        stream = provider.send(bundle())
        received = []
        with pytest.raises(TransportError):
            for chunk in stream:
                received.append(chunk.text)
        assert received == ["a", "b"]

    def test_malformed_script_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"entries": [\n  {"response": }\n]}')
        with pytest.raises(BadScriptFormat) as exc:
            load_mock_script(path)
        assert "line 2" in str(exc.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_mock_script(tmp_path / "nope.json")

    def test_response_file_indirection(self, tmp_path):
        (tmp_path / "payload.xml").write_text("<mxfile></mxfile>")
        path = write_script(tmp_path, [{"response_file": "payload.xml"}])
        provider = MockProvider(load_mock_script(path))
        assert "".join(c.text for c in provider.send(bundle())) == "<mxfile></mxfile>"

    def test_deterministic_chunk_sequences(self, tmp_path):
        path = write_script(tmp_path, [{"response": "same", "chunk_size": 2}] * 2)
        provider = MockProvider(load_mock_script(path))
        a = list(provider.send(bundle()))
        b = list(provider.send(bundle()))
        assert a == b


def sse_response(*payloads):
    body = "".join(f"data: {json.dumps(p)}\n\n" for p in payloads).encode()
    return httpx.Response(
        200, content=body, headers={"content-type": "text/event-stream"}
    )


class TestHttpProvider:
    def config(self):
        return ProviderConfig(
            kind=ProviderKind.HTTP,
            endpoint_url="http://llm.test/v1/chat",
            api_key_env_var_name="TEST_LLM_KEY",
        )

    def test_auth_error_before_network(self, monkeypatch):
        monkeypatch.delenv("TEST_LLM_KEY", raising=False)

        def explode(request):  # pragma: no cover - must never run
            raise AssertionError("network was touched")

        provider = HttpProvider(self.config(), transport=httpx.MockTransport(explode))
        with pytest.raises(AuthError):
            provider.send(bundle())

    def test_streams_deltas_and_usage(self, monkeypatch):
        monkeypatch.setenv("TEST_LLM_KEY", "sk-secret")
        seen = {}

        def handler(request):
            seen["auth"] = request.headers.get("authorization")
            seen["body"] = json.loads(request.read())
            return sse_response(
                {"delta": {"text": "<mx"}},
                {"delta": {"text": "file>"}},
                {"usage": {"input_tokens": 5, "output_tokens": 7}},
            )

        provider = HttpProvider(self.config(), transport=httpx.MockTransport(handler))
        chunks = list(provider.send(bundle("draw")))
        assert "".join(c.text for c in chunks) == "<mxfile>"
        assert chunks[-1].is_final and chunks[-1].usage == (5, 7)
        assert seen["auth"] == "Bearer sk-secret"
        assert seen["body"]["stream"] is True
        assert seen["body"]["messages"][0]["role"] == "system"

    def test_http_error_is_transport_error(self, monkeypatch):
        monkeypatch.setenv("TEST_LLM_KEY", "k")
        provider = HttpProvider(
            self.config(), transport=httpx.MockTransport(lambda r: httpx.Response(500))
        )
        with pytest.raises(TransportError):
            list(provider.send(bundle()))

    def test_rejected_credential_is_auth_error(self, monkeypatch):
        monkeypatch.setenv("TEST_LLM_KEY", "k")
        provider = HttpProvider(
            self.config(), transport=httpx.MockTransport(lambda r: httpx.Response(401))
        )
        with pytest.raises(AuthError):
            list(provider.send(bundle()))

    def test_malformed_event_is_protocol_error(self, monkeypatch):
        monkeypatch.setenv("TEST_LLM_KEY", "k")

        def handler(request):
            return httpx.Response(200, content=b"data: {not json}\n\n")

        provider = HttpProvider(self.config(), transport=httpx.MockTransport(handler))
        with pytest.raises(ProtocolError):
            list(provider.send(bundle()))

    def test_truncated_stream_is_protocol_error(self, monkeypatch):
        monkeypatch.setenv("TEST_LLM_KEY", "k")
        provider = HttpProvider(
            self.config(),
            transport=httpx.MockTransport(lambda r: sse_response({"delta": {"text": "x"}})),
        )
        with pytest.raises(ProtocolError):
            list(provider.send(bundle()))

    def test_image_attachment_encoded(self, monkeypatch):
        monkeypatch.setenv("TEST_LLM_KEY", "k")
        seen = {}

        def handler(request):
            seen["body"] = json.loads(request.read())
            return sse_response({"usage": {"input_tokens": 1, "output_tokens": 0}})

        provider = HttpProvider(self.config(), transport=httpx.MockTransport(handler))
        turns = (ChatTurn(Role.USER, "describe", image=b"\x89PNGxxxx"),)
        list(provider.send(PromptBundle(turns=turns, token_estimate=2)))
        parts = seen["body"]["messages"][0]["content"]
        assert parts[1]["type"] == "image"
        assert parts[1]["media_type"] == "image/png"

    def test_credentials_never_in_errors(self, monkeypatch):
        sentinel = "sk-SENTINEL-VALUE"
        monkeypatch.setenv("TEST_LLM_KEY", sentinel)
        provider = HttpProvider(
            self.config(), transport=httpx.MockTransport(lambda r: httpx.Response(500))
        )
        with pytest.raises(TransportError) as exc:
            list(provider.send(bundle()))
        assert sentinel not in str(exc.value)
        cfg_dump = repr(self.config())
        assert sentinel not in cfg_dump

    def test_cancellation_releases_stream(self, monkeypatch):
        monkeypatch.setenv("TEST_LLM_KEY", "k")
        closed = {"value": False}

        class TrackedStream(httpx.SyncByteStream):
            def __iter__(self):
                for i in range(100):
                    yield f'data: {{"delta": {{"text": "t{i}"}}}}\n\n'.encode()

            def close(self):
                closed["value"] = True

        def handler(request):
            return httpx.Response(200, stream=TrackedStream())

        provider = HttpProvider(self.config(), transport=httpx.MockTransport(handler))
        stream = provider.send(bundle())
        next(stream)
        stream.close()
        assert closed["value"]


class TestConfig:
    def test_temperature_range(self):
        with pytest.raises(ValueError):
            ProviderConfig(kind=ProviderKind.MOCK, script_path="s", temperature=3.0)

    def test_http_requires_endpoint(self):
        with pytest.raises(ValueError):
            ProviderConfig(kind=ProviderKind.HTTP, endpoint_url="")

    def test_make_provider_dispatch(self, tmp_path):
        path = write_script(tmp_path, [{"response": "x"}])
        cfg = ProviderConfig(kind=ProviderKind.MOCK, script_path=str(path))
        assert isinstance(make_provider(cfg), MockProvider)
